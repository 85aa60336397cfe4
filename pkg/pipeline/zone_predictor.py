# pipeline/zone_predictor.py
"""
給定一個區域目前的建築簽章，預測它的平均緊急反應時間：
先指派到最近的群集中心（距離相同時取編號最小者），再套用該群集的最佳迴歸模型。
群集在訓練時被排除（或沒有可用模型）時，仍回報所屬群集，但預測值為空並附上 no_model_for_cluster。
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cluster.kmeans import ClusteringModel
from regress.eval_report import read_eval_report
from regress.model_io import load_model
from regress.prediction import RegressionModel, predict
from signature.signature_builder import ZoneSignature
from utils.errors import DataError

logger = logging.getLogger(__name__)

NO_MODEL_FOR_CLUSTER = "no_model_for_cluster"


@dataclass(frozen=True)
class BestModel:
    kind: str
    model: RegressionModel


@dataclass(frozen=True)
class ZonePrediction:
    zone_id: str | None
    cluster: int
    predicted_seconds: float | None
    model_kind: str | None = None
    error: str | None = None


def model_path(directory: Path, cluster: str, kind: str) -> Path:
    return Path(directory) / "models" / f"cluster_{cluster}_{kind}.json"


def predict_zone(
    signature: ZoneSignature | np.ndarray, clustering: ClusteringModel, models: dict[str, BestModel],
) -> ZonePrediction:
    if isinstance(signature, ZoneSignature):
        zone_id, features = signature.zone_id, signature.as_array()
    else:
        zone_id, features = None, np.asarray(signature, dtype=float)

    cluster = clustering.nearest_centroid(features)
    best = models.get(str(cluster))
    if best is None:
        logger.warning(f"區域 {zone_id or '(未命名)'} 屬於群集 {cluster}，但該群集沒有迴歸模型。")
        return ZonePrediction(zone_id, cluster, None, error=NO_MODEL_FOR_CLUSTER)
    return ZonePrediction(zone_id, cluster, predict(best.model, features), best.kind)


def load_best_models(directory: Path) -> dict[str, BestModel]:
    """依 eval_report.csv 中標記為最佳的模型，從 models/ 載入每個群集的模型。"""
    directory = Path(directory)
    report_path = directory / "eval_report.csv"
    if not report_path.exists():
        raise DataError("missing_artifact", f"找不到 {report_path}，請先執行 train。")

    report = read_eval_report(report_path)
    models = {}
    for cluster in report.clusters():
        best = report.best_for(cluster)
        if best is None:
            continue
        models[cluster] = BestModel(best.model_kind, load_model(model_path(directory, cluster, best.model_kind)))
    logger.info(f"已載入 {len(models)} 個群集的最佳模型。")
    return models
