# pipeline/reports.py
"""
報表輸出（只在這裡做四捨五入，所有中繼檔案都保留完整精度）：
- table1_signatures.csv：各區域的建築簽章，百分比取到 0.1%，並附上所屬群集。
- table2_cluster_response.csv：保留下來的群集的平均反應時間（整數秒）。
- table3_r_squared.csv：各群集、各模型的交叉驗證 R²（小數兩位，無法評估時為 n/a）與最佳模型。
- cluster_profiles.csv：各群集的平均簽章（長條圖資料）、外部工程比例與是否被排除。
"""
import logging
from pathlib import Path

import numpy as np

from cluster.cluster_io import read_clusters, read_ksweep
from ingestion.work_types import WORK_TYPE_COLUMNS
from regress.eval_report import NOT_AVAILABLE, read_eval_report
from signature.signature_builder import exterior_share
from signature.signature_io import read_signatures
from utils.csv_utils import format_float, write_rows
from utils.errors import DataError
from .response_aggregation import read_cluster_responses, read_zone_responses
from .runner import RunArtifacts

logger = logging.getLogger(__name__)

REPORTS_DIR = "reports"


def format_percent(proportion: float) -> str:
    return f"{proportion * 100:.1f}%"


def format_seconds(seconds: float) -> str:
    return str(int(round(seconds)))


def format_r_squared(value: float | None) -> str:
    return NOT_AVAILABLE if value is None else f"{value:.2f}"


def _cluster_of(artifacts: RunArtifacts) -> dict[str, int]:
    clustering = artifacts.clustering
    return {zone_id: int(label) for zone_id, label in zip(clustering.zone_ids, clustering.assignments)}


def render_reports(artifacts: RunArtifacts) -> list[Path]:
    if artifacts.signatures is None or artifacts.clustering is None or artifacts.eval_report is None:
        raise DataError("missing_artifact", "報表需要簽章、分群與評估結果，請先完成 train。")
    directory = artifacts.output_dir / REPORTS_DIR
    matrix, clustering = artifacts.signatures, artifacts.clustering
    cluster_of = _cluster_of(artifacts)
    written = []

    table1 = [
        (zone_id, *(format_percent(p) for p in row), str(cluster_of[zone_id]) if zone_id in cluster_of else "")
        for zone_id, row in zip(matrix.zone_ids, matrix.rows)
    ]
    written.append(write_rows(directory / "table1_signatures.csv", ("zone_id", *WORK_TYPE_COLUMNS, "cluster"), table1))

    table2 = [
        (str(c.cluster), format_seconds(c.mean_seconds), str(c.n_zones), str(c.n_incidents))
        for c in artifacts.cluster_responses if not c.excluded and c.mean_seconds is not None
    ]
    written.append(write_rows(directory / "table2_cluster_response.csv",
                              ("cluster", "mean_response_s", "n_zones", "n_incidents"), table2))

    table3 = []
    for cluster in artifacts.eval_report.clusters():
        best = artifacts.eval_report.best_for(cluster)
        for entry in artifacts.eval_report.for_cluster(cluster):
            table3.append((cluster, entry.model_kind, format_r_squared(entry.r_squared),
                           best.model_kind if best is not None else NOT_AVAILABLE))
    written.append(write_rows(directory / "table3_r_squared.csv", ("cluster", "model", "r_squared", "best_model"), table3))

    # 長條圖資料：群集內區域簽章的平均（不是 k-means 中心，兩者在收斂後相同）
    excluded = {c.cluster: c.excluded for c in artifacts.cluster_responses}
    rows = np.asarray(matrix.rows, dtype=float)
    labels = np.array([cluster_of.get(zone_id, -1) for zone_id in matrix.zone_ids])
    profiles = []
    for cluster in range(clustering.k):
        members = rows[labels == cluster]
        if len(members) == 0:
            continue
        mean = members.mean(axis=0)
        profiles.append((
            str(cluster), str(len(members)), *(format_float(p) for p in mean),
            format_float(float(exterior_share(mean[None, :])[0])),
            str(excluded.get(cluster, False)).lower(),
        ))
    written.append(write_rows(
        directory / "cluster_profiles.csv",
        ("cluster", "n_zones", *WORK_TYPE_COLUMNS, "exterior_share", "excluded"), profiles,
    ))

    for path in written:
        artifacts.record(path)
    logger.info(f"已輸出 {len(written)} 份報表到 {directory}")
    return written


def load_artifacts(output_dir: Path) -> RunArtifacts:
    """從輸出目錄讀回 render_reports 需要的中繼檔案（report 子命令使用）。"""
    output_dir = Path(output_dir)
    required = ("signatures.csv", "clusters.csv", "clusters_meta.json", "zone_response.csv",
                "cluster_response.csv", "eval_report.csv")
    missing = [name for name in required if not (output_dir / name).exists()]
    if missing:
        raise DataError("missing_artifact", f"{output_dir} 缺少 {', '.join(missing)}，請先執行前面的階段。",
                        details={"missing": missing})

    artifacts = RunArtifacts(output_dir=output_dir)
    artifacts.signatures = read_signatures(output_dir / "signatures.csv")
    artifacts.clustering = read_clusters(output_dir)
    if (output_dir / "ksweep.csv").exists():
        artifacts.sweep = read_ksweep(output_dir / "ksweep.csv")
    artifacts.zone_responses = read_zone_responses(output_dir / "zone_response.csv")
    artifacts.cluster_responses = read_cluster_responses(output_dir / "cluster_response.csv")
    artifacts.eval_report = read_eval_report(output_dir / "eval_report.csv")
    return artifacts
