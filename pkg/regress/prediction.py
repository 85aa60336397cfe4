# regress/prediction.py
import numpy as np

from ingestion.work_types import N_WORK_TYPES
from utils.errors import RegressionError
from .forest import ForestModel
from .ols import OlsModel
from .tree import TreeModel

RegressionModel = OlsModel | TreeModel | ForestModel


def _check_features(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.shape[-1] != N_WORK_TYPES:
        raise RegressionError("invalid_features", f"特徵向量必須有 {N_WORK_TYPES} 個分量，收到 {features.shape[-1]} 個。")
    if not np.isfinite(features).all():
        raise RegressionError("invalid_features", "特徵向量含有非有限數值 (NaN / inf)。")
    return features


def predict(model: RegressionModel, features) -> float:
    """單一區域的預測反應時間（秒）。"""
    features = _check_features(features).reshape(1, N_WORK_TYPES)
    return float(model.predict_many(features)[0])


def predict_many(model: RegressionModel, features) -> np.ndarray:
    return model.predict_many(_check_features(features).reshape(-1, N_WORK_TYPES))
