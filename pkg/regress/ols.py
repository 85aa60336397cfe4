# regress/ols.py
"""
普通最小平方法 (OLS)，作為基準模型。
以 QR 分解求解（不使用正規方程式）：A = QR，再以上三角回代解 R·β = Qᵀy。

共線性處理：
1. 在訓練資料中為常數的特徵欄位與截距共線，係數固定為 0 並從設計矩陣移除。
2. 簽章的 8 個比例總和為 1，截距加上所有變動的特徵欄位必然秩不足；
   若剩下欄位的列總和為常數，移除最後一個變動的欄位（預設為 signage），其係數為 0，
   其他係數因此解讀為「相對於被移除類型」的效果。
3. 處理後若仍秩不足，拋出 singular_design，並附上秩不足的欄位。
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ingestion.work_types import N_WORK_TYPES, WORK_TYPE_COLUMNS
from utils.errors import RegressionError
from .dataset import Dataset

logger = logging.getLogger(__name__)

# R 對角線相對於最大值小於此比例時視為秩不足
_RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class OlsModel:
    coefficients: tuple[float, ...]
    intercept: float
    dropped_features: tuple[str, ...] = ()
    kind = "ols"

    def __post_init__(self):
        if len(self.coefficients) != N_WORK_TYPES:
            raise ValueError(f"coefficients 必須有 {N_WORK_TYPES} 個值")
        if not np.isfinite(self.coefficients).all() or not np.isfinite(self.intercept):
            raise ValueError("OLS 係數必須是有限數值")

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=float) @ np.asarray(self.coefficients) + self.intercept


def _collinear_columns(features: np.ndarray) -> tuple[list[int], list[int]]:
    """回傳 (保留的欄位, 移除的欄位)。"""
    spread = np.ptp(features, axis=0) if len(features) else np.zeros(N_WORK_TYPES)
    varying = [j for j in range(N_WORK_TYPES) if spread[j] > 0]
    dropped = [j for j in range(N_WORK_TYPES) if spread[j] == 0]
    if len(varying) >= 2:
        row_sums = features[:, varying].sum(axis=1)
        if np.ptp(row_sums) <= 1e-9 * max(1.0, float(np.abs(row_sums).max())):
            dropped.append(varying.pop())
    return varying, sorted(dropped)


def fit_ols(data: Dataset) -> OlsModel:
    n = len(data)
    if n == 0:
        raise RegressionError("empty_dataset", "OLS 的訓練資料是空的。")

    kept, dropped = _collinear_columns(data.features)
    design = np.column_stack([np.ones(n), data.features[:, kept]])
    names = ["intercept"] + [WORK_TYPE_COLUMNS[j] for j in kept]

    if n < design.shape[1]:
        raise RegressionError(
            "singular_design", f"資料列數 {n} 少於設計矩陣的欄位數 {design.shape[1]}。",
            details={"deficient_columns": names[n:]},
        )

    q, r = np.linalg.qr(design, mode="reduced")
    diagonal = np.abs(np.diag(r))
    deficient = [names[j] for j in np.flatnonzero(diagonal <= _RANK_TOLERANCE * diagonal.max())]
    if deficient:
        raise RegressionError(
            "singular_design", f"設計矩陣秩不足，無法分辨的欄位: {deficient}",
            details={"deficient_columns": deficient},
        )

    beta = solve_triangular(r, q.T @ data.targets, lower=False)
    coefficients = np.zeros(N_WORK_TYPES)
    coefficients[kept] = beta[1:]
    dropped_names = tuple(WORK_TYPE_COLUMNS[j] for j in dropped)
    if dropped_names:
        logger.debug(f"OLS 移除共線欄位: {dropped_names}")
    return OlsModel(tuple(coefficients.tolist()), float(beta[0]), dropped_names)
