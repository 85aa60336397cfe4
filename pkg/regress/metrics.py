# regress/metrics.py
import numpy as np

from utils.errors import RegressionError


def r_squared(y_true, y_pred) -> float:
    """
    決定係數 R² = 1 - SS_res / SS_tot，SS_tot 以 y_true 的平均計算；可能為負數。
    y_true 為常數時無法定義，拋出 zero_variance_target（報表上顯示 n/a）。
    """
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise RegressionError("length_mismatch", f"y_true 與 y_pred 的長度不同: {y_true.shape} / {y_pred.shape}")
    if len(y_true) < 2 or np.ptp(y_true) == 0:
        raise RegressionError("zero_variance_target", "目標值沒有變異，R² 無法定義。")
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    ss_res = float(((y_true - y_pred) ** 2).sum())
    return 1.0 - ss_res / ss_tot
