# cluster/k_sweep.py
"""
在 [k_min, k_max] 範圍內掃描群集數量，依輪廓係數選出最佳的 k。
每個 k 都以 kmeans_best_of 的規則做多次重啟；所有 (k, 重啟) 組合一起交給 joblib 平行執行，
結果依固定順序歸約，因此與 worker 數量無關。

重啟預算 (restart_budget)：
- per_k（預設）：每個 k 都跑 restarts 次。
- total：restarts 次平均分配到所有 k（餘數分給較小的 k），每個 k 至少 1 次。
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from signature.signature_builder import SignatureMatrix
from utils.errors import ClusteringError
from .kmeans import ClusteringModel, KMeansParams, pick_best_restart, points_of, run_restarts
from .silhouette import pairwise_distances

logger = logging.getLogger(__name__)

RESTART_BUDGETS = ("per_k", "total")


@dataclass(frozen=True)
class KSweepEntry:
    k: int
    best_silhouette: float
    best_inertia: float
    winning_seed: int


@dataclass(frozen=True, eq=False)
class KSweepReport:
    entries: tuple[KSweepEntry, ...]
    selected_k: int
    selected_model: ClusteringModel | None = None

    def entry_for(self, k: int) -> KSweepEntry:
        for entry in self.entries:
            if entry.k == k:
                return entry
        raise KeyError(k)


def restarts_per_k(ks: list[int], restarts: int, restart_budget: str) -> dict[int, int]:
    if restart_budget == "per_k":
        return {k: restarts for k in ks}
    base, remainder = divmod(restarts, len(ks))
    return {k: max(1, base + (1 if i < remainder else 0)) for i, k in enumerate(ks)}


def sweep_k(
    matrix: SignatureMatrix | np.ndarray, k_min: int, k_max: int, params: KMeansParams,
    n_jobs: int = 1, restart_budget: str = "per_k",
) -> KSweepReport:
    """
    Args:
        params: 重啟次數、迭代上限、收斂門檻、種子與初始化方式的範本；其中的 k 會被忽略。
    Returns:
        KSweepReport: 每個 k 一筆紀錄；selected_k 的輪廓係數最高，相同時取較小的 k。
    """
    if restart_budget not in RESTART_BUDGETS:
        raise ClusteringError("invalid_restart_budget", f"restart_budget 必須是 {RESTART_BUDGETS} 之一")

    points, zone_ids = points_of(matrix)
    n = len(points)
    effective_max = min(k_max, n - 1)
    if k_max > effective_max:
        logger.warning(f"k_max={k_max} 超過資料點數量減一 ({n - 1})，掃描範圍改為 {k_min}..{effective_max}。")
    if k_min < 2 or k_min > effective_max:
        raise ClusteringError(
            "empty_sweep", f"k 的掃描範圍 {k_min}..{effective_max} 是空的（n = {n}）。",
            details={"k_min": k_min, "k_max": k_max, "n": n},
        )

    ks = list(range(k_min, effective_max + 1))
    budget = restarts_per_k(ks, params.restarts, restart_budget)
    cells = [(k, i) for k in ks for i in range(budget[k])]
    logger.info(f"開始掃描 k = {k_min}..{effective_max}，共 {len(cells)} 次 k-means。")

    distances = pairwise_distances(points)
    models = run_restarts(points, distances, params, cells, n_jobs)

    entries: list[KSweepEntry] = []
    best_models: dict[int, ClusteringModel] = {}
    offset = 0
    for k in ks:
        best = pick_best_restart(models[offset:offset + budget[k]])
        offset += budget[k]
        best_models[k] = best
        entries.append(KSweepEntry(k, best.silhouette, best.inertia, best.seed_used))
        logger.debug(f"k={k}: 輪廓係數 {best.silhouette:.6f}, inertia {best.inertia:.6f}")

    selected = max(entries, key=lambda e: (e.best_silhouette, -e.k))
    logger.info(f"選定 k = {selected.k}（輪廓係數 {selected.best_silhouette:.4f}）。")
    return KSweepReport(
        entries=tuple(entries),
        selected_k=selected.k,
        selected_model=replace(best_models[selected.k], zone_ids=zone_ids),
    )
