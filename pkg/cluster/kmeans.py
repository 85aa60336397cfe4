# cluster/kmeans.py
"""
Lloyd 演算法 (k-means) 與多次重啟。
主要職責：
1. lloyd：單次 k-means；預設以 k-means++ 初始化，可切換為均勻隨機挑選初始中心。
2. kmeans_best_of：以 restarts 個衍生種子各跑一次 lloyd，保留輪廓係數最高的結果。

決定性規則：
- 距離一律使用歐氏距離的平方；距離相同時分配給編號最小的群集。
- 迭代中若有群集變成空的，將「離自己中心最遠、且所屬群集不只一個點」的點移過去當新中心。
- 第 i 次重啟的種子 = derive_seed(seed, i)，因此結果與平行執行的 worker 數量無關。
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from signature.signature_builder import SignatureMatrix
from utils.errors import ClusteringError
from utils.seed_utils import derive_seed
from .silhouette import pairwise_distances, silhouette_from_distances

logger = logging.getLogger(__name__)

INIT_METHODS = ("kmeans++", "uniform")


@dataclass(frozen=True)
class KMeansParams:
    k: int
    restarts: int = 100
    max_iters: int = 300
    convergence_tol: float = 1e-6
    seed: int = 42
    init: str = "kmeans++"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k 必須 ≥ 1，收到 {self.k}")
        if self.restarts < 1:
            raise ValueError(f"restarts 必須 ≥ 1，收到 {self.restarts}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters 必須 ≥ 1，收到 {self.max_iters}")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol 不可為負數")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init 必須是 {INIT_METHODS} 之一")


@dataclass(frozen=True, eq=False)
class ClusteringModel:
    k: int
    centroids: np.ndarray            # (k, 8)
    assignments: np.ndarray          # 每個區域所屬的群集編號
    inertia: float
    silhouette: float | None
    seed_used: int
    iterations_run: int
    inertia_history: tuple[float, ...] = ()
    zone_ids: tuple[str, ...] = field(default=())

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def members(self, cluster: int) -> list[str]:
        return [zone for zone, label in zip(self.zone_ids, self.assignments) if label == cluster]

    def nearest_centroid(self, point: np.ndarray) -> int:
        # 距離相同時 argmin 會回傳編號最小的群集
        d2 = ((self.centroids - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
        return int(np.argmin(d2))


def points_of(matrix: SignatureMatrix | np.ndarray) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(matrix, SignatureMatrix):
        return np.asarray(matrix.rows, dtype=float), matrix.zone_ids
    return np.asarray(matrix, dtype=float), ()


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


# --- 初始化 ---
def _init_kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++：第一個中心均勻挑選，之後以「與最近中心距離的平方」為權重抽樣。"""
    n = len(points)
    chosen = [int(rng.integers(n))]
    closest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(closest.sum())
        if total > 0.0:
            cumulative = np.cumsum(closest)
            index = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
            index = min(index, n - 1)
        else:
            # 剩下的點都和既有中心重合
            remaining = np.setdiff1d(np.arange(n), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        closest = np.minimum(closest, ((points - points[index]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _init_uniform(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = rng.choice(len(points), size=k, replace=False)
    return points[np.sort(chosen)].copy()


# --- 空群集修復 ---
def _repair_empty(labels: np.ndarray, d2: np.ndarray) -> np.ndarray:
    k = d2.shape[1]
    sizes = np.bincount(labels, minlength=k)
    own_d2 = d2[np.arange(len(labels)), labels].copy()
    for cluster in np.flatnonzero(sizes == 0):
        eligible = sizes[labels] > 1
        candidates = np.where(eligible, own_d2, -np.inf)
        point = int(np.argmax(candidates))
        sizes[labels[point]] -= 1
        labels[point] = cluster
        sizes[cluster] = 1
        own_d2[point] = 0.0
        logger.debug(f"群集 {cluster} 變成空的，改以第 {point} 個點為中心。")
    return labels


def _means(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.vstack([points[labels == cluster].mean(axis=0) for cluster in range(k)])


# --- 單次 k-means ---
def lloyd(
    matrix: SignatureMatrix | np.ndarray, k: int, seed: int, max_iters: int = 300, tol: float = 1e-6,
    init: str = "kmeans++",
) -> ClusteringModel:
    """
    Returns:
        ClusteringModel: silhouette 欄位為 None；inertia_history 記錄每次更新中心後的 inertia（非遞增）。
    """
    points, zone_ids = points_of(matrix)
    n = len(points)
    if k < 1:
        raise ClusteringError("invalid_k", f"k 必須 ≥ 1，收到 {k}")
    if k > n:
        raise ClusteringError("k_exceeds_points", f"k={k} 大於資料點數量 {n}", details={"k": k, "n": n})

    rng = np.random.default_rng(seed)
    centroids = _init_kmeans_pp(points, k, rng) if init == "kmeans++" else _init_uniform(points, k, rng)

    labels: np.ndarray | None = None
    history: list[float] = []
    iterations = 0
    while iterations < max_iters:
        iterations += 1
        d2 = _squared_distances(points, centroids)
        new_labels = _repair_empty(np.argmin(d2, axis=1), d2)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        new_centroids = _means(points, labels, k)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        history.append(float(((points - centroids[labels]) ** 2).sum()))
        if shift < tol:
            break

    centroids.setflags(write=False)
    labels = labels.astype(np.int64)
    labels.setflags(write=False)
    return ClusteringModel(
        k=k,
        centroids=centroids,
        assignments=labels,
        inertia=history[-1],
        silhouette=None,
        seed_used=int(seed),
        iterations_run=iterations,
        inertia_history=tuple(history),
        zone_ids=zone_ids,
    )


# --- 多次重啟 ---
def _restart_task(points: np.ndarray, distances: np.ndarray, params: KMeansParams, k: int, seed: int) -> ClusteringModel:
    model = lloyd(points, k, seed, params.max_iters, params.convergence_tol, params.init)
    return replace(model, silhouette=silhouette_from_distances(distances, model.assignments))


def pick_best_restart(models: list[ClusteringModel]) -> ClusteringModel:
    # 輪廓係數最高者勝出；相同時取 inertia 較小者，再相同時取較早的重啟
    best = min(range(len(models)), key=lambda i: (-models[i].silhouette, models[i].inertia, i))
    return models[best]


def run_restarts(
    points: np.ndarray, distances: np.ndarray, params: KMeansParams, cells: list[tuple[int, int]], n_jobs: int = 1,
) -> list[ClusteringModel]:
    """
    cells 為 (k, 重啟編號) 的列表；每個 cell 是獨立的工作，結果依 cells 的順序回傳。
    """
    tasks = (delayed(_restart_task)(points, distances, params, k, derive_seed(params.seed, i)) for k, i in cells)
    return list(Parallel(n_jobs=n_jobs, prefer="threads")(tasks))


def kmeans_best_of(matrix: SignatureMatrix | np.ndarray, params: KMeansParams, n_jobs: int = 1) -> ClusteringModel:
    points, zone_ids = points_of(matrix)
    if params.k > len(points):
        raise ClusteringError("k_exceeds_points", f"k={params.k} 大於資料點數量 {len(points)}")

    distances = pairwise_distances(points)
    models = run_restarts(points, distances, params, [(params.k, i) for i in range(params.restarts)], n_jobs)
    best = pick_best_restart(models)
    logger.debug(
        f"k={params.k}：{params.restarts} 次重啟中最佳輪廓係數 {best.silhouette:.4f}，inertia {best.inertia:.6f}。"
    )
    return replace(best, zone_ids=zone_ids)
