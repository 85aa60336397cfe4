# cluster/silhouette.py
"""
輪廓係數 (Silhouette coefficient)，用來比較不同 k 值、不同重啟的分群品質。

對第 i 個點：
    c(i) = 與同群其他點的平均距離
    o(i) = 對每一個其他群集，計算與該群所有點的平均距離，取最小值
    s(i) = (o(i) - c(i)) / max(c(i), o(i))
整體分數為所有 s(i) 的平均；單點群集的 s(i) 定為 0。
距離為歐氏距離。每個群集的距離總和都以固定的欄位順序加總，結果不受執行緒數量影響。
"""
import numpy as np

from signature.signature_builder import SignatureMatrix
from utils.errors import ClusteringError


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def silhouette(
    matrix: SignatureMatrix | np.ndarray, assignments: np.ndarray, k: int | None = None,
) -> float:
    """
    Args:
        matrix: 簽章矩陣或 (n, d) 的點座標。
        assignments: 每個點的群集編號。
        k: 群集數；未指定時取 max(assignments) + 1。群集編號 0..k-1 中每一個都必須有成員。
    Raises:
        ClusteringError("silhouette_undefined"): 群集數 < 2、群集數 > n-1、編號超出 0..k-1，或有空群集。
    """
    points = matrix.rows if isinstance(matrix, SignatureMatrix) else matrix
    labels = np.asarray(assignments)
    if len(labels):
        k = int(labels.max()) + 1 if k is None else k
        present = np.unique(labels)
        if present[0] < 0 or len(present) != k or present[-1] >= k:
            raise ClusteringError(
                "silhouette_undefined",
                f"群集編號必須是 0..{k - 1} 且每個群集都有成員，目前出現的編號為 {present.tolist()}。",
                details={"k": k, "labels": present.tolist()},
            )
    return silhouette_from_distances(pairwise_distances(points), labels)


def silhouette_from_distances(distances: np.ndarray, assignments: np.ndarray) -> float:
    labels = np.asarray(assignments)
    n = len(labels)
    clusters, own = np.unique(labels, return_inverse=True)
    n_clusters = len(clusters)
    if n_clusters < 2 or n_clusters > n - 1:
        raise ClusteringError(
            "silhouette_undefined",
            f"輪廓係數需要 2 ≤ 群集數 ≤ n-1，目前群集數 {n_clusters}、n = {n}。",
            details={"n_clusters": n_clusters, "n": n},
        )

    sizes = np.bincount(own, minlength=n_clusters).astype(float)
    sums = np.empty((n, n_clusters))
    for c in range(n_clusters):
        sums[:, c] = distances[:, own == c].sum(axis=1)

    rows = np.arange(n)
    own_size = sizes[own]
    singleton = own_size == 1
    # 自己到自己的距離為 0，因此同群總和除以 (群集大小 - 1) 即為 c(i)
    cohesion = np.where(singleton, 0.0, sums[rows, own] / np.maximum(own_size - 1, 1))

    means = sums / sizes
    means[rows, own] = np.inf
    separation = means.min(axis=1)

    denominator = np.maximum(cohesion, separation)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(denominator > 0, (separation - cohesion) / denominator, 0.0)
    scores[singleton] = 0.0
    return float(scores.mean())
