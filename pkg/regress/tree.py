# regress/tree.py
"""
迴歸決策樹 (CART)。
主要職責：
1. 分裂搜尋：在每個節點對所有候選特徵一次性排序，以累積和計算每個切點左右兩側的平方誤差和，
   選出使加權子節點變異最小的 (特徵, 門檻)；相同時取特徵編號較小者，再取門檻較小者。
2. 門檻為相鄰兩個不同特徵值的中點；預測時 x < 門檻 往左，否則往右。
3. 停止條件：max_depth、min_samples_split、min_samples_leaf、節點目標值沒有變異，或找不到合法切點。
4. 預測：整批資料按深度一層一層往下走，不逐筆遞迴。

森林會傳入 max_features 與亂數產生器，使每個節點只在隨機挑選的特徵子集上搜尋切點。
子集內沒有任何合法切點時才會檢查其餘特徵。
"""
import logging
from dataclasses import dataclass

import numpy as np

from ingestion.work_types import N_WORK_TYPES
from utils.errors import RegressionError
from .dataset import Dataset

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None        # None 表示不限深度
    min_samples_leaf: int = 1
    min_samples_split: int = 2

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth 不可為負數")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf 必須 ≥ 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split 必須 ≥ 2")

    def as_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_samples_split": self.min_samples_split,
        }


@dataclass(frozen=True, eq=False)
class TreeModel:
    """
    節點以平行陣列儲存，節點 0 為根節點。
    葉節點的 feature = -1、left = right = -1；value 是落在該節點的訓練目標值平均。
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    params: TreeParams
    kind = "tree"

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature == LEAF).sum())

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float).reshape(-1, N_WORK_TYPES)
        node = np.zeros(len(features), dtype=np.int64)
        while True:
            active = np.flatnonzero(self.feature[node] != LEAF)
            if len(active) == 0:
                break
            current = node[active]
            go_left = features[active, self.feature[current]] < self.threshold[current]
            node[active] = np.where(go_left, self.left[current], self.right[current])
        return self.value[node]


# --- 建樹 ---
class _TreeBuilder:
    def __init__(self, data: Dataset, params: TreeParams, max_features: int | None, rng: np.random.Generator | None):
        self.x = data.features
        self.y = data.targets
        self.params = params
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.n_samples: list[int] = []

    def _new_node(self, targets: np.ndarray) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        # 目標值完全相同時直接用該值，避免平均的捨入誤差超出訓練目標的範圍
        self.value.append(float(targets[0]) if np.ptp(targets) == 0 else float(targets.mean()))
        self.n_samples.append(len(targets))
        return len(self.feature) - 1

    def _candidate_features(self) -> np.ndarray:
        if self.max_features is None or self.max_features >= N_WORK_TYPES:
            return np.arange(N_WORK_TYPES)
        return np.sort(self.rng.choice(N_WORK_TYPES, size=self.max_features, replace=False))

    def _best_split(self, rows: np.ndarray) -> tuple[int, float] | None:
        """
        先在隨機挑選的特徵子集上找切點；子集中的特徵在此節點都無法切分時，
        再依編號順序改用其餘特徵，只有所有特徵都無法切分時才成為葉節點。
        """
        candidates = self._candidate_features()
        split = self._split_among(rows, candidates)
        if split is None and len(candidates) < N_WORK_TYPES:
            split = self._split_among(rows, np.setdiff1d(np.arange(N_WORK_TYPES), candidates))
        return split

    def _split_among(self, rows: np.ndarray, candidates: np.ndarray) -> tuple[int, float] | None:
        params = self.params
        m = len(rows)
        x = self.x[np.ix_(rows, candidates)]
        targets = self.y[rows]
        centered = targets - targets.mean()

        order = np.argsort(x, axis=0, kind="stable")
        xs = np.take_along_axis(x, order, axis=0)
        ys = centered[order]

        left_n = np.arange(1, m, dtype=float)[:, None]
        right_n = m - left_n
        left_sum = np.cumsum(ys, axis=0)[:-1]
        left_sq = np.cumsum(ys ** 2, axis=0)[:-1]
        right_sum = ys.sum(axis=0) - left_sum
        right_sq = (ys ** 2).sum(axis=0) - left_sq
        sse = (left_sq - left_sum ** 2 / left_n) + (right_sq - right_sum ** 2 / right_n)

        valid = (xs[1:] > xs[:-1]) & (left_n >= params.min_samples_leaf) & (right_n >= params.min_samples_leaf)
        if not valid.any():
            return None

        # 轉置後以 C 順序取 argmin：先比特徵編號，再比切點位置（即門檻大小）
        scores = np.where(valid, sse, np.inf).T
        feature_pos, split_pos = np.unravel_index(int(np.argmin(scores)), scores.shape)
        lower, upper = xs[split_pos, feature_pos], xs[split_pos + 1, feature_pos]
        threshold = (lower + upper) / 2.0
        if not (lower < threshold <= upper):
            threshold = upper
        return int(candidates[feature_pos]), float(threshold)

    def build(self, rows: np.ndarray, depth: int) -> int:
        params = self.params
        targets = self.y[rows]
        node = self._new_node(targets)

        if params.max_depth is not None and depth >= params.max_depth:
            return node
        if len(rows) < params.min_samples_split or len(rows) < 2 * params.min_samples_leaf:
            return node
        if np.ptp(targets) == 0:
            return node

        split = self._best_split(rows)
        if split is None:
            return node
        feature, threshold = split
        goes_left = self.x[rows, feature] < threshold

        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = self.build(rows[goes_left], depth + 1)
        self.right[node] = self.build(rows[~goes_left], depth + 1)
        return node

    def to_model(self) -> TreeModel:
        arrays = {
            "feature": np.asarray(self.feature, dtype=np.int64),
            "threshold": np.asarray(self.threshold, dtype=float),
            "left": np.asarray(self.left, dtype=np.int64),
            "right": np.asarray(self.right, dtype=np.int64),
            "value": np.asarray(self.value, dtype=float),
            "n_samples": np.asarray(self.n_samples, dtype=np.int64),
        }
        for array in arrays.values():
            array.setflags(write=False)
        return TreeModel(params=self.params, **arrays)


def fit_tree(
    data: Dataset, params: TreeParams | None = None,
    max_features: int | None = None, rng: np.random.Generator | None = None,
) -> TreeModel:
    if len(data) == 0:
        raise RegressionError("empty_dataset", "決策樹的訓練資料是空的。")
    params = params or TreeParams()
    if max_features is not None and max_features < N_WORK_TYPES and rng is None:
        raise ValueError("特徵子抽樣需要提供亂數產生器 rng")

    builder = _TreeBuilder(data, params, max_features, rng)
    builder.build(np.arange(len(data)), depth=0)
    return builder.to_model()
