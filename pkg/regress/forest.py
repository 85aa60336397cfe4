# regress/forest.py
"""
隨機森林：每棵樹以自己的衍生種子 derive_seed(seed, t) 做 bootstrap 重抽樣（n 次、取後放回），
每個節點只在 max_features 個隨機特徵中搜尋切點；預測值為所有樹預測的算術平均。
樹與樹之間互相獨立，以 joblib 平行訓練，結果依樹的編號排列，與 worker 數量無關。
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ingestion.work_types import N_WORK_TYPES
from utils.errors import RegressionError
from utils.seed_utils import rng_for
from .dataset import Dataset
from .tree import TreeModel, TreeParams, fit_tree

logger = logging.getLogger(__name__)

DEFAULT_MAX_FEATURES = math.ceil(N_WORK_TYPES / 3)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: int = DEFAULT_MAX_FEATURES
    bootstrap: bool = True
    tree: TreeParams = field(default_factory=TreeParams)

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees 必須 ≥ 1")
        if not 1 <= self.max_features <= N_WORK_TYPES:
            raise ValueError(f"max_features 必須介於 1 與 {N_WORK_TYPES} 之間")

    def as_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            **self.tree.as_dict(),
        }


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[TreeModel, ...]
    params: ForestParams
    seed: int
    kind = "forest"

    def __post_init__(self):
        if not self.trees:
            raise ValueError("森林至少要有一棵樹")

    def predict_many(self, features: np.ndarray) -> np.ndarray:
        predictions = np.vstack([tree.predict_many(features) for tree in self.trees])
        return predictions.mean(axis=0)


def _fit_one_tree(data: Dataset, params: ForestParams, seed: int, tree_index: int) -> TreeModel:
    rng = rng_for(seed, tree_index)
    n = len(data)
    sample = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
    return fit_tree(data.take(sample), params.tree, params.max_features, rng)


def fit_forest(data: Dataset, params: ForestParams | None = None, seed: int = 42, n_jobs: int = 1) -> ForestModel:
    if len(data) == 0:
        raise RegressionError("empty_dataset", "隨機森林的訓練資料是空的。")
    params = params or ForestParams()
    trees = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_fit_one_tree)(data, params, seed, t) for t in range(params.n_trees)
    )
    logger.debug(f"已訓練 {params.n_trees} 棵樹（max_features={params.max_features}, bootstrap={params.bootstrap}）。")
    return ForestModel(trees=tuple(trees), params=params, seed=int(seed))
