# regress/cross_validation.py
"""
交叉驗證與超參數網格搜尋。
主要職責：
1. expand_grid：把 {參數: [候選值]} 依字典的鍵順序展開成網格點列表（itertools.product）。
2. cross_validate：以 derive_seed(seed, 0) 打亂資料列，切成 folds 個連續區段；
   每個網格點在每一折訓練、在保留的那一折上預測，以保留資料的 R² 評分。
3. 取平均分數最高的網格點（相同時取網格順序較前者），再以全部資料與 seed 重新訓練最終模型。

評分方式：
- 每一折至少 2 列且目標值有變異時，分數為各折 R² 的平均。
- 否則（例如 folds = n 的留一法）單折 R² 無法定義，改為將所有折的保留預測合併後計算一次 R²。
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from joblib import Parallel, delayed

from utils.errors import ConfigurationError, RegressionError
from utils.seed_utils import derive_seed, rng_for
from .dataset import Dataset
from .forest import DEFAULT_MAX_FEATURES, ForestParams, fit_forest
from .metrics import r_squared
from .ols import fit_ols
from .prediction import RegressionModel
from .tree import TreeParams, fit_tree

logger = logging.getLogger(__name__)

MODEL_KINDS = ("ols", "tree", "forest")
TREE_KEYS = ("max_depth", "min_samples_leaf", "min_samples_split")
FOREST_KEYS = ("n_trees", "max_features", "bootstrap") + TREE_KEYS

# max_depth 的 None 代表不限深度
DEFAULT_PARAM_GRIDS: dict[str, dict[str, list[Any]]] = {
    "ols": {},
    "tree": {"max_depth": [2, 4, 8, None], "min_samples_leaf": [1, 3, 5]},
    "forest": {"n_trees": [100], "max_features": [3]},
}


@dataclass(frozen=True, eq=False)
class CvResult:
    model_kind: str
    best_params: dict[str, Any]
    score: float
    model: RegressionModel
    n_rows: int
    scoring: str                                     # "per_fold" 或 "pooled"
    grid_scores: tuple[tuple[dict[str, Any], float], ...] = field(default=())


def _normalize_depth(value: Any) -> int | None:
    if value is None:
        return None
    if isinstance(value, str) and value.strip().lower() in ("none", "null", "inf", "infinity", "∞"):
        return None
    if isinstance(value, float) and math.isinf(value):
        return None
    return int(value)


def make_params(model_kind: str, point: dict[str, Any]) -> TreeParams | ForestParams | None:
    if model_kind not in MODEL_KINDS:
        raise ConfigurationError("unknown_model_kind", f"未知的模型種類: {model_kind}")
    allowed = {"ols": (), "tree": TREE_KEYS, "forest": FOREST_KEYS}[model_kind]
    unknown = set(point) - set(allowed)
    if unknown:
        raise ConfigurationError("invalid_param_grid", f"{model_kind} 不支援的超參數: {sorted(unknown)}")
    if model_kind == "ols":
        return None

    try:
        tree = TreeParams(
            max_depth=_normalize_depth(point.get("max_depth")),
            min_samples_leaf=int(point.get("min_samples_leaf", 1)),
            min_samples_split=int(point.get("min_samples_split", 2)),
        )
        if model_kind == "tree":
            return tree
        return ForestParams(
            n_trees=int(point.get("n_trees", 100)),
            max_features=int(point.get("max_features", DEFAULT_MAX_FEATURES)),
            bootstrap=bool(point.get("bootstrap", True)),
            tree=tree,
        )
    except (TypeError, ValueError) as e:
        raise ConfigurationError("invalid_param_grid", f"{model_kind} 的超參數不合法 {point}: {e}") from e


def fit_model(model_kind: str, data: Dataset, point: dict[str, Any], seed: int, n_jobs: int = 1) -> RegressionModel:
    params = make_params(model_kind, point)
    if model_kind == "ols":
        return fit_ols(data)
    if model_kind == "tree":
        return fit_tree(data, params)
    return fit_forest(data, params, seed, n_jobs)


def expand_grid(model_kind: str, param_grid: dict[str, list[Any]] | None = None) -> list[dict[str, Any]]:
    grid = DEFAULT_PARAM_GRIDS.get(model_kind, {}) if param_grid is None else param_grid
    keys = list(grid)
    values = [v if isinstance(v, (list, tuple)) else [v] for v in grid.values()]
    points = [dict(zip(keys, combination)) for combination in itertools.product(*values)]
    for point in points:
        make_params(model_kind, point)
    return points


def _fold_predictions(
    data: Dataset, model_kind: str, point: dict[str, Any], fold_rows: list[np.ndarray], fold: int, seed: int,
) -> np.ndarray:
    train = np.concatenate([rows for j, rows in enumerate(fold_rows) if j != fold])
    model = fit_model(model_kind, data.take(train), point, derive_seed(seed, 1 + fold))
    return model.predict_many(data.features[fold_rows[fold]])


def cross_validate(
    data: Dataset, model_kind: str, param_grid: dict[str, list[Any]] | None = None,
    folds: int = 5, seed: int = 42, n_jobs: int = 1,
) -> CvResult:
    n = len(data)
    if folds < 2:
        raise ConfigurationError("invalid_folds", f"folds 必須 ≥ 2，收到 {folds}")
    if n < folds:
        raise RegressionError("too_few_rows", f"資料只有 {n} 列，少於 folds = {folds}。",
                              details={"n_rows": n, "folds": folds})

    grid = expand_grid(model_kind, param_grid)
    order = rng_for(seed, 0).permutation(n)
    fold_rows = np.array_split(order, folds)
    pooled = any(len(rows) < 2 or np.ptp(data.targets[rows]) == 0 for rows in fold_rows)

    cells = [(g, f) for g in range(len(grid)) for f in range(folds)]
    predictions = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_fold_predictions)(data, model_kind, grid[g], fold_rows, f, seed) for g, f in cells
    )

    scores: list[float] = []
    for g in range(len(grid)):
        per_fold = predictions[g * folds:(g + 1) * folds]
        if pooled:
            out_of_fold = np.empty(n)
            for rows, fold_pred in zip(fold_rows, per_fold):
                out_of_fold[rows] = fold_pred
            scores.append(r_squared(data.targets, out_of_fold))
        else:
            fold_scores = [r_squared(data.targets[rows], fold_pred) for rows, fold_pred in zip(fold_rows, per_fold)]
            scores.append(float(np.mean(fold_scores)))
        logger.debug(f"{model_kind} {grid[g]}: CV R² = {scores[-1]:.4f}")

    best = max(range(len(grid)), key=lambda g: (scores[g], -g))
    model = fit_model(model_kind, data, grid[best], seed, n_jobs)
    return CvResult(
        model_kind=model_kind,
        best_params=dict(grid[best]),
        score=scores[best],
        model=model,
        n_rows=n,
        scoring="pooled" if pooled else "per_fold",
        grid_scores=tuple((dict(point), score) for point, score in zip(grid, scores)),
    )
