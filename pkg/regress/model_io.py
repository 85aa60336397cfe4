# regress/model_io.py
"""
模型的 JSON 序列化，格式帶有 schema_version 與 kind，讀回後的預測值與原模型位元相同。

    {"schema_version": 1, "kind": "ols",    "coefficients": [...8], "intercept": 288.0, "dropped_features": [...]}
    {"schema_version": 1, "kind": "tree",   "params": {...}, "nodes": {"feature": [...], "threshold": [...],
                                             "left": [...], "right": [...], "value": [...], "n_samples": [...]}}
    {"schema_version": 1, "kind": "forest", "params": {...}, "seed": 42, "trees": [{"params": ..., "nodes": ...}, ...]}

max_depth 不限深度時寫成 null。浮點數以 json 的最短可還原表示寫出。
"""
import logging
from pathlib import Path
from typing import Any

import numpy as np

from utils.csv_utils import read_json, write_json
from utils.errors import DataError
from .forest import ForestModel, ForestParams
from .ols import OlsModel
from .prediction import RegressionModel
from .tree import TreeModel, TreeParams

logger = logging.getLogger(__name__)

MODEL_SCHEMA_VERSION = 1
_NODE_FIELDS = {"feature": np.int64, "threshold": float, "left": np.int64, "right": np.int64,
                "value": float, "n_samples": np.int64}


def _tree_to_dict(tree: TreeModel) -> dict[str, Any]:
    return {
        "params": tree.params.as_dict(),
        "nodes": {name: getattr(tree, name).tolist() for name in _NODE_FIELDS},
    }


def _tree_from_dict(payload: dict[str, Any]) -> TreeModel:
    params = TreeParams(**payload["params"])
    arrays = {}
    for name, dtype in _NODE_FIELDS.items():
        array = np.asarray(payload["nodes"][name], dtype=dtype)
        array.setflags(write=False)
        arrays[name] = array
    return TreeModel(params=params, **arrays)


def model_to_dict(model: RegressionModel) -> dict[str, Any]:
    if isinstance(model, OlsModel):
        body = {
            "coefficients": list(model.coefficients),
            "intercept": model.intercept,
            "dropped_features": list(model.dropped_features),
        }
    elif isinstance(model, TreeModel):
        body = _tree_to_dict(model)
    elif isinstance(model, ForestModel):
        body = {
            "params": model.params.as_dict(),
            "seed": model.seed,
            "trees": [_tree_to_dict(tree) for tree in model.trees],
        }
    else:
        raise TypeError(f"無法序列化的模型型別: {type(model).__name__}")
    return {"schema_version": MODEL_SCHEMA_VERSION, "kind": model.kind, **body}


def model_from_dict(payload: dict[str, Any]) -> RegressionModel:
    if payload.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise DataError("invalid_model_file", f"不支援的模型 schema_version: {payload.get('schema_version')}")
    kind = payload.get("kind")
    try:
        if kind == "ols":
            return OlsModel(
                coefficients=tuple(float(c) for c in payload["coefficients"]),
                intercept=float(payload["intercept"]),
                dropped_features=tuple(payload.get("dropped_features", ())),
            )
        if kind == "tree":
            return _tree_from_dict(payload)
        if kind == "forest":
            raw = dict(payload["params"])
            forest_params = ForestParams(
                n_trees=raw.pop("n_trees"),
                max_features=raw.pop("max_features"),
                bootstrap=raw.pop("bootstrap"),
                tree=TreeParams(**raw),
            )
            trees = tuple(_tree_from_dict(tree) for tree in payload["trees"])
            return ForestModel(trees=trees, params=forest_params, seed=int(payload["seed"]))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError("invalid_model_file", f"模型檔內容不完整或不合法: {e}") from e
    raise DataError("invalid_model_file", f"未知的模型種類: {kind}")


def save_model(path: Path, model: RegressionModel, extra: dict[str, Any] | None = None) -> Path:
    payload = model_to_dict(model)
    if extra:
        payload["metadata"] = extra
    return write_json(Path(path), payload)


def load_model(path: Path) -> RegressionModel:
    try:
        payload = read_json(Path(path))
    except (OSError, ValueError) as e:
        raise DataError("io_error", f"無法讀取模型檔 {path}: {e}") from e
    return model_from_dict(payload)
