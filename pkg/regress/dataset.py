# regress/dataset.py
"""迴歸模型的輸入：每列是一個區域的 8 維簽章，目標值是該區域的平均反應時間（秒）。"""
from dataclasses import dataclass

import numpy as np

from ingestion.work_types import N_WORK_TYPES


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray          # (n, 8)
    targets: np.ndarray           # (n,)
    row_ids: tuple[str, ...] = ()

    def __post_init__(self):
        features = np.array(self.features, dtype=float).reshape(-1, N_WORK_TYPES)
        targets = np.array(self.targets, dtype=float).reshape(-1)
        if len(features) != len(targets):
            raise ValueError(f"features 有 {len(features)} 列，targets 有 {len(targets)} 個值")
        if not np.isfinite(features).all() or not np.isfinite(targets).all():
            raise ValueError("features 與 targets 必須是有限數值")
        if (targets < 0).any():
            raise ValueError("反應時間 (targets) 不可為負數")
        row_ids = tuple(self.row_ids) or tuple(str(i) for i in range(len(targets)))
        if len(row_ids) != len(targets):
            raise ValueError("row_ids 的數量必須與資料列數相同")
        features.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "row_ids", row_ids)

    def __len__(self) -> int:
        return len(self.targets)

    def take(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.targets[indices], tuple(self.row_ids[i] for i in indices))
