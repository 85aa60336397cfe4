# cluster/cluster_io.py
"""
分群結果的讀寫：
- clusters.csv：zone_id,cluster
- clusters_meta.json：k、輪廓係數、inertia、種子、迭代次數與中心座標（predict 階段需要中心座標）
- ksweep.csv：k,best_silhouette,best_inertia,winning_seed
"""
import logging
from pathlib import Path
from typing import Any

import numpy as np

from utils.csv_utils import format_float, read_json, read_table, write_json, write_rows
from utils.errors import DataError
from .k_sweep import KSweepEntry, KSweepReport
from .kmeans import ClusteringModel

logger = logging.getLogger(__name__)

CLUSTERS_HEADER = ("zone_id", "cluster")
KSWEEP_HEADER = ("k", "best_silhouette", "best_inertia", "winning_seed")


def write_clusters(directory: Path, model: ClusteringModel, extra_meta: dict[str, Any] | None = None) -> None:
    directory = Path(directory)
    write_rows(directory / "clusters.csv", CLUSTERS_HEADER,
               [(zone_id, str(int(label))) for zone_id, label in zip(model.zone_ids, model.assignments)])
    meta = {
        "k": model.k,
        "silhouette": model.silhouette,
        "inertia": model.inertia,
        "seed": model.seed_used,
        "iterations_run": model.iterations_run,
        "inertia_history": list(model.inertia_history),
        "centroids": model.centroids.tolist(),
        **(extra_meta or {}),
    }
    write_json(directory / "clusters_meta.json", meta)


def read_clusters(directory: Path) -> ClusteringModel:
    directory = Path(directory)
    try:
        table = read_table(directory / "clusters.csv")
        meta = read_json(directory / "clusters_meta.json")
    except (OSError, ValueError) as e:
        raise DataError("io_error", f"無法讀取 {directory} 中的分群結果: {e}") from e

    if tuple(table.columns) != CLUSTERS_HEADER:
        raise DataError("invalid_clusters_file", f"{directory / 'clusters.csv'} 的表頭不正確。")

    centroids = np.asarray(meta["centroids"], dtype=float)
    assignments = table["cluster"].astype(np.int64).to_numpy()
    centroids.setflags(write=False)
    assignments.setflags(write=False)
    return ClusteringModel(
        k=int(meta["k"]),
        centroids=centroids,
        assignments=assignments,
        inertia=float(meta["inertia"]),
        silhouette=None if meta.get("silhouette") is None else float(meta["silhouette"]),
        seed_used=int(meta["seed"]),
        iterations_run=int(meta["iterations_run"]),
        inertia_history=tuple(float(v) for v in meta.get("inertia_history", [])),
        zone_ids=tuple(table["zone_id"]),
    )


def write_ksweep(path: Path, report: KSweepReport) -> Path:
    rows = [
        (str(e.k), format_float(e.best_silhouette), format_float(e.best_inertia), str(e.winning_seed))
        for e in report.entries
    ]
    return write_rows(Path(path), KSWEEP_HEADER, rows)


def read_ksweep(path: Path) -> KSweepReport:
    table = read_table(Path(path))
    entries = tuple(
        KSweepEntry(int(r["k"]), float(r["best_silhouette"]), float(r["best_inertia"]), int(r["winning_seed"]))
        for r in table.to_dict(orient="records")
    )
    if not entries:
        raise DataError("invalid_ksweep_file", f"{path} 沒有任何紀錄。")
    selected = max(entries, key=lambda e: (e.best_silhouette, -e.k))
    return KSweepReport(entries=entries, selected_k=selected.k)
