# pipeline/response_aggregation.py
"""
事故反應時間的彙總：
1. aggregate_response：每個區域的平均反應時間與事故數；事故數少於 min_count 的區域標記為排除（不進入迴歸）。
2. summarize_clusters：每個群集的區域數、事故數、事故佔比與平均反應時間（所有事故的平均），
   並依佔比門檻決定群集是否排除在迴歸之外。被排除的群集仍然會出現在分群報表中。
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from cluster.kmeans import ClusteringModel
from ingestion.records import IncidentRecord
from utils.csv_utils import format_float, read_table, write_rows

logger = logging.getLogger(__name__)

ZONE_RESPONSE_HEADER = ("zone_id", "mean_response_s", "incident_count", "total_response_s", "excluded")
CLUSTER_RESPONSE_HEADER = ("cluster", "n_zones", "n_incidents", "incident_share", "mean_response_s", "excluded")


@dataclass(frozen=True)
class ZoneResponse:
    zone_id: str
    mean_seconds: float
    count: int
    total_seconds: float
    excluded: bool = False


@dataclass(frozen=True)
class ClusterResponse:
    cluster: int
    n_zones: int
    n_incidents: int
    incident_share: float
    mean_seconds: float | None          # 群集內沒有任何事故時為 None
    excluded: bool


def _incident_frame(incidents: Iterable[IncidentRecord]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(incident.zone_id, incident.response_time_s) for incident in incidents],
        columns=["zone_id", "response_time_s"],
    ).astype({"zone_id": str, "response_time_s": float})
    # 先排序再加總：加總順序固定，結果與事故的輸入順序無關
    return frame.sort_values(["zone_id", "response_time_s"], kind="stable", ignore_index=True)


def aggregate_response(incidents: Iterable[IncidentRecord], min_count: int = 1) -> dict[str, ZoneResponse]:
    per_zone = (
        _incident_frame(incidents)
        .groupby("zone_id", sort=True)["response_time_s"]
        .agg(total_seconds="sum", incident_count="count")
    )
    per_zone["mean_seconds"] = per_zone["total_seconds"] / per_zone["incident_count"]
    per_zone["excluded"] = per_zone["incident_count"] < min_count

    responses = {
        str(row.Index): ZoneResponse(
            str(row.Index), float(row.mean_seconds), int(row.incident_count), float(row.total_seconds), bool(row.excluded),
        )
        for row in per_zone.itertuples()
    }

    flagged = int(per_zone["excluded"].sum())
    if flagged:
        logger.warning(f"{flagged} 個區域的事故數少於 {min_count}，不列入迴歸訓練。")
    return responses


def summarize_clusters(
    clustering: ClusteringModel, responses: dict[str, ZoneResponse], exclusion_threshold: float,
) -> list[ClusterResponse]:
    """
    佔比的分母是所有已分群區域的事故總數；佔比 < exclusion_threshold 的群集標記為排除。
    """
    zones = pd.DataFrame({"zone_id": list(clustering.zone_ids), "cluster": np.asarray(clustering.assignments, dtype=int)})
    observed = pd.DataFrame(
        [(r.zone_id, r.count, r.total_seconds) for r in responses.values()],
        columns=["zone_id", "incident_count", "total_seconds"],
    ).astype({"zone_id": str, "incident_count": int, "total_seconds": float})
    per_cluster = (
        zones.merge(observed, on="zone_id", how="inner")
        .sort_values(["cluster", "total_seconds"], kind="stable")
        .groupby("cluster")[["incident_count", "total_seconds"]]
        .sum()
        .reindex(range(clustering.k), fill_value=0)
    )
    grand_total = int(per_cluster["incident_count"].sum())
    sizes = clustering.cluster_sizes()

    summary = []
    for row in per_cluster.itertuples():
        cluster, count = int(row.Index), int(row.incident_count)
        share = count / grand_total if grand_total else 0.0
        mean = float(row.total_seconds) / count if count else None
        excluded = share < exclusion_threshold
        if excluded:
            logger.warning(
                f"群集 {cluster} 的事故佔比 {share:.2%} 低於門檻 {exclusion_threshold:.0%}，不進入迴歸分析。"
            )
        summary.append(ClusterResponse(cluster, int(sizes[cluster]), count, share, mean, excluded))
    return summary


# --- 讀寫 ---
def write_zone_responses(path: Path, responses: dict[str, ZoneResponse]) -> Path:
    rows = [
        (r.zone_id, format_float(r.mean_seconds), str(r.count), format_float(r.total_seconds), str(r.excluded).lower())
        for r in responses.values()
    ]
    return write_rows(Path(path), ZONE_RESPONSE_HEADER, rows)


def read_zone_responses(path: Path) -> dict[str, ZoneResponse]:
    table = read_table(Path(path))
    return {
        record["zone_id"]: ZoneResponse(
            zone_id=record["zone_id"],
            mean_seconds=float(record["mean_response_s"]),
            count=int(record["incident_count"]),
            total_seconds=float(record["total_response_s"]),
            excluded=record["excluded"] == "true",
        )
        for record in table.to_dict(orient="records")
    }


def write_cluster_responses(path: Path, summary: list[ClusterResponse]) -> Path:
    rows = [
        (str(c.cluster), str(c.n_zones), str(c.n_incidents), format_float(c.incident_share),
         format_float(c.mean_seconds), str(c.excluded).lower())
        for c in summary
    ]
    return write_rows(Path(path), CLUSTER_RESPONSE_HEADER, rows)


def read_cluster_responses(path: Path) -> list[ClusterResponse]:
    table = read_table(Path(path))
    return [
        ClusterResponse(
            cluster=int(record["cluster"]),
            n_zones=int(record["n_zones"]),
            n_incidents=int(record["n_incidents"]),
            incident_share=float(record["incident_share"]),
            mean_seconds=float(record["mean_response_s"]) if record["mean_response_s"] else None,
            excluded=record["excluded"] == "true",
        )
        for record in table.to_dict(orient="records")
    ]
