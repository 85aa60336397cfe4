# synth/synth_io.py
"""
將合成城市寫成與實際資料相同的標準 CSV（permits.csv、incidents.csv），另附 truth.csv 記錄每個區域的真實答案。
"""
import logging
from pathlib import Path

from ingestion.canonical_io import write_canonical_incidents, write_canonical_permits
from ingestion.work_types import WORK_TYPE_COLUMNS
from utils.csv_utils import format_float, read_table, write_json, write_rows
from .city_generator import SyntheticCity, ZoneTruth

logger = logging.getLogger(__name__)

TRUTH_HEADER = ("zone_id", "true_cluster", "true_mean_response", *(f"true_{c}" for c in WORK_TYPE_COLUMNS))


def write_truth(path: Path, truth: tuple[ZoneTruth, ...]) -> Path:
    rows = [
        (t.zone_id, str(t.true_cluster), format_float(t.true_mean_response), *(format_float(p) for p in t.true_signature))
        for t in truth
    ]
    return write_rows(Path(path), TRUTH_HEADER, rows)


def read_truth(path: Path) -> tuple[ZoneTruth, ...]:
    table = read_table(Path(path))
    return tuple(
        ZoneTruth(
            zone_id=record["zone_id"],
            true_cluster=int(record["true_cluster"]),
            true_signature=tuple(float(record[f"true_{c}"]) for c in WORK_TYPE_COLUMNS),
            true_mean_response=float(record["true_mean_response"]),
        )
        for record in table.to_dict(orient="records")
    )


def write_synthetic_city(directory: Path, city: SyntheticCity) -> dict[str, Path]:
    directory = Path(directory)
    paths = {
        "permits": write_canonical_permits(directory / "permits.csv", city.permits),
        "incidents": write_canonical_incidents(directory / "incidents.csv", city.incidents),
        "truth": write_truth(directory / "truth.csv", city.truth),
    }
    spec = city.spec
    write_json(directory / "synth_spec.json", {
        "n_zones": spec.n_zones,
        "n_clusters": spec.n_clusters,
        "concentration": None if spec.concentration == float("inf") else spec.concentration,
        "permits_per_zone": list(spec.permits_per_zone),
        "incidents_per_zone": list(spec.incidents_per_zone),
        "response_fn": spec.response_fn,
        "noise_sd": spec.noise_sd,
        "seed": spec.seed,
        "base_response": spec.base_response,
        "linear_weights": list(spec.linear_weights),
        "step_delta": spec.step_delta,
        "step_threshold": city.step_threshold,
        "prototypes": city.prototypes.tolist(),
    })
    logger.info(f"合成資料已寫入 {directory}")
    return paths
