# ingestion/canonical_io.py
"""
將已驗證的紀錄寫成標準 CSV 格式（mappings/canonical.yaml 描述的格式）。
synth 產生的合成資料與 `ingest` 子命令的輸出都使用這個格式，之後的階段再以 canonical.yaml 讀回。
"""
import logging
from pathlib import Path
from typing import Iterable

from utils.csv_utils import format_float, write_rows
from .records import IncidentRecord, PermitRecord

logger = logging.getLogger(__name__)

PERMIT_HEADER = ("zone_id", "borough", "work_type", "work_subtype", "start_date", "expiration_date")
INCIDENT_HEADER = ("zone_id", "timestamp", "response_time_s")

# 事故時間寫到秒；canonical.yaml 的 iso 樣式可以解析這個格式
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


def write_canonical_permits(path: str | Path, permits: Iterable[PermitRecord]) -> Path:
    rows = [
        (
            permit.zone_id,
            permit.borough or "",
            permit.work_type.value,
            permit.work_subtype or "",
            permit.start_date.isoformat(),
            permit.expiration_date.isoformat() if permit.expiration_date else "",
        )
        for permit in permits
    ]
    logger.debug(f"寫出標準格式建築許可 {len(rows)} 筆 -> {path}")
    return write_rows(Path(path), PERMIT_HEADER, rows)


def write_canonical_incidents(path: str | Path, incidents: Iterable[IncidentRecord]) -> Path:
    rows = [
        (incident.zone_id, incident.timestamp.strftime(TIMESTAMP_FORMAT), format_float(incident.response_time_s))
        for incident in incidents
    ]
    logger.debug(f"寫出標準格式事故紀錄 {len(rows)} 筆 -> {path}")
    return write_rows(Path(path), INCIDENT_HEADER, rows)
