# ingestion/records.py
"""
資料匯入後的標準資料模型。
所有型別都是 frozen dataclass，建構完成後不可變，可以在執行緒間安全共用；
建構時會檢查型別的不變條件，違反時拋出 ValueError。
"""
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime

from .work_types import WorkType

_ZONE_PATTERN = re.compile(r"[0-9]{5}")


def _check_zone(zone_id: str) -> None:
    if not isinstance(zone_id, str) or not _ZONE_PATTERN.fullmatch(zone_id):
        raise ValueError(f"zone_id 必須是 5 位數字: {zone_id!r}")


# --- 日期區間（含頭尾） ---
@dataclass(frozen=True)
class DateWindow:
    start: date
    end: date

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"日期區間起點 {self.start} 晚於終點 {self.end}")

    def contains(self, day: date) -> bool:
        return self.start <= day <= self.end


@dataclass(frozen=True)
class PermitRecord:
    zone_id: str
    work_type: WorkType
    start_date: date
    borough: str | None = None
    work_subtype: str | None = None
    expiration_date: date | None = None

    def __post_init__(self):
        _check_zone(self.zone_id)
        if not isinstance(self.work_type, WorkType):
            raise ValueError(f"work_type 必須是 WorkType: {self.work_type!r}")
        if self.expiration_date is not None and self.start_date > self.expiration_date:
            raise ValueError(f"許可起始日 {self.start_date} 晚於到期日 {self.expiration_date}")


@dataclass(frozen=True)
class IncidentRecord:
    zone_id: str
    timestamp: datetime
    response_time_s: float

    def __post_init__(self):
        _check_zone(self.zone_id)
        if not math.isfinite(self.response_time_s) or self.response_time_s < 0:
            raise ValueError(f"response_time_s 必須是非負的有限數值: {self.response_time_s!r}")


# --- 匯入報告：讀取、接受、拒絕的列數與拒絕原因統計 ---
@dataclass(frozen=True)
class IngestReport:
    rows_read: int
    rows_accepted: int
    rows_rejected: int
    rejection_reasons: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.rows_read != self.rows_accepted + self.rows_rejected:
            raise ValueError("rows_read 必須等於 rows_accepted + rows_rejected")
        if sum(self.rejection_reasons.values()) != self.rows_rejected:
            raise ValueError("拒絕原因的總數必須等於 rows_rejected")

    @classmethod
    def from_reasons(cls, rows_read: int, reasons: Counter) -> "IngestReport":
        rejected = sum(reasons.values())
        return cls(
            rows_read=rows_read,
            rows_accepted=rows_read - rejected,
            rows_rejected=rejected,
            rejection_reasons=dict(sorted(reasons.items())),
        )

    def as_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_accepted": self.rows_accepted,
            "rows_rejected": self.rows_rejected,
            "rejection_reasons": dict(self.rejection_reasons),
        }
