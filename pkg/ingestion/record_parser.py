# ingestion/record_parser.py
"""
主要職責是「資料轉換」，負責將原始的建築許可與事故派遣 CSV 檔，轉換為標準資料模型。
1. 讀檔：以 pandas 讀入整個檔案（全部欄位當作字串），欄位數不符的列會被記錄為 malformed_row，不會中斷整個匯入。
2. 逐欄驗證：郵遞區號、日期、工作類型、反應秒數都以向量化的方式檢查，每一列只記錄第一個失敗的原因。
3. 篩選：依設定檔的 filters 與日期區間決定哪些列被接受。
4. 統計：回傳 IngestReport，讀取列數 = 接受列數 + 拒絕列數；可選擇將被拒絕的列寫到隔離檔 (quarantine) 供稽核。

輸出的紀錄順序與輸入檔案中的順序一致；相同的 (檔案, 對應設定, 日期區間) 永遠得到相同的結果。
"""
import logging
from collections import Counter
from pathlib import Path

import numpy as np
import pandas as pd

from utils.csv_utils import write_rows
from utils.errors import ConfigurationError, DataError
from utils.text_processing import is_ascii_series, normalize_zone_series
from .column_mapping import ColumnMapping
from .records import DateWindow, IncidentRecord, IngestReport, PermitRecord

logger = logging.getLogger(__name__)

# 各種日期格式樣式可接受的寫法，依序嘗試
DATETIME_FORMATS = {
    "iso": ("%Y-%m-%d", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"),
    "us": ("%m/%d/%Y", "%m/%d/%Y %I:%M:%S %p", "%m/%d/%Y %H:%M:%S", "%m/%d/%Y %H:%M"),
}

# 拒絕原因
MALFORMED_ROW = "malformed_row"
FILTERED_OUT = "filtered_out"
NON_ASCII_KEY = "non_ascii_key"
INVALID_ZONE = "invalid_zone"
UNKNOWN_WORK_TYPE = "unknown_work_type"
INVALID_DATE = "invalid_date"
DATE_ORDER = "date_order"
OUT_OF_WINDOW = "out_of_window"
INVALID_DURATION = "invalid_duration"
NEGATIVE_DURATION = "negative_duration"


# --- 解析建築許可檔 ---
def parse_permits(
    source: str | Path, mapping: ColumnMapping, window: DateWindow,
    quarantine_path: str | Path | None = None,
) -> tuple[list[PermitRecord], IngestReport]:
    """
    Args:
        source: 含表頭的分隔文字檔。
        mapping: permits 區段的欄位對應。
        window: 含頭尾的日期區間；預設以 start_date 是否落在區間內判斷。
        quarantine_path: 若指定，將被拒絕的列寫到這個 CSV。
    Returns:
        (依輸入順序排列的 PermitRecord 列表, IngestReport)
    """
    frame, bad_lines = _read_frame(source, mapping)
    check = _RowCheck(frame)

    zone_col = mapping.source("zone_id")
    start_col = mapping.source("start_date")
    expiration_col = mapping.source("expiration_date")

    check.apply_filters(mapping.filters)

    key_columns = [zone_col, start_col] + ([expiration_col] if expiration_col else [])
    check.reject(~_all_ascii(frame, key_columns), NON_ASCII_KEY)

    zones = normalize_zone_series(frame[zone_col])
    check.reject(zones.isna(), INVALID_ZONE)

    work_types = _map_work_types(frame, mapping)
    check.reject(work_types.isna(), UNKNOWN_WORK_TYPE)

    start_dates = _parse_datetimes(frame[start_col], mapping.date_format).dt.normalize()
    check.reject(start_dates.isna(), INVALID_DATE)

    if expiration_col:
        expiration_text = frame[expiration_col].str.strip()
        expiration_dates = _parse_datetimes(expiration_text, mapping.date_format).dt.normalize()
        check.reject((expiration_text != "") & expiration_dates.isna(), INVALID_DATE)
        check.reject(expiration_dates.notna() & (expiration_dates < start_dates), DATE_ORDER)
    else:
        expiration_dates = pd.Series(pd.NaT, index=frame.index, dtype="datetime64[ns]")

    window_start, window_end = pd.Timestamp(window.start), pd.Timestamp(window.end)
    if mapping.window_rule == "overlap":
        # 許可有效期間 [start, expiration] 與區間有交集即接受；沒有到期日時視為單日
        active_until = expiration_dates.fillna(start_dates)
        in_window = (start_dates <= window_end) & (active_until >= window_start)
    else:
        in_window = (start_dates >= window_start) & (start_dates <= window_end)
    check.reject(~in_window, OUT_OF_WINDOW)

    accepted = check.accepted()
    borough_col = mapping.source("borough")
    subtype_col = mapping.source("work_subtype")
    boroughs = _optional_text(frame, borough_col)
    subtypes = _optional_text(frame, subtype_col)

    records = [
        PermitRecord(
            zone_id=zone,
            work_type=work_type,
            start_date=start.date(),
            borough=borough,
            work_subtype=subtype,
            expiration_date=None if pd.isna(expiration) else expiration.date(),
        )
        for zone, work_type, start, borough, subtype, expiration in zip(
            zones[accepted], work_types[accepted], start_dates[accepted],
            boroughs[accepted], subtypes[accepted], expiration_dates[accepted],
        )
    ]

    report = check.report(bad_lines)
    _log_report("建築許可", source, report)
    if quarantine_path is not None:
        check.write_quarantine(quarantine_path, mapping.delimiter, bad_lines)
    return records, report


# --- 解析事故派遣檔 ---
def parse_incidents(
    source: str | Path, mapping: ColumnMapping, window: DateWindow,
    quarantine_path: str | Path | None = None,
) -> tuple[list[IncidentRecord], IngestReport]:
    """
    接受郵遞區號有效、時間落在區間內、反應秒數可解析且非負的列；
    負的秒數以 negative_duration 拒絕。
    """
    frame, bad_lines = _read_frame(source, mapping)
    check = _RowCheck(frame)

    zone_col = mapping.source("zone_id")
    time_col = mapping.source("timestamp")
    duration_col = mapping.source("response_time_s")

    check.apply_filters(mapping.filters)
    check.reject(~_all_ascii(frame, [zone_col, time_col, duration_col]), NON_ASCII_KEY)

    zones = normalize_zone_series(frame[zone_col])
    check.reject(zones.isna(), INVALID_ZONE)

    timestamps = _parse_datetimes(frame[time_col], mapping.date_format)
    check.reject(timestamps.isna(), INVALID_DATE)

    durations = pd.to_numeric(frame[duration_col].str.strip(), errors="coerce").astype(float)
    check.reject(~np.isfinite(durations), INVALID_DURATION)
    check.reject(durations < 0, NEGATIVE_DURATION)

    days = timestamps.dt.normalize()
    in_window = (days >= pd.Timestamp(window.start)) & (days <= pd.Timestamp(window.end))
    check.reject(~in_window, OUT_OF_WINDOW)

    accepted = check.accepted()
    records = [
        # + 0.0 將 -0.0 正規化為 0.0
        IncidentRecord(zone_id=zone, timestamp=timestamp.to_pydatetime(), response_time_s=float(duration) + 0.0)
        for zone, timestamp, duration in zip(zones[accepted], timestamps[accepted], durations[accepted])
    ]

    report = check.report(bad_lines)
    _log_report("事故派遣", source, report)
    if quarantine_path is not None:
        check.write_quarantine(quarantine_path, mapping.delimiter, bad_lines)
    return records, report


# --- 逐列檢查的狀態：每一列只保留第一個失敗原因 ---
class _RowCheck:
    def __init__(self, frame: pd.DataFrame):
        self.frame = frame
        self.reasons = pd.Series("", index=frame.index, dtype=object)

    def reject(self, mask: pd.Series, reason: str) -> None:
        hit = mask.fillna(True).astype(bool) & (self.reasons == "")
        self.reasons[hit] = reason

    def apply_filters(self, filters: dict[str, tuple[str, ...]]) -> None:
        for column, allowed in filters.items():
            self.reject(~self.frame[column].str.strip().isin(allowed), FILTERED_OUT)

    def accepted(self) -> pd.Series:
        return self.reasons == ""

    def report(self, bad_lines: list[list[str]]) -> IngestReport:
        counts = Counter(reason for reason in self.reasons if reason)
        if bad_lines:
            counts[MALFORMED_ROW] += len(bad_lines)
        return IngestReport.from_reasons(len(self.frame) + len(bad_lines), counts)

    def write_quarantine(self, path: str | Path, delimiter: str, bad_lines: list[list[str]]) -> None:
        rejected = self.reasons != ""
        rows = [
            (reason, delimiter.join(values))
            for reason, values in zip(self.reasons[rejected], self.frame[rejected].itertuples(index=False, name=None))
        ]
        rows.extend((MALFORMED_ROW, delimiter.join(fields)) for fields in bad_lines)
        write_rows(Path(path), ("reject_reason", "raw_record"), rows)
        logger.info(f"已將 {len(rows)} 筆被拒絕的列寫入隔離檔 {path}。")


# --- 讀取原始檔案 ---
def _read_frame(source: str | Path, mapping: ColumnMapping) -> tuple[pd.DataFrame, list[list[str]]]:
    """
    全部欄位以字串讀入；欄位數過多的列交給 on_bad_lines 收集，不會讓整個檔案讀取失敗。
    非 UTF-8 的位元組以替代字元取代，關鍵欄位因此會在 ASCII 檢查中被拒絕。
    """
    path = Path(source)
    bad_lines: list[list[str]] = []

    def _collect_bad_line(fields: list[str]) -> None:
        bad_lines.append([str(value) for value in fields])
        return None  # 回傳 None 表示略過這一列

    try:
        frame = pd.read_csv(
            path,
            sep=mapping.delimiter,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            engine="python",
            on_bad_lines=_collect_bad_line,
            encoding="utf-8",
            encoding_errors="replace",
        )
    except pd.errors.EmptyDataError as e:
        raise ConfigurationError("missing_column", f"{path} 沒有表頭列。", details={"file": str(path)}) from e
    except (FileNotFoundError, PermissionError, IsADirectoryError) as e:
        raise DataError("io_error", f"無法讀取 {path}: {e}", details={"file": str(path)}) from e
    except (OSError, pd.errors.ParserError) as e:
        raise DataError("io_error", f"讀取 {path} 時發生錯誤: {e}", details={"file": str(path)}) from e

    missing = [column for column in mapping.referenced_columns() if column not in frame.columns]
    if missing:
        raise ConfigurationError(
            "missing_column",
            f"{path.name} 的表頭缺少欄位對應設定中的欄位: {missing}",
            details={"file": str(path), "missing": missing},
        )

    # 欄位數不足的列會被補上 NaN，統一視為空字串
    frame = frame.fillna("").astype(str)
    frame.index = pd.RangeIndex(len(frame))
    logger.debug(f"已讀取 {path}：{len(frame)} 列資料，{len(bad_lines)} 列欄位數不符。")
    return frame, bad_lines


def _all_ascii(frame: pd.DataFrame, columns: list[str]) -> pd.Series:
    mask = pd.Series(True, index=frame.index)
    for column in columns:
        mask &= is_ascii_series(frame[column])
    return mask


def _parse_datetimes(values: pd.Series, date_format: str) -> pd.Series:
    """依序嘗試該樣式的所有格式，無法解析的值為 NaT。"""
    text = values.astype(str).str.strip()
    parsed = pd.Series(pd.NaT, index=values.index, dtype="datetime64[ns]")
    for fmt in DATETIME_FORMATS[date_format]:
        attempt = pd.to_datetime(text, format=fmt, errors="coerce")
        parsed = parsed.fillna(attempt)
    return parsed


def _map_work_types(frame: pd.DataFrame, mapping: ColumnMapping) -> pd.Series:
    """
    先以 "TYPE/SUBTYPE" 查詢工作類型字典，查不到再以 "TYPE" 查詢；
    兩者都查不到的列為 NaN（之後以 unknown_work_type 拒絕），不會被歸到其他類型。
    """
    lookup = mapping.work_types
    raw_types = frame[mapping.source("work_type")].str.strip()
    by_type = raw_types.map(lambda label: lookup.get(label))

    subtype_col = mapping.source("work_subtype")
    if subtype_col is None:
        return by_type
    combined = raw_types + "/" + frame[subtype_col].str.strip()
    by_subtype = combined.map(lambda label: lookup.get(label))
    return by_subtype.where(by_subtype.notna(), by_type)


def _optional_text(frame: pd.DataFrame, column: str | None) -> pd.Series:
    if column is None:
        return pd.Series([None] * len(frame), index=frame.index, dtype=object)
    return pd.Series([value.strip() or None for value in frame[column]], index=frame.index, dtype=object)


def _log_report(label: str, source: str | Path, report: IngestReport) -> None:
    logger.info(
        f"{label}匯入完成 ({Path(source).name})：讀取 {report.rows_read} 列，"
        f"接受 {report.rows_accepted} 列，拒絕 {report.rows_rejected} 列。"
    )
    if report.rows_rejected:
        logger.warning(f"{label}拒絕原因統計: {report.rejection_reasons}")
