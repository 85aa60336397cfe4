# ingestion/column_mapping.py
"""
讀取並驗證欄位對應設定檔 (YAML)。
設定檔描述原始 CSV 的欄位名稱如何對應到標準欄位，以及原始工作類型字串如何對應到 8 種標準工作類型。
主要職責：
1. 讀檔：以 yaml.safe_load 讀入，檔案不存在或格式錯誤時拋出 ConfigurationError。
2. 驗證：必要欄位都要有對應、工作類型字典的值必須是合法的標準類型、日期格式與分隔符號必須合法。
3. 封裝：轉成不可變的 ColumnMapping，供 record_parser 使用。

檔案格式請參考 mappings/nyc_dob_fdny.yaml 開頭的說明。
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from utils.errors import ConfigurationError
from .work_types import WorkType

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

PERMIT_REQUIRED = ("zone_id", "work_type", "start_date")
PERMIT_OPTIONAL = ("borough", "work_subtype", "expiration_date")
INCIDENT_REQUIRED = ("zone_id", "timestamp", "response_time_s")
INCIDENT_OPTIONAL: tuple[str, ...] = ()

DATE_FORMATS = ("iso", "us")
WINDOW_RULES = ("start_date", "overlap")


@dataclass(frozen=True)
class ColumnMapping:
    kind: str                                   # "permits" 或 "incidents"
    columns: dict[str, str]                     # 標準欄位 -> 原始欄位名稱
    work_types: dict[str, WorkType] = field(default_factory=dict)
    delimiter: str = ","
    date_format: str = "iso"
    window_rule: str = "start_date"
    filters: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def source(self, canonical_field: str) -> str | None:
        return self.columns.get(canonical_field)

    def referenced_columns(self) -> list[str]:
        """設定檔中所有引用到的原始欄位（含篩選欄位），用來檢查表頭。"""
        referenced = list(self.columns.values()) + list(self.filters.keys())
        return list(dict.fromkeys(referenced))


@dataclass(frozen=True)
class MappingBundle:
    permits: ColumnMapping
    incidents: ColumnMapping


# --- 讀取整份對應設定檔 ---
def load_column_mapping(path: str | Path) -> MappingBundle:
    path = Path(path)
    logger.debug(f"讀取欄位對應設定檔: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError("mapping_not_found", f"找不到欄位對應設定檔 {path}") from e
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError("mapping_unreadable", f"無法解析欄位對應設定檔 {path}: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigurationError("mapping_invalid", f"欄位對應設定檔 {path} 的最上層必須是字典。")

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigurationError("mapping_invalid", f"不支援的 schema_version: {version}")

    bundle = MappingBundle(
        permits=_build_section(raw.get("permits"), "permits", PERMIT_REQUIRED, PERMIT_OPTIONAL),
        incidents=_build_section(raw.get("incidents"), "incidents", INCIDENT_REQUIRED, INCIDENT_OPTIONAL),
    )
    logger.info(f"已載入欄位對應設定檔 {path.name}（工作類型對應 {len(bundle.permits.work_types)} 筆）。")
    return bundle


# --- 驗證並建立單一區段 ---
def _build_section(section: Any, kind: str, required: tuple[str, ...], optional: tuple[str, ...]) -> ColumnMapping:
    if not isinstance(section, dict):
        raise ConfigurationError("mapping_invalid", f"欄位對應設定檔缺少 '{kind}' 區段。")

    columns_raw = section.get("columns") or {}
    if not isinstance(columns_raw, dict):
        raise ConfigurationError("mapping_invalid", f"'{kind}.columns' 必須是字典。")

    columns: dict[str, str] = {}
    for canonical_field in required:
        source = columns_raw.get(canonical_field)
        if not isinstance(source, str) or not source.strip():
            raise ConfigurationError("mapping_invalid", f"'{kind}.columns.{canonical_field}' 必須對應到一個原始欄位。")
        columns[canonical_field] = source
    for canonical_field in optional:
        source = columns_raw.get(canonical_field)
        if source is None:
            continue
        if not isinstance(source, str) or not source.strip():
            raise ConfigurationError("mapping_invalid", f"'{kind}.columns.{canonical_field}' 必須是欄位名稱字串。")
        columns[canonical_field] = source

    unknown_fields = set(columns_raw) - set(required) - set(optional)
    if unknown_fields:
        raise ConfigurationError("mapping_invalid", f"'{kind}.columns' 含有未知的標準欄位: {sorted(unknown_fields)}")

    # 工作類型字典：原始字串（"NB" 或 "EQ/FN"）-> 標準類型
    work_types: dict[str, WorkType] = {}
    work_types_raw = section.get("work_types") or {}
    if kind == "permits" and not work_types_raw:
        raise ConfigurationError("mapping_invalid", "'permits.work_types' 不可為空。")
    for raw_label, canonical_label in work_types_raw.items():
        try:
            work_types[str(raw_label).strip()] = WorkType.from_label(str(canonical_label))
        except ValueError as e:
            raise ConfigurationError("mapping_invalid", f"工作類型 '{raw_label}' 對應到未知的標準類型 '{canonical_label}'。") from e

    delimiter = section.get("delimiter", ",")
    if not isinstance(delimiter, str) or len(delimiter) != 1:
        raise ConfigurationError("mapping_invalid", f"'{kind}.delimiter' 必須是單一字元。")

    date_format = section.get("date_format", "iso")
    if date_format not in DATE_FORMATS:
        raise ConfigurationError("mapping_invalid", f"'{kind}.date_format' 必須是 {DATE_FORMATS} 之一。")

    window_rule = section.get("window_rule", "start_date")
    if window_rule not in WINDOW_RULES:
        raise ConfigurationError("mapping_invalid", f"'{kind}.window_rule' 必須是 {WINDOW_RULES} 之一。")

    filters: dict[str, tuple[str, ...]] = {}
    for column, allowed in (section.get("filters") or {}).items():
        if isinstance(allowed, (str, int, float)):
            allowed = [allowed]
        if not isinstance(allowed, list) or not allowed:
            raise ConfigurationError("mapping_invalid", f"篩選條件 '{kind}.filters.{column}' 必須是非空的值列表。")
        filters[str(column)] = tuple(str(value) for value in allowed)

    return ColumnMapping(
        kind=kind,
        columns=columns,
        work_types=work_types,
        delimiter=delimiter,
        date_format=date_format,
        window_rule=window_rule,
        filters=filters,
    )
