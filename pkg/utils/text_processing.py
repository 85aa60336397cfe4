# utils/text_processing.py
"""
文字處理工具模組，標準化和清理原始資料中的關鍵欄位（郵遞區號、代碼字串）。
確保不同寫法的相同區域（例如 "10001"、" 10001 "、"10001-2345"）在程式碼中被統一處理，避免因文字不匹配而導致的錯誤。
"""
import re
import pandas as pd

# 5 位數郵遞區號，或 ZIP+4（"12345-6789" / "123456789"）
_ZIP5_PATTERN = r"[0-9]{5}"
_ZIP_PLUS4_PATTERN = r"[0-9]{5}-[0-9]{4}|[0-9]{9}"


def normalize_zone_id(raw_zone: str | None) -> str | None:
    """
    將原始郵遞區號標準化為 5 位數字串；無法標準化時回傳 None。
    去除前後空白；若是 ZIP+4 格式則取前 5 碼；其他格式一律視為無效。
    """
    if raw_zone is None:
        return None
    zone = raw_zone.strip()
    if re.fullmatch(_ZIP5_PATTERN, zone):
        return zone
    if re.fullmatch(_ZIP_PLUS4_PATTERN, zone):
        return zone[:5]
    return None


def normalize_zone_series(raw_zones: pd.Series) -> pd.Series:
    """
    normalize_zone_id 的向量化版本，供 pandas 批次處理整個欄位。
    無效的值會變成 NaN。
    """
    zones = raw_zones.astype(str).str.strip()
    plain = zones.str.fullmatch(_ZIP5_PATTERN)
    plus4 = zones.str.fullmatch(_ZIP_PLUS4_PATTERN)
    normalized = zones.where(plain)
    return normalized.fillna(zones.str[:5].where(plus4))


def is_ascii_series(values: pd.Series) -> pd.Series:
    # 關鍵欄位（區號、日期、秒數）必須是純 ASCII
    return values.astype(str).map(str.isascii).astype(bool)
