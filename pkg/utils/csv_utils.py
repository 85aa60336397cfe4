# utils/csv_utils.py
"""
所有中繼檔案 (CSV / JSON) 的讀寫輔助函式。
- 浮點數一律以最短可還原的十進位表示 (repr) 寫出，讀回時得到完全相同的值。
- 寫檔的換行、欄位順序與編碼固定，兩次相同的執行會產生位元組完全相同的檔案。
"""
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import pandas as pd

logger = logging.getLogger(__name__)


def format_float(value: float | None) -> str:
    """以最短可還原的十進位字串表示浮點數；None 寫成空字串。"""
    if value is None:
        return ""
    return repr(float(value))


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    將已經格式化好的列寫成 CSV。
    浮點數請先以 format_float 轉成字串，這裡不再做任何數值格式化。
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=list(header), dtype=object)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.debug(f"已寫出 {path}（{len(frame)} 列）。")
    return path


def read_table(path: Path) -> pd.DataFrame:
    """以字串型態讀回 CSV，數值欄位由呼叫端自行轉換。"""
    return pd.read_csv(Path(path), dtype=str, keep_default_na=False, encoding="utf-8")


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # sort_keys + 固定縮排，讓相同內容產生相同的位元組
    text = json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
