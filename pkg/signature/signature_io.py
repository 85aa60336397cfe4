# signature/signature_io.py
"""signatures.csv 的讀寫。比例以最短可還原的十進位寫出，讀回後與記憶體中的值完全相同。"""
import logging
from pathlib import Path

from ingestion.work_types import WORK_TYPE_COLUMNS
from utils.csv_utils import format_float, read_table, write_rows
from utils.errors import DataError
from .signature_builder import SignatureMatrix, ZoneSignature, build_matrix

logger = logging.getLogger(__name__)

SIGNATURES_HEADER = ("zone_id", *WORK_TYPE_COLUMNS, "total_permits")


def write_signatures(path: str | Path, matrix: SignatureMatrix) -> Path:
    rows = [
        (zone_id, *(format_float(p) for p in row.tolist()), str(total))
        for zone_id, row, total in zip(matrix.zone_ids, matrix.rows, matrix.total_permits)
    ]
    return write_rows(Path(path), SIGNATURES_HEADER, rows)


def read_signatures(path: str | Path) -> SignatureMatrix:
    path = Path(path)
    try:
        table = read_table(path)
    except (OSError, ValueError) as e:
        raise DataError("io_error", f"無法讀取簽章檔 {path}: {e}") from e

    if tuple(table.columns) != SIGNATURES_HEADER:
        raise DataError("invalid_signatures_file", f"{path} 的表頭不符合 signatures.csv 格式。",
                        details={"header": list(table.columns)})
    try:
        signatures = [
            ZoneSignature(
                zone_id=record["zone_id"],
                proportions=tuple(float(record[column]) for column in WORK_TYPE_COLUMNS),
                total_permits=int(record["total_permits"]),
            )
            for record in table.to_dict(orient="records")
        ]
    except ValueError as e:
        raise DataError("invalid_signatures_file", f"{path} 含有無效的簽章: {e}") from e

    logger.debug(f"已讀入 {len(signatures)} 筆簽章: {path}")
    return build_matrix(signatures)
