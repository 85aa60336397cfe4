# signature/signature_builder.py
"""
計算每個區域（郵遞區號）的「建築簽章」：該區域所有建築許可在 8 種工作類型上的比例分佈。
主要職責：
1. tally：統計每個區域、每種工作類型的許可數量。
2. signature_of：把數量轉換為比例向量（總和為 1）；沒有任何許可的區域無法定義簽章，直接拋出 empty_zone。
3. build_matrix：將所有區域的簽章依區號排序後疊成一個 (區域數 × 8) 的矩陣，供分群與迴歸使用。

內部計算一律保持雙精度，不做任何四捨五入；只有報表輸出時才會以 0.1% 的精度呈現。
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from ingestion.records import PermitRecord
from ingestion.work_types import EXTERIOR_WORK_TYPES, N_WORK_TYPES
from utils.errors import SignatureError

logger = logging.getLogger(__name__)

_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ZoneCounts:
    zone_id: str
    counts: tuple[int, ...]
    total: int = field(default=-1)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != N_WORK_TYPES:
            raise ValueError(f"counts 必須有 {N_WORK_TYPES} 個分量，收到 {len(counts)} 個")
        if any(c < 0 for c in counts):
            raise ValueError(f"counts 不可為負數: {counts}")
        object.__setattr__(self, "counts", counts)
        # total 未指定時自動計算；有指定時必須等於各類型數量的總和
        if self.total == -1:
            object.__setattr__(self, "total", sum(counts))
        elif self.total != sum(counts):
            raise ValueError(f"total={self.total} 與各類型數量總和 {sum(counts)} 不一致")

    def __add__(self, other: "ZoneCounts") -> "ZoneCounts":
        if other.zone_id != self.zone_id:
            raise ValueError(f"不同區域的數量不能相加: {self.zone_id} / {other.zone_id}")
        return ZoneCounts(self.zone_id, tuple(a + b for a, b in zip(self.counts, other.counts)))


@dataclass(frozen=True)
class ZoneSignature:
    zone_id: str
    proportions: tuple[float, ...]
    total_permits: int

    def __post_init__(self):
        proportions = tuple(float(p) for p in self.proportions)
        if len(proportions) != N_WORK_TYPES:
            raise ValueError(f"proportions 必須有 {N_WORK_TYPES} 個分量")
        if any(not (0.0 <= p <= 1.0) for p in proportions):
            raise ValueError(f"區域 {self.zone_id} 的比例超出 [0, 1]: {proportions}")
        if abs(sum(proportions) - 1.0) > _SUM_TOLERANCE:
            raise ValueError(f"區域 {self.zone_id} 的比例總和不為 1: {sum(proportions)!r}")
        if self.total_permits < 1:
            raise ValueError(f"區域 {self.zone_id} 的 total_permits 必須 ≥ 1")
        object.__setattr__(self, "proportions", proportions)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.proportions, dtype=float)


@dataclass(frozen=True, eq=False)
class SignatureMatrix:
    """
    zone_ids 依字典順序排列且不重複；rows[i] 是 zone_ids[i] 的簽章。
    rows 設為唯讀，避免下游的分群或迴歸意外修改共用的資料。
    """
    zone_ids: tuple[str, ...]
    rows: np.ndarray
    total_permits: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.zone_ids)

    def index_of(self, zone_id: str) -> int:
        try:
            return self.zone_ids.index(zone_id)
        except ValueError:
            raise SignatureError("unknown_zone", f"簽章矩陣中沒有區域 {zone_id}") from None

    def signatures(self) -> Iterator[ZoneSignature]:
        for zone_id, row, total in zip(self.zone_ids, self.rows, self.total_permits):
            yield ZoneSignature(zone_id, tuple(row.tolist()), total)

    def subset(self, zone_ids: Iterable[str]) -> "SignatureMatrix":
        wanted = set(zone_ids)
        return build_matrix([s for s in self.signatures() if s.zone_id in wanted])


# --- 統計各區域的許可數量 ---
def tally(permits: Iterable[PermitRecord]) -> list[ZoneCounts]:
    """每個出現過的區域回傳一筆 ZoneCounts，依區號排序；沒有許可的區域不會出現。"""
    pair_counts = Counter((permit.zone_id, permit.work_type.index) for permit in permits)
    per_zone: dict[str, list[int]] = {}
    for (zone_id, type_index), n in pair_counts.items():
        per_zone.setdefault(zone_id, [0] * N_WORK_TYPES)[type_index] += n
    return [ZoneCounts(zone_id, tuple(per_zone[zone_id])) for zone_id in sorted(per_zone)]


def signature_of(counts: ZoneCounts) -> ZoneSignature:
    if counts.total == 0:
        raise SignatureError("empty_zone", f"區域 {counts.zone_id} 沒有任何建築許可，無法計算簽章。",
                             details={"zone_id": counts.zone_id})
    proportions = tuple(c / counts.total for c in counts.counts)
    return ZoneSignature(counts.zone_id, proportions, counts.total)


def build_matrix(signatures: Iterable[ZoneSignature]) -> SignatureMatrix:
    ordered = sorted(signatures, key=lambda s: s.zone_id)
    for previous, current in zip(ordered, ordered[1:]):
        if previous.zone_id == current.zone_id:
            raise SignatureError("duplicate_zone", f"區域 {current.zone_id} 出現了不只一次。",
                                 details={"zone_id": current.zone_id})

    rows = np.array([s.proportions for s in ordered], dtype=float).reshape(len(ordered), N_WORK_TYPES)
    rows.setflags(write=False)
    return SignatureMatrix(
        zone_ids=tuple(s.zone_id for s in ordered),
        rows=rows,
        total_permits=tuple(s.total_permits for s in ordered),
    )


# --- 從許可紀錄一路算到簽章矩陣 ---
def signatures_from_permits(permits: Iterable[PermitRecord]) -> SignatureMatrix:
    all_counts = tally(permits)
    signatures = []
    for counts in all_counts:
        try:
            signatures.append(signature_of(counts))
        except SignatureError:
            logger.warning(f"區域 {counts.zone_id} 沒有任何許可，已排除。")
    matrix = build_matrix(signatures)
    logger.info(f"已計算 {len(matrix)} 個區域的建築簽章（共 {sum(matrix.total_permits)} 筆許可）。")
    return matrix


def exterior_share(rows: np.ndarray) -> np.ndarray:
    """外部工程（新建、基礎、施工設備、拆除）佔全部許可的比例，每列一個值。"""
    columns = [work_type.index for work_type in EXTERIOR_WORK_TYPES]
    return np.asarray(rows, dtype=float)[:, columns].sum(axis=1)
