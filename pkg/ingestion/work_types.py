# ingestion/work_types.py
"""
存放建築許可的工作類型（work type）分類。
固定 8 種類型，順序與輸出報表的欄位順序一致，簽章向量的第 t 個分量永遠對應同一種類型。
"""
from enum import Enum


class WorkType(Enum):
    NEW_BUILDING = "new_building"
    FOUNDATION = "foundation"
    CONSTRUCTION_EQUIPMENT = "construction_equipment"
    DEMOLITION = "demolition"
    ALTERATION = "alteration"
    EQUIPMENT_WORK = "equipment_work"
    PLUMBING = "plumbing"
    SIGNAGE = "signage"

    @property
    def index(self) -> int:
        return WORK_TYPE_INDEX[self]

    @classmethod
    def from_label(cls, label: str) -> "WorkType":
        """
        接受標準值（"new_building"）或列舉名稱（"NEW_BUILDING"、"NewBuilding"），
        其他字串會拋出 ValueError。
        """
        text = label.strip()
        if text in _BY_VALUE:
            return _BY_VALUE[text]
        key = text.replace("_", "").replace(" ", "").lower()
        if key in _BY_COMPACT:
            return _BY_COMPACT[key]
        raise ValueError(f"未知的工作類型: {label!r}")


# 固定的排列順序：t = 0..7
WORK_TYPE_ORDER: tuple[WorkType, ...] = tuple(WorkType)
WORK_TYPE_INDEX = {work_type: i for i, work_type in enumerate(WORK_TYPE_ORDER)}
N_WORK_TYPES = len(WORK_TYPE_ORDER)

# signatures.csv 等檔案中使用的欄位名稱
WORK_TYPE_COLUMNS: tuple[str, ...] = tuple(work_type.value for work_type in WORK_TYPE_ORDER)

_BY_VALUE = {work_type.value: work_type for work_type in WORK_TYPE_ORDER}
_BY_COMPACT = {work_type.value.replace("_", ""): work_type for work_type in WORK_TYPE_ORDER}

# 外部工程：可能申請部分或全部封路的類型（新建、基礎、施工設備、拆除）
EXTERIOR_WORK_TYPES: tuple[WorkType, ...] = (
    WorkType.NEW_BUILDING,
    WorkType.FOUNDATION,
    WorkType.CONSTRUCTION_EQUIPMENT,
    WorkType.DEMOLITION,
)
