# synth/city_generator.py
"""
合成城市產生器：產生帶有「已知答案」的建築許可與事故資料，用來驗證整個分析流程。
主要職責：
1. 原型：在 8 維單純形上挑出 n_clusters 個彼此距離夠遠的群集原型。
2. 區域：每個區域屬於一個群集，其簽章以原型為中心做 Dirichlet 抽樣（concentration 越大越接近原型）。
3. 許可：依區域簽章以多項分佈抽出各工作類型的許可數量，起始日期均勻分佈在 2013–2017 年。
4. 事故：反應時間 = 真實平均反應時間 + 高斯雜訊（負值重抽，截斷於 0）。

每個區域使用自己的衍生種子，產生的城市只由 SyntheticSpec 決定。
"""
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from ingestion.records import DateWindow, IncidentRecord, PermitRecord
from ingestion.work_types import N_WORK_TYPES, WORK_TYPE_ORDER, WorkType
from utils.errors import DataError
from utils.seed_utils import rng_for

logger = logging.getLogger(__name__)

RESPONSE_FUNCTIONS = ("linear", "step")

# 線性反應函數的預設權重（秒 / 比例）：只有新建工程的比例影響反應時間
DEFAULT_LINEAR_WEIGHTS = (900.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

SYNTH_WINDOW = DateWindow(date(2013, 1, 1), date(2017, 12, 31))
FIRST_ZONE_ID = 10001

_CANDIDATES_PER_CLUSTER = 64
_CANDIDATE_ALPHA = 0.5
_PROTOTYPE_MIX = 0.6                  # 每個原型分量至少 (1 - 0.6) / 8 = 0.05


@dataclass(frozen=True)
class SyntheticSpec:
    n_zones: int = 150
    n_clusters: int = 5
    concentration: float = 80.0
    permits_per_zone: tuple[int, int] = (1500, 2500)
    incidents_per_zone: tuple[int, int] = (50, 80)
    response_fn: str = "linear"
    noise_sd: float = 30.0
    seed: int = 42
    base_response: float = 300.0
    linear_weights: tuple[float, ...] = DEFAULT_LINEAR_WEIGHTS
    step_delta: float = 60.0
    step_threshold: float | None = None          # None 表示取各區域「新建 + 拆除」比例的第 75 百分位數

    def __post_init__(self):
        if self.n_zones < 1 or self.n_clusters < 1:
            raise ValueError("n_zones 與 n_clusters 必須 ≥ 1")
        if self.n_clusters > self.n_zones:
            raise ValueError(f"n_clusters ({self.n_clusters}) 不可大於 n_zones ({self.n_zones})")
        if not self.concentration > 0:
            raise ValueError("concentration 必須為正數")
        if self.noise_sd < 0:
            raise ValueError("noise_sd 不可為負數")
        for name in ("permits_per_zone", "incidents_per_zone"):
            low, high = getattr(self, name)
            if low < 1 or high < low:
                raise ValueError(f"{name} 必須是 1 ≤ 下限 ≤ 上限 的範圍")
        if self.response_fn not in RESPONSE_FUNCTIONS:
            raise ValueError(f"response_fn 必須是 {RESPONSE_FUNCTIONS} 之一")
        if len(self.linear_weights) != N_WORK_TYPES:
            raise ValueError(f"linear_weights 必須有 {N_WORK_TYPES} 個值")
        if self.min_true_response() < 0:
            raise ValueError(
                f"真實平均反應時間可能為負數（最小 {self.min_true_response():g} 秒）；"
                "請調高 base_response 或調整 linear_weights / step_delta"
            )

    def min_true_response(self) -> float:
        """所有可能簽章中最小的真實平均反應時間：單純形上的線性函數在頂點取得極值。"""
        if self.response_fn == "linear":
            return self.base_response + min(self.linear_weights)
        return self.base_response + min(0.0, self.step_delta)

    def separation_floor(self) -> float:
        """原型之間的最小 L2 距離：區域簽章在原型附近的散佈尺度約為 1/sqrt(c+1)，取其 3 倍。"""
        return 3.0 / math.sqrt(self.concentration + 1.0)


@dataclass(frozen=True)
class ZoneTruth:
    zone_id: str
    true_cluster: int
    true_signature: tuple[float, ...]
    true_mean_response: float


@dataclass(frozen=True, eq=False)
class SyntheticCity:
    spec: SyntheticSpec
    permits: tuple[PermitRecord, ...]
    incidents: tuple[IncidentRecord, ...]
    truth: tuple[ZoneTruth, ...]
    prototypes: np.ndarray
    step_threshold: float | None = field(default=None)

    def truth_by_zone(self) -> dict[str, ZoneTruth]:
        return {t.zone_id: t for t in self.truth}


# --- 原型 ---
def _draw_prototypes(spec: SyntheticSpec) -> np.ndarray:
    """
    從大量 Dirichlet(0.5) 候選點中，以「最遠點優先」的貪婪法挑出 n_clusters 個原型，
    再與均勻分佈混合，使每個分量都嚴格為正。
    """
    rng = rng_for(spec.seed, 0)
    pool = rng.dirichlet(np.full(N_WORK_TYPES, _CANDIDATE_ALPHA), size=_CANDIDATES_PER_CLUSTER * spec.n_clusters)
    pool = _PROTOTYPE_MIX * pool + (1.0 - _PROTOTYPE_MIX) / N_WORK_TYPES

    chosen = [0]
    nearest = np.sqrt(((pool - pool[0]) ** 2).sum(axis=1))
    for _ in range(1, spec.n_clusters):
        index = int(np.argmax(nearest))
        chosen.append(index)
        nearest = np.minimum(nearest, np.sqrt(((pool - pool[index]) ** 2).sum(axis=1)))
    prototypes = pool[chosen]

    if spec.n_clusters > 1:
        diff = prototypes[:, None, :] - prototypes[None, :, :]
        distances = np.sqrt((diff ** 2).sum(axis=2))
        min_distance = float(distances[np.triu_indices(spec.n_clusters, k=1)].min())
        floor = spec.separation_floor()
        if min_distance <= 0.0 or min_distance < floor:
            raise DataError(
                "cannot_separate",
                f"無法在 concentration={spec.concentration} 下放入 {spec.n_clusters} 個間距 ≥ {floor:.3f} 的原型"
                f"（最佳間距 {min_distance:.3f}）。",
                details={"min_distance": min_distance, "floor": floor},
            )
    return prototypes


def _zone_signature(spec: SyntheticSpec, prototype: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if math.isinf(spec.concentration):
        return prototype.copy()
    signature = rng.dirichlet(spec.concentration * prototype)
    return signature / signature.sum()


def _true_responses(spec: SyntheticSpec, signatures: np.ndarray) -> tuple[np.ndarray, float | None]:
    if spec.response_fn == "linear":
        return spec.base_response + signatures @ np.asarray(spec.linear_weights, dtype=float), None
    nb_dm = signatures[:, WorkType.NEW_BUILDING.index] + signatures[:, WorkType.DEMOLITION.index]
    threshold = spec.step_threshold if spec.step_threshold is not None else float(np.percentile(nb_dm, 75))
    return spec.base_response + spec.step_delta * (nb_dm > threshold), threshold


# --- 每個區域的許可與事故 ---
def _zone_permits(
    spec: SyntheticSpec, zone_id: str, signature: np.ndarray, rng: np.random.Generator, n_days: int,
) -> list[PermitRecord]:
    low, high = spec.permits_per_zone
    counts = rng.multinomial(int(rng.integers(low, high + 1)), signature)
    offsets = rng.integers(0, n_days, size=int(counts.sum()))
    permits = []
    position = 0
    for work_type, count in zip(WORK_TYPE_ORDER, counts):
        for offset in offsets[position:position + count]:
            start = SYNTH_WINDOW.start + timedelta(days=int(offset))
            permits.append(PermitRecord(zone_id, work_type, start, expiration_date=start + timedelta(days=365)))
        position += count
    return permits


def _zone_incidents(
    spec: SyntheticSpec, zone_id: str, true_mean: float, rng: np.random.Generator, n_days: int,
) -> list[IncidentRecord]:
    low, high = spec.incidents_per_zone
    n = int(rng.integers(low, high + 1))
    responses = true_mean + spec.noise_sd * rng.standard_normal(n) if spec.noise_sd > 0 else np.full(n, true_mean)
    # 截斷於 0：負值重新抽樣
    negative = responses < 0
    while negative.any():
        responses[negative] = true_mean + spec.noise_sd * rng.standard_normal(int(negative.sum()))
        negative = responses < 0

    seconds = rng.integers(0, n_days * 86400, size=n)
    origin = datetime.combine(SYNTH_WINDOW.start, datetime.min.time())
    return [
        IncidentRecord(zone_id, origin + timedelta(seconds=int(s)), float(r))
        for s, r in zip(seconds, responses)
    ]


def generate(spec: SyntheticSpec) -> SyntheticCity:
    prototypes = _draw_prototypes(spec)

    labels = rng_for(spec.seed, 3).permutation(np.arange(spec.n_zones) % spec.n_clusters)
    zone_ids = [f"{FIRST_ZONE_ID + z:05d}" for z in range(spec.n_zones)]
    zone_rngs = [rng_for(spec.seed, 1, z) for z in range(spec.n_zones)]
    signatures = np.vstack([
        _zone_signature(spec, prototypes[labels[z]], zone_rngs[z]) for z in range(spec.n_zones)
    ])
    true_means, threshold = _true_responses(spec, signatures)

    n_days = (SYNTH_WINDOW.end - SYNTH_WINDOW.start).days + 1
    permits: list[PermitRecord] = []
    incidents: list[IncidentRecord] = []
    for z, zone_id in enumerate(zone_ids):
        permits.extend(_zone_permits(spec, zone_id, signatures[z], zone_rngs[z], n_days))
        incidents.extend(_zone_incidents(spec, zone_id, float(true_means[z]), rng_for(spec.seed, 2, z), n_days))

    truth = tuple(
        ZoneTruth(zone_id, int(labels[z]), tuple(signatures[z].tolist()), float(true_means[z]))
        for z, zone_id in enumerate(zone_ids)
    )
    prototypes.setflags(write=False)
    logger.info(
        f"已產生合成城市：{spec.n_zones} 個區域、{spec.n_clusters} 個群集、"
        f"{len(permits)} 筆許可、{len(incidents)} 筆事故（seed={spec.seed}）。"
    )
    return SyntheticCity(spec, tuple(permits), tuple(incidents), truth, prototypes, threshold)
