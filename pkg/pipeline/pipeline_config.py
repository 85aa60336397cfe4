# pipeline/pipeline_config.py
"""
分析流程的設定 (PipelineConfig)。
優先順序：程式內建預設值 < 環境變數 (config.py) < YAML 設定檔 < CLI 參數。
這個模組只負責 YAML 的解析與驗證；CLI 參數的覆寫由 main_initializer 處理。
"""
import logging
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path
from typing import Any

import yaml

import config
from cluster.k_sweep import RESTART_BUDGETS
from cluster.kmeans import INIT_METHODS
from ingestion.records import DateWindow
from regress.cross_validation import DEFAULT_PARAM_GRIDS, MODEL_KINDS, expand_grid
from utils.errors import AnalysisError, ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    permits_path: Path | None = None
    incidents_path: Path | None = None
    mapping_path: Path = config.NYC_MAPPING_PATH
    window: DateWindow = DateWindow(*config.DEFAULT_WINDOW)
    # 分群
    k_min: int = config.DEFAULT_K_MIN
    k_max: int = config.DEFAULT_K_MAX
    fixed_k: int | None = None                     # 指定時略過 k 值掃描
    restarts: int = config.DEFAULT_RESTARTS
    max_iters: int = config.DEFAULT_MAX_ITERS
    convergence_tol: float = config.DEFAULT_TOL
    init: str = "kmeans++"
    restart_budget: str = "per_k"
    seed: int = config.DEFAULT_SEED
    # 迴歸
    model_kinds: tuple[str, ...] = config.DEFAULT_MODEL_KINDS
    param_grids: dict[str, dict[str, list[Any]]] = field(default_factory=lambda: dict(DEFAULT_PARAM_GRIDS))
    folds: int = config.DEFAULT_FOLDS
    min_incidents_per_zone: int = config.DEFAULT_MIN_INCIDENTS_PER_ZONE
    pooled_model: bool = False
    # 群集排除：事故數佔比低於此門檻的群集不進入迴歸
    exclusion_threshold: float = config.DEFAULT_EXCLUSION_THRESHOLD
    output_dir: Path = config.DEFAULT_OUTPUT_DIR
    quarantine_rejects: bool = False

    def __post_init__(self):
        for name in ("permits_path", "incidents_path", "mapping_path", "output_dir"):
            value = getattr(self, name)
            if value is not None:
                if not str(value).strip():
                    raise ConfigurationError("invalid_config", f"{name} 不可為空字串。")
                object.__setattr__(self, name, Path(value))
        if self.k_min < 2 or self.k_max < self.k_min:
            raise ConfigurationError("invalid_config", f"k 的範圍不合法: {self.k_min}..{self.k_max}（k_min 必須 ≥ 2）")
        if self.fixed_k is not None and self.fixed_k < 2:
            raise ConfigurationError("invalid_config", f"k 必須 ≥ 2，收到 {self.fixed_k}")
        if self.restarts < 1 or self.max_iters < 1 or self.convergence_tol < 0:
            raise ConfigurationError("invalid_config", "restarts、max_iters 必須 ≥ 1，convergence_tol 不可為負數。")
        if self.init not in INIT_METHODS:
            raise ConfigurationError("invalid_config", f"init 必須是 {INIT_METHODS} 之一")
        if self.restart_budget not in RESTART_BUDGETS:
            raise ConfigurationError("invalid_config", f"restart_budget 必須是 {RESTART_BUDGETS} 之一")
        if not self.model_kinds or any(kind not in MODEL_KINDS for kind in self.model_kinds):
            raise ConfigurationError("invalid_config", f"model_kinds 必須是 {MODEL_KINDS} 的非空子集")
        if self.folds < 2:
            raise ConfigurationError("invalid_config", "folds 必須 ≥ 2")
        if self.min_incidents_per_zone < 1:
            raise ConfigurationError("invalid_config", "min_incidents_per_zone 必須 ≥ 1")
        if not 0.0 <= self.exclusion_threshold < 1.0:
            raise ConfigurationError("invalid_config", f"exclusion_threshold 必須介於 [0, 1)，收到 {self.exclusion_threshold}")
        for kind, grid in self.param_grids.items():
            if kind not in MODEL_KINDS:
                raise ConfigurationError("invalid_config", f"param_grids 中有未知的模型種類: {kind}")
            expand_grid(kind, grid)
        object.__setattr__(self, "model_kinds", tuple(self.model_kinds))

    def grid_for(self, kind: str) -> dict[str, list[Any]]:
        return self.param_grids.get(kind, DEFAULT_PARAM_GRIDS[kind])

    def require_inputs(self) -> None:
        if self.permits_path is None or self.incidents_path is None:
            raise ConfigurationError("invalid_config", "必須指定建築許可檔 (permits) 與事故檔 (incidents) 的路徑。")

    def manifest_dict(self) -> dict[str, Any]:
        """寫入 manifest 的設定內容；不含輸出目錄，讓不同目錄的兩次執行產生相同的 manifest。"""
        values = asdict(self)
        values.pop("output_dir")
        values["window"] = {"start": self.window.start.isoformat(), "end": self.window.end.isoformat()}
        for name in ("permits_path", "incidents_path", "mapping_path"):
            values[name] = None if values[name] is None else str(values[name])
        values["model_kinds"] = list(self.model_kinds)
        values["param_grids"] = {kind: self.grid_for(kind) for kind in self.model_kinds}
        return values


# --- YAML 設定檔 ---
def _as_date(value: Any, name: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError as e:
        raise ConfigurationError("invalid_config", f"{name} 不是合法的日期 (YYYY-MM-DD): {value!r}") from e


def read_config_file(path: str | Path) -> dict[str, Any]:
    """把 YAML 設定檔攤平成 PipelineConfig 的欄位字典（只含檔案中有出現的欄位）。"""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError as e:
        raise ConfigurationError("config_not_found", f"找不到設定檔 {path}") from e
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError("config_unreadable", f"無法解析設定檔 {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigurationError("invalid_config", f"設定檔 {path} 的最上層必須是字典。")

    values: dict[str, Any] = {}
    inputs = raw.get("inputs") or {}
    for key, name in (("permits", "permits_path"), ("incidents", "incidents_path"), ("mapping", "mapping_path")):
        if inputs.get(key) is not None:
            values[name] = Path(inputs[key])

    window = raw.get("window")
    if window is not None:
        start = _as_date(window.get("start"), "window.start")
        end = _as_date(window.get("end"), "window.end")
        try:
            values["window"] = DateWindow(start, end)
        except ValueError as e:
            raise ConfigurationError("invalid_config", str(e)) from e

    clustering = raw.get("clustering") or {}
    for key, name in (("k_min", "k_min"), ("k_max", "k_max"), ("k", "fixed_k"), ("restarts", "restarts"),
                      ("max_iters", "max_iters"), ("tol", "convergence_tol"), ("init", "init"),
                      ("restart_budget", "restart_budget"), ("seed", "seed")):
        if key in clustering:
            values[name] = clustering[key]

    regression = raw.get("regression") or {}
    for key in ("folds", "min_incidents_per_zone", "pooled_model"):
        if key in regression:
            values[key] = regression[key]
    if "model_kinds" in regression:
        values["model_kinds"] = tuple(regression["model_kinds"])
    if "param_grids" in regression:
        values["param_grids"] = {**DEFAULT_PARAM_GRIDS, **(regression["param_grids"] or {})}

    for key in ("exclusion_threshold", "quarantine_rejects"):
        if key in raw:
            values[key] = raw[key]
    if raw.get("output_dir") is not None:
        values["output_dir"] = Path(raw["output_dir"])

    logger.info(f"已讀取設定檔 {path}（{len(values)} 個設定值）。")
    return values


def build_config(values: dict[str, Any]) -> PipelineConfig:
    try:
        return PipelineConfig(**values)
    except AnalysisError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError("invalid_config", f"設定值不合法: {e}") from e
