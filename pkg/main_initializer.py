# main_initializer.py
"""
CLI 啟動時的初始化工作：把設定檔與命令列參數合併成一份經過驗證的 PipelineConfig。
主要職責：
1. 讀取 --config 指定的 YAML 設定檔（沒有指定時全部使用預設值）。
2. 以命令列上「有明確給值」的參數覆寫設定檔的內容。
3. 驗證合併後的設定，不合法時拋出 ConfigurationError（CLI 結束代碼 1）。
"""
import argparse
import logging
from typing import Any

from pipeline.pipeline_config import PipelineConfig, build_config, read_config_file
from ingestion.records import DateWindow
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

# 命令列參數名稱 -> PipelineConfig 欄位名稱
FLAG_FIELDS = {
    "permits": "permits_path",
    "incidents": "incidents_path",
    "mapping": "mapping_path",
    "k_min": "k_min",
    "k_max": "k_max",
    "k": "fixed_k",
    "restarts": "restarts",
    "max_iters": "max_iters",
    "tol": "convergence_tol",
    "init": "init",
    "restart_budget": "restart_budget",
    "seed": "seed",
    "model_kinds": "model_kinds",
    "folds": "folds",
    "min_incidents": "min_incidents_per_zone",
    "pooled_model": "pooled_model",
    "exclusion_threshold": "exclusion_threshold",
    "output": "output_dir",
    "quarantine_rejects": "quarantine_rejects",
}


def flag_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """只收集命令列上有給值的參數；沒有出現的參數 (None) 不覆寫設定檔。"""
    values = {}
    for flag, name in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[name] = tuple(value) if flag == "model_kinds" else value
    return values


def _merge_window(values: dict[str, Any], args: argparse.Namespace) -> None:
    start = getattr(args, "window_start", None)
    end = getattr(args, "window_end", None)
    if start is None and end is None:
        return
    current = values.get("window") or PipelineConfig().window
    try:
        values["window"] = DateWindow(start or current.start, end or current.end)
    except ValueError as e:
        raise ConfigurationError("invalid_config", str(e)) from e


def initialize(args: argparse.Namespace) -> PipelineConfig:
    logger.info("初始化分析流程設定...")
    config_path = getattr(args, "config", None)
    values = read_config_file(config_path) if config_path else {}
    _merge_window(values, args)
    values.update(flag_overrides(args))

    config = build_config(values)
    logger.info(
        f"設定完成：輸出目錄 {config.output_dir}，日期區間 {config.window.start}..{config.window.end}，"
        f"k = {config.fixed_k if config.fixed_k is not None else f'{config.k_min}..{config.k_max}'}，seed = {config.seed}"
    )
    return config
