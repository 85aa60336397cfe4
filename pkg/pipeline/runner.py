# pipeline/runner.py
"""
分析流程的主控程式，依序執行兩大步驟：
(一) 建築簽章分群：匯入資料 → 計算各區域簽章 → k 值掃描 / 多次重啟 k-means
(二) 反應時間迴歸：彙總各區域平均反應時間 → 排除事故佔比過低的群集 → 每個群集交叉驗證 OLS / 決策樹 / 隨機森林 → 報表

主要職責：
1. 每個階段都可以單獨呼叫（CLI 的 ingest / signatures / cluster / train 子命令），也可以由 run_pipeline 一次執行；
   各階段只透過寫出的中繼檔案溝通，單獨執行與一次執行的結果完全相同。
2. 任何階段發生致命錯誤時，錯誤會被標記階段名稱，已寫出的部分結果移到 <output>/quarantine/，並寫出 failure.json。
3. 寫出 manifest.json：設定內容與雜湊、種子、函式庫版本、各階段的列數；
   所有每次執行都會不同的值（時間戳記、耗時）都集中在 "timestamps" 這一個欄位。
"""
import hashlib
import json
import logging
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Iterator

import joblib
import numpy as np
import pandas as pd
import scipy

from config import CANONICAL_MAPPING_PATH, N_JOBS, PACKAGE_VERSION
from cluster.cluster_io import write_clusters, write_ksweep
from cluster.k_sweep import KSweepEntry, KSweepReport, sweep_k
from cluster.kmeans import ClusteringModel, KMeansParams, kmeans_best_of
from ingestion.canonical_io import write_canonical_incidents, write_canonical_permits
from ingestion.column_mapping import ColumnMapping, load_column_mapping
from ingestion.record_parser import parse_incidents, parse_permits
from ingestion.records import DateWindow, IncidentRecord, IngestReport, PermitRecord
from regress.cross_validation import cross_validate
from regress.dataset import Dataset
from regress.eval_report import EvalEntry, EvalReport, mark_best, write_eval_report
from regress.model_io import save_model
from regress.prediction import RegressionModel
from signature.signature_builder import SignatureMatrix, signatures_from_permits
from signature.signature_io import write_signatures
from utils.csv_utils import write_json
from utils.errors import AnalysisError, DataError, PipelineError, RegressionError, exit_code_for
from .pipeline_config import PipelineConfig
from .response_aggregation import (
    ClusterResponse, ZoneResponse, aggregate_response, summarize_clusters,
    write_cluster_responses, write_zone_responses,
)
from .zone_predictor import model_path

logger = logging.getLogger(__name__)

POOLED_CLUSTER_ID = "all"
QUARANTINE_DIR = "quarantine"
# ingest 輸出的標準檔已經過日期篩選，單獨執行後續階段時只套用 pandas 時間戳記可表示的寬鬆區間
CANONICAL_WINDOW = DateWindow(date(1900, 1, 1), date(2199, 12, 31))


@dataclass(eq=False)
class RunArtifacts:
    output_dir: Path
    ingest_reports: dict[str, IngestReport] = field(default_factory=dict)
    signatures: SignatureMatrix | None = None
    clustering: ClusteringModel | None = None
    sweep: KSweepReport | None = None
    zone_responses: dict[str, ZoneResponse] = field(default_factory=dict)
    cluster_responses: list[ClusterResponse] = field(default_factory=list)
    eval_report: EvalReport | None = None
    models: dict[tuple[str, str], RegressionModel] = field(default_factory=dict)
    manifest: dict[str, Any] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)

    def record(self, path: Path) -> Path:
        path = Path(path)
        if path not in self.files:
            self.files.append(path)
        return path


# --- 階段：資料匯入 ---
def ingest_stage(config: PipelineConfig, artifacts: RunArtifacts) -> tuple[list[PermitRecord], list[IncidentRecord]]:
    config.require_inputs()
    mappings = load_column_mapping(config.mapping_path)
    ingest_dir = artifacts.output_dir / "ingest"
    permits, permit_report = _parse(parse_permits, config.permits_path, mappings.permits, config, ingest_dir / "permits_quarantine.csv", artifacts)
    incidents, incident_report = _parse(parse_incidents, config.incidents_path, mappings.incidents, config, ingest_dir / "incidents_quarantine.csv", artifacts)

    artifacts.ingest_reports = {"permits": permit_report, "incidents": incident_report}
    artifacts.record(write_canonical_permits(ingest_dir / "permits.csv", permits))
    artifacts.record(write_canonical_incidents(ingest_dir / "incidents.csv", incidents))
    artifacts.record(write_json(ingest_dir / "ingest_report.json", {k: r.as_dict() for k, r in artifacts.ingest_reports.items()}))
    return permits, incidents


def _parse(parser, source: Path, mapping: ColumnMapping, config: PipelineConfig, quarantine: Path, artifacts: RunArtifacts):
    quarantine_path = quarantine if config.quarantine_rejects else None
    records, report = parser(source, mapping, config.window, quarantine_path)
    if quarantine_path is not None:
        artifacts.record(quarantine_path)
    return records, report


def load_ingested(output_dir: Path) -> tuple[list[PermitRecord], list[IncidentRecord]]:
    """讀回 ingest 階段寫出的標準 CSV，讓後續階段可以單獨執行。"""
    ingest_dir = Path(output_dir) / "ingest"
    for name in ("permits.csv", "incidents.csv"):
        if not (ingest_dir / name).exists():
            raise DataError("missing_artifact", f"找不到 {ingest_dir / name}，請先執行 ingest。")
    mappings = load_column_mapping(CANONICAL_MAPPING_PATH)
    permits, _ = parse_permits(ingest_dir / "permits.csv", mappings.permits, CANONICAL_WINDOW)
    incidents, _ = parse_incidents(ingest_dir / "incidents.csv", mappings.incidents, CANONICAL_WINDOW)
    return permits, incidents


# --- 階段：建築簽章 ---
def signature_stage(permits: list[PermitRecord], artifacts: RunArtifacts) -> SignatureMatrix:
    if not permits:
        raise PipelineError("no_permits", "沒有任何建築許可通過匯入檢查，無法計算簽章。")
    matrix = signatures_from_permits(permits)
    artifacts.signatures = matrix
    artifacts.record(write_signatures(artifacts.output_dir / "signatures.csv", matrix))
    return matrix


# --- 階段：分群 ---
def cluster_stage(matrix: SignatureMatrix, config: PipelineConfig, artifacts: RunArtifacts, n_jobs: int = N_JOBS) -> ClusteringModel:
    params = KMeansParams(
        k=config.fixed_k or config.k_min,
        restarts=config.restarts,
        max_iters=config.max_iters,
        convergence_tol=config.convergence_tol,
        seed=config.seed,
        init=config.init,
    )
    if config.fixed_k is not None:
        model = kmeans_best_of(matrix, params, n_jobs)
        sweep = KSweepReport(
            entries=(KSweepEntry(model.k, model.silhouette, model.inertia, model.seed_used),),
            selected_k=model.k,
            selected_model=model,
        )
        logger.info(f"使用指定的 k = {model.k}（輪廓係數 {model.silhouette:.4f}）。")
    else:
        sweep = sweep_k(matrix, config.k_min, config.k_max, params, n_jobs, config.restart_budget)
        model = sweep.selected_model

    artifacts.clustering, artifacts.sweep = model, sweep
    write_clusters(artifacts.output_dir, model, {"init": config.init, "restarts": config.restarts,
                                                 "restart_budget": config.restart_budget})
    artifacts.record(artifacts.output_dir / "clusters.csv")
    artifacts.record(artifacts.output_dir / "clusters_meta.json")
    artifacts.record(write_ksweep(artifacts.output_dir / "ksweep.csv", sweep))
    return model


# --- 階段：反應時間彙總與群集排除 ---
def aggregate_stage(incidents: list[IncidentRecord], config: PipelineConfig, artifacts: RunArtifacts) -> list[ClusterResponse]:
    if not incidents:
        raise PipelineError("no_incidents", "沒有任何事故紀錄通過匯入檢查，無法計算平均反應時間。")
    responses = aggregate_response(incidents, config.min_incidents_per_zone)
    summary = summarize_clusters(artifacts.clustering, responses, config.exclusion_threshold)
    artifacts.zone_responses, artifacts.cluster_responses = responses, summary
    artifacts.record(write_zone_responses(artifacts.output_dir / "zone_response.csv", responses))
    artifacts.record(write_cluster_responses(artifacts.output_dir / "cluster_response.csv", summary))
    return summary


# --- 階段：迴歸訓練與評估 ---
def _dataset_for(artifacts: RunArtifacts, clusters: set[int]) -> Dataset:
    matrix, clustering = artifacts.signatures, artifacts.clustering
    rows, targets, zone_ids = [], [], []
    for index, (zone_id, cluster) in enumerate(zip(clustering.zone_ids, clustering.assignments)):
        response = artifacts.zone_responses.get(zone_id)
        if int(cluster) in clusters and response is not None and not response.excluded:
            rows.append(matrix.rows[matrix.index_of(zone_id)])
            targets.append(response.mean_seconds)
            zone_ids.append(zone_id)
    return Dataset(np.asarray(rows).reshape(-1, matrix.rows.shape[1]), np.asarray(targets), tuple(zone_ids))


def _evaluate_cluster(
    cluster_id: str, data: Dataset, config: PipelineConfig, artifacts: RunArtifacts, n_jobs: int,
) -> list[EvalEntry]:
    entries = []
    for kind in config.model_kinds:
        try:
            result = cross_validate(data, kind, config.grid_for(kind), config.folds, config.seed, n_jobs)
        except RegressionError as e:
            logger.warning(f"群集 {cluster_id} 的 {kind} 模型無法評估 ({e.code})，報表中顯示 n/a。")
            entries.append(EvalEntry(cluster_id, kind, None, None, len(data), error=e.code))
            continue
        artifacts.models[(cluster_id, kind)] = result.model
        entries.append(EvalEntry(cluster_id, kind, result.score, result.best_params, len(data)))
        logger.info(f"群集 {cluster_id} / {kind}: 交叉驗證 R² = {result.score:.4f}（{len(data)} 個區域）")
    return mark_best(entries)


def train_stage(config: PipelineConfig, artifacts: RunArtifacts, n_jobs: int = N_JOBS) -> EvalReport:
    entries: list[EvalEntry] = []
    retained = [c.cluster for c in artifacts.cluster_responses if not c.excluded]
    if not retained:
        logger.warning("所有群集都被排除，沒有可以訓練的迴歸模型。")
    for cluster in retained:
        entries.extend(_evaluate_cluster(str(cluster), _dataset_for(artifacts, {cluster}), config, artifacts, n_jobs))
    if config.pooled_model:
        pooled = _dataset_for(artifacts, set(retained))
        entries.extend(_evaluate_cluster(POOLED_CLUSTER_ID, pooled, config, artifacts, n_jobs))

    report = EvalReport(tuple(entries))
    artifacts.eval_report = report
    artifacts.record(write_eval_report(artifacts.output_dir / "eval_report.csv", report))
    for entry in report.entries:
        model = artifacts.models.get((entry.cluster, entry.model_kind))
        if model is None:
            continue
        metadata = {"cluster": entry.cluster, "cv_r_squared": entry.r_squared, "params": entry.params,
                    "n_rows": entry.n_rows, "best": entry.is_best}
        artifacts.record(save_model(model_path(artifacts.output_dir, entry.cluster, entry.model_kind), model, metadata))
    return report


# --- manifest ---
def config_hash(config: PipelineConfig) -> str:
    text = json.dumps(config.manifest_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_manifest(config: PipelineConfig, artifacts: RunArtifacts, timings: dict[str, float]) -> dict[str, Any]:
    clustering = artifacts.clustering
    row_counts = {f"{name}_{key}": value for name, report in artifacts.ingest_reports.items()
                  for key, value in report.as_dict().items() if key != "rejection_reasons"}
    row_counts.update({
        "zones_with_signature": len(artifacts.signatures) if artifacts.signatures is not None else 0,
        "zones_with_response": len(artifacts.zone_responses),
        "clusters_retained": sum(not c.excluded for c in artifacts.cluster_responses),
        "models_trained": len(artifacts.models),
    })
    return {
        "package_version": PACKAGE_VERSION,
        "config": config.manifest_dict(),
        "config_hash": config_hash(config),
        "seeds": {
            "base_seed": config.seed,
            "winning_restart_seed": clustering.seed_used if clustering is not None else None,
        },
        "selected_k": clustering.k if clustering is not None else None,
        "library_versions": {
            "numpy": np.__version__, "pandas": pd.__version__, "scipy": scipy.__version__, "joblib": joblib.__version__,
        },
        "row_counts": row_counts,
        "files": sorted(str(p.relative_to(artifacts.output_dir)) for p in artifacts.files),
        "timestamps": {
            "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "stage_seconds": {name: round(seconds, 3) for name, seconds in timings.items()},
        },
    }


# --- 失敗處理 ---
def quarantine_partial(artifacts: RunArtifacts, stage: str | None, error: BaseException) -> Path:
    """把已寫出的檔案移到 <output>/quarantine/（保留相對路徑），並寫出 failure.json。"""
    quarantine = artifacts.output_dir / QUARANTINE_DIR
    quarantine.mkdir(parents=True, exist_ok=True)
    for path in artifacts.files:
        if path.exists():
            target = quarantine / path.relative_to(artifacts.output_dir)
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(path), str(target))
    write_json(quarantine / "failure.json", {
        "stage": stage,
        "code": getattr(error, "code", type(error).__name__),
        "message": getattr(error, "message", str(error)),
        "exit_code": exit_code_for(error),
    })
    logger.error(f"部分結果已移至 {quarantine}")
    return quarantine


class _StageRunner:
    def __init__(self):
        self.current: str | None = None
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        self.current = name
        logger.info(f"--- 階段開始: {name} ---")
        start = time.perf_counter()
        try:
            yield
        except AnalysisError as e:
            e.with_stage(name)
            raise
        finally:
            self.timings[name] = time.perf_counter() - start


# --- 一次執行整個流程 ---
def run_pipeline(config: PipelineConfig, n_jobs: int = N_JOBS) -> RunArtifacts:
    from .reports import render_reports

    artifacts = RunArtifacts(output_dir=Path(config.output_dir))
    artifacts.output_dir.mkdir(parents=True, exist_ok=True)
    runner = _StageRunner()
    logger.info(f"開始執行分析流程，輸出目錄: {artifacts.output_dir}")
    try:
        with runner.stage("ingest"):
            permits, incidents = ingest_stage(config, artifacts)
        with runner.stage("signatures"):
            matrix = signature_stage(permits, artifacts)
        with runner.stage("cluster"):
            cluster_stage(matrix, config, artifacts, n_jobs)
        with runner.stage("aggregate"):
            aggregate_stage(incidents, config, artifacts)
        with runner.stage("train"):
            train_stage(config, artifacts, n_jobs)
        with runner.stage("report"):
            render_reports(artifacts)
    except Exception as e:
        logger.error(f"分析流程在階段 {runner.current} 失敗: {e}", exc_info=True)
        quarantine_partial(artifacts, runner.current, e)
        raise

    artifacts.manifest = build_manifest(config, artifacts, runner.timings)
    write_json(artifacts.output_dir / "manifest.json", artifacts.manifest)
    logger.info(f"分析流程完成：選定 k = {artifacts.clustering.k}，共訓練 {len(artifacts.models)} 個模型。")
    return artifacts
