# main.py
"""
建築許可簽章分析專案的主入口檔案（命令列工具）。
以 `python main.py <子命令>` 執行，每個子命令對應分析流程的一個階段：
1. ingest：讀入原始的建築許可與事故檔，輸出標準 CSV 與匯入報告。
2. signatures：由 ingest 的輸出計算每個區域的建築簽章。
3. cluster：k 值掃描（或指定 k）與多次重啟 k-means。
4. train：彙總反應時間、排除小群集、每個群集交叉驗證迴歸模型。
5. predict：給定簽章（CSV 或 --counts）預測平均反應時間。
6. report：由既有的中繼檔案重新產生報表。
7. run：一次執行 1~4 與 report，並寫出 manifest.json。
8. synth：產生帶有已知答案的合成城市資料。

結束代碼：0 成功、1 設定錯誤、2 資料錯誤、3 其他內部錯誤。
"""
import argparse
import logging
import sys
from datetime import date
from pathlib import Path

import config
from main_initializer import initialize
from cluster.cluster_io import read_clusters
from cluster.kmeans import INIT_METHODS
from cluster.k_sweep import RESTART_BUDGETS
from ingestion.work_types import N_WORK_TYPES
from pipeline.reports import load_artifacts, render_reports
from pipeline.response_aggregation import read_cluster_responses, read_zone_responses
from pipeline.runner import (
    RunArtifacts, aggregate_stage, cluster_stage, ingest_stage, load_ingested,
    run_pipeline, signature_stage, train_stage,
)
from pipeline.zone_predictor import ZonePrediction, load_best_models, predict_zone
from regress.cross_validation import MODEL_KINDS
from signature.signature_builder import ZoneCounts, signature_of
from signature.signature_io import read_signatures
from synth.city_generator import RESPONSE_FUNCTIONS, SyntheticSpec, generate
from synth.synth_io import write_synthetic_city
from utils.csv_utils import format_float, write_rows
from utils.errors import AnalysisError, ConfigurationError, DataError, exit_code_for

logger = logging.getLogger(__name__)

PREDICTIONS_HEADER = ("zone_id", "cluster", "predicted_response_s", "model", "error")


# --- 命令列參數 ---
def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    """所有子命令共用的 PipelineConfig 參數；預設值一律為 None，代表「沿用設定檔或內建預設值」。"""
    parser.add_argument("--config", type=Path, help="YAML 設定檔（參考 configs/pipeline.example.yaml）")
    parser.add_argument("-o", "--output", type=Path, help="輸出目錄")
    parser.add_argument("--permits", type=Path, help="建築許可原始檔")
    parser.add_argument("--incidents", type=Path, help="事故派遣原始檔")
    parser.add_argument("--mapping", type=Path, help="欄位對應設定檔")
    parser.add_argument("--window-start", type=date.fromisoformat, help="日期區間起點 (YYYY-MM-DD)")
    parser.add_argument("--window-end", type=date.fromisoformat, help="日期區間終點 (YYYY-MM-DD)")
    parser.add_argument("--k-min", type=int)
    parser.add_argument("--k-max", type=int)
    parser.add_argument("--k", type=int, help="指定群集數量，略過 k 值掃描")
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--init", choices=INIT_METHODS)
    parser.add_argument("--restart-budget", choices=RESTART_BUDGETS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--model-kinds", nargs="+", choices=MODEL_KINDS)
    parser.add_argument("--folds", type=int)
    parser.add_argument("--min-incidents", type=int, help="區域納入迴歸所需的最少事故數")
    parser.add_argument("--pooled-model", action="store_true", default=None, help="另外訓練一個不分群集的整體模型")
    parser.add_argument("--exclusion-threshold", type=float, help="群集事故佔比低於此值時不進入迴歸")
    parser.add_argument("--quarantine-rejects", action="store_true", default=None, help="把被拒絕的原始列寫到隔離檔")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="main.py", description="建築許可簽章與緊急反應時間分析")
    parser.add_argument("-v", "--verbose", action="store_true", help="輸出 DEBUG 等級的日誌")
    parser.add_argument("--n-jobs", type=int, default=config.N_JOBS, help="平行運算的 worker 數量")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("ingest", "匯入原始資料"),
        ("signatures", "計算各區域的建築簽章"),
        ("cluster", "依簽章分群"),
        ("train", "訓練並評估各群集的迴歸模型"),
        ("report", "重新產生報表"),
        ("run", "一次執行整個分析流程"),
    ):
        _add_pipeline_flags(sub.add_parser(name, help=help_text))

    predict = sub.add_parser("predict", help="預測區域的平均反應時間")
    predict.add_argument("-o", "--output", type=Path, default=config.DEFAULT_OUTPUT_DIR, help="已訓練的輸出目錄")
    source = predict.add_mutually_exclusive_group(required=True)
    source.add_argument("--signatures", type=Path, help="signatures.csv 格式的簽章檔")
    source.add_argument("--counts", type=int, nargs=N_WORK_TYPES, metavar="N", help="8 種工作類型的許可數量")
    predict.add_argument("--zone", default="", help="搭配 --counts 使用的區域代碼（僅用於輸出）")
    predict.add_argument("--out", type=Path, help="預測結果 CSV；未指定時輸出到標準輸出")

    synth_defaults = SyntheticSpec()
    synth = sub.add_parser("synth", help="產生合成城市資料")
    synth.add_argument("-o", "--output", type=Path, required=True, help="合成資料的輸出目錄")
    synth.add_argument("--zones", type=int, default=synth_defaults.n_zones)
    synth.add_argument("--clusters", type=int, default=synth_defaults.n_clusters)
    synth.add_argument("--concentration", type=float, default=synth_defaults.concentration)
    synth.add_argument("--permits-per-zone", type=int, nargs=2, default=synth_defaults.permits_per_zone, metavar=("MIN", "MAX"))
    synth.add_argument("--incidents-per-zone", type=int, nargs=2, default=synth_defaults.incidents_per_zone, metavar=("MIN", "MAX"))
    synth.add_argument("--response-fn", choices=RESPONSE_FUNCTIONS, default=synth_defaults.response_fn)
    synth.add_argument("--noise-sd", type=float, default=synth_defaults.noise_sd)
    synth.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    return parser


# --- 各子命令 ---
def _stage_artifacts(pipeline_config) -> RunArtifacts:
    output_dir = Path(pipeline_config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    return RunArtifacts(output_dir=output_dir)


def cmd_ingest(args: argparse.Namespace) -> None:
    pipeline_config = initialize(args)
    ingest_stage(pipeline_config, _stage_artifacts(pipeline_config))


def cmd_signatures(args: argparse.Namespace) -> None:
    pipeline_config = initialize(args)
    permits, _ = load_ingested(pipeline_config.output_dir)
    signature_stage(permits, _stage_artifacts(pipeline_config))


def cmd_cluster(args: argparse.Namespace) -> None:
    pipeline_config = initialize(args)
    artifacts = _stage_artifacts(pipeline_config)
    cluster_stage(read_signatures(artifacts.output_dir / "signatures.csv"), pipeline_config, artifacts, args.n_jobs)


def cmd_train(args: argparse.Namespace) -> None:
    pipeline_config = initialize(args)
    artifacts = _stage_artifacts(pipeline_config)
    _, incidents = load_ingested(artifacts.output_dir)
    artifacts.signatures = read_signatures(artifacts.output_dir / "signatures.csv")
    artifacts.clustering = read_clusters(artifacts.output_dir)
    aggregate_stage(incidents, pipeline_config, artifacts)
    train_stage(pipeline_config, artifacts, args.n_jobs)


def cmd_report(args: argparse.Namespace) -> None:
    pipeline_config = initialize(args)
    render_reports(load_artifacts(pipeline_config.output_dir))


def cmd_run(args: argparse.Namespace) -> None:
    run_pipeline(initialize(args), args.n_jobs)


def _prediction_row(prediction: ZonePrediction) -> tuple[str, ...]:
    return (
        prediction.zone_id or "",
        str(prediction.cluster),
        format_float(prediction.predicted_seconds),
        prediction.model_kind or "",
        prediction.error or "",
    )


def cmd_predict(args: argparse.Namespace) -> None:
    output_dir = Path(args.output)
    clustering = read_clusters(output_dir)
    models = load_best_models(output_dir)

    if args.counts is not None:
        try:
            signatures = [signature_of(ZoneCounts(args.zone, tuple(args.counts)))]
        except ValueError as e:
            raise ConfigurationError("invalid_counts", str(e)) from e
    else:
        signatures = list(read_signatures(args.signatures).signatures())

    predictions = [predict_zone(signature, clustering, models) for signature in signatures]
    rows = [_prediction_row(p) for p in predictions]
    if args.out is not None:
        write_rows(args.out, PREDICTIONS_HEADER, rows)
        logger.info(f"已寫出 {len(rows)} 筆預測結果到 {args.out}")
    else:
        print(",".join(PREDICTIONS_HEADER))
        for row in rows:
            print(",".join(row))


def cmd_synth(args: argparse.Namespace) -> None:
    try:
        spec = SyntheticSpec(
            n_zones=args.zones,
            n_clusters=args.clusters,
            concentration=args.concentration,
            permits_per_zone=tuple(args.permits_per_zone),
            incidents_per_zone=tuple(args.incidents_per_zone),
            response_fn=args.response_fn,
            noise_sd=args.noise_sd,
            seed=args.seed,
        )
    except ValueError as e:
        raise ConfigurationError("invalid_config", str(e)) from e
    write_synthetic_city(args.output, generate(spec))


COMMANDS = {
    "ingest": cmd_ingest,
    "signatures": cmd_signatures,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "predict": cmd_predict,
    "report": cmd_report,
    "run": cmd_run,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config.setup_logging(logging.DEBUG if args.verbose else None)
    logger.info(f"執行子命令: {args.command}")

    try:
        COMMANDS[args.command](args)
    except ConfigurationError as e:
        logger.error(f"設定錯誤: {e}")
        return exit_code_for(e)
    except DataError as e:
        logger.error(f"資料錯誤: {e}", exc_info=args.verbose)
        return exit_code_for(e)
    except AnalysisError as e:
        logger.error(f"分析失敗: {e}", exc_info=True)
        return exit_code_for(e)
    except Exception as e:
        logger.error(f"發生未預期的錯誤: {e}", exc_info=True)
        return exit_code_for(e)

    logger.info(f"子命令 {args.command} 完成。")
    return 0


if __name__ == "__main__":
    sys.exit(main())
