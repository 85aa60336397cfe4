from .pipeline_config import PipelineConfig, build_config, read_config_file
from .response_aggregation import (
    ClusterResponse,
    ZoneResponse,
    aggregate_response,
    read_cluster_responses,
    read_zone_responses,
    summarize_clusters,
)
from .zone_predictor import NO_MODEL_FOR_CLUSTER, BestModel, ZonePrediction, load_best_models, predict_zone
from .runner import (
    RunArtifacts,
    aggregate_stage,
    cluster_stage,
    ingest_stage,
    run_pipeline,
    signature_stage,
    train_stage,
)
from .reports import load_artifacts, render_reports
