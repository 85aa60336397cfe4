from .kmeans import ClusteringModel, KMeansParams, kmeans_best_of, lloyd
from .silhouette import silhouette
from .k_sweep import KSweepEntry, KSweepReport, sweep_k
from .cluster_io import read_clusters, read_ksweep, write_clusters, write_ksweep
