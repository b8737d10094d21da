"""Regional contrast on synthetic segmentation data."""

from ._core import (
    RecoError,
    dendrogram,
    generate_synthetic,
    mean_iou,
    negative_class_distribution,
    normalize_rows,
    partition_pdfl,
    partition_plfd,
    poly_learning_rate,
    reco_loss,
    relation_graph,
    run_cli,
    split_easy_hard,
)

__all__ = [
    "RecoError",
    "dendrogram",
    "generate_synthetic",
    "mean_iou",
    "negative_class_distribution",
    "normalize_rows",
    "partition_pdfl",
    "partition_plfd",
    "poly_learning_rate",
    "reco_loss",
    "relation_graph",
    "run_cli",
    "split_easy_hard",
]
