"""Anisotropic graph convolutional networks for semi-supervised node
classification, with a GCN baseline, label augmentation, and evaluation
statistics."""

from .augment import (
    CombineMode,
    ConfidenceSource,
    ConfidenceTable,
    LabelExpansion,
    combine,
    expand_labels,
    parw_confidence,
)
from .data import Dataset, label_rate, load_dataset, row_normalize, save_dataset, subsample_split
from .evalstats import AccuracySample, accuracy, one_way_anova
from .graph import (
    Graph,
    NormalizedGraph,
    build_graph,
    knn_graph,
    normalize,
    smoothness_trace,
    smoothness_trace_gradient,
)
from .linalg import glorot_init, matmul, softmax_rows, spmm
from .model import (
    DiffusionMode,
    ForwardCache,
    ModelConfig,
    ModelState,
    aggregation_weight,
    aniso_diffuse,
    anisotropy_factor,
    backward,
    cross_entropy,
    forward,
    init_model,
)
from .rng import Rng
from .trainer import (
    AdamState,
    RunReport,
    TrainConfig,
    adam_step,
    depth_study,
    grid_search_beta,
    train,
    train_runs,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracySample",
    "AdamState",
    "CombineMode",
    "ConfidenceSource",
    "ConfidenceTable",
    "Dataset",
    "DiffusionMode",
    "ForwardCache",
    "Graph",
    "LabelExpansion",
    "ModelConfig",
    "ModelState",
    "NormalizedGraph",
    "Rng",
    "RunReport",
    "TrainConfig",
    "accuracy",
    "adam_step",
    "aggregation_weight",
    "aniso_diffuse",
    "anisotropy_factor",
    "backward",
    "build_graph",
    "combine",
    "cross_entropy",
    "depth_study",
    "expand_labels",
    "forward",
    "glorot_init",
    "grid_search_beta",
    "init_model",
    "knn_graph",
    "label_rate",
    "load_dataset",
    "matmul",
    "normalize",
    "one_way_anova",
    "parw_confidence",
    "row_normalize",
    "save_dataset",
    "smoothness_trace",
    "smoothness_trace_gradient",
    "softmax_rows",
    "spmm",
    "subsample_split",
    "train",
    "train_runs",
]
