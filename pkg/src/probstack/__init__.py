"""Stacked-ensemble classification engine over base-model probability files.

Fuses per-example class-probability vectors from several base models
(concatenation or averaging), trains a grid of meta-classifiers on the fused
features, selects on a validation carve-out, retrains the winner on the
merged split, and reports test metrics.
"""

from .core import (
    LabeledDataset,
    LabelSpace,
    ProbabilitySet,
    ValidationError,
    decode_labels,
    encode_labels,
    spawn_rng,
    spawn_seed,
)
from .ensembles import (
    BASE_KINDS,
    ECOCModel,
    META_KINDS,
    OvRModel,
    VotingModel,
    decode_ecoc,
    generate_code_matrix,
    identity_code,
    train_ecoc,
    train_meta,
    train_ovr,
    train_voting,
)
from .fusion import STRATEGIES, FusedFeatures, fuse, fuse_average, fuse_concat
from .learners import (
    ForestModel,
    GaussianNBModel,
    LinearModel,
    LinearSVMOvR,
    TrainConfig,
    train_gaussian_nb,
    train_linear_svm,
    train_logreg,
    train_random_forest,
)
from .metrics import ConfusionMatrix, EvalReport, confusion, evaluate
from .pipeline import (
    ExperimentManifest,
    PhasedLabels,
    RunResult,
    evaluate_base_models,
    load_manifest,
    run_experiment,
    run_loaded,
    split_train_val,
    write_run_outputs,
)
from .synth import SynthSpec, generate_synthetic_task, write_synthetic_task

__version__ = "0.1.0"

__all__ = [
    "BASE_KINDS",
    "ConfusionMatrix",
    "ECOCModel",
    "EvalReport",
    "ExperimentManifest",
    "ForestModel",
    "FusedFeatures",
    "GaussianNBModel",
    "LabelSpace",
    "LabeledDataset",
    "LinearModel",
    "LinearSVMOvR",
    "META_KINDS",
    "OvRModel",
    "PhasedLabels",
    "ProbabilitySet",
    "RunResult",
    "STRATEGIES",
    "SynthSpec",
    "TrainConfig",
    "ValidationError",
    "VotingModel",
    "confusion",
    "decode_ecoc",
    "decode_labels",
    "encode_labels",
    "evaluate",
    "evaluate_base_models",
    "fuse",
    "fuse_average",
    "fuse_concat",
    "generate_code_matrix",
    "generate_synthetic_task",
    "identity_code",
    "load_manifest",
    "run_experiment",
    "run_loaded",
    "spawn_rng",
    "spawn_seed",
    "split_train_val",
    "train_ecoc",
    "train_gaussian_nb",
    "train_linear_svm",
    "train_logreg",
    "train_meta",
    "train_ovr",
    "train_random_forest",
    "train_voting",
    "write_run_outputs",
    "write_synthetic_task",
]
