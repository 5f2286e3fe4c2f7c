"""Fine-tune pretrained text classifiers and export class probabilities.

The companion ensemble engine consumes probability files, one per model;
this package produces them. `fine_tune` trains a sequence classifier from
any local checkpoint directory (or hub name) on a labeled corpus, and
`export_probabilities` writes its per-example probabilities in the JSONL
format the engine ingests directly.
"""

from .config import (
    BINARY_CLASSES,
    MULTI_CLASSES,
    SPLITS,
    TASKS,
    FineTuneConfig,
    ValidationError,
    default_epochs,
    task_classes,
)
from .corpus import Corpus, MalformedLineError, load_corpus, save_corpus
from .export import export_probabilities
from .finetune import FineTunedClassifier, checkpoint_sha256, fine_tune
from .registry import LANGUAGES, known_checkpoints

__version__ = "0.1.0"

__all__ = [
    "BINARY_CLASSES",
    "Corpus",
    "FineTuneConfig",
    "FineTunedClassifier",
    "LANGUAGES",
    "MULTI_CLASSES",
    "MalformedLineError",
    "SPLITS",
    "TASKS",
    "ValidationError",
    "checkpoint_sha256",
    "default_epochs",
    "export_probabilities",
    "fine_tune",
    "known_checkpoints",
    "load_corpus",
    "save_corpus",
    "task_classes",
    "__version__",
]
