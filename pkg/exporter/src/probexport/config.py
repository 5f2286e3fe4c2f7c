"""Fine-tuning configuration.

Two tasks are supported: `binary` (human vs generated text, classes
"human"/"generated") and `multi` (source attribution over six generators,
classes "A".."F"). Defaults are the settings used across all subtasks:
batch 128, learning rate 3e-5, sequence length 128, and 10 epochs for the
binary task or 20 for the multiclass one.
"""

from __future__ import annotations

from dataclasses import dataclass


class ValidationError(ValueError):
    """Invalid configuration or input data."""


TASKS = ("binary", "multi")

BINARY_CLASSES = ("human", "generated")
MULTI_CLASSES = ("A", "B", "C", "D", "E", "F")

SPLITS = ("train", "test")


def task_classes(task: str) -> tuple[str, ...]:
    if task == "binary":
        return BINARY_CLASSES
    if task == "multi":
        return MULTI_CLASSES
    raise ValidationError(f"unknown task {task!r} (expected one of {list(TASKS)})")


def default_epochs(task: str) -> int:
    return 10 if task_classes(task) == BINARY_CLASSES else 20


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed {seed} outside [0, 2**64)")
    return seed


@dataclass(frozen=True)
class FineTuneConfig:
    """One fine-tuning job: the checkpoint, the task, and the knobs.

    `epochs=None` resolves to the task default (10 binary / 20 multi).
    """

    checkpoint: str
    task: str
    batch_size: int = 128
    learning_rate: float = 3e-5
    max_seq_len: int = 128
    epochs: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.checkpoint, str) or not self.checkpoint:
            raise ValidationError("checkpoint must be a non-empty string")
        task_classes(self.task)
        for name in ("batch_size", "max_seq_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate!r}")
        epochs = self.epochs if self.epochs is not None else default_epochs(self.task)
        if not isinstance(epochs, int) or isinstance(epochs, bool) or epochs < 1:
            raise ValidationError(f"epochs must be a positive integer, got {self.epochs!r}")
        object.__setattr__(self, "epochs", epochs)
        check_seed(self.seed)

    @property
    def classes(self) -> tuple[str, ...]:
        return task_classes(self.task)

    def provenance(self) -> dict:
        """The knobs worth recording next to anything this config produced."""
        return {
            "checkpoint": self.checkpoint,
            "task": self.task,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "max_seq_len": self.max_seq_len,
            "epochs": self.epochs,
            "seed": self.seed,
            "optimizer": "adamw",
            "lr_schedule": "constant",
        }
