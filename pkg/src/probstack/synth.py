"""Synthetic base-model probability generator.

Emulates a bank of imperfect classifiers over a shared task: each example
gets a latent "hard" flag that lowers every model's hit rate at once, which
makes model errors positively correlated and tunes how much an ensemble can
gain. Per-example randomness comes from counter-based child seeds, so output
is independent of generation order.
"""

from __future__ import annotations

import dataclasses
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LabeledDataset, LabelSpace, ProbabilitySet, ValidationError, check_seed, spawn_rng
from .dataio import save_labels_file, save_probability_file
from .learners import TrainConfig
from .pipeline import ExperimentManifest, save_manifest

BINARY_CLASS_NAMES = ("human", "generated")


def default_class_names(k: int) -> tuple[str, ...]:
    if k == 2:
        return BINARY_CLASS_NAMES
    if k <= 26:
        return tuple(string.ascii_uppercase[:k])
    return tuple(f"c{i:03d}" for i in range(k))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic task.

    accuracies are per-model target hit rates on easy examples; on hard ones
    (a Bernoulli(hard_fraction) flag shared by all models) the rate drops by
    hard_penalty, clamped at chance. The predicted class gets probability
    mass drawn from the confidence range, the rest is split over the other
    classes by a symmetric random partition that keeps the prediction on top.
    """

    k: int
    n_train: int
    n_test: int
    accuracies: tuple[float, ...]
    hard_fraction: float = 0.0
    hard_penalty: float = 0.0
    confidence: tuple[float, float] | None = None
    seed: int = 0
    task: str = "synthetic"
    class_names: tuple[str, ...] | None = None
    model_names: tuple[str, ...] | None = None

    def __post_init__(self):
        check_seed(self.seed)
        if self.k < 2:
            raise ValidationError(f"need at least 2 classes, got {self.k}")
        if self.n_train < 1 or self.n_test < 1:
            raise ValidationError("n_train and n_test must be positive")
        object.__setattr__(self, "accuracies", tuple(float(a) for a in self.accuracies))
        if not self.accuracies:
            raise ValidationError("need at least one base model accuracy")
        chance = 1.0 / self.k
        for a in self.accuracies:
            if not chance <= a <= 1.0:
                raise ValidationError(f"accuracy {a} outside [{chance}, 1]")
        if not 0.0 <= self.hard_fraction < 1.0:
            raise ValidationError(f"hard_fraction {self.hard_fraction} outside [0, 1)")
        if self.hard_penalty < 0.0:
            raise ValidationError(f"hard_penalty {self.hard_penalty} must be nonnegative")
        conf = self.confidence
        if conf is None:
            # halfway between chance and certain, up to a fixed ceiling
            conf = ((1.0 + chance) / 2.0, 0.97)
        lo, hi = float(conf[0]), float(conf[1])
        if not chance < lo < hi < 1.0:
            raise ValidationError(f"confidence range ({lo}, {hi}) must sit inside ({chance}, 1)")
        object.__setattr__(self, "confidence", (lo, hi))
        names = self.class_names if self.class_names is not None else default_class_names(self.k)
        names = tuple(names)
        if len(names) != self.k:
            raise ValidationError(f"{len(names)} class names for k={self.k}")
        object.__setattr__(self, "class_names", names)
        models = self.model_names
        if models is None:
            models = tuple(f"base-{m + 1}" for m in range(len(self.accuracies)))
        models = tuple(models)
        if len(models) != len(self.accuracies):
            raise ValidationError(f"{len(models)} model names for {len(self.accuracies)} accuracies")
        if len(set(models)) != len(models):
            raise ValidationError(f"model names must be unique: {list(models)}")
        object.__setattr__(self, "model_names", models)

    @property
    def n_models(self) -> int:
        return len(self.accuracies)

    @property
    def label_space(self) -> LabelSpace:
        return LabelSpace(self.class_names)

    def effective_accuracy(self, m: int) -> float:
        """Expected hit rate of model m under the hard-example mixture."""
        chance = 1.0 / self.k
        hard = max(self.accuracies[m] - self.hard_penalty, chance)
        return (1.0 - self.hard_fraction) * self.accuracies[m] + self.hard_fraction * hard


def _example_row(rng, k: int, pred: int, lo: float, hi: float) -> np.ndarray:
    c = rng.uniform(lo, hi)
    rest = 1.0 - c
    probs = np.empty(k)
    if k == 2:
        chunks = np.array([rest])
    else:
        chunks = None
        for _ in range(100):
            g = rng.random(k - 1)
            cand = rest * g / g.sum()
            if cand.max() < c:
                chunks = cand
                break
        if chunks is None:
            # uniform split is always below c since c > 1/k
            chunks = np.full(k - 1, rest / (k - 1))
    probs[pred] = c
    others = [j for j in range(k) if j != pred]
    probs[others] = chunks
    return probs / probs.sum()


def generate_synthetic_task(spec: SynthSpec) -> tuple[list[ProbabilitySet], LabeledDataset]:
    """Generate one ProbabilitySet per model plus fully labeled train/test
    splits (test labels kept so the task can be evaluated end to end)."""
    k = spec.k
    lo, hi = spec.confidence
    chance = 1.0 / k
    labels: dict[str, int] = {}
    splits: dict[str, str] = {}
    rows: list[dict[str, np.ndarray]] = [{} for _ in range(spec.n_models)]

    for split, count in (("train", spec.n_train), ("test", spec.n_test)):
        for i in range(count):
            ex_id = f"{split}-{i:06d}"
            rng = spawn_rng(spec.seed, "example", split, i)
            true = int(rng.integers(0, k))
            hard = rng.random() < spec.hard_fraction
            labels[ex_id] = true
            splits[ex_id] = split
            for m, a in enumerate(spec.accuracies):
                rate = max(a - spec.hard_penalty, chance) if hard else a
                if rng.random() < rate:
                    pred = true
                else:
                    j = int(rng.integers(0, k - 1))
                    pred = j if j < true else j + 1
                rows[m][ex_id] = _example_row(rng, k, pred, lo, hi)

    space = spec.label_space
    sets = [
        ProbabilitySet(spec.model_names[m], space, rows[m], dict(splits))
        for m in range(spec.n_models)
    ]
    return sets, LabeledDataset(space, labels, splits)


def spec_from_doc(doc: dict) -> SynthSpec:
    """Build a SynthSpec from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ValidationError("synthetic spec must be a JSON object")
    known = {
        "k",
        "n_train",
        "n_test",
        "accuracies",
        "hard_fraction",
        "hard_penalty",
        "confidence",
        "seed",
        "task",
        "classes",
        "models",
        # manifest passthrough, consumed by write_synthetic_task
        "fusions",
        "metas",
        "val_fraction",
        "train",
    }
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValidationError(f"unknown synthetic spec keys {unknown}")
    for key in ("k", "n_train", "n_test", "accuracies"):
        if key not in doc:
            raise ValidationError(f"synthetic spec missing key {key!r}")
    kwargs = dict(
        k=doc["k"],
        n_train=doc["n_train"],
        n_test=doc["n_test"],
        accuracies=tuple(doc["accuracies"]),
        hard_fraction=doc.get("hard_fraction", 0.0),
        hard_penalty=doc.get("hard_penalty", 0.0),
        seed=doc.get("seed", 0),
        task=doc.get("task", "synthetic"),
    )
    if doc.get("confidence") is not None:
        conf = doc["confidence"]
        if not isinstance(conf, (list, tuple)) or len(conf) != 2:
            raise ValidationError("confidence must be a [lo, hi] pair")
        kwargs["confidence"] = (float(conf[0]), float(conf[1]))
    if doc.get("classes") is not None:
        kwargs["class_names"] = tuple(doc["classes"])
    if doc.get("models") is not None:
        kwargs["model_names"] = tuple(doc["models"])
    return SynthSpec(**kwargs)


def write_synthetic_task(spec: SynthSpec, out_dir, manifest_doc: dict | None = None) -> dict:
    """Generate the task and write probability files, labels, and a manifest
    ready for a full run. manifest_doc may carry grid overrides (fusions,
    metas, val_fraction, train)."""
    manifest_doc = manifest_doc or {}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sets, dataset = generate_synthetic_task(spec)
    paths = {}
    for pset in sets:
        paths[pset.model_name] = out_dir / f"{pset.model_name}.jsonl"
        save_probability_file(pset, paths[pset.model_name])
    labels_path = out_dir / "labels.jsonl"
    save_labels_file(dataset, labels_path)

    kwargs = {}
    if manifest_doc.get("fusions") is not None:
        kwargs["fusions"] = tuple(manifest_doc["fusions"])
    if manifest_doc.get("metas") is not None:
        kwargs["metas"] = tuple(manifest_doc["metas"])
    if manifest_doc.get("val_fraction") is not None:
        kwargs["val_fraction"] = float(manifest_doc["val_fraction"])
    if manifest_doc.get("train") is not None:
        kwargs["train_cfg"] = dataclasses.replace(TrainConfig(), **manifest_doc["train"])
    manifest = ExperimentManifest(
        task=spec.task,
        label_space=spec.label_space,
        model_order=spec.model_names,
        probability_paths={name: str(paths[name]) for name in spec.model_names},
        labels_path=str(labels_path),
        seed=spec.seed,
        **kwargs,
    )
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest, manifest_path)
    out = {name: str(path) for name, path in paths.items()}
    out["labels"] = str(labels_path)
    out["manifest"] = str(manifest_path)
    return out
