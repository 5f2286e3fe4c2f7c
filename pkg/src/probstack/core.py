"""Shared domain types: label spaces, probability sets, labeled datasets, seeding.

Everything here is immutable after construction and safe to share across
threads. All randomness anywhere in the package is derived from an explicit
64-bit seed through :func:`spawn_rng` / :func:`spawn_seed`, so equal seeds and
inputs give bit-identical results.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

# Row sums may drift by this much through a text round-trip; within the
# tolerance rows are renormalized, beyond it the data is considered corrupt.
ROW_SUM_TOL = 1e-6

SPLITS = ("train", "val", "test")

MAX_SEED = 2**64 - 1


class ValidationError(ValueError):
    """An input violates a structural precondition."""


def check_seed(value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"seed must be an integer, got {type(value).__name__}")
    if not 0 <= value <= MAX_SEED:
        raise ValidationError(f"seed must fit in 64 unsigned bits, got {value}")
    return value


def _key_ints(keys: tuple) -> list[int]:
    out = []
    for key in keys:
        if isinstance(key, str):
            # stable across processes, unlike hash()
            digest = hashlib.sha256(key.encode("utf-8")).digest()
            out.append(int.from_bytes(digest[:8], "little"))
        elif isinstance(key, (int, np.integer)):
            out.append(int(key))
        else:
            raise TypeError(f"seed key must be str or int, got {type(key).__name__}")
    return out


def spawn_rng(seed: int, *keys) -> np.random.Generator:
    """Deterministic child generator for (seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence([check_seed(seed)] + _key_ints(keys)))


def spawn_seed(seed: int, *keys) -> int:
    """Deterministic 32-bit child seed, for RNGs that take plain integers."""
    ss = np.random.SeedSequence([check_seed(seed)] + _key_ints(keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class LabelSpace:
    """Ordered, immutable list of class names; index of a name is its code."""

    names: tuple[str, ...]

    def __init__(self, names):
        names = tuple(names)
        if len(names) < 2:
            raise ValidationError(f"label space needs at least 2 classes, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValidationError(f"class names must be unique: {list(names)}")
        for name in names:
            if not isinstance(name, str) or not name:
                raise ValidationError(f"class names must be non-empty strings, got {name!r}")
        object.__setattr__(self, "names", names)

    @property
    def k(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown class {name!r} (classes: {list(self.names)})") from None

    def name(self, index: int) -> str:
        if not 0 <= index < self.k:
            raise ValidationError(f"class index {index} out of range [0, {self.k})")
        return self.names[index]


def _check_split(split: str, allowed=SPLITS) -> str:
    if split not in allowed:
        raise ValidationError(f"unknown split {split!r} (allowed: {list(allowed)})")
    return split


def validate_row(probs, k: int) -> np.ndarray:
    """Validate one probability row and return it renormalized to sum 1.

    Entries must lie in [0, 1] and the sum must be within ROW_SUM_TOL of 1;
    the small drift allowed by the tolerance is divided back out.
    """
    row = np.asarray(probs, dtype=np.float64)
    if row.shape != (k,):
        raise ValidationError(f"probability row has length {row.size}, expected {k}")
    if not np.all(np.isfinite(row)):
        raise ValidationError("probability row contains non-finite entries")
    if np.any(row < 0.0) or np.any(row > 1.0):
        raise ValidationError(f"probability entries outside [0, 1]: {row.tolist()}")
    total = float(row.sum())
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise ValidationError(f"probability row sums to {total!r}, outside 1 +/- {ROW_SUM_TOL}")
    return row / total


@dataclass(frozen=True)
class ProbabilitySet:
    """Per-example class-probability vectors from one base model.

    Rows are validated and renormalized at construction; instances are
    immutable (treat ``rows``/``split_tags`` as read-only).
    """

    model_name: str
    label_space: LabelSpace
    rows: dict[str, np.ndarray]
    split_tags: dict[str, str]

    def __post_init__(self):
        if not self.model_name:
            raise ValidationError("model_name must be non-empty")
        if set(self.rows) != set(self.split_tags):
            missing = sorted(set(self.rows) ^ set(self.split_tags))[:5]
            raise ValidationError(f"rows and split_tags cover different ids, e.g. {missing}")
        k = self.label_space.k
        clean = {}
        for ex_id, row in self.rows.items():
            try:
                clean[ex_id] = validate_row(row, k)
            except ValidationError as err:
                raise ValidationError(f"example {ex_id!r}: {err}") from None
            _check_split(self.split_tags[ex_id])
        object.__setattr__(self, "rows", clean)

    def ids_for(self, split: str) -> list[str]:
        _check_split(split)
        return sorted(i for i, s in self.split_tags.items() if s == split)

    def matrix(self, ids) -> np.ndarray:
        """Stack rows for the given ids, in the given order."""
        return np.stack([self.rows[i] for i in ids])


@dataclass(frozen=True)
class LabeledDataset:
    """Class indices and split assignment per example id.

    Test-split ids may be unlabeled (prediction-only runs); train and val ids
    must always be labeled.
    """

    label_space: LabelSpace
    labels: dict[str, int]
    splits: dict[str, str]

    def __post_init__(self):
        k = self.label_space.k
        for ex_id, split in self.splits.items():
            _check_split(split)
            if ex_id not in self.labels and split != "test":
                raise ValidationError(f"example {ex_id!r} in split {split!r} is unlabeled")
        for ex_id, label in self.labels.items():
            if ex_id not in self.splits:
                raise ValidationError(f"labeled example {ex_id!r} has no split assignment")
            if not 0 <= label < k:
                raise ValidationError(f"example {ex_id!r}: class index {label} out of range [0, {k})")

    def ids_for(self, split: str) -> list[str]:
        _check_split(split)
        return sorted(i for i, s in self.splits.items() if s == split)

    def has_labels(self, ids) -> bool:
        return all(i in self.labels for i in ids)

    def with_splits(self, overrides: dict[str, str]) -> "LabeledDataset":
        """New dataset with some ids reassigned to other splits."""
        unknown = sorted(set(overrides) - set(self.splits))
        if unknown:
            raise ValidationError(f"cannot reassign unknown ids, e.g. {unknown[:5]}")
        splits = dict(self.splits)
        splits.update(overrides)
        return LabeledDataset(self.label_space, dict(self.labels), splits)


def encode_labels(raw, space: LabelSpace, splits: dict[str, str] | None = None) -> LabeledDataset:
    """Map (example-id, class-name) pairs to a LabeledDataset.

    ``splits`` optionally assigns each id to train/val/test; ids default to
    the train split.
    """
    labels: dict[str, int] = {}
    for ex_id, name in raw:
        if ex_id in labels:
            raise ValidationError(f"duplicate example id {ex_id!r}")
        try:
            labels[ex_id] = space.index(name)
        except ValidationError:
            raise ValidationError(f"example {ex_id!r}: unknown class {name!r}") from None
    if splits is None:
        splits = {ex_id: "train" for ex_id in labels}
    return LabeledDataset(space, labels, dict(splits))


def decode_labels(dataset: LabeledDataset) -> list[tuple[str, str]]:
    """Inverse of encode_labels, sorted by example id."""
    return [(ex_id, dataset.label_space.name(idx)) for ex_id, idx in sorted(dataset.labels.items())]
