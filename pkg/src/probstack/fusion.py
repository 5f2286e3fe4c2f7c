"""Fusion of per-model probability sets into one feature matrix.

Two strategies: concatenation (feature_dim = M * k, column blocks follow an
explicit model order) and elementwise averaging (feature_dim = k, rows stay
on the probability simplex). Both are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ROW_SUM_TOL, ProbabilitySet, ValidationError

STRATEGIES = ("concat", "average")


@dataclass(frozen=True)
class FusedFeatures:
    strategy: str
    model_order: tuple[str, ...]
    feature_dim: int
    rows: dict[str, np.ndarray]

    def ids(self) -> list[str]:
        return sorted(self.rows)

    def matrix(self, ids) -> np.ndarray:
        return np.stack([self.rows[i] for i in ids])


def _check_compatible(sets: list[ProbabilitySet]) -> None:
    if not sets:
        raise ValidationError("need at least one probability set to fuse")
    names = [s.model_name for s in sets]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate model names: {names}")
    first = sets[0]
    for other in sets[1:]:
        if other.label_space != first.label_space:
            raise ValidationError(
                f"label spaces differ: {first.model_name!r} has {list(first.label_space.names)}, "
                f"{other.model_name!r} has {list(other.label_space.names)}"
            )
        if set(other.rows) != set(first.rows):
            only_first = sorted(set(first.rows) - set(other.rows))[:5]
            only_other = sorted(set(other.rows) - set(first.rows))[:5]
            raise ValidationError(
                f"example-id sets differ between {first.model_name!r} and {other.model_name!r}: "
                f"only in first {only_first}, only in second {only_other}"
            )
        mismatched = [i for i in first.split_tags if other.split_tags[i] != first.split_tags[i]]
        if mismatched:
            raise ValidationError(
                f"split tags differ between {first.model_name!r} and {other.model_name!r} "
                f"for ids {sorted(mismatched)[:5]}"
            )


def fuse_concat(sets: list[ProbabilitySet], order: list[str]) -> FusedFeatures:
    """Concatenate each model's probability vector in the given model order."""
    _check_compatible(sets)
    by_name = {s.model_name: s for s in sets}
    if sorted(order) != sorted(by_name):
        raise ValidationError(
            f"order {list(order)} is not a permutation of model names {sorted(by_name)}"
        )
    k = sets[0].label_space.k
    rows = {
        ex_id: np.concatenate([by_name[m].rows[ex_id] for m in order])
        for ex_id in sets[0].rows
    }
    return FusedFeatures("concat", tuple(order), len(order) * k, rows)


def fuse_average(sets: list[ProbabilitySet]) -> FusedFeatures:
    """Elementwise arithmetic mean of the models' probability vectors.

    The mean of simplex points is already on the simplex, so rows are checked
    rather than renormalized.
    """
    _check_compatible(sets)
    k = sets[0].label_space.k
    order = tuple(s.model_name for s in sets)
    rows = {}
    for ex_id in sets[0].rows:
        row = np.mean([s.rows[ex_id] for s in sets], axis=0)
        total = float(row.sum())
        if abs(total - 1.0) > ROW_SUM_TOL or np.any(row < 0.0):
            raise ValidationError(f"averaged row for {ex_id!r} left the simplex (sum {total!r})")
        rows[ex_id] = row
    return FusedFeatures("average", order, k, rows)


def fuse(strategy: str, sets: list[ProbabilitySet], order: list[str]) -> FusedFeatures:
    if strategy == "concat":
        return fuse_concat(sets, order)
    if strategy == "average":
        return fuse_average(sets)
    raise ValidationError(f"unknown fusion strategy {strategy!r} (allowed: {list(STRATEGIES)})")
