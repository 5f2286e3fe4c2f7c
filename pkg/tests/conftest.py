from __future__ import annotations

import numpy as np
import pytest


def gaussian_blobs(rng, k, n_per_class, d=4, spread=1.0, sep=3.0):
    """Well-separated class clusters for quick train-accuracy checks."""
    X, y = [], []
    for c in range(k):
        center = np.zeros(d)
        center[c % d] = sep * (1 + c // d)
        X.append(center + spread * rng.standard_normal((n_per_class, d)))
        y.append(np.full(n_per_class, c, dtype=np.int64))
    X = np.vstack(X)
    y = np.concatenate(y)
    order = rng.permutation(len(y))
    return X[order], y[order]


def noisy_labels(rng, k, n, d=4, shift=1.0):
    """Overlapping clusters: learnable but far from separable."""
    y = rng.integers(0, k, size=n)
    while np.unique(y).size < k:
        y = rng.integers(0, k, size=n)
    X = rng.standard_normal((n, d))
    for c in range(k):
        X[y == c, c % d] += shift
    return X, y.astype(np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
