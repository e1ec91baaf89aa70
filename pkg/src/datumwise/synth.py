"""Synthetic dataset whose class signal lives in two disjoint subspaces.

Feature 2 flags the subspace.  In subspace A (flag 0) the class is encoded
exactly in feature 0; in subspace B (flag 1) it is encoded with inverted
polarity in feature 3.  Each subspace's "foreign" signal feature (feature 3
in A, feature 0 in B) is a class-independent distractor taking the value 0.5
most of the time but hitting both endpoints {0, 1} on a fixed schedule.
Features 1, 4, 5 are uniform noise.

An adaptive reader classifies every point with two features: the flag, then
that subspace's designated feature.  No global linear rule on any subset of
three or fewer features can separate the classes: matching subspace B forces
a strongly negative weight on feature 3, which the endpoint values of
feature 3 inside subspace A then contradict (and symmetrically for feature
0).  The endpoint support is what blocks threading a hyperplane between the
subspaces; keeping most distractor mass at the midpoint keeps the two
subspaces' value structure from interfering during policy fitting.
"""

from __future__ import annotations

import numpy as np

from .data import TabularDataset

N_FEATURES = 6
SIGNAL_FEATURE_A = 0
SIGNAL_FEATURE_B = 3
SUBSPACE_FLAG = 2
NOISE_FEATURES = (1, 4, 5)

# endpoints first so even small (subspace, class) groups cover both; the
# remaining mass sits at the midpoint to keep the subspaces' value structure
# from interfering during policy fitting
_DISTRACTOR_CYCLE = (0.0, 1.0) + (0.5,) * 98


def two_subspace_dataset(
    n_rows: int = 400, seed: int = 0
) -> tuple[TabularDataset, np.ndarray]:
    """Generate the dataset; returns (dataset, subspace-B membership flags)."""
    rng = np.random.default_rng(seed)
    in_b = rng.random(n_rows) < 0.5
    y = (rng.random(n_rows) < 0.5).astype(np.int64)
    X = np.zeros((n_rows, N_FEATURES))
    X[:, list(NOISE_FEATURES)] = rng.uniform(0.0, 1.0, size=(n_rows, len(NOISE_FEATURES)))
    X[:, SUBSPACE_FLAG] = in_b.astype(np.float64)
    a = ~in_b
    X[a, SIGNAL_FEATURE_A] = y[a]
    X[in_b, SIGNAL_FEATURE_B] = 1.0 - y[in_b]
    for subspace_rows, distractor in ((a, SIGNAL_FEATURE_B), (in_b, SIGNAL_FEATURE_A)):
        for cls in (0, 1):
            rows = np.flatnonzero(subspace_rows & (y == cls))
            for k, r in enumerate(rows):
                X[r, distractor] = _DISTRACTOR_CYCLE[k % len(_DISTRACTOR_CYCLE)]
    dataset = TabularDataset(X=X, y=y, n_classes=2, label_names=("0", "1"))
    return dataset, in_b


def subspace_threshold_accuracy(
    dataset: TabularDataset, in_b: np.ndarray
) -> tuple[float, float]:
    """Accuracy of each subspace's single-feature threshold rule.

    Both must be 1.0 by construction: feature 0 separates subspace A at 0.5,
    feature 3 separates subspace B at 0.5 with inverted sign.
    """
    a = ~in_b
    acc_a = float(
        np.mean((dataset.X[a, SIGNAL_FEATURE_A] > 0.5).astype(int) == dataset.y[a])
    )
    acc_b = float(
        np.mean((dataset.X[in_b, SIGNAL_FEATURE_B] < 0.5).astype(int) == dataset.y[in_b])
    )
    return acc_a, acc_b
