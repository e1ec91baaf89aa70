import numpy as np
import pytest

from datumwise.data import normalize_features, split
from datumwise.synth import two_subspace_dataset


@pytest.fixture(scope="session")
def subspace_data():
    """The synthetic two-subspace benchmark: normalized train/test halves."""
    dataset, in_b = two_subspace_dataset(400, seed=7)
    train_ds, test_ds = split(dataset, 0.5, seed=1)
    train_norm, scaler = normalize_features(train_ds)
    return {
        "dataset": dataset,
        "in_b": in_b,
        "train": train_norm,
        "test": scaler.apply(test_ds),
        "scaler": scaler,
    }


def dot_oracle(a, b):
    """Independent inner product: plain left-to-right summation."""
    total = 0.0
    for x, y in zip(a, b):
        total += float(x) * float(y)
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
