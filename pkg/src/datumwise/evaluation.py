"""Metrics, sparsity/accuracy curves, and the interpolation protocol.

Sparsity here is datum-wise: one minus the mean fraction of features a model
consults per test point.  Global linear baselines consult their full support
for every point, so their per-datum usage is the support size.  Methods are
compared at equal sparsity by piecewise-linear interpolation of their curves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .baselines import L1LinearModel, MajorityClassifier
from .errors import DatasetError, DimensionMismatchError, OutOfRangeError
from .feature_mdp import FeatureAcquisitionProblem, RewardParams, classify, dwsc_dims
from .learner import RolloutConfig, train
from .mdp import LinearPolicy
from .text_mdp import Document, Mode, classify_document, f1_reward


@dataclass(frozen=True)
class EvalReport:
    """Accuracy plus feature-usage accounting over one evaluation set.

    ``mean_sparsity`` is kept exactly equal to ``1 - mean_features_used / n``;
    ``features_used_histogram[k]`` counts evaluated points that used exactly
    ``k`` features, and the histogram mass equals the number of points.
    """

    accuracy: float
    mean_features_used: float
    n_features: int
    feature_usage: np.ndarray
    features_used_histogram: np.ndarray
    per_label_f1: np.ndarray | None = None

    @property
    def mean_sparsity(self) -> float:
        return 1.0 - self.mean_features_used / self.n_features

    @property
    def n_evaluated(self) -> int:
        return int(self.features_used_histogram.sum())

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "mean_sparsity": self.mean_sparsity,
            "mean_features_used": self.mean_features_used,
            "n_features": self.n_features,
            "feature_usage": [float(v) for v in self.feature_usage],
            "features_used_histogram": [int(v) for v in self.features_used_histogram],
        }
        if self.per_label_f1 is not None:
            out["per_label_f1"] = [float(v) for v in self.per_label_f1]
        return out


def _report_from_masks(correct: np.ndarray, masks: np.ndarray, n: int) -> EvalReport:
    used = masks.sum(axis=1).astype(np.int64)
    hist = np.bincount(used, minlength=n + 1)
    return EvalReport(
        accuracy=float(np.mean(correct)),
        mean_features_used=float(np.mean(used)),
        n_features=n,
        feature_usage=masks.mean(axis=0),
        features_used_histogram=hist,
    )


def evaluate(model, X: np.ndarray, y: np.ndarray) -> EvalReport:
    """Evaluate a feature-acquiring policy or a global baseline.

    Policies run one greedy episode per row and report that row's mask.
    Global models (L1 logistic, majority) use their fixed support for every
    row.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatchError("X must be (N, n) with one label per row")
    n = X.shape[1]
    if isinstance(model, LinearPolicy):
        n_policy, _, _ = dwsc_dims(model.layout)
        if n_policy != n:
            raise DimensionMismatchError(
                f"policy expects {n_policy} features, data has {n}"
            )
        masks = np.zeros((X.shape[0], n), dtype=bool)
        preds = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            label, mask, _ = classify(model, X[i])
            preds[i] = label
            masks[i] = mask
        return _report_from_masks(preds == y, masks, n)
    if isinstance(model, (L1LinearModel, MajorityClassifier)):
        support = model.support()
        if support.shape[0] != n:
            raise DimensionMismatchError("model support does not match the data")
        preds = model.predict(X)
        masks = np.tile(support, (X.shape[0], 1))
        return _report_from_masks(preds == y, masks, n)
    raise TypeError(f"cannot evaluate model of type {type(model).__name__}")


def predicted_masks(policy: LinearPolicy, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (predicted label, acquired mask) for a feature-acquiring policy."""
    X = np.asarray(X, dtype=np.float64)
    n, _, _ = dwsc_dims(policy.layout)
    preds = np.empty(X.shape[0], dtype=np.int64)
    masks = np.zeros((X.shape[0], n), dtype=bool)
    for i in range(X.shape[0]):
        preds[i], masks[i], _ = classify(policy, X[i])
    return preds, masks


def evaluate_text(
    policy: LinearPolicy, docs: list[Document], labels: np.ndarray, mode: Mode
) -> EvalReport:
    """Evaluate a reading policy; "features used" counts sentences read.

    Accuracy is mean per-document F1 in multi mode and plain accuracy in mono
    mode (where both coincide with the episode reward).  The histogram is
    sized by the longest document.
    """
    labels = np.asarray(labels, dtype=np.int8)
    if labels.ndim != 2 or labels.shape[0] != len(docs):
        raise DimensionMismatchError("labels must be a (num_docs, C) matrix")
    n_cat = labels.shape[1]
    max_len = max(d.num_sentences for d in docs)
    read = np.zeros(len(docs), dtype=np.int64)
    scores = np.zeros(len(docs))
    tp = np.zeros(n_cat)
    fp = np.zeros(n_cat)
    fn = np.zeros(n_cat)
    for i, doc in enumerate(docs):
        y_hat, p, _ = classify_document(policy, doc, mode)
        read[i] = p
        if mode == "mono":
            scores[i] = float(
                y_hat.any() and int(np.argmax(y_hat)) == int(np.argmax(labels[i]))
            )
        else:
            scores[i] = f1_reward(labels[i], y_hat)
        yb = labels[i].astype(bool)
        hb = y_hat.astype(bool)
        tp += (yb & hb).astype(float)
        fp += (~yb & hb).astype(float)
        fn += (yb & ~hb).astype(float)
    denom = 2 * tp + fp + fn
    per_label = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1.0), 0.0)
    hist = np.bincount(read, minlength=max_len + 1)
    usage = np.array([np.mean(read >= k) for k in range(1, max_len + 1)])
    return EvalReport(
        accuracy=float(np.mean(scores)),
        mean_features_used=float(np.mean(read)),
        n_features=max_len,
        feature_usage=usage,
        features_used_histogram=hist,
        per_label_f1=per_label,
    )


@dataclass(frozen=True)
class SparsityAccuracyCurve:
    """Frontier of (cost setting, sparsity, accuracy) triples, sorted by sparsity.

    Points that tie on sparsity keep only the best accuracy; the dropped ones
    are recorded so output files can note them.
    """

    points: tuple[tuple[float, float, float], ...]
    dropped: tuple[tuple[float, float, float], ...] = ()

    @property
    def interpolatable(self) -> bool:
        return len(self.points) >= 2

    @property
    def sparsities(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])


def build_curve(points: list[tuple[float, float, float]]) -> SparsityAccuracyCurve:
    """Sort by sparsity and collapse duplicate-sparsity points to the frontier."""
    if not points:
        raise DatasetError("a curve needs at least one point")
    for _, sparsity, _ in points:
        if not 0.0 <= sparsity <= 1.0:
            raise ValueError(f"sparsity {sparsity} outside [0, 1]")
    best: dict[float, tuple[float, float, float]] = {}
    dropped = []
    for pt in points:
        key = pt[1]
        if key not in best or pt[2] > best[key][2]:
            if key in best:
                dropped.append(best[key])
            best[key] = pt
        else:
            dropped.append(pt)
    ordered = tuple(sorted(best.values(), key=lambda p: p[1]))
    return SparsityAccuracyCurve(points=ordered, dropped=tuple(dropped))


def accuracy_at_sparsity(curve: SparsityAccuracyCurve, target_sparsity: float) -> float:
    """Piecewise-linear interpolation of accuracy at a sparsity level.

    Exact knots return their recorded accuracy; targets outside the curve's
    sparsity range are refused rather than extrapolated.
    """
    if not curve.interpolatable:
        raise DatasetError("curve has fewer than 2 points; cannot interpolate")
    xs = curve.sparsities
    ys = curve.accuracies
    if target_sparsity < xs[0] or target_sparsity > xs[-1]:
        raise OutOfRangeError(
            f"target sparsity {target_sparsity} outside curve range "
            f"[{xs[0]}, {xs[-1]}]"
        )
    return float(np.interp(target_sparsity, xs, ys))


def derived_seed(master: int, index: int) -> int:
    """Stable per-cell seed for sweeps: independent of grid order elsewhere."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0] >> 1)


def sweep_lambda(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_test: np.ndarray,
    y_test: np.ndarray,
    lambda_grid: list[float],
    config: RolloutConfig,
    constrained: bool = False,
    n_classes: int | None = None,
) -> tuple[SparsityAccuracyCurve, dict[float, EvalReport]]:
    """Train one policy per cost value and assemble the sparsity/accuracy curve."""
    if not lambda_grid:
        raise ValueError("lambda grid must be non-empty")
    if any(v < 0 for v in lambda_grid):
        raise ValueError("lambda values must be non-negative")
    reports: dict[float, EvalReport] = {}
    points = []
    for i, lam in enumerate(lambda_grid):
        problem = FeatureAcquisitionProblem(
            X_train,
            y_train,
            params=RewardParams(feature_cost=lam),
            n_classes=n_classes,
            constrained=constrained,
        )
        cell_config = replace(config, seed=derived_seed(config.seed, i))
        policy, _ = train(problem, cell_config)
        report = evaluate(policy, X_test, y_test)
        reports[lam] = report
        points.append((lam, report.mean_sparsity, report.accuracy))
    return build_curve(points), reports
