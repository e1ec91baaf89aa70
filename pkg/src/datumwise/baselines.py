"""Reference models for the sparsity/accuracy comparison.

The main baseline is a one-vs-all logistic regression with an L1 penalty on
the weights (bias unpenalized), fit by proximal gradient descent with
backtracking line search.  Its sparsity is global: a feature is "unused" only
when its column is zero in every class's weight row.  A majority-class
constant model provides the sanity floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DatasetError, NumericalError


def soft_threshold(w: np.ndarray, threshold: float) -> np.ndarray:
    """Shrink toward zero: sign(w) * max(|w| - threshold, 0)."""
    return np.sign(w) * np.maximum(np.abs(w) - threshold, 0.0)


@dataclass(frozen=True)
class L1LinearModel:
    """One-vs-all linear scores: ``X @ weights.T + bias``; predict by argmax."""

    weights: np.ndarray
    bias: np.ndarray
    l1_strength: float

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights.T + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_scores(X), axis=1)

    def support(self) -> np.ndarray:
        """Boolean vector: feature used by at least one class row."""
        return np.any(self.weights != 0.0, axis=0)


def model_sparsity(model: L1LinearModel) -> float:
    """Fraction of features unused by every class row."""
    return float(np.count_nonzero(~model.support()) / model.n_features)


def _logistic_loss_grad(w, b, X, t):
    """Mean logistic loss of one binary one-vs-all problem and its gradient.

    ``t`` holds +/-1 targets.  Uses logaddexp for stability.
    """
    margins = t * (X @ w + b)
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    # d/dm log(1+e^-m) = -sigmoid(-m)
    coef = -t * _sigmoid(-margins) / X.shape[0]
    return loss, X.T @ coef, float(np.sum(coef))


def _sigmoid(v):
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def _fit_one_vs_rest(X, t, l1_strength, max_iters, tol, history=None):
    """ISTA with backtracking; monotone in the penalized objective.

    ``history``, when given, collects the penalized objective after every
    accepted step.
    """
    n = X.shape[1]
    w = np.zeros(n)
    b = 0.0
    step = 1.0
    loss, gw, gb = _logistic_loss_grad(w, b, X, t)
    if history is not None:
        history.append(loss + l1_strength * float(np.abs(w).sum()))
    for _ in range(max_iters):
        if not np.isfinite(loss):
            raise NumericalError("logistic loss became non-finite")
        while True:
            w_next = soft_threshold(w - step * gw, step * l1_strength)
            b_next = b - step * gb
            dw = w_next - w
            db = b_next - b
            loss_next, gw_next, gb_next = _logistic_loss_grad(w_next, b_next, X, t)
            quad = (
                loss
                + float(gw @ dw)
                + gb * db
                + (float(dw @ dw) + db * db) / (2.0 * step)
            )
            if loss_next <= quad + 1e-12:
                break
            step *= 0.5
            if step < 1e-16:
                raise NumericalError("line search failed to find a usable step")
        # gradient map measures distance to a fixed point of the prox step
        gap = np.sqrt(float(dw @ dw) + db * db) / step
        w, b, loss, gw, gb = w_next, b_next, loss_next, gw_next, gb_next
        if history is not None:
            history.append(loss + l1_strength * float(np.abs(w).sum()))
        if gap <= tol:
            break
        step *= 2.0  # allow the step to grow back after conservative phases
    return w, b


def train_l1(
    X: np.ndarray,
    y: np.ndarray,
    l1_strength: float,
    max_iters: int = 500,
    tol: float = 1e-6,
    n_classes: int | None = None,
    objective_history: list | None = None,
) -> L1LinearModel:
    """Fit the one-vs-all L1 logistic baseline.

    ``objective_history``, when given, receives one list per class holding
    the penalized objective after each accepted proximal step.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DatasetError("training set must be a non-empty (N, n) matrix")
    if l1_strength < 0:
        raise ValueError("l1_strength must be non-negative")
    c = int(n_classes if n_classes is not None else y.max() + 1)
    weights = np.zeros((c, X.shape[1]))
    bias = np.zeros(c)
    for k in range(c):
        t = np.where(y == k, 1.0, -1.0)
        history: list[float] | None = None
        if objective_history is not None:
            history = []
            objective_history.append(history)
        weights[k], bias[k] = _fit_one_vs_rest(
            X, t, l1_strength, max_iters, tol, history=history
        )
    return L1LinearModel(weights=weights, bias=bias, l1_strength=l1_strength)


def penalized_objective(model: L1LinearModel, X: np.ndarray, y: np.ndarray) -> float:
    """Sum over classes of mean logistic loss plus the L1 penalty."""
    X = np.asarray(X, dtype=np.float64)
    total = 0.0
    for k in range(model.weights.shape[0]):
        t = np.where(np.asarray(y) == k, 1.0, -1.0)
        loss, _, _ = _logistic_loss_grad(model.weights[k], model.bias[k], X, t)
        total += loss + model.l1_strength * float(np.sum(np.abs(model.weights[k])))
    return total


@dataclass(frozen=True)
class MajorityClassifier:
    """Constant prediction of the most frequent training label."""

    label: int
    n_features: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(X).shape[0], self.label, dtype=np.int64)

    def support(self) -> np.ndarray:
        return np.zeros(self.n_features, dtype=bool)


def majority_baseline(y: np.ndarray, n_features: int) -> MajorityClassifier:
    """Most frequent label; ties go to the smallest label index."""
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise DatasetError("training set is empty")
    counts = np.bincount(y)
    return MajorityClassifier(label=int(np.argmax(counts)), n_features=n_features)
