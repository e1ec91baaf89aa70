"""Scikit-learn style estimators wrapping the sequential classifiers.

These follow the usual conventions (constructor stores hyperparameters
verbatim, ``fit`` returns self, fitted state lives in trailing-underscore
attributes), so the models drop into pipelines, grid search, and
``clone`` without adapters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .baselines import model_sparsity, train_l1
from .evaluation import evaluate, evaluate_text, predicted_masks
from .feature_mdp import FeatureAcquisitionProblem, RewardParams, classify
from .learner import RolloutConfig, train
from .text_mdp import TextReadingProblem, classify_document


def _rollout_config(est, random_state: int) -> RolloutConfig:
    return RolloutConfig(
        num_states=est.rollout_states,
        iterations=est.iterations,
        alpha=est.alpha,
        rollouts_per_action=est.rollouts_per_action,
        ridge=est.ridge,
        zero_mask_fraction=est.zero_mask_fraction,
        seed=random_state,
    )


class DatumWiseClassifier(ClassifierMixin, BaseEstimator):
    """Classifier that buys features one at a time before deciding.

    Each prediction runs a greedy episode: pay ``feature_cost`` per acquired
    feature, then assign a label.  Different rows may end up using different
    feature subsets; ``predict_with_mask`` exposes which.  Features should be
    scaled to a bounded range (e.g. MinMaxScaler) before fitting.

    Parameters
    ----------
    feature_cost : float
        Penalty per acquired feature, well below the misclassification
        penalty of 1.
    constrained : bool
        Restrict feature-selection scores to the acquisition mask, forcing
        one global acquisition order (helps when features outnumber rows).
    rollout_states, iterations, alpha, rollouts_per_action, ridge,
    zero_mask_fraction : training-loop knobs, see RolloutConfig.
    random_state : int
        Seed for every random draw of training.
    """

    def __init__(
        self,
        feature_cost: float = 0.01,
        constrained: bool = False,
        rollout_states: int = 2000,
        iterations: int = 10,
        alpha: float = 0.9,
        rollouts_per_action: int = 1,
        ridge: float = 1e-6,
        zero_mask_fraction: float = 0.25,
        random_state: int = 0,
    ):
        self.feature_cost = feature_cost
        self.constrained = constrained
        self.rollout_states = rollout_states
        self.iterations = iterations
        self.alpha = alpha
        self.rollouts_per_action = rollouts_per_action
        self.ridge = ridge
        self.zero_mask_fraction = zero_mask_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        problem = FeatureAcquisitionProblem(
            X,
            y_enc,
            params=RewardParams(feature_cost=self.feature_cost),
            n_classes=len(self.classes_),
            constrained=self.constrained,
        )
        self.policy_, self.diagnostics_ = train(
            problem, _rollout_config(self, self.random_state)
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "policy_")
        X = check_array(X, dtype=np.float64)
        preds, _ = predicted_masks(self.policy_, X)
        return self.classes_[preds]

    def predict_with_mask(self, X):
        """Predictions plus the boolean feature mask each row consulted."""
        check_is_fitted(self, "policy_")
        X = check_array(X, dtype=np.float64)
        preds, masks = predicted_masks(self.policy_, X)
        return self.classes_[preds], masks

    def decision_steps(self, X):
        """Episode length per row: features acquired plus the final decision."""
        check_is_fitted(self, "policy_")
        X = check_array(X, dtype=np.float64)
        return np.array([classify(self.policy_, row)[2] for row in X])

    def evaluation_report(self, X, y):
        check_is_fitted(self, "policy_")
        X, y = check_X_y(X, y, dtype=np.float64)
        y_enc = np.searchsorted(self.classes_, y)
        return evaluate(self.policy_, X, y_enc)


class SequentialTextClassifier(BaseEstimator):
    """Reads documents sentence-by-sentence and assigns categories on the way.

    ``fit`` takes a list of ``Document`` and a (num_docs, C) 0/1 label
    matrix.  ``predict`` returns the assigned label matrix; ``read_lengths``
    reports how many sentences each prediction consumed.
    """

    def __init__(
        self,
        mode: str = "mono",
        rollout_states: int = 2000,
        iterations: int = 10,
        alpha: float = 0.9,
        rollouts_per_action: int = 1,
        ridge: float = 1e-6,
        zero_mask_fraction: float = 0.25,
        random_state: int = 0,
    ):
        self.mode = mode
        self.rollout_states = rollout_states
        self.iterations = iterations
        self.alpha = alpha
        self.rollouts_per_action = rollouts_per_action
        self.ridge = ridge
        self.zero_mask_fraction = zero_mask_fraction
        self.random_state = random_state

    def fit(self, docs, y):
        y = np.asarray(y, dtype=np.int8)
        problem = TextReadingProblem(list(docs), y, mode=self.mode)
        self.n_categories_ = problem.n_categories
        self.vocab_size_ = problem.vocab_size
        self.policy_, self.diagnostics_ = train(
            problem, _rollout_config(self, self.random_state)
        )
        return self

    def predict(self, docs):
        check_is_fitted(self, "policy_")
        return np.stack(
            [classify_document(self.policy_, d, self.mode)[0] for d in docs]
        )

    def read_lengths(self, docs):
        check_is_fitted(self, "policy_")
        return np.array(
            [classify_document(self.policy_, d, self.mode)[1] for d in docs]
        )

    def evaluation_report(self, docs, y):
        check_is_fitted(self, "policy_")
        return evaluate_text(self.policy_, list(docs), np.asarray(y), self.mode)


class L1SparseLogistic(ClassifierMixin, BaseEstimator):
    """One-vs-all L1 logistic baseline with its global-support sparsity."""

    def __init__(self, l1_strength: float = 0.01, max_iters: int = 500, tol: float = 1e-6):
        self.l1_strength = l1_strength
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        self.model_ = train_l1(
            X,
            y_enc,
            l1_strength=self.l1_strength,
            max_iters=self.max_iters,
            tol=self.tol,
            n_classes=len(self.classes_),
        )
        self.sparsity_ = model_sparsity(self.model_)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self.classes_[self.model_.predict(X)]
