"""Feature-acquiring sparse classification as a deterministic MDP.

A state pairs an input vector ``x`` with a boolean mask of the features
acquired so far.  At each step the agent either pays a fixed cost to reveal
one more feature or assigns a label, which ends the episode (reward 0 when
correct, -1 otherwise).  Greedy inference under a linear Q-function therefore
classifies each datum with its own feature subset, and maximizing episode
reward is the same as minimizing 0/1 loss plus ``feature_cost`` times the
number of features used.

Featurization.  The intermediate representation of a state is
``phi = (z, x*z, 1)`` where ``z`` is the mask as 0/1 reals: the mask bits let
a linear model tell "feature j is unknown" from "feature j equals 0", and the
trailing constant gives every action a learnable intercept (without it, all
actions score identically at the empty mask and the first step of every
episode would be fixed by tie-breaking instead of learned).  Two layouts are
supported:

* unconstrained - every action's block holds ``phi``; feature-selection
  scores may depend on the acquired values of ``x``.
* constrained - feature-selection blocks hold only ``(z, 1)``, so those
  scores cannot depend on ``x`` and every input is offered features in one
  global learned order; classification blocks hold ``(z, z, x*z, 1)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from .errors import (
    CacheInvalidError,
    DimensionMismatchError,
    InvalidActionError,
    TerminalStateError,
)
from .mdp import ActionId, BlockLayout, EpisodeTrace, LinearPolicy, run_episode


@dataclass(frozen=True)
class SelectFeature:
    """Acquire feature ``feature``; available only while the bit is unset."""

    feature: int


@dataclass(frozen=True)
class ClassifyAs:
    """Assign label ``label`` and end the episode."""

    label: int


DwscAction = Union[SelectFeature, ClassifyAs]


def action_id(action: DwscAction, n_features: int) -> ActionId:
    """Global id: feature actions come first in feature order, then labels."""
    if isinstance(action, SelectFeature):
        return action.feature
    return n_features + action.label


def action_from_id(aid: ActionId, n_features: int, n_classes: int) -> DwscAction:
    if not 0 <= aid < n_features + n_classes:
        raise InvalidActionError(f"action id {aid} out of range")
    if aid < n_features:
        return SelectFeature(aid)
    return ClassifyAs(aid - n_features)


@dataclass(frozen=True)
class RewardParams:
    """Per-step acquisition cost.

    ``feature_cost`` must stay well below 1 (the misclassification penalty),
    otherwise guessing a label beats acquiring a handful of features.
    """

    feature_cost: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.feature_cost < 1.0:
            raise ValueError("feature_cost must lie in [0, 1)")
        if self.feature_cost > 0.5:
            warnings.warn(
                "feature_cost above 0.5 makes misclassifying cheaper than "
                "acquiring two features; expect trivial policies",
                stacklevel=2,
            )


@dataclass(frozen=True, eq=False)
class DatumState:
    """One datum mid-episode: its values, the acquired-feature mask, the verdict.

    The state is terminal exactly when ``predicted_label`` is set.  Transitions
    copy the mask, so states can be shared freely.
    """

    x: np.ndarray
    mask: np.ndarray
    n_classes: int
    predicted_label: int | None = None
    index: int = -1

    @property
    def terminal(self) -> bool:
        return self.predicted_label is not None

    @property
    def n_features(self) -> int:
        return self.x.shape[0]

    @property
    def features_used(self) -> int:
        return int(np.count_nonzero(self.mask))


def initial_state(x: np.ndarray, n_classes: int, index: int = -1) -> DatumState:
    x = np.asarray(x, dtype=np.float64)
    return DatumState(
        x=x, mask=np.zeros(x.shape[0], dtype=bool), n_classes=n_classes, index=index
    )


def available_actions(state: DatumState) -> list[DwscAction]:
    """Unselected features (ascending), then all labels (ascending)."""
    if state.terminal:
        raise TerminalStateError("terminal state has no available actions")
    acts: list[DwscAction] = [SelectFeature(int(j)) for j in np.flatnonzero(~state.mask)]
    acts.extend(ClassifyAs(y) for y in range(state.n_classes))
    return acts


def transition(state: DatumState, action: DwscAction) -> DatumState:
    if state.terminal:
        raise TerminalStateError("cannot transition from a terminal state")
    if isinstance(action, SelectFeature):
        j = action.feature
        if not 0 <= j < state.n_features:
            raise InvalidActionError(f"feature {j} out of range")
        if state.mask[j]:
            raise InvalidActionError(f"feature {j} is already selected")
        mask = state.mask.copy()
        mask[j] = True
        return DatumState(
            x=state.x, mask=mask, n_classes=state.n_classes, index=state.index
        )
    if not 0 <= action.label < state.n_classes:
        raise InvalidActionError(f"label {action.label} out of range")
    return DatumState(
        x=state.x,
        mask=state.mask,
        n_classes=state.n_classes,
        predicted_label=action.label,
        index=state.index,
    )


def reward(
    state: DatumState, action: DwscAction, true_label: int, params: RewardParams
) -> float:
    """-feature_cost per acquisition; 0 / -1 for a correct / wrong label."""
    if state.terminal:
        raise TerminalStateError("no rewards from a terminal state")
    if isinstance(action, SelectFeature):
        if state.mask[action.feature]:
            raise InvalidActionError(f"feature {action.feature} is already selected")
        return -params.feature_cost
    return 0.0 if action.label == true_label else -1.0


def masked_restrict(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Copy of ``x`` with unacquired positions zeroed."""
    x = np.asarray(x, dtype=np.float64)
    mask = np.asarray(mask)
    if x.shape != mask.shape:
        raise DimensionMismatchError(
            f"x has shape {x.shape}, mask has shape {mask.shape}"
        )
    return np.where(mask.astype(bool), x, 0.0)


def phi_state(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Intermediate representation ``(z, x*z, 1)`` of length 2n + 1."""
    z = np.asarray(mask, dtype=np.float64)
    return np.concatenate([z, masked_restrict(x, mask), [1.0]])


def unconstrained_layout(n_features: int, n_classes: int) -> BlockLayout:
    return BlockLayout.uniform(2 * n_features + 1, n_features + n_classes)


def constrained_layout(n_features: int, n_classes: int) -> BlockLayout:
    feature_w = (n_features + 1,) * n_features
    classify_w = (3 * n_features + 1,) * n_classes
    return BlockLayout(widths=feature_w + classify_w)


def featurize_unconstrained(
    x: np.ndarray, mask: np.ndarray, action: DwscAction, n_classes: int
) -> np.ndarray:
    """Full state-action vector: ``phi`` placed in the action's block."""
    x = np.asarray(x, dtype=np.float64)
    layout = unconstrained_layout(x.shape[0], n_classes)
    return layout.embed(phi_state(x, mask), action_id(action, x.shape[0]))


def featurize_constrained(
    x: np.ndarray, mask: np.ndarray, action: DwscAction, n_classes: int
) -> np.ndarray:
    """Constrained variant: feature blocks see only the mask, never ``x``."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    layout = constrained_layout(n, n_classes)
    z = np.asarray(mask, dtype=np.float64)
    if isinstance(action, SelectFeature):
        block = np.concatenate([z, [1.0]])
    else:
        block = np.concatenate([z, phi_state(x, mask)])
    return layout.embed(block, action_id(action, n))


def dwsc_dims(layout: BlockLayout) -> tuple[int, int, bool]:
    """Recover (n_features, n_classes, constrained) from a layout.

    Uniform layouts of odd block width 2n+1 are read as unconstrained; the
    constrained two-width pattern is recognized structurally.
    """
    m = layout.block_dim
    if m is not None:
        if m < 3 or m % 2 == 0:
            raise DimensionMismatchError("layout is not a feature-acquisition layout")
        n = (m - 1) // 2
        c = layout.num_actions - n
        if c < 1:
            raise DimensionMismatchError("layout is not a feature-acquisition layout")
        return n, c, False
    widths = layout.widths
    n = widths[0] - 1
    c = layout.num_actions - n
    expected = constrained_layout(n, c).widths if n >= 1 and c >= 1 else None
    if expected != widths:
        raise DimensionMismatchError("layout is not a feature-acquisition layout")
    return n, c, True


def _score_views(policy: LinearPolicy, n: int, c: int, constrained: bool):
    """Per-action weight matrices used by the vectorized scoring paths."""
    if not constrained:
        return (policy.block_matrix(),)
    split = n * (n + 1)
    feat = policy.theta[:split].reshape(n, n + 1)
    cls = policy.theta[split:].reshape(c, 3 * n + 1)
    return feat, cls


def _direct_scores(
    x: np.ndarray, mask: np.ndarray, policy: LinearPolicy, n: int, c: int, constrained: bool
) -> np.ndarray:
    """Score every action from scratch (one or two small mat-vec products)."""
    if not constrained:
        (blocks,) = _score_views(policy, n, c, constrained)
        return blocks @ phi_state(x, mask)
    feat, cls = _score_views(policy, n, c, constrained)
    z = np.asarray(mask, dtype=np.float64)
    feat_scores = feat @ np.concatenate([z, [1.0]])
    cls_scores = cls @ np.concatenate([z, phi_state(x, mask)])
    return np.concatenate([feat_scores, cls_scores])


def incremental_action_scores(
    x: np.ndarray,
    mask: np.ndarray,
    policy: LinearPolicy,
    prev_scores: np.ndarray | None = None,
    new_feature: int | None = None,
) -> np.ndarray:
    """Score table over all n + c actions at state ``(x, mask)``.

    With no cache the table is computed from scratch.  Given the previous
    table and the index of the feature just acquired (``mask`` already has the
    bit set), the update adds only that feature's contribution to each
    action's score, costing O(n + c) instead of O(n * (n + c)).
    """
    x = np.asarray(x, dtype=np.float64)
    n, c, constrained = dwsc_dims(policy.layout)
    if x.shape[0] != n or np.asarray(mask).shape[0] != n:
        raise DimensionMismatchError("x/mask length does not match the policy layout")

    if (prev_scores is None) != (new_feature is None):
        raise CacheInvalidError(
            "prev_scores and new_feature must be supplied together"
        )
    if prev_scores is None:
        return _direct_scores(x, mask, policy, n, c, constrained)

    prev_scores = np.asarray(prev_scores, dtype=np.float64)
    if prev_scores.shape != (n + c,):
        raise CacheInvalidError(
            f"cached score table has shape {prev_scores.shape}, expected ({n + c},)"
        )
    if not 0 <= new_feature < n or not mask[new_feature]:
        raise CacheInvalidError(
            "mask does not reflect the newly added feature; cache is stale"
        )
    j = new_feature
    if not constrained:
        (blocks,) = _score_views(policy, n, c, constrained)
        return prev_scores + blocks[:, j] + blocks[:, n + j] * x[j]
    feat, cls = _score_views(policy, n, c, constrained)
    delta = np.concatenate(
        [feat[:, j], cls[:, j] + cls[:, n + j] + cls[:, 2 * n + j] * x[j]]
    )
    return prev_scores + delta


def classify_trace(
    policy: LinearPolicy, x: np.ndarray
) -> tuple[int, np.ndarray, list[ActionId]]:
    """Greedy episode from the empty mask, keeping the action order.

    Scores are maintained incrementally, so a full classification costs
    O(steps * (n + c)) regardless of how the blocks are laid out.
    """
    x = np.asarray(x, dtype=np.float64)
    n, c, _ = dwsc_dims(policy.layout)
    if x.shape[0] != n:
        raise DimensionMismatchError(f"x has length {x.shape[0]}, policy expects {n}")
    mask = np.zeros(n, dtype=bool)
    scores = incremental_action_scores(x, mask, policy)
    available = np.ones(n + c, dtype=bool)
    actions: list[ActionId] = []
    while True:
        masked = np.where(available, scores, -np.inf)
        chosen = int(np.argmax(masked))
        actions.append(chosen)
        if chosen >= n:
            return chosen - n, mask, actions
        mask[chosen] = True
        available[chosen] = False
        scores = incremental_action_scores(
            x, mask, policy, prev_scores=scores, new_feature=chosen
        )


def classify(policy: LinearPolicy, x: np.ndarray) -> tuple[int, np.ndarray, int]:
    """Greedy episode from the empty mask; returns (label, mask, steps).

    The step count equals the number of acquired features plus one.
    """
    label, mask, actions = classify_trace(policy, x)
    return label, mask, len(actions)


class FeatureAcquisitionProblem:
    """Engine adapter binding a labeled dataset to the feature-acquisition MDP."""

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        params: RewardParams = RewardParams(),
        n_classes: int | None = None,
        constrained: bool = False,
    ):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatchError("X must be (N, n) with one label per row")
        self.params = params
        self.n_features = self.X.shape[1]
        self.n_classes = int(n_classes if n_classes is not None else self.y.max() + 1)
        if self.n_classes < 1 or (self.y.size and self.y.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")
        self.constrained = constrained
        self._layout = (
            constrained_layout(self.n_features, self.n_classes)
            if constrained
            else unconstrained_layout(self.n_features, self.n_classes)
        )

    @property
    def layout(self) -> BlockLayout:
        return self._layout

    def num_start_states(self) -> int:
        return self.X.shape[0]

    def start_state(self, i: int) -> DatumState:
        return initial_state(self.X[i], self.n_classes, index=i)

    def sample_state(
        self, rng: np.random.Generator, force_empty: bool = False
    ) -> DatumState:
        """Uniform datum; mask bits i.i.d. fair coins unless forced empty."""
        i = int(rng.integers(self.X.shape[0]))
        if force_empty:
            mask = np.zeros(self.n_features, dtype=bool)
        else:
            mask = rng.random(self.n_features) < 0.5
        return DatumState(
            x=self.X[i], mask=mask, n_classes=self.n_classes, index=i
        )

    def is_terminal(self, state: DatumState) -> bool:
        return state.terminal

    def available_ids(self, state: DatumState) -> np.ndarray:
        if state.terminal:
            return np.empty(0, dtype=np.int64)
        unselected = np.flatnonzero(~state.mask)
        labels = np.arange(self.n_features, self.n_features + self.n_classes)
        return np.concatenate([unselected, labels])

    def action_scores(
        self, state: DatumState, ids: np.ndarray, policy: LinearPolicy
    ) -> np.ndarray:
        table = _direct_scores(
            state.x, state.mask, policy, self.n_features, self.n_classes, self.constrained
        )
        return table[ids]

    def step(self, state: DatumState, action: ActionId) -> tuple[DatumState, float]:
        if state.index < 0:
            raise ValueError("state is not bound to a labeled datum")
        act = action_from_id(action, self.n_features, self.n_classes)
        r = reward(state, act, int(self.y[state.index]), self.params)
        return transition(state, act), r

    def featurize_block(self, state: DatumState, action: ActionId) -> np.ndarray:
        if not self.constrained:
            return phi_state(state.x, state.mask)
        z = state.mask.astype(np.float64)
        if action < self.n_features:
            return np.concatenate([z, [1.0]])
        return np.concatenate([z, phi_state(state.x, state.mask)])

    def featurize(self, state: DatumState, action: ActionId) -> np.ndarray:
        return self._layout.embed(self.featurize_block(state, action), action)

    def summarize(self, state: DatumState) -> dict[str, Any]:
        return {
            "predicted_label": state.predicted_label,
            "mask": state.mask.copy(),
            "acquired": state.features_used,
        }

    def state_tag(self, state: DatumState) -> tuple:
        return (state.index, tuple(int(j) for j in np.flatnonzero(state.mask)))

    def default_horizon(self, state: DatumState) -> int:
        return self.n_features + 1


def run_labeled_episode(
    problem: FeatureAcquisitionProblem, policy: LinearPolicy, index: int
) -> EpisodeTrace:
    """Greedy episode on training datum ``index``; guaranteed to terminate."""
    trace = run_episode(problem, policy, problem.start_state(index))
    if trace.truncated:  # structurally impossible: n selections exhaust A_f
        raise InvalidActionError("feature-acquisition episode exceeded its horizon")
    return trace
