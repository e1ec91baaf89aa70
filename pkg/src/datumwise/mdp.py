"""Deterministic finite-horizon MDP engine with linear action scoring.

State-action pairs are scored as the dot product of a weight vector ``theta``
with a block-structured feature vector: each action owns one contiguous block
of the global vector, and featurizing a pair writes the state's intermediate
representation into the chosen action's block, leaving every other block zero.
A single linear model therefore carries one independent scoring function per
action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidActionError,
    TerminalStateError,
)

ActionId = int


@dataclass(frozen=True)
class BlockLayout:
    """Geometry of the global feature vector: one block per action.

    ``widths[a]`` is the length of action ``a``'s block; blocks are laid out
    contiguously in action order.  Uniform layouts (all widths equal) are the
    common case; the constrained feature-acquisition variant uses two widths.
    """

    widths: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not self.widths or any(w <= 0 for w in self.widths):
            raise ValueError("block widths must be positive")
        offs = []
        pos = 0
        for w in self.widths:
            offs.append(pos)
            pos += w
        object.__setattr__(self, "offsets", tuple(offs))

    @classmethod
    def uniform(cls, block_dim: int, num_actions: int) -> "BlockLayout":
        return cls(widths=(block_dim,) * num_actions)

    @property
    def num_actions(self) -> int:
        return len(self.widths)

    @property
    def dim(self) -> int:
        return self.offsets[-1] + self.widths[-1]

    @property
    def block_dim(self) -> int | None:
        """Common block width, or None when blocks differ in size."""
        first = self.widths[0]
        return first if all(w == first for w in self.widths) else None

    def embed(self, phi: np.ndarray, action: ActionId) -> np.ndarray:
        """Place ``phi`` in action's block of an otherwise-zero global vector."""
        if not 0 <= action < self.num_actions:
            raise InvalidActionError(
                f"action {action} out of range [0, {self.num_actions})"
            )
        phi = np.asarray(phi, dtype=np.float64)
        if phi.ndim != 1 or phi.shape[0] != self.widths[action]:
            raise DimensionMismatchError(
                f"block for action {action} has width {self.widths[action]}, "
                f"got vector of shape {phi.shape}"
            )
        out = np.zeros(self.dim)
        off = self.offsets[action]
        out[off : off + phi.shape[0]] = phi
        return out


def block_vector(phi: np.ndarray, action: ActionId, num_actions: int) -> np.ndarray:
    """Embed ``phi`` at offset ``action * len(phi)`` of a zero vector.

    The result has length ``len(phi) * num_actions`` and is nonzero only on
    the contiguous block owned by ``action``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 1 or phi.size == 0:
        raise DimensionMismatchError("phi must be a non-empty 1-d vector")
    if not 0 <= action < num_actions:
        raise InvalidActionError(f"action {action} out of range [0, {num_actions})")
    out = np.zeros(phi.size * num_actions)
    out[action * phi.size : (action + 1) * phi.size] = phi
    return out


@dataclass(frozen=True)
class LinearPolicy:
    """Linear action-value weights over a block layout.

    ``theta`` has one weight per position of the layout's global vector; the
    score of a featurized pair is ``<theta, Phi(s, a)>``, which by block
    disjointness reduces to the dot product of the action's slice of ``theta``
    with the state's intermediate representation.
    """

    theta: np.ndarray
    layout: BlockLayout

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 1 or theta.shape[0] != self.layout.dim:
            raise DimensionMismatchError(
                f"theta has length {theta.shape[0] if theta.ndim == 1 else theta.shape}, "
                f"layout requires {self.layout.dim}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("policy weights must be finite")

    @classmethod
    def zeros(cls, layout: BlockLayout) -> "LinearPolicy":
        return cls(theta=np.zeros(layout.dim), layout=layout)

    @property
    def num_actions(self) -> int:
        return self.layout.num_actions

    @property
    def block_dim(self) -> int | None:
        return self.layout.block_dim

    def block(self, action: ActionId) -> np.ndarray:
        """Read-only view of the weight slice owned by ``action``."""
        off = self.layout.offsets[action]
        return self.theta[off : off + self.layout.widths[action]]

    def block_matrix(self) -> np.ndarray:
        """(num_actions, block_dim) view of theta; uniform layouts only."""
        m = self.layout.block_dim
        if m is None:
            raise DimensionMismatchError("layout has non-uniform blocks")
        return self.theta.reshape(self.num_actions, m)


def score(policy: LinearPolicy, phi_sa: np.ndarray) -> float:
    """Q-value of a featurized state-action pair: ``<theta, phi_sa>``."""
    phi_sa = np.asarray(phi_sa, dtype=np.float64)
    if phi_sa.shape != policy.theta.shape:
        raise DimensionMismatchError(
            f"phi_sa has shape {phi_sa.shape}, theta has shape {policy.theta.shape}"
        )
    return float(np.dot(policy.theta, phi_sa))


def greedy_action(
    policy: LinearPolicy,
    featurized_actions: list[tuple[ActionId, np.ndarray]],
) -> ActionId:
    """Action with the highest score; exact ties go to the smallest ActionId.

    Raises TerminalStateError on an empty action list: a state with no
    available actions is terminal and has no greedy action.
    """
    if not featurized_actions:
        raise TerminalStateError("no available actions: state is terminal")
    best_id: ActionId | None = None
    best_score = -math.inf
    for action, phi_sa in featurized_actions:
        s = score(policy, phi_sa)
        if s > best_score or (s == best_score and (best_id is None or action < best_id)):
            best_id = action
            best_score = s
    assert best_id is not None
    return best_id


@dataclass(frozen=True)
class EpisodeTrace:
    """Record of one episode: actions taken, per-step rewards, and the end state.

    ``cumulative_reward`` is the left-to-right fold of ``rewards`` (same
    summation order as the episode itself).  ``truncated`` marks episodes cut
    off by the horizon cap before reaching a terminal state.
    """

    actions: tuple[ActionId, ...]
    rewards: tuple[float, ...]
    cumulative_reward: float
    terminal_summary: dict[str, Any]
    truncated: bool = False


class SequentialProblem(Protocol):
    """Contract a decision problem implements to run under this engine.

    ``action_scores`` must agree with scoring full featurized vectors through
    ``score``; problems implement it directly so that episode steps touch only
    per-action blocks instead of materializing the global vector.
    """

    @property
    def layout(self) -> BlockLayout: ...

    def is_terminal(self, state) -> bool: ...

    def available_ids(self, state) -> np.ndarray:
        """Available ActionIds in ascending order; empty iff terminal."""
        ...

    def action_scores(self, state, ids: np.ndarray, policy: LinearPolicy) -> np.ndarray: ...

    def step(self, state, action: ActionId) -> tuple[Any, float]:
        """Apply an action; returns (next_state, immediate reward)."""
        ...

    def featurize_block(self, state, action: ActionId) -> np.ndarray: ...

    def featurize(self, state, action: ActionId) -> np.ndarray: ...

    def summarize(self, state) -> dict[str, Any]: ...

    def default_horizon(self, state) -> int: ...


# An action selector receives (problem, state, available ids, rng) and picks one
# of the ids.  run_episode uses it in place of the greedy rule when supplied,
# which is how stochastic behavior policies are injected without engine changes.
ActionSelector = Callable[[Any, Any, np.ndarray, np.random.Generator | None], ActionId]


def run_episode(
    problem: SequentialProblem,
    policy: LinearPolicy | None,
    start_state,
    horizon_cap: int | None = None,
    rng: np.random.Generator | None = None,
    action_selector: ActionSelector | None = None,
) -> EpisodeTrace:
    """Run one episode from ``start_state`` to termination (or the horizon cap).

    Actions are chosen greedily under ``policy`` unless an ``action_selector``
    is given.  The cap is a safety net only: both shipped problems terminate
    structurally, so a truncated trace signals a broken problem definition.
    """
    if horizon_cap is None:
        horizon_cap = problem.default_horizon(start_state)
    if horizon_cap < 1:
        raise ValueError("horizon_cap must be >= 1")
    if policy is None and action_selector is None:
        raise ValueError("either a policy or an action selector is required")

    state = start_state
    actions: list[ActionId] = []
    rewards: list[float] = []
    cumulative = 0.0
    truncated = False
    while not problem.is_terminal(state):
        ids = problem.available_ids(state)
        if ids.size == 0:
            break
        if len(actions) >= horizon_cap:
            truncated = True
            break
        if action_selector is not None:
            chosen = action_selector(problem, state, ids, rng)
        else:
            scores = problem.action_scores(state, ids, policy)
            chosen = int(ids[int(np.argmax(scores))])
        state, reward = problem.step(state, chosen)
        actions.append(chosen)
        rewards.append(reward)
        cumulative += reward
    return EpisodeTrace(
        actions=tuple(actions),
        rewards=tuple(rewards),
        cumulative_reward=cumulative,
        terminal_summary=problem.summarize(state),
        truncated=truncated,
    )
