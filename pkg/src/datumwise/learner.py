"""Approximate policy iteration with rollouts.

Each iteration (i) samples random states from the training set, (ii) scores
every available action of every sampled state by running the current behavior
policy to termination and recording the cumulative reward, and (iii) fits the
next linear policy by ridge regression of those returns on the block
featurization.  A stochastic mixture of the two most recent fitted policies
drives the rollouts to keep successive iterations from oscillating.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import DatasetError, NumericalError, TerminalStateError
from .mdp import (
    ActionId,
    ActionSelector,
    BlockLayout,
    LinearPolicy,
    greedy_action,
    run_episode,
)


@dataclass(frozen=True)
class RolloutConfig:
    """Knobs of the training loop.

    ``num_states`` and ``iterations`` control the sampling budget; ``alpha``
    is the per-step probability of following the newest policy during
    rollouts.  ``zero_mask_fraction`` forces that share of sampled
    feature-acquisition states to start from the empty mask, since deployed
    classification always starts there and fair-coin masks rarely produce it.
    """

    num_states: int = 2000
    iterations: int = 10
    alpha: float = 0.9
    rollouts_per_action: int = 1
    ridge: float = 1e-6
    zero_mask_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.num_states < 1:
            raise ValueError("num_states must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.rollouts_per_action < 1:
            raise ValueError("rollouts_per_action must be positive")
        if self.ridge < 0.0:
            raise ValueError("ridge must be non-negative")
        if not 0.0 <= self.zero_mask_fraction <= 1.0:
            raise ValueError("zero_mask_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class RolloutSample:
    """One regression row: an action's block features and its estimated return.

    ``state_tag`` identifies the originating state (datum index plus mask or
    reading position) for diagnostics only.
    """

    action: ActionId
    phi_block: np.ndarray
    estimated_return: float
    state_tag: tuple = ()

    def phi_sa(self, layout: BlockLayout) -> np.ndarray:
        """Materialize the full state-action vector this row stands for."""
        return layout.embed(self.phi_block, self.action)


@dataclass(frozen=True)
class IterationDiagnostics:
    iteration: int
    mean_training_reward: float
    mean_features_used: float
    wall_ms: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "iteration": self.iteration,
                "mean_training_reward": self.mean_training_reward,
                "mean_features_used": self.mean_features_used,
                "wall_ms": self.wall_ms,
            }
        )


def uniform_random_selector(problem, state, ids: np.ndarray, rng) -> ActionId:
    """Behavior policy of the first iteration: no preferences yet."""
    return int(ids[int(rng.integers(ids.size))])


def alpha_mixture_select(
    policy_prev: LinearPolicy,
    policy_new: LinearPolicy,
    alpha: float,
    rng: np.random.Generator,
    featurized_actions: list[tuple[ActionId, np.ndarray]],
) -> ActionId:
    """Follow the new policy's greedy choice with probability ``alpha``.

    The coin is tossed independently at every step, so a rollout interleaves
    choices of both policies.
    """
    chosen = policy_new if rng.random() < alpha else policy_prev
    return greedy_action(chosen, featurized_actions)


def alpha_mixture_selector(
    policy_prev: LinearPolicy, policy_new: LinearPolicy, alpha: float
) -> ActionSelector:
    """Same per-step Bernoulli mixture, as an engine-pluggable selector."""

    def select(problem, state, ids: np.ndarray, rng) -> ActionId:
        chosen = policy_new if rng.random() < alpha else policy_prev
        scores = problem.action_scores(state, ids, chosen)
        return int(ids[int(np.argmax(scores))])

    return select


def greedy_selector(policy: LinearPolicy) -> ActionSelector:
    def select(problem, state, ids: np.ndarray, rng) -> ActionId:
        scores = problem.action_scores(state, ids, policy)
        return int(ids[int(np.argmax(scores))])

    return select


def sample_states(
    problem, config: RolloutConfig, rng: np.random.Generator | None = None
) -> list:
    """Draw ``config.num_states`` rollout start states.

    Data are drawn uniformly with replacement; feature-acquisition masks are
    fair coins except for the forced-empty share, and reading states get a
    uniform position (the problem's own sampler implements the specifics).
    """
    if problem.num_start_states() == 0:
        raise DatasetError("cannot sample states from an empty training set")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n_forced = int(round(config.zero_mask_fraction * config.num_states))
    return [
        problem.sample_state(rng, force_empty=(i < n_forced))
        for i in range(config.num_states)
    ]


def evaluate_actions(
    problem,
    state,
    behavior: LinearPolicy | ActionSelector,
    config: RolloutConfig,
    rng: np.random.Generator | None = None,
) -> list[RolloutSample]:
    """Estimate the return of every available action at ``state``.

    Each action is applied once, then the behavior policy runs to termination
    ``rollouts_per_action`` times; the estimate is the immediate reward plus
    the mean continuation reward.  With a deterministic behavior policy one
    rollout is already exact.
    """
    if problem.is_terminal(state):
        raise TerminalStateError("cannot evaluate actions of a terminal state")
    if isinstance(behavior, LinearPolicy):
        policy, selector = behavior, None
    else:
        policy, selector = None, behavior
    tag = problem.state_tag(state)
    samples = []
    for aid in problem.available_ids(state):
        aid = int(aid)
        nxt, immediate = problem.step(state, aid)
        total = 0.0
        if not problem.is_terminal(nxt):
            for _ in range(config.rollouts_per_action):
                trace = run_episode(
                    problem, policy, nxt, rng=rng, action_selector=selector
                )
                total += trace.cumulative_reward
            total /= config.rollouts_per_action
        samples.append(
            RolloutSample(
                action=aid,
                phi_block=problem.featurize_block(state, aid),
                estimated_return=immediate + total,
                state_tag=tag,
            )
        )
    return samples


def fit_policy(
    samples: list[RolloutSample], layout: BlockLayout, ridge: float
) -> LinearPolicy:
    """Ridge least squares of estimated returns on the block featurization.

    Distinct actions occupy disjoint blocks, so the Gram matrix is block
    diagonal and the fit decomposes into one small solve per action.  Actions
    that received no samples keep zero weights.
    """
    if ridge < 0.0:
        raise ValueError("ridge must be non-negative")
    if len(samples) < layout.dim / 10:
        warnings.warn(
            f"only {len(samples)} samples for {layout.dim} parameters; "
            "the fit is likely underdetermined",
            stacklevel=2,
        )
    grouped: dict[int, list[RolloutSample]] = {}
    for s in samples:
        grouped.setdefault(s.action, []).append(s)
    theta = np.zeros(layout.dim)
    for aid, group in grouped.items():
        width = layout.widths[aid]
        B = np.stack([np.asarray(s.phi_block, dtype=np.float64) for s in group])
        if B.shape[1] != width:
            raise NumericalError(
                f"sample for action {aid} has block width {B.shape[1]}, "
                f"layout says {width}"
            )
        R = np.array([s.estimated_return for s in group])
        gram = B.T @ B + ridge * np.eye(width)
        rhs = B.T @ R
        try:
            block = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular system for action {aid}") from exc
        if not np.all(np.isfinite(block)):
            raise NumericalError(f"non-finite weights for action {aid}")
        off = layout.offsets[aid]
        theta[off : off + width] = block
    return LinearPolicy(theta=theta, layout=layout)


def _measure(problem, policy: LinearPolicy) -> tuple[float, float]:
    rewards = []
    acquired = []
    for i in range(problem.num_start_states()):
        trace = run_episode(problem, policy, problem.start_state(i))
        rewards.append(trace.cumulative_reward)
        acquired.append(trace.terminal_summary["acquired"])
    return float(np.mean(rewards)), float(np.mean(acquired))


def train(
    problem,
    config: RolloutConfig,
    diagnostics_out: IO[str] | None = None,
) -> tuple[LinearPolicy, list[IterationDiagnostics]]:
    """Full training loop; returns the final policy and per-iteration stats.

    States are resampled fresh every iteration.  Iteration 0 rolls out a
    uniform-random behavior policy; later iterations roll out the alpha
    mixture of the two most recent fits.  Every random draw descends from
    ``config.seed`` through per-iteration, per-state seed spawning, so runs
    are reproducible and states could be rolled out in parallel without
    changing the result.
    """
    layout = problem.layout
    if config.iterations == 0:
        return LinearPolicy.zeros(layout), []
    root = np.random.SeedSequence(config.seed)
    iteration_seeds = root.spawn(config.iterations)
    policy_new: LinearPolicy | None = None
    policy_prev: LinearPolicy | None = None
    diagnostics: list[IterationDiagnostics] = []
    for it in range(config.iterations):
        started = time.perf_counter()
        children = iteration_seeds[it].spawn(config.num_states + 1)
        states = sample_states(problem, config, np.random.default_rng(children[0]))
        if it == 0:
            behavior: LinearPolicy | ActionSelector = uniform_random_selector
        else:
            older = policy_prev if policy_prev is not None else policy_new
            behavior = alpha_mixture_selector(older, policy_new, config.alpha)
        samples: list[RolloutSample] = []
        for i, state in enumerate(states):
            rng = np.random.default_rng(children[i + 1])
            samples.extend(evaluate_actions(problem, state, behavior, config, rng))
        policy_prev = policy_new
        policy_new = fit_policy(samples, layout, config.ridge)
        mean_reward, mean_acquired = _measure(problem, policy_new)
        diag = IterationDiagnostics(
            iteration=it,
            mean_training_reward=mean_reward,
            mean_features_used=mean_acquired,
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        diagnostics.append(diag)
        if diagnostics_out is not None:
            diagnostics_out.write(diag.to_json() + "\n")
    return policy_new, diagnostics
