"""Sentence-by-sentence text classification as a deterministic MDP.

The agent reads a document one sentence at a time.  At any point it may
assign a category, move to the next sentence, or stop.  All reward arrives at
the stop action: per-document F1 of the assigned categories in multi-label
mode, or a 0/1 accuracy indicator in mono-label mode (where assigning a
category forces an immediate stop).

Action ids for a problem with C categories: ``0..C-1`` classify-as-k,
``C`` next, ``C+1`` stop.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from .errors import (
    DatasetError,
    DimensionMismatchError,
    InvalidActionError,
    TerminalStateError,
)
from .mdp import ActionId, BlockLayout, EpisodeTrace, LinearPolicy, block_vector, run_episode

Mode = Literal["mono", "multi"]


def next_action_id(n_categories: int) -> ActionId:
    return n_categories


def stop_action_id(n_categories: int) -> ActionId:
    return n_categories + 1


@dataclass(frozen=True, eq=False)
class Document:
    """A sequence of sentence vectors (rows), unit L2 norm or all-zero.

    Zero rows correspond to sentences whose tokens all fell out of the
    vocabulary; they are kept so sentence positions stay aligned with the
    source text.
    """

    sentences: np.ndarray
    doc_id: str = ""

    def __post_init__(self):
        sents = np.asarray(self.sentences, dtype=np.float64)
        if sents.ndim != 2 or sents.shape[0] < 1:
            raise DatasetError("a document needs at least one sentence vector")
        object.__setattr__(self, "sentences", sents)
        norms = np.linalg.norm(sents, axis=1)
        nonzero = norms > 0
        if not np.allclose(norms[nonzero], 1.0, atol=1e-6):
            raise DatasetError("sentence vectors must be L2-normalized (or zero)")

    @property
    def num_sentences(self) -> int:
        return self.sentences.shape[0]

    @property
    def zero_sentences(self) -> tuple[int, ...]:
        return tuple(
            int(i) for i in np.flatnonzero(np.linalg.norm(self.sentences, axis=1) == 0)
        )


@dataclass(frozen=True, eq=False)
class ReadingState:
    """Where the reading process stands: document, position, assigned labels.

    ``position`` is 1-based; sentences ``1..position`` have been read and the
    position never decreases.  Bits of ``y_hat`` only turn on.
    """

    doc: Document
    position: int
    y_hat: np.ndarray
    terminal: bool = False

    def __post_init__(self):
        if not 1 <= self.position <= self.doc.num_sentences:
            raise InvalidActionError(
                f"position {self.position} outside 1..{self.doc.num_sentences}"
            )
        object.__setattr__(self, "y_hat", np.asarray(self.y_hat, dtype=np.int8))


def initial_reading_state(doc: Document, n_categories: int) -> ReadingState:
    return ReadingState(doc=doc, position=1, y_hat=np.zeros(n_categories, dtype=np.int8))


def text_available_actions(state: ReadingState, mode: Mode) -> list[ActionId]:
    """Multi: unassigned classifies + next (not at the last sentence) + stop.

    Mono: before any assignment every classify plus next; after an assignment
    only stop remains, so each episode assigns exactly one category.
    """
    if state.terminal:
        raise TerminalStateError("terminal state has no available actions")
    n_cat = state.y_hat.shape[0]
    has_next = state.position < state.doc.num_sentences
    if mode == "mono":
        if state.y_hat.any():
            return [stop_action_id(n_cat)]
        acts: list[ActionId] = list(range(n_cat))
        if has_next:
            acts.append(next_action_id(n_cat))
        return acts
    acts = [int(k) for k in np.flatnonzero(state.y_hat == 0)]
    if has_next:
        acts.append(next_action_id(n_cat))
    acts.append(stop_action_id(n_cat))
    return acts


def text_transition(state: ReadingState, action: ActionId) -> ReadingState:
    """classify-as-k sets that bit; next advances one sentence; stop halts."""
    if state.terminal:
        raise TerminalStateError("cannot transition from a terminal state")
    n_cat = state.y_hat.shape[0]
    if action == stop_action_id(n_cat):
        return ReadingState(
            doc=state.doc, position=state.position, y_hat=state.y_hat, terminal=True
        )
    if action == next_action_id(n_cat):
        if state.position >= state.doc.num_sentences:
            raise InvalidActionError("already at the last sentence")
        return ReadingState(doc=state.doc, position=state.position + 1, y_hat=state.y_hat)
    if not 0 <= action < n_cat:
        raise InvalidActionError(f"action id {action} out of range")
    if state.y_hat[action]:
        raise InvalidActionError(f"category {action} is already assigned")
    y_hat = state.y_hat.copy()
    y_hat[action] = 1
    return ReadingState(doc=state.doc, position=state.position, y_hat=y_hat)


def f1_reward(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Per-document F1 with the usual true-positive-based precision/recall.

    Empty predictions score 0.  A document with no true category is a dataset
    defect, not a legal reward query.
    """
    y = np.asarray(y).astype(bool)
    y_hat = np.asarray(y_hat).astype(bool)
    if y.shape != y_hat.shape:
        raise DimensionMismatchError("label vectors differ in length")
    if not y.any():
        raise DatasetError("document has no true category")
    tp = int(np.count_nonzero(y & y_hat))
    predicted = int(np.count_nonzero(y_hat))
    if predicted == 0 or tp == 0:
        return 0.0
    precision = tp / predicted
    recall = tp / int(np.count_nonzero(y))
    return 2.0 * precision * recall / (precision + recall)


def mono_reward(y_index: int, chosen: int) -> float:
    return 1.0 if chosen == y_index else 0.0


def phi_reading_state(state: ReadingState) -> np.ndarray:
    """``(mean of read sentences, last sentence, y_hat, 1)``."""
    read = state.doc.sentences[: state.position]
    mean = read.sum(axis=0) / state.position
    last = state.doc.sentences[state.position - 1]
    return np.concatenate([mean, last, state.y_hat.astype(np.float64), [1.0]])


def text_featurize(state: ReadingState, action: ActionId, num_actions: int) -> np.ndarray:
    """Full state-action vector: the reading representation in the action block."""
    return block_vector(phi_reading_state(state), action, num_actions)


def text_layout(vocab_size: int, n_categories: int) -> BlockLayout:
    return BlockLayout.uniform(2 * vocab_size + n_categories + 1, n_categories + 2)


class TextReadingProblem:
    """Engine adapter binding a labeled document collection to the reading MDP."""

    def __init__(
        self,
        docs: list[Document],
        labels: np.ndarray,
        mode: Mode = "mono",
    ):
        if mode not in ("mono", "multi"):
            raise ValueError("mode must be 'mono' or 'multi'")
        if not docs:
            raise DatasetError("empty document collection")
        self.docs = list(docs)
        self.labels = np.asarray(labels, dtype=np.int8)
        if self.labels.ndim != 2 or self.labels.shape[0] != len(docs):
            raise DimensionMismatchError("labels must be a (num_docs, C) 0/1 matrix")
        if not (self.labels.sum(axis=1) >= 1).all():
            raise DatasetError("every document needs at least one category")
        if mode == "mono" and not (self.labels.sum(axis=1) == 1).all():
            raise DatasetError("mono-label mode requires exactly one category per doc")
        self.mode: Mode = mode
        self.vocab_size = docs[0].sentences.shape[1]
        if any(d.sentences.shape[1] != self.vocab_size for d in docs):
            raise DimensionMismatchError("documents disagree on vocabulary size")
        self.n_categories = self.labels.shape[1]
        self._layout = text_layout(self.vocab_size, self.n_categories)
        self._doc_index = {id(d): i for i, d in enumerate(self.docs)}

    @property
    def layout(self) -> BlockLayout:
        return self._layout

    def num_start_states(self) -> int:
        return len(self.docs)

    def start_state(self, i: int) -> ReadingState:
        return initial_reading_state(self.docs[i], self.n_categories)

    def sample_state(
        self, rng: np.random.Generator, force_empty: bool = False
    ) -> ReadingState:
        """Uniform document and position; assigned bits are fair coins in
        multi mode (all-ones excluded so at least one classify remains).

        ``force_empty`` is ignored: positions are few, so uniform sampling
        already covers the start state.
        """
        i = int(rng.integers(len(self.docs)))
        doc = self.docs[i]
        p = int(rng.integers(1, doc.num_sentences + 1))
        y_hat = np.zeros(self.n_categories, dtype=np.int8)
        if self.mode == "multi":
            while True:
                y_hat = (rng.random(self.n_categories) < 0.5).astype(np.int8)
                if not y_hat.all():
                    break
        return ReadingState(doc=doc, position=p, y_hat=y_hat)

    def is_terminal(self, state: ReadingState) -> bool:
        return state.terminal

    def available_ids(self, state: ReadingState) -> np.ndarray:
        if state.terminal:
            return np.empty(0, dtype=np.int64)
        return np.asarray(text_available_actions(state, self.mode), dtype=np.int64)

    def action_scores(
        self, state: ReadingState, ids: np.ndarray, policy: LinearPolicy
    ) -> np.ndarray:
        table = policy.block_matrix() @ phi_reading_state(state)
        return table[ids]

    def _doc_label(self, state: ReadingState) -> np.ndarray:
        i = self._doc_index.get(id(state.doc))
        if i is None:
            raise ValueError("state is not bound to a document of this problem")
        return self.labels[i]

    def step(self, state: ReadingState, action: ActionId) -> tuple[ReadingState, float]:
        nxt = text_transition(state, action)
        r = 0.0
        if action == stop_action_id(self.n_categories):
            y = self._doc_label(state)
            if self.mode == "mono":
                chosen = int(np.argmax(state.y_hat)) if state.y_hat.any() else -1
                r = mono_reward(int(np.argmax(y)), chosen)
            else:
                r = f1_reward(y, state.y_hat)
        return nxt, r

    def featurize_block(self, state: ReadingState, action: ActionId) -> np.ndarray:
        return phi_reading_state(state)

    def featurize(self, state: ReadingState, action: ActionId) -> np.ndarray:
        return text_featurize(state, action, self.n_categories + 2)

    def summarize(self, state: ReadingState) -> dict[str, Any]:
        return {
            "labels": state.y_hat.copy(),
            "sentences_read": state.position,
            "acquired": state.position,
        }

    def state_tag(self, state: ReadingState) -> tuple:
        i = self._doc_index.get(id(state.doc), -1)
        return (i, state.position)

    def default_horizon(self, state: ReadingState) -> int:
        return state.doc.num_sentences + self.n_categories + 1


def classify_document(
    policy: LinearPolicy, doc: Document, mode: Mode = "mono"
) -> tuple[np.ndarray, int, EpisodeTrace]:
    """Greedy reading episode; returns (assigned labels, sentences read, trace).

    Inference needs no true labels, so the document is wrapped in a throwaway
    problem whose reward is never consulted (stop reward is only computed for
    labeled steps; here a placeholder label is used and the trace rewards are
    zeroed out).
    """
    n_categories = policy.num_actions - 2
    placeholder = np.zeros((1, n_categories), dtype=np.int8)
    placeholder[0, 0] = 1
    problem = TextReadingProblem([doc], placeholder, mode=mode)
    trace = run_episode(problem, policy, problem.start_state(0))
    if trace.truncated:
        warnings.warn("reading episode hit its horizon cap", stacklevel=2)
    summary = trace.terminal_summary
    clean = EpisodeTrace(
        actions=trace.actions,
        rewards=tuple(0.0 for _ in trace.rewards),
        cumulative_reward=0.0,
        terminal_summary=summary,
        truncated=trace.truncated,
    )
    return summary["labels"], summary["sentences_read"], clean
