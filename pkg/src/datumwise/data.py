"""Dataset ingestion: sparse tabular files, splits, scaling, text corpora.

Tabular files use the plain sparse text format ``<label> <idx>:<val> ...``
with 1-based, strictly increasing indices and ``#`` comments.  Text corpora
are described by a manifest file with one ``<doc-path>\\t<categories>`` line
per document, each document file holding one sentence per line.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DatasetError, ParseError
from .text_mdp import Document


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """Dense feature matrix with integer labels in [0, n_classes)."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    label_names: tuple[str, ...] = ()
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DatasetError("X must be (N, n) with one label per row")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DatasetError("labels must lie in [0, n_classes)")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def same_content(self, other: "TabularDataset") -> bool:
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and self.n_classes == other.n_classes
        )


def _parse_line(line: str, lineno: int) -> tuple[str, list[tuple[int, float]]] | None:
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    parts = body.split()
    label = parts[0]
    entries: list[tuple[int, float]] = []
    prev_idx = 0
    for token in parts[1:]:
        if ":" not in token:
            raise ParseError(f"expected idx:value, got {token!r}", lineno)
        idx_s, val_s = token.split(":", 1)
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ParseError(f"malformed entry {token!r}", lineno) from None
        if idx < 1:
            raise ParseError(f"indices are 1-based, got {idx}", lineno)
        if idx <= prev_idx:
            raise ParseError(
                f"indices must be strictly increasing, got {idx} after {prev_idx}",
                lineno,
            )
        prev_idx = idx
        entries.append((idx, val))
    return label, entries


def parse_sparse_rows(path: str | Path) -> TabularDataset:
    """Parse a sparse tabular file.

    Labels are remapped to 0..C-1 in order of first appearance; the feature
    count is the largest index seen anywhere in the file.
    """
    rows: list[tuple[int, list[tuple[int, float]]]] = []
    label_order: dict[str, int] = {}
    n = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            parsed = _parse_line(line, lineno)
            if parsed is None:
                continue
            raw_label, entries = parsed
            key = _canonical_label(raw_label, lineno)
            if key not in label_order:
                label_order[key] = len(label_order)
            if entries:
                n = max(n, entries[-1][0])
            rows.append((label_order[key], entries))
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    X = np.zeros((len(rows), n))
    y = np.empty(len(rows), dtype=np.int64)
    for i, (label, entries) in enumerate(rows):
        y[i] = label
        for idx, val in entries:
            X[i, idx - 1] = val
    return TabularDataset(
        X=X, y=y, n_classes=len(label_order), label_names=tuple(label_order)
    )


def _canonical_label(token: str, lineno: int) -> str:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"label {token!r} is not numeric", lineno) from None
    return repr(int(value)) if value == int(value) else repr(value)


def write_sparse_rows(dataset: TabularDataset, path: str | Path) -> None:
    """Serialize back to the sparse text format.

    Zeros are left implicit, except that the highest feature index is written
    explicitly (value 0) on the first row when no row uses it, so the feature
    count survives a round trip.
    """
    n = dataset.n_features
    max_used = 0
    for i in range(dataset.n_rows):
        nz = np.flatnonzero(dataset.X[i])
        if nz.size:
            max_used = max(max_used, int(nz[-1]) + 1)
    names = dataset.label_names if len(dataset.label_names) == dataset.n_classes else None
    with open(path, "w", encoding="utf-8") as handle:
        for i in range(dataset.n_rows):
            label = int(dataset.y[i])
            parts = [names[label] if names else str(label)]
            nz = np.flatnonzero(dataset.X[i])
            parts.extend(f"{int(j) + 1}:{float(dataset.X[i, j])!r}" for j in nz)
            if i == 0 and max_used < n:
                parts.append(f"{n}:0.0")
            handle.write(" ".join(parts) + "\n")


def split(
    dataset: TabularDataset, train_fraction: float, seed: int
) -> tuple[TabularDataset, TabularDataset]:
    """Seeded shuffle, then prefix/suffix split (train size rounded half-up)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    order = np.random.default_rng(seed).permutation(dataset.n_rows)
    n_train = int(train_fraction * dataset.n_rows + 0.5)
    if n_train == 0 or n_train == dataset.n_rows:
        raise ValueError(
            f"train_fraction={train_fraction} leaves one side of the split empty"
        )
    tr, te = order[:n_train], order[n_train:]
    make = lambda idx: replace(dataset, X=dataset.X[idx], y=dataset.y[idx])
    return make(tr), make(te)


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature min/max of a training split; maps features into [0, 1]."""

    lo: np.ndarray
    hi: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        scaled = (X - self.lo) / safe
        scaled[:, span == 0] = 0.0  # constant features carry no information
        return np.clip(scaled, 0.0, 1.0)

    def apply(self, dataset: TabularDataset) -> TabularDataset:
        return replace(dataset, X=self.transform(dataset.X))


def normalize_features(dataset: TabularDataset) -> tuple[TabularDataset, FeatureScaler]:
    """Min-max scale each feature to [0, 1] using this dataset's statistics."""
    scaler = FeatureScaler(lo=dataset.X.min(axis=0), hi=dataset.X.max(axis=0))
    return scaler.apply(dataset), scaler


@dataclass(frozen=True, eq=False)
class Corpus:
    """Vectorized documents with shared vocabulary and idf weights."""

    docs: tuple[Document, ...]
    labels: np.ndarray  # (num_docs, C) 0/1
    vocabulary: dict[str, int]
    idf: np.ndarray
    category_names: tuple[str, ...]

    @property
    def n_categories(self) -> int:
        return len(self.category_names)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)


def read_manifest(manifest_path: str | Path) -> list[tuple[Path, list[str]]]:
    """Manifest lines: ``<doc-path>\\t<comma-separated category names>``."""
    base = Path(manifest_path).parent
    out: list[tuple[Path, list[str]]] = []
    with open(manifest_path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ParseError("expected <doc-path>\\t<categories>", lineno)
            path_s, cats_s = line.split("\t", 1)
            cats = [c.strip() for c in cats_s.split(",") if c.strip()]
            if not cats:
                raise ParseError("document lists no categories", lineno)
            doc_path = Path(path_s)
            if not doc_path.is_absolute():
                doc_path = base / doc_path
            out.append((doc_path, cats))
    if not out:
        raise DatasetError(f"{manifest_path}: empty manifest")
    return out


def _tokenize(sentence: str) -> list[str]:
    return sentence.lower().split()


def tfidf_vectorize(
    doc_sentences: list[list[str]],
    doc_labels: list[list[str]],
    doc_ids: list[str] | None = None,
) -> Corpus:
    """Build a corpus from raw sentences (one list of sentence strings per doc).

    idf is ``ln(N / df)`` with document-level counts; each sentence vector is
    term frequency times idf, L2-normalized.  Sentences with no in-vocabulary
    mass stay as zero vectors.
    """
    if not doc_sentences:
        raise DatasetError("empty corpus")
    if doc_ids is None:
        doc_ids = [f"doc{i}" for i in range(len(doc_sentences))]
    vocabulary: dict[str, int] = {}
    df_sets: list[set[int]] = []
    for sentences in doc_sentences:
        seen: set[int] = set()
        for sentence in sentences:
            for token in _tokenize(sentence):
                if token not in vocabulary:
                    vocabulary[token] = len(vocabulary)
                seen.add(vocabulary[token])
        df_sets.append(seen)
    if not vocabulary:
        raise DatasetError("corpus has an empty vocabulary")
    n_docs = len(doc_sentences)
    df = np.zeros(len(vocabulary))
    for seen in df_sets:
        for t in seen:
            df[t] += 1
    idf = np.log(n_docs / df)

    categories: dict[str, int] = {}
    for cats in doc_labels:
        for c in cats:
            if c not in categories:
                categories[c] = len(categories)
    labels = np.zeros((n_docs, len(categories)), dtype=np.int8)
    docs: list[Document] = []
    for d, (sentences, cats) in enumerate(zip(doc_sentences, doc_labels)):
        if not sentences:
            raise DatasetError(f"document {doc_ids[d]!r} has no sentences")
        mat = np.zeros((len(sentences), len(vocabulary)))
        for s, sentence in enumerate(sentences):
            for token in _tokenize(sentence):
                mat[s, vocabulary[token]] += 1.0
            mat[s] *= idf
            norm = np.linalg.norm(mat[s])
            if norm > 0:
                mat[s] /= norm
        docs.append(Document(sentences=mat, doc_id=doc_ids[d]))
        for c in cats:
            labels[d, categories[c]] = 1
    return Corpus(
        docs=tuple(docs),
        labels=labels,
        vocabulary=vocabulary,
        idf=idf,
        category_names=tuple(categories),
    )


def vectorize_with(
    doc_sentences: list[list[str]],
    doc_labels: list[list[str]],
    vocabulary: dict[str, int],
    idf: np.ndarray,
    category_names: tuple[str, ...],
    doc_ids: list[str] | None = None,
) -> Corpus:
    """Vectorize new documents under an existing vocabulary/idf/category map.

    Out-of-vocabulary tokens are dropped; unknown categories are an error
    (they would silently corrupt the label space of a trained model).
    """
    if doc_ids is None:
        doc_ids = [f"doc{i}" for i in range(len(doc_sentences))]
    cat_index = {c: i for i, c in enumerate(category_names)}
    labels = np.zeros((len(doc_sentences), len(category_names)), dtype=np.int8)
    docs: list[Document] = []
    for d, (sentences, cats) in enumerate(zip(doc_sentences, doc_labels)):
        if not sentences:
            raise DatasetError(f"document {doc_ids[d]!r} has no sentences")
        mat = np.zeros((len(sentences), len(vocabulary)))
        for s, sentence in enumerate(sentences):
            for token in _tokenize(sentence):
                t = vocabulary.get(token)
                if t is not None:
                    mat[s, t] += 1.0
            mat[s] *= idf
            norm = np.linalg.norm(mat[s])
            if norm > 0:
                mat[s] /= norm
        docs.append(Document(sentences=mat, doc_id=doc_ids[d]))
        for c in cats:
            if c not in cat_index:
                raise DatasetError(f"unknown category {c!r} (model knows {category_names})")
            labels[d, cat_index[c]] = 1
    return Corpus(
        docs=tuple(docs),
        labels=labels,
        vocabulary=dict(vocabulary),
        idf=np.asarray(idf, dtype=np.float64),
        category_names=tuple(category_names),
    )


def load_corpus(
    manifest_path: str | Path,
    vocabulary: dict[str, int] | None = None,
    idf: np.ndarray | None = None,
    category_names: tuple[str, ...] | None = None,
) -> Corpus:
    """Read a manifest and vectorize the documents it lists.

    With a vocabulary/idf/category map supplied (from a trained model), the
    documents are projected onto that space instead of building a new one.
    """
    entries = read_manifest(manifest_path)
    sentences = []
    labels = []
    ids = []
    for doc_path, cats in entries:
        try:
            text = doc_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DatasetError(f"cannot read document {doc_path}: {exc}") from exc
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise DatasetError(f"document {doc_path} is empty")
        sentences.append(lines)
        labels.append(cats)
        ids.append(str(doc_path))
    if vocabulary is None:
        return tfidf_vectorize(sentences, labels, ids)
    if idf is None or category_names is None:
        raise ValueError("vocabulary, idf, and category_names must be supplied together")
    return vectorize_with(sentences, labels, vocabulary, idf, category_names, ids)


def split_corpus(corpus: Corpus, train_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Seeded document-level split; vocabulary and idf stay shared."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(corpus.docs)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(train_fraction * n + 0.5)
    if n_train == 0 or n_train == n:
        raise ValueError("split leaves one side empty")

    def subset(idx):
        return Corpus(
            docs=tuple(corpus.docs[i] for i in idx),
            labels=corpus.labels[idx],
            vocabulary=corpus.vocabulary,
            idf=corpus.idf,
            category_names=corpus.category_names,
        )

    return subset(order[:n_train]), subset(order[n_train:])
