import numpy as np
import pytest

from datumwise.data import (
    TabularDataset,
    load_corpus,
    normalize_features,
    parse_sparse_rows,
    read_manifest,
    split,
    split_corpus,
    tfidf_vectorize,
    vectorize_with,
    write_sparse_rows,
)
from datumwise.errors import DatasetError, ParseError


class TestParseSparseRows:
    def test_basic_line(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("+1 1:0.5 3:2\n-1 2:1\n")
        ds = parse_sparse_rows(path)
        assert ds.n_features == 3 and ds.n_classes == 2
        np.testing.assert_array_equal(ds.X[0], [0.5, 0.0, 2.0])
        np.testing.assert_array_equal(ds.X[1], [0.0, 1.0, 0.0])
        # first-appearance remapping: +1 -> 0, -1 -> 1
        assert ds.y.tolist() == [0, 1]
        assert ds.label_names == ("1", "-1")

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("# header\n\n2 1:1 # trailing\n3 2:1\n")
        ds = parse_sparse_rows(path)
        assert ds.n_rows == 2 and ds.y.tolist() == [0, 1]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("# only a comment\n")
        with pytest.raises(DatasetError):
            parse_sparse_rows(path)

    def test_non_increasing_indices_rejected(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("2 2:1 1:1\n")
        with pytest.raises(ParseError) as err:
            parse_sparse_rows(path)
        assert err.value.line_number == 1

    def test_malformed_entry_rejected(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("1 1:0.5\n1 nonsense\n")
        with pytest.raises(ParseError) as err:
            parse_sparse_rows(path)
        assert err.value.line_number == 2

    def test_zero_index_rejected(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("1 0:2\n")
        with pytest.raises(ParseError):
            parse_sparse_rows(path)

    def test_round_trip(self, tmp_path, rng):
        X = np.where(rng.random((12, 7)) < 0.4, rng.normal(size=(12, 7)), 0.0)
        X[:, -1] = 0.0  # highest feature silent: writer must preserve n
        raw = TabularDataset(X=X, y=rng.integers(0, 3, size=12), n_classes=3)
        first = tmp_path / "rt0.txt"
        write_sparse_rows(raw, first)
        ds = parse_sparse_rows(first)
        path = tmp_path / "rt1.txt"
        write_sparse_rows(ds, path)
        back = parse_sparse_rows(path)
        assert back.same_content(ds)
        assert back.label_names == ds.label_names
        assert back.n_features == 7


class TestSplit:
    def test_even_split(self, rng):
        ds = TabularDataset(X=rng.random((10, 2)), y=rng.integers(0, 2, 10), n_classes=2)
        tr, te = split(ds, 0.5, seed=0)
        assert tr.n_rows == 5 and te.n_rows == 5

    def test_deterministic(self, rng):
        ds = TabularDataset(X=rng.random((20, 2)), y=rng.integers(0, 2, 20), n_classes=2)
        a = split(ds, 0.3, seed=7)
        b = split(ds, 0.3, seed=7)
        np.testing.assert_array_equal(a[0].X, b[0].X)
        np.testing.assert_array_equal(a[1].y, b[1].y)

    def test_partition(self, rng):
        ds = TabularDataset(X=rng.random((21, 3)), y=rng.integers(0, 2, 21), n_classes=2)
        tr, te = split(ds, 0.25, seed=3)
        assert tr.n_rows + te.n_rows == 21
        merged = np.vstack([tr.X, te.X])
        assert np.array_equal(
            np.sort(merged, axis=0), np.sort(ds.X, axis=0)
        )

    def test_degenerate_fraction_rejected(self, rng):
        ds = TabularDataset(X=rng.random((4, 2)), y=np.zeros(4, int), n_classes=1)
        with pytest.raises(ValueError):
            split(ds, 0.01, seed=0)
        with pytest.raises(ValueError):
            split(ds, 1.5, seed=0)


class TestNormalize:
    def test_min_max(self):
        ds = TabularDataset(X=np.array([[2.0], [4.0]]), y=np.array([0, 1]), n_classes=2)
        norm, _ = normalize_features(ds)
        assert norm.X[:, 0].tolist() == [0.0, 1.0]

    def test_constant_feature_maps_to_zero(self):
        ds = TabularDataset(
            X=np.array([[3.0, 1.0], [3.0, 2.0], [3.0, 3.0]]),
            y=np.array([0, 1, 0]),
            n_classes=2,
        )
        norm, _ = normalize_features(ds)
        assert np.all(norm.X[:, 0] == 0.0)

    def test_test_values_clipped(self):
        train = TabularDataset(X=np.array([[0.0], [10.0]]), y=np.array([0, 1]), n_classes=2)
        _, scaler = normalize_features(train)
        out = scaler.transform(np.array([[-5.0], [15.0], [5.0]]))
        assert out[:, 0].tolist() == [0.0, 1.0, 0.5]

    def test_train_values_land_in_unit_interval(self, rng):
        ds = TabularDataset(
            X=rng.normal(size=(30, 4)) * 10, y=rng.integers(0, 2, 30), n_classes=2
        )
        norm, _ = normalize_features(ds)
        assert norm.X.min() >= 0.0 and norm.X.max() <= 1.0


class TestTfidf:
    def test_everywhere_token_contributes_nothing(self):
        corpus = tfidf_vectorize(
            [["shared alpha", "shared"], ["shared beta"]],
            [["x"], ["y"]],
        )
        t = corpus.vocabulary["shared"]
        assert corpus.idf[t] == 0.0
        for doc in corpus.docs:
            assert np.all(doc.sentences[:, t] == 0.0)

    def test_single_token_sentence_is_unit_basis(self):
        corpus = tfidf_vectorize([["rare"], ["other tokens here"]], [["x"], ["y"]])
        t = corpus.vocabulary["rare"]
        first = corpus.docs[0].sentences[0]
        assert first[t] == pytest.approx(1.0)
        assert np.linalg.norm(first) == pytest.approx(1.0)

    def test_disjoint_sentences_are_orthogonal(self):
        corpus = tfidf_vectorize(
            [["apple banana", "cherry date"], ["apple cherry"]],
            [["x"], ["y"]],
        )
        s = corpus.docs[0].sentences
        assert float(s[0] @ s[1]) == pytest.approx(0.0)

    def test_idf_formula(self):
        corpus = tfidf_vectorize(
            [["apple"], ["apple banana"], ["banana"], ["banana cherry"]],
            [["x"], ["x"], ["y"], ["y"]],
        )
        assert corpus.idf[corpus.vocabulary["apple"]] == pytest.approx(np.log(4 / 2))
        assert corpus.idf[corpus.vocabulary["cherry"]] == pytest.approx(np.log(4 / 1))

    def test_all_zero_sentence_kept_and_flagged(self):
        corpus = tfidf_vectorize(
            [["shared", "shared unique"], ["shared"]],
            [["x"], ["y"]],
        )
        # first sentence of doc0 holds only the everywhere-token: zero vector
        assert corpus.docs[0].zero_sentences == (0,)
        assert corpus.docs[0].num_sentences == 2

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(DatasetError):
            tfidf_vectorize([[""]], [["x"]])

    def test_categories_mapped_by_first_appearance(self):
        corpus = tfidf_vectorize(
            [["a"], ["b"], ["c"]],
            [["grain"], ["cocoa"], ["grain", "trade"]],
        )
        assert corpus.category_names == ("grain", "cocoa", "trade")
        np.testing.assert_array_equal(
            corpus.labels, [[1, 0, 0], [0, 1, 0], [1, 0, 1]]
        )


class TestManifest:
    def _write_corpus(self, tmp_path):
        (tmp_path / "a.txt").write_text("cocoa rises\nprices up\n")
        (tmp_path / "b.txt").write_text("wheat falls\n")
        manifest = tmp_path / "m.tsv"
        manifest.write_text("a.txt\tcocoa\nb.txt\tgrain,exports\n")
        return manifest

    def test_load_corpus(self, tmp_path):
        corpus = load_corpus(self._write_corpus(tmp_path))
        assert len(corpus.docs) == 2
        assert corpus.category_names == ("cocoa", "grain", "exports")
        assert corpus.docs[0].num_sentences == 2

    def test_manifest_requires_tab(self, tmp_path):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("a.txt cocoa\n")
        with pytest.raises(ParseError):
            read_manifest(manifest)

    def test_reusing_vocabulary(self, tmp_path):
        manifest = self._write_corpus(tmp_path)
        corpus = load_corpus(manifest)
        again = load_corpus(
            manifest,
            vocabulary=corpus.vocabulary,
            idf=corpus.idf,
            category_names=corpus.category_names,
        )
        for d1, d2 in zip(corpus.docs, again.docs):
            np.testing.assert_allclose(d1.sentences, d2.sentences, atol=1e-12)
        np.testing.assert_array_equal(corpus.labels, again.labels)

    def test_unknown_category_with_fixed_vocabulary(self):
        with pytest.raises(DatasetError):
            vectorize_with(
                [["some text"]],
                [["unseen"]],
                vocabulary={"some": 0, "text": 1},
                idf=np.array([0.1, 0.1]),
                category_names=("known",),
            )


class TestSplitCorpus:
    def test_split_sizes_and_sharing(self):
        corpus = tfidf_vectorize(
            [[f"token{i} filler"] for i in range(10)],
            [["a"] if i % 2 else ["b"] for i in range(10)],
        )
        tr, te = split_corpus(corpus, 0.7, seed=1)
        assert len(tr.docs) == 7 and len(te.docs) == 3
        assert tr.vocabulary is corpus.vocabulary
        np.testing.assert_array_equal(tr.idf, corpus.idf)
