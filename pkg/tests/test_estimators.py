import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import MinMaxScaler

from datumwise.data import tfidf_vectorize
from datumwise.estimators import (
    DatumWiseClassifier,
    L1SparseLogistic,
    SequentialTextClassifier,
)


def fast_params():
    return dict(rollout_states=150, iterations=3, random_state=0)


class TestDatumWiseClassifier:
    def test_fit_predict_on_separable_data(self, subspace_data):
        tr, te = subspace_data["train"], subspace_data["test"]
        clf = DatumWiseClassifier(**fast_params()).fit(tr.X, tr.y)
        acc = clf.score(te.X, te.y)
        assert acc >= 0.8

    def test_predict_with_mask_shapes(self, subspace_data):
        tr, te = subspace_data["train"], subspace_data["test"]
        clf = DatumWiseClassifier(**fast_params()).fit(tr.X, tr.y)
        preds, masks = clf.predict_with_mask(te.X[:7])
        assert preds.shape == (7,)
        assert masks.shape == (7, 6) and masks.dtype == bool
        steps = clf.decision_steps(te.X[:7])
        np.testing.assert_array_equal(steps, masks.sum(axis=1) + 1)

    def test_class_labels_mapped_back(self, rng):
        X = rng.random((40, 3))
        y = np.where(rng.random(40) < 0.5, "neg", "pos")
        clf = DatumWiseClassifier(rollout_states=60, iterations=1).fit(X, y)
        assert set(clf.predict(X[:10])) <= {"neg", "pos"}

    def test_get_params_round_trip_and_clone(self):
        clf = DatumWiseClassifier(feature_cost=0.05, constrained=True)
        params = clf.get_params()
        assert params["feature_cost"] == 0.05 and params["constrained"] is True
        twin = clone(clf)
        assert twin.get_params() == params

    def test_composes_in_pipeline(self, subspace_data):
        tr = subspace_data["train"]
        pipe = make_pipeline(MinMaxScaler(), DatumWiseClassifier(**fast_params()))
        pipe.fit(tr.X, tr.y)
        assert pipe.predict(tr.X[:5]).shape == (5,)

    def test_unfitted_predict_raises(self):
        with pytest.raises(Exception):
            DatumWiseClassifier().predict(np.zeros((2, 3)))

    def test_evaluation_report(self, subspace_data):
        tr, te = subspace_data["train"], subspace_data["test"]
        clf = DatumWiseClassifier(**fast_params()).fit(tr.X, tr.y)
        report = clf.evaluation_report(te.X, te.y)
        assert 0.0 <= report.mean_sparsity <= 1.0
        assert report.n_evaluated == te.X.shape[0]


class TestL1SparseLogistic:
    def test_fit_sets_sparsity(self, subspace_data):
        tr = subspace_data["train"]
        clf = L1SparseLogistic(l1_strength=0.05).fit(tr.X, tr.y)
        assert 0.0 <= clf.sparsity_ <= 1.0
        assert clf.predict(tr.X[:4]).shape == (4,)

    def test_clone_keeps_params(self):
        clf = L1SparseLogistic(l1_strength=0.3, max_iters=100)
        assert clone(clf).get_params()["l1_strength"] == 0.3


@pytest.fixture(scope="module")
def corpus():
    sentences = [
        ["cocoa price rose", "cocoa beans traded"],
        ["wheat harvest poor", "wheat futures fell"],
        ["cocoa exports grew", "ghana shipped cocoa"],
        ["grain silos full", "wheat stocks rose"],
        ["chocolate makers buy cocoa", "cocoa demand strong"],
        ["farmers plant wheat", "grain season starts"],
    ]
    labels = [["cocoa"], ["grain"], ["cocoa"], ["grain"], ["cocoa"], ["grain"]]
    return tfidf_vectorize(sentences, labels)


class TestSequentialTextClassifier:
    def test_fit_predict_mono(self, corpus):
        clf = SequentialTextClassifier(
            mode="mono", rollout_states=60, iterations=3, random_state=0
        )
        clf.fit(list(corpus.docs), corpus.labels)
        preds = clf.predict(list(corpus.docs))
        assert preds.shape == corpus.labels.shape
        assert np.all(preds.sum(axis=1) == 1)
        # training accuracy on this tiny separable corpus should be solid
        agree = np.mean(np.argmax(preds, axis=1) == np.argmax(corpus.labels, axis=1))
        assert agree >= 0.5

    def test_read_lengths_bounded(self, corpus):
        clf = SequentialTextClassifier(
            mode="mono", rollout_states=40, iterations=2, random_state=1
        )
        clf.fit(list(corpus.docs), corpus.labels)
        lengths = clf.read_lengths(list(corpus.docs))
        assert np.all(lengths >= 1)
        assert np.all(lengths <= [d.num_sentences for d in corpus.docs])

    def test_evaluation_report_multi(self, corpus):
        clf = SequentialTextClassifier(
            mode="multi", rollout_states=40, iterations=2, random_state=0
        )
        clf.fit(list(corpus.docs), corpus.labels)
        report = clf.evaluation_report(list(corpus.docs), corpus.labels)
        assert 0.0 <= report.accuracy <= 1.0
        assert report.per_label_f1.shape == (2,)
