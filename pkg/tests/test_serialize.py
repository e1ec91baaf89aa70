import numpy as np
import pytest

from datumwise.data import FeatureScaler
from datumwise.errors import DatasetError
from datumwise.feature_mdp import constrained_layout, unconstrained_layout
from datumwise.mdp import LinearPolicy
from datumwise.serialize import ModelBundle, load_model, save_model
from datumwise.text_mdp import text_layout


def feature_bundle(rng, constrained=False):
    layout = constrained_layout(4, 2) if constrained else unconstrained_layout(4, 2)
    return ModelBundle(
        policy=LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout),
        kind="feature",
        n_features=4,
        n_classes=2,
        constrained=constrained,
        scaler=FeatureScaler(lo=np.zeros(4), hi=np.arange(1.0, 5.0)),
        label_names=("1", "-1"),
    )


class TestRoundTrip:
    @pytest.mark.parametrize("constrained", [False, True])
    def test_feature_model(self, tmp_path, rng, constrained):
        bundle = feature_bundle(rng, constrained)
        path = tmp_path / "m.bin"
        save_model(path, bundle, config={"seed": 1})
        back = load_model(path)
        np.testing.assert_array_equal(back.policy.theta, bundle.policy.theta)
        assert back.policy.layout == bundle.policy.layout
        assert back.constrained == constrained
        assert back.label_names == ("1", "-1")
        np.testing.assert_array_equal(back.scaler.hi, bundle.scaler.hi)
        assert (tmp_path / "m.bin.json").exists()

    def test_text_model(self, tmp_path, rng):
        layout = text_layout(vocab_size=5, n_categories=3)
        bundle = ModelBundle(
            policy=LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout),
            kind="text",
            n_features=5,
            n_classes=3,
            mode="multi",
            vocabulary=("alpha", "beta", "gamma", "delta", "eps"),
            idf=rng.random(5),
            category_names=("a", "b", "c"),
        )
        path = tmp_path / "t.bin"
        save_model(path, bundle)
        back = load_model(path)
        assert back.kind == "text" and back.mode == "multi"
        assert back.vocabulary == bundle.vocabulary
        np.testing.assert_array_equal(back.idf, bundle.idf)
        np.testing.assert_array_equal(back.policy.theta, bundle.policy.theta)

    def test_save_is_deterministic(self, tmp_path, rng):
        bundle = feature_bundle(rng)
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_model(p1, bundle)
        save_model(p2, bundle)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(DatasetError):
            load_model(path)
