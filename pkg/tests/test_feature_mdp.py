import numpy as np
import pytest

from datumwise.errors import (
    CacheInvalidError,
    DimensionMismatchError,
    InvalidActionError,
    TerminalStateError,
)
from datumwise.feature_mdp import (
    ClassifyAs,
    DatumState,
    FeatureAcquisitionProblem,
    RewardParams,
    SelectFeature,
    action_from_id,
    action_id,
    available_actions,
    classify,
    classify_trace,
    constrained_layout,
    dwsc_dims,
    featurize_constrained,
    featurize_unconstrained,
    incremental_action_scores,
    initial_state,
    masked_restrict,
    phi_state,
    reward,
    transition,
    unconstrained_layout,
)
from datumwise.mdp import LinearPolicy, run_episode


def make_state(x, mask_bits, n_classes=2):
    x = np.asarray(x, dtype=np.float64)
    mask = np.array([b == "1" for b in mask_bits])
    return DatumState(x=x, mask=mask, n_classes=n_classes)


class TestActions:
    def test_full_action_set(self):
        state = make_state([0.0, 0.0, 0.0], "000")
        acts = available_actions(state)
        assert acts == [
            SelectFeature(0),
            SelectFeature(1),
            SelectFeature(2),
            ClassifyAs(0),
            ClassifyAs(1),
        ]

    def test_unselected_only(self):
        state = make_state([0.0, 0.0, 0.0], "101")
        acts = available_actions(state)
        assert acts == [SelectFeature(1), ClassifyAs(0), ClassifyAs(1)]

    def test_only_labels_remain(self):
        state = make_state([0.0, 0.0, 0.0], "111")
        assert available_actions(state) == [ClassifyAs(0), ClassifyAs(1)]

    def test_terminal_state_errors(self):
        state = transition(make_state([0.0], "0", 2), ClassifyAs(0))
        with pytest.raises(TerminalStateError):
            available_actions(state)

    def test_id_round_trip(self):
        assert action_id(SelectFeature(2), 4) == 2
        assert action_id(ClassifyAs(1), 4) == 5
        assert action_from_id(2, 4, 3) == SelectFeature(2)
        assert action_from_id(5, 4, 3) == ClassifyAs(1)


class TestTransition:
    def test_bit_set(self):
        state = make_state([1.0, 2.0, 3.0], "010")
        nxt = transition(state, SelectFeature(2))
        assert nxt.mask.tolist() == [False, True, True]
        assert not state.mask[2]  # original untouched

    def test_classify_is_terminal(self):
        state = make_state([1.0, 2.0, 3.0], "010")
        nxt = transition(state, ClassifyAs(1))
        assert nxt.terminal and nxt.predicted_label == 1
        assert nxt.mask.tolist() == state.mask.tolist()

    def test_reselect_rejected(self):
        state = make_state([1.0, 2.0, 3.0], "010")
        with pytest.raises(InvalidActionError):
            transition(state, SelectFeature(1))


class TestReward:
    def test_selection_costs_lambda(self):
        state = make_state([0.0], "0", 2)
        params = RewardParams(0.01)
        assert reward(state, SelectFeature(0), 0, params) == -0.01

    def test_correct_label_is_free(self):
        state = make_state([0.0], "0", 2)
        assert reward(state, ClassifyAs(1), 1, RewardParams()) == 0.0

    def test_wrong_label_costs_one(self):
        state = make_state([0.0], "0", 2)
        assert reward(state, ClassifyAs(0), 1, RewardParams()) == -1.0

    def test_cost_validation(self):
        with pytest.raises(ValueError):
            RewardParams(1.0)
        with pytest.raises(ValueError):
            RewardParams(-0.1)
        with pytest.warns(UserWarning):
            RewardParams(0.9)


class TestMaskedRestrict:
    def test_identity_mask(self):
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(masked_restrict(x, np.ones(3, bool)), x)

    def test_empty_mask(self):
        np.testing.assert_array_equal(
            masked_restrict(np.array([1.0, 2.0]), np.zeros(2, bool)), [0.0, 0.0]
        )

    def test_partial_mask(self):
        out = masked_restrict(np.array([3.0, -2.0, 5.0]), np.array([1, 0, 1], bool))
        np.testing.assert_array_equal(out, [3.0, 0.0, 5.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            masked_restrict(np.zeros(3), np.zeros(2, bool))


class TestFeaturize:
    def test_unconstrained_block_placement(self):
        # n=2, c=1; intermediate representation is (z, x*z, 1)
        x = np.array([3.0, 4.0])
        mask = np.array([True, False])
        out = featurize_unconstrained(x, mask, SelectFeature(1), 1)
        phi = [1.0, 0.0, 3.0, 0.0, 1.0]
        expected = [0.0] * 5 + phi + [0.0] * 5
        np.testing.assert_array_equal(out, expected)

    def test_empty_mask_zeroes_values_but_keeps_intercept(self):
        x = np.array([3.0, 4.0])
        mask = np.zeros(2, bool)
        np.testing.assert_array_equal(phi_state(x, mask), [0, 0, 0, 0, 1.0])

    def test_mask_disambiguates_unknown_from_zero(self):
        # a zero that was *measured* must featurize differently from one
        # that was never looked at
        x = np.array([0.0, 4.0])
        known = phi_state(x, np.array([True, False]))
        unknown = phi_state(x, np.array([False, False]))
        assert not np.array_equal(known, unknown)

    def test_constrained_feature_block_ignores_x(self, rng):
        x = np.array([3.0, 4.0])
        mask = np.array([True, False])
        base = featurize_constrained(x, mask, SelectFeature(1), 1)
        for _ in range(10):
            other = featurize_constrained(
                rng.normal(size=2), mask, SelectFeature(1), 1
            )
            np.testing.assert_array_equal(base, other)

    def test_constrained_layout_geometry(self):
        # n=2, c=1: two feature blocks of (z, 1), one label block of
        # (z, z, x*z, 1)
        x = np.array([3.0, 4.0])
        mask = np.array([True, False])
        out = featurize_constrained(x, mask, SelectFeature(1), 1)
        np.testing.assert_array_equal(out, [0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0])
        out = featurize_constrained(x, mask, ClassifyAs(0), 1)
        np.testing.assert_array_equal(out, [0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 3, 0, 1])

    def test_dims_recovery(self):
        assert dwsc_dims(unconstrained_layout(5, 3)) == (5, 3, False)
        assert dwsc_dims(constrained_layout(4, 2)) == (4, 2, True)


class TestIncrementalScores:
    @pytest.mark.parametrize("constrained", [False, True])
    def test_matches_direct_recomputation(self, rng, constrained):
        # oracle: the non-incremental path, re-derived from scratch each step
        n, c = 7, 3
        layout = constrained_layout(n, c) if constrained else unconstrained_layout(n, c)
        for _ in range(20):
            x = rng.normal(size=n)
            theta = rng.normal(size=layout.dim)
            policy = LinearPolicy(theta=theta, layout=layout)
            mask = np.zeros(n, bool)
            scores = incremental_action_scores(x, mask, policy)
            order = rng.permutation(n)
            for j in order:
                mask[j] = True
                scores = incremental_action_scores(
                    x, mask, policy, prev_scores=scores, new_feature=int(j)
                )
                direct = incremental_action_scores(x, mask, policy)
                np.testing.assert_allclose(scores, direct, atol=1e-12)

    def test_base_case_is_exact(self, rng):
        n, c = 4, 2
        layout = unconstrained_layout(n, c)
        policy = LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout)
        x = rng.normal(size=n)
        scores = incremental_action_scores(x, np.zeros(n, bool), policy)
        # at the empty mask only the intercept weight of each block survives
        expected = policy.block_matrix()[:, -1]
        np.testing.assert_array_equal(scores, expected)

    def test_cache_validation(self, rng):
        n, c = 3, 2
        layout = unconstrained_layout(n, c)
        policy = LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout)
        x = rng.normal(size=n)
        mask = np.zeros(n, bool)
        scores = incremental_action_scores(x, mask, policy)
        with pytest.raises(CacheInvalidError):
            incremental_action_scores(x, mask, policy, prev_scores=scores)
        with pytest.raises(CacheInvalidError):
            incremental_action_scores(x, mask, policy, new_feature=0)
        with pytest.raises(CacheInvalidError):
            # mask does not reflect the claimed addition
            incremental_action_scores(
                x, mask, policy, prev_scores=scores, new_feature=1
            )
        with pytest.raises(CacheInvalidError):
            mask2 = mask.copy()
            mask2[1] = True
            incremental_action_scores(
                x, mask2, policy, prev_scores=scores[:-1], new_feature=1
            )

    def test_constrained_feature_scores_keyed_by_mask_only(self, rng):
        n, c = 5, 2
        layout = constrained_layout(n, c)
        policy = LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout)
        mask = rng.random(n) < 0.5
        a = incremental_action_scores(rng.normal(size=n), mask, policy)
        b = incremental_action_scores(rng.normal(size=n), mask, policy)
        np.testing.assert_array_equal(a[:n], b[:n])


class TestClassify:
    def test_label_dominant_policy_uses_no_features(self, rng):
        n, c = 6, 3
        layout = unconstrained_layout(n, c)
        theta = np.zeros(layout.dim)
        theta[(n + 1) * layout.block_dim + (2 * n)] = 50.0  # classify-as-1 intercept
        policy = LinearPolicy(theta=theta, layout=layout)
        label, mask, steps = classify(policy, rng.normal(size=n))
        assert (label, steps) == (1, 1)
        assert mask.sum() == 0

    def test_feature_dominant_policy_acquires_everything(self, rng):
        n, c = 4, 2
        layout = unconstrained_layout(n, c)
        theta = np.zeros(layout.dim)
        for a in range(n):
            theta[a * layout.block_dim + 2 * n] = 10.0  # selection intercepts
        policy = LinearPolicy(theta=theta, layout=layout)
        label, mask, steps = classify(policy, rng.normal(size=n))
        assert mask.sum() == n
        assert steps == n + 1

    def test_steps_is_acquired_plus_one(self, rng):
        n, c = 5, 2
        layout = unconstrained_layout(n, c)
        for _ in range(20):
            policy = LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout)
            _, mask, steps = classify(policy, rng.normal(size=n))
            assert steps == mask.sum() + 1
            assert steps <= n + 1

    def test_matches_engine_episode(self, rng):
        # the incremental fast path and the generic engine must walk the
        # same trace
        X = rng.random((10, 5))
        y = rng.integers(0, 2, size=10)
        problem = FeatureAcquisitionProblem(X, y, RewardParams(0.01), n_classes=2)
        for _ in range(10):
            policy = LinearPolicy(
                theta=rng.normal(size=problem.layout.dim), layout=problem.layout
            )
            for i in range(3):
                label, mask, actions = classify_trace(policy, X[i])
                trace = run_episode(problem, policy, problem.start_state(i))
                assert tuple(actions) == trace.actions
                assert label == trace.terminal_summary["predicted_label"]


class TestEpisodeRewardIdentity:
    def test_reward_equals_negative_loss_minus_cost(self, rng):
        # mean episode reward == -(0/1 loss + cost * features used), per datum
        lam = 0.03
        X = rng.random((30, 5))
        y = rng.integers(0, 3, size=30)
        problem = FeatureAcquisitionProblem(X, y, RewardParams(lam), n_classes=3)
        policy = LinearPolicy(
            theta=rng.normal(size=problem.layout.dim), layout=problem.layout
        )
        for i in range(30):
            trace = run_episode(problem, policy, problem.start_state(i))
            summary = trace.terminal_summary
            delta = 0.0 if summary["predicted_label"] == y[i] else 1.0
            expected = -delta - lam * summary["acquired"]
            assert trace.cumulative_reward == pytest.approx(expected, abs=1e-12)

    def test_mask_monotonicity(self, rng):
        problem = FeatureAcquisitionProblem(
            rng.random((5, 4)), rng.integers(0, 2, size=5), n_classes=2
        )
        policy = LinearPolicy(
            theta=rng.normal(size=problem.layout.dim), layout=problem.layout
        )
        state = problem.start_state(0)
        prev = state.mask.copy()
        while not problem.is_terminal(state):
            ids = problem.available_ids(state)
            scores = problem.action_scores(state, ids, policy)
            state, _ = problem.step(state, int(ids[int(np.argmax(scores))]))
            assert np.all(state.mask >= prev)
            if not problem.is_terminal(state):
                assert state.mask.sum() == prev.sum() + 1
            prev = state.mask.copy()


class TestConstrainedOrder:
    def test_any_policy_selects_features_in_one_global_order(self, rng):
        # feature scores ignore x, so every datum walks the same selection
        # order and differs only in when it stops
        n, c = 5, 2
        layout = constrained_layout(n, c)
        for _ in range(5):
            policy = LinearPolicy(theta=rng.normal(size=layout.dim), layout=layout)
            seqs = []
            for _ in range(30):
                _, _, actions = classify_trace(policy, rng.random(n))
                seqs.append(tuple(a for a in actions if a < n))
            longest = max(seqs, key=len)
            for s in seqs:
                assert s == longest[: len(s)]


def test_initial_state_has_empty_mask():
    state = initial_state(np.array([1.0, 2.0]), 3)
    assert state.mask.sum() == 0 and not state.terminal and state.n_classes == 3
