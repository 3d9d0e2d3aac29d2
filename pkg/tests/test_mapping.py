import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnnweights.mapping import MappingTable, apply_mapping, build_mapping, qubits_for
from qnnweights.qsim import ProbabilityDistribution

# 0.3 * tanh(0.15), evaluated with mpmath at 40 digits
UNIFORM_N8_GAMMA03 = 0.04466551008699539229


def _dirichlet(dim, seed):
    return np.random.default_rng(seed).dirichlet(np.ones(dim))


class TestBuildMapping:
    @pytest.mark.parametrize(
        "M,N,n_pair,n_single",
        [(131, 8, 125, 6), (6690, 13, 1502, 5188), (256, 8, 0, 256), (2, 1, 0, 2), (3, 2, 1, 2)],
    )
    def test_counts(self, M, N, n_pair, n_single):
        t = build_mapping(M, seed=0)
        assert (t.M, t.N, t.n_paired, t.n_single) == (M, N, n_pair, n_single)

    def test_too_small(self):
        with pytest.raises(ValueError):
            build_mapping(1, 0)

    def test_partition_property(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            M = int(rng.integers(4, 5001))
            t = build_mapping(M, int(rng.integers(2**31)))
            bases = np.concatenate([t.paired[:, 1], t.paired[:, 2], t.single[:, 1]])
            weights = np.concatenate([t.paired[:, 0], t.single[:, 0]])
            np.testing.assert_array_equal(np.sort(bases), np.arange(2**t.N))
            np.testing.assert_array_equal(np.sort(weights), np.arange(M))
            assert np.all(t.paired[:, 1] != t.paired[:, 2])

    def test_deterministic(self):
        assert build_mapping(131, 5) == build_mapping(131, 5)
        assert build_mapping(131, 5) != build_mapping(131, 6)

    def test_draw_order(self):
        # reconstruct from the documented generator consumption order
        M, seed = 100, 11
        rng = np.random.default_rng(seed)
        pair_w = np.sort(rng.choice(M, size=28, replace=False))
        bases = rng.permutation(128)
        t = build_mapping(M, seed)
        np.testing.assert_array_equal(t.paired[:, 0], pair_w)
        np.testing.assert_array_equal(t.paired[:, 1:].ravel(), bases[:56])
        np.testing.assert_array_equal(t.single[:, 1], bases[56:])
        assert np.all(np.diff(t.single[:, 0]) > 0)

    def test_dict_round_trip(self):
        t = build_mapping(300, 3)
        assert MappingTable.from_dict(t.to_dict()) == t

    def test_rejects_broken_table(self):
        t = build_mapping(10, 0)
        single = t.single.copy()
        single[0, 1] = single[1, 1]
        with pytest.raises(ValueError):
            MappingTable(t.M, t.N, t.paired, single, t.seed)

    def test_qubits_for(self):
        assert qubits_for(131) == 8 and qubits_for(6690) == 13 and qubits_for(7038) == 13
        assert qubits_for(256) == 8 and qubits_for(257) == 9


class TestApplyMapping:
    def test_uniform_single_weight_value(self):
        t = build_mapping(131, 0)
        theta = apply_mapping(t, np.full(256, 1 / 256), 0.3)
        even_single = [j for j in t.single[:, 0] if j % 2 == 0]
        assert even_single
        for j in even_single:
            assert theta[j] == pytest.approx(UNIFORM_N8_GAMMA03, abs=1e-15)

    def test_uniform_paired_weight_matches_single(self):
        t = build_mapping(131, 0)
        theta = apply_mapping(t, np.full(256, 1 / 256), 0.3)
        for j in t.paired[:, 0]:
            expected = UNIFORM_N8_GAMMA03 if j % 2 == 0 else -UNIFORM_N8_GAMMA03
            assert theta[j] == pytest.approx(expected, abs=1e-15)

    def test_explicit_formula(self):
        t = build_mapping(20, 4)
        p = _dirichlet(32, 1)
        g = 0.7
        theta = apply_mapping(t, ProbabilityDistribution(p), g)
        for j, i, k in t.paired:
            s = 1 if j % 2 == 0 else -1
            assert theta[j] == pytest.approx(g * np.tanh(s * 2**3 * g * (p[i] + p[k])), rel=1e-14)
        for j, i in t.single:
            s = 1 if j % 2 == 0 else -1
            assert theta[j] == pytest.approx(g * np.tanh(s * 2**4 * g * p[i]), rel=1e-14)

    def test_zero_gamma(self):
        t = build_mapping(50, 0)
        np.testing.assert_array_equal(apply_mapping(t, _dirichlet(64, 0), 0.0), np.zeros(50))

    def test_odd_mirrors_even(self):
        t = build_mapping(131, 2)
        p = _dirichlet(256, 2)
        theta = apply_mapping(t, p, 0.4)
        for j, i in t.single:
            mag = 0.4 * np.tanh(128 * 0.4 * p[i])
            assert theta[j] == (mag if j % 2 == 0 else -mag)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            apply_mapping(build_mapping(131, 0), np.full(128, 1 / 128), 0.3)

    @settings(max_examples=100, deadline=None)
    @given(M=st.integers(2, 3000), seed=st.integers(0, 2**31), gamma=st.floats(-5, 5, allow_nan=False))
    def test_gamma_evenness(self, M, seed, gamma):
        t = build_mapping(M, seed)
        p = _dirichlet(2**t.N, seed)
        np.testing.assert_array_equal(apply_mapping(t, p, gamma), apply_mapping(t, p, -gamma))

    @settings(max_examples=100, deadline=None)
    @given(M=st.integers(2, 3000), seed=st.integers(0, 2**31), gamma=st.floats(-1, 1, allow_nan=False))
    def test_bounded_and_signed(self, M, seed, gamma):
        t = build_mapping(M, seed)
        theta = apply_mapping(t, _dirichlet(2**t.N, seed), gamma)
        if gamma != 0:
            assert np.max(np.abs(theta)) < abs(gamma)
        # evenness in gamma means the parity sign pattern holds for either sign of gamma
        sign = np.sign(theta)
        assert np.all(sign[0::2] >= 0) and np.all(sign[1::2] <= 0)

    def test_saturation_never_exceeds_gamma(self):
        # tanh rounds to exactly 1 for arguments above ~19, so only <= holds there
        t = build_mapping(131, 0)
        p = np.zeros(256)
        p[t.single[0, 1]] = 1.0
        theta = apply_mapping(t, p, 10.0)
        assert np.max(np.abs(theta)) <= 10.0

    def test_monotone_in_probability(self):
        t = build_mapping(131, 0)
        j, i = next((j, i) for j, i in t.single if j % 2 == 0)
        values = []
        for q in np.linspace(0, 0.2, 50):
            p = np.full(256, (1 - q) / 255)
            p[i] = q
            values.append(apply_mapping(t, p, 0.3)[j])
        assert np.all(np.diff(values) > 0)
