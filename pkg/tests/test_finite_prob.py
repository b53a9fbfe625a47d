import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from wiretap_lab.errors import DomainError, ResourceLimitError, ValidationError
from wiretap_lab.finite_prob import (
    Channel,
    Distribution,
    JointDistribution,
    binary_entropy,
    channel_power,
    conditional_mutual_information,
    entropy,
    iid_extend,
    kl_divergence,
    markov_joint,
    mutual_information,
    sequence_digits,
    sequence_index,
    total_variation,
)


def simplex(k, min_size=None):
    return st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: np.asarray(v) / sum(v)
    )


@st.composite
def channels(draw, k=None, out=None):
    k = k or draw(st.integers(1, 4))
    out = out or draw(st.integers(1, 4))
    return Channel(np.vstack([draw(simplex(out)) for _ in range(k)]))


@st.composite
def joints3(draw):
    shape = tuple(draw(st.integers(1, 3)) for _ in range(3))
    flat = draw(simplex(int(np.prod(shape))))
    return JointDistribution(flat.reshape(shape))


class TestDistribution:
    def test_rejects_bad_mass(self):
        with pytest.raises(ValidationError):
            Distribution([0.5, 0.4])
        with pytest.raises(ValidationError):
            Distribution([1.2, -0.2])

    def test_immutable(self):
        d = Distribution([0.25, 0.75])
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    def test_channel_rows_checked(self):
        with pytest.raises(ValidationError):
            Channel([[0.5, 0.5], [0.3, 0.6]])


class TestEntropy:
    def test_trivial_values(self):
        assert entropy(Distribution.bernoulli(0.5)) == pytest.approx(1.0, abs=1e-15)
        assert entropy(Distribution.point(3, 1)) == 0.0
        assert entropy(Distribution.uniform(4)) == pytest.approx(2.0, abs=1e-15)

    def test_binary_entropy(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        # frozen from a 30-digit mpmath evaluation: 0.499915958164527995...
        assert binary_entropy(0.11) == pytest.approx(0.4999159581645280, abs=1e-13)
        with pytest.raises(DomainError):
            binary_entropy(1.5)

    @given(simplex(5))
    def test_bounds_and_scipy(self, p):
        d = Distribution(p)
        h = entropy(d)
        assert -1e-12 <= h <= math.log2(5) + 1e-12
        assert h == pytest.approx(oracles.H(p), abs=1e-12)

    @given(st.floats(0.0, 1.0))
    def test_binary_entropy_symmetric(self, x):
        assert binary_entropy(x) == pytest.approx(binary_entropy(1.0 - x), abs=1e-12)


class TestDivergences:
    def test_total_variation_examples(self):
        p = Distribution([0.5, 0.5])
        assert total_variation(p, p) == 0.0
        assert total_variation(Distribution([1, 0]), Distribution([0, 1])) == 1.0
        assert total_variation(p, Distribution([1, 0])) == pytest.approx(0.5)

    def test_kl_examples(self):
        p = Distribution.bernoulli(0.5)
        assert kl_divergence(p, p) == 0.0
        assert math.isinf(kl_divergence(p, Distribution([1.0, 0.0])))
        # 0.5 log2(2) + 0.5 log2(2/3)
        assert kl_divergence(p, Distribution.bernoulli(0.25)) == pytest.approx(0.2075187496, abs=1e-10)

    def test_alphabet_mismatch(self):
        with pytest.raises(ValidationError):
            total_variation(Distribution.uniform(2), Distribution.uniform(3))
        with pytest.raises(ValidationError):
            kl_divergence(Distribution.uniform(2), Distribution.uniform(3))

    @given(simplex(4), simplex(4))
    def test_tv_one_sided_form(self, p, q):
        one_sided = sum(max(a - b, 0.0) for a, b in zip(p, q))
        assert total_variation(Distribution(p), Distribution(q)) == pytest.approx(one_sided, abs=1e-12)

    @given(simplex(4), simplex(4))
    def test_kl_matches_scipy_and_is_nonnegative(self, p, q):
        d = kl_divergence(Distribution(p), Distribution(q))
        if math.isinf(d):
            assert np.any((p > 0) & (q == 0))
        else:
            assert d >= 0
            assert d == pytest.approx(oracles.kl_bits(p, q), abs=1e-9)

    @given(simplex(3), simplex(3))
    def test_kl_zero_iff_tv_zero(self, p, q):
        P, Q = Distribution(p), Distribution(q)
        assert kl_divergence(P, P) <= 1e-12 and total_variation(P, P) <= 1e-12
        if total_variation(P, Q) > 1e-6:
            assert kl_divergence(P, Q) > 1e-12

    @settings(max_examples=60)
    @given(simplex(3), simplex(3), channels(k=3))
    def test_tv_channel_properties(self, p, q, ch):
        P, Q = Distribution(p), Distribution(q)
        v = total_variation(P, Q)
        pj = JointDistribution.from_channel(P, ch)
        qj = JointDistribution.from_channel(Q, ch)
        assert v <= total_variation(pj, qj) + 1e-12
        assert total_variation(pj, qj) == pytest.approx(v, abs=1e-12)


class TestMutualInformation:
    def test_examples(self):
        assert mutual_information(JointDistribution.independent(Distribution([0.3, 0.7]), Distribution([0.6, 0.4])), 0, 1) == pytest.approx(0.0, abs=1e-15)
        assert mutual_information(JointDistribution(np.diag([0.5, 0.5])), 0, 1) == pytest.approx(1.0)
        bsc = JointDistribution.from_channel(Distribution.uniform(2), Channel.bsc(0.1))
        assert mutual_information(bsc, 0, 1) == pytest.approx(1 - binary_entropy(0.1), abs=1e-12)
        assert mutual_information(bsc, 0, 1) == pytest.approx(0.5310044064, abs=1e-10)

    def test_overlapping_axes(self):
        j = JointDistribution(np.full((2, 2, 2), 0.125))
        with pytest.raises(ValidationError):
            mutual_information(j, (0, 1), (1,))
        with pytest.raises(ValidationError):
            conditional_mutual_information(j, 0, 1, 1)

    def test_conditional_examples(self):
        ab = np.array([[0.4, 0.1], [0.1, 0.4]])
        j = JointDistribution(ab[:, :, None] * np.array([0.3, 0.7]))
        assert conditional_mutual_information(j, 0, 1, 2) == pytest.approx(mutual_information(j, 0, 1), abs=1e-12)
        copy = np.zeros((2, 2, 2))
        copy[0, 0, 0], copy[1, 1, 1] = 0.5, 0.5
        assert conditional_mutual_information(JointDistribution(copy), 0, 1, 2) == pytest.approx(0.0, abs=1e-15)

    @given(joints3())
    def test_nonnegative_and_oracle(self, j):
        assert mutual_information(j, 0, (1, 2)) >= 0
        assert conditional_mutual_information(j, 0, 1, 2) >= 0
        assert mutual_information(j, 0, 1) == pytest.approx(oracles.mi_from_table(j.marginal((0, 1)).table), abs=1e-12)

    @given(joints3())
    def test_conditional_as_average(self, j):
        t = j.table
        pc = t.sum(axis=(0, 1))
        avg = sum(pc[c] * oracles.mi_from_table(t[:, :, c] / pc[c]) for c in range(t.shape[2]) if pc[c] > 0)
        assert conditional_mutual_information(j, 0, 1, 2) == pytest.approx(avg, abs=1e-10)


class TestMarkovJoint:
    def test_identity_cases(self):
        p_ux = JointDistribution(np.diag([0.3, 0.7]))
        j = markov_joint(p_ux, Channel.identity(2), Channel.bsc(0.2))
        assert np.allclose(j.marginal((0, 1)).table, p_ux.table, atol=0)
        assert np.allclose(j.marginal_distribution(2).probs, [0.3, 0.7])

    @settings(max_examples=50)
    @given(simplex(6), channels(k=3), channels(k=3))
    def test_factorization_and_chain_rule(self, flat, main, wtp):
        p_ux = JointDistribution(flat.reshape(2, 3))
        j = markov_joint(p_ux, main, wtp)
        t = j.table
        assert math.fsum(t.ravel()) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(j.marginal((0, 1)).table, p_ux.table, atol=1e-15)
        pxyv = t.sum(axis=0)
        px = pxyv.sum(axis=(1, 2))
        for x in range(3):
            if px[x] > 0:
                cond = pxyv[x] / px[x]
                np.testing.assert_allclose(cond, np.outer(cond.sum(axis=1), cond.sum(axis=0)), atol=1e-12)
        lhs = conditional_mutual_information(j, 0, 1, 3)
        rhs = mutual_information(j, 0, 1) - mutual_information(j, 0, 3)
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_size_mismatch(self):
        with pytest.raises(ValidationError):
            markov_joint(JointDistribution(np.full((2, 2), 0.25)), Channel.bsc(0.1), Channel.identity(3))


class TestExtension:
    def test_examples(self):
        base = Distribution.bernoulli(0.3)
        np.testing.assert_allclose(iid_extend(base, 1).materialize().probs, base.probs)
        np.testing.assert_allclose(iid_extend(Distribution.uniform(2), 3).materialize().probs, np.full(8, 1 / 8))
        np.testing.assert_allclose(iid_extend(base, 2).materialize().probs, [0.49, 0.21, 0.21, 0.09], atol=1e-15)

    def test_lexicographic_order(self):
        p = Distribution([0.2, 0.3, 0.5])
        seq = iid_extend(p, 3).materialize().probs
        for r in range(27):
            digits = sequence_digits(r, 3, 3)
            assert sequence_index(digits, 3) == r
            assert seq[r] == pytest.approx(math.prod(p.probs[d] for d in digits), rel=1e-14)

    def test_joint_base(self):
        j = JointDistribution.from_channel(Distribution([0.4, 0.6]), Channel.bsc(0.2))
        ext = iid_extend(j, 2).materialize()
        assert ext.axis_sizes == (4, 4)
        for xs in range(4):
            for ys in range(4):
                x, y = sequence_digits(xs, 2, 2), sequence_digits(ys, 2, 2)
                want = j.table[x[0], y[0]] * j.table[x[1], y[1]]
                assert ext.table[xs, ys] == pytest.approx(want, rel=1e-14)

    def test_cap(self):
        with pytest.raises(ResourceLimitError):
            iid_extend(Distribution.uniform(2), 30).materialize()
        with pytest.raises(ResourceLimitError):
            channel_power(Channel.bsc(0.1), 13)

    def test_channel_power_matches_loop(self):
        ch = Channel([[0.6, 0.3, 0.1], [0.2, 0.2, 0.6]])
        w = channel_power(ch, 2).rows
        for xs in range(4):
            for ys in range(9):
                x, y = sequence_digits(xs, 2, 2), sequence_digits(ys, 3, 2)
                assert w[xs, ys] == pytest.approx(ch.rows[x[0], y[0]] * ch.rows[x[1], y[1]], rel=1e-14)

    @given(st.integers(1, 5))
    def test_mass_one(self, n):
        probs = iid_extend(Distribution([0.1, 0.2, 0.7]), n).materialize().probs
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-9)
        assert stats.entropy(probs, base=2) == pytest.approx(n * oracles.H([0.1, 0.2, 0.7]), abs=1e-9)
