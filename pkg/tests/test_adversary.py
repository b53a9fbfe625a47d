import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from wiretap_lab.adversary import (
    ERASED,
    NOISY,
    PERFECT,
    SubsetSpec,
    TappedSymbol,
    decode_observation,
    decode_wiretap2_observation,
    enumerate_subsets,
    mu_from_alpha,
    observation_channel,
    wiretap2_observation_channel,
)
from wiretap_lab.errors import ResourceLimitError, ValidationError
from wiretap_lab.finite_prob import Channel, channel_power


def test_subset_validation():
    with pytest.raises(ValidationError):
        SubsetSpec(4, (2, 2))
    with pytest.raises(ValidationError):
        SubsetSpec(4, (3, 1))
    with pytest.raises(ValidationError):
        SubsetSpec(4, (0,))
    with pytest.raises(ValidationError):
        SubsetSpec(4, (5,))
    S = SubsetSpec(5, (1, 3, 4))
    assert S.mu == 3 and S.alpha == pytest.approx(0.6)
    assert S.format() == "1,3,4" and str(S) == "{1,3,4}"
    assert SubsetSpec.parse("1,3,4", 5) == S
    assert SubsetSpec.parse("", 5).mu == 0
    with pytest.raises(ValidationError):
        SubsetSpec.parse("1,x", 5)


def test_tapped_symbol_tags():
    TappedSymbol(PERFECT, 1)
    TappedSymbol(ERASED)
    with pytest.raises(ValidationError):
        TappedSymbol(ERASED, 0)
    with pytest.raises(ValidationError):
        TappedSymbol(NOISY)
    with pytest.raises(ValidationError):
        TappedSymbol("other", 0)


def test_mu_from_alpha_floors():
    assert mu_from_alpha(0.25, 8) == 2
    assert mu_from_alpha(0.3, 8) == 2
    assert mu_from_alpha(0.29, 100) == 29  # 0.29 * 100 == 28.999999999999996
    assert mu_from_alpha(1.0, 7) == 7
    with pytest.raises(ValidationError):
        mu_from_alpha(1.5, 4)


class TestEnumeration:
    def test_examples(self):
        assert len(enumerate_subsets(4, 2)) == 6
        assert enumerate_subsets(4, 0) == [SubsetSpec(4, ())]
        assert enumerate_subsets(4, 4) == [SubsetSpec(4, (1, 2, 3, 4))]

    def test_lexicographic(self):
        got = [S.indices for S in enumerate_subsets(5, 3)]
        assert got == sorted(got)

    @given(st.integers(0, 9), st.data())
    def test_count_no_duplicates(self, n, data):
        mu = data.draw(st.integers(0, n))
        subs = enumerate_subsets(n, mu)
        assert len(subs) == math.comb(n, mu)
        assert len({S.indices for S in subs}) == len(subs)

    def test_cap(self):
        with pytest.raises(ResourceLimitError):
            enumerate_subsets(30, 15)
        with pytest.raises(ValidationError):
            enumerate_subsets(3, 4)


class TestObservationChannel:
    def test_full_subset_is_identity(self):
        w = observation_channel(SubsetSpec(3, (1, 2, 3)), Channel.bsc(0.3)).rows
        np.testing.assert_array_equal(w, np.eye(8))
        for z in range(8):
            assert all(s.tag == PERFECT for s in decode_observation(SubsetSpec(3, (1, 2, 3)), z, 2, 2))

    def test_empty_subset_is_power(self):
        wtp = Channel([[0.6, 0.3, 0.1], [0.1, 0.1, 0.8]])
        w = observation_channel(SubsetSpec(3, ()), wtp).rows
        np.testing.assert_allclose(w, channel_power(wtp, 3).rows, atol=0)

    def test_n2_s1_hand_enumeration(self):
        # rows x1x2 in {00,01,10,11}; columns (x1 perfect, v2 noisy) in the same order
        a, b = 0.7, 0.3
        hand = np.array(
            [
                [a, b, 0, 0],
                [b, a, 0, 0],
                [0, 0, a, b],
                [0, 0, b, a],
            ]
        )
        S = SubsetSpec(2, (1,))
        np.testing.assert_allclose(observation_channel(S, Channel.bsc(0.3)).rows, hand, atol=1e-15)
        tags = [tuple(s.tag for s in decode_observation(S, z, 2, 2)) for z in range(4)]
        assert all(t == (PERFECT, NOISY) for t in tags)

    @settings(max_examples=30)
    @given(st.integers(1, 4), st.data())
    def test_matches_tagged_enumeration(self, n, data):
        indices = tuple(i for i in range(1, n + 1) if data.draw(st.booleans()))
        S = SubsetSpec(n, indices)
        rows = np.array([data.draw(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3)) for _ in range(2)])
        rows /= rows.sum(axis=1, keepdims=True)
        wtp = Channel(rows)
        w = observation_channel(S, wtp).rows
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)
        for r, x in enumerate(itertools.product(range(2), repeat=n)):
            want = oracles.observations(set(indices), x, rows)
            for z in range(w.shape[1]):
                syms = decode_observation(S, z, 2, 3)
                key = tuple((s.tag, s.value) for s in syms)
                assert w[r, z] == pytest.approx(want.get(key, 0.0), abs=1e-15)

    @given(st.integers(1, 4), st.data())
    def test_tapped_marginal_is_pushforward(self, n, data):
        indices = tuple(i for i in range(1, n + 1) if data.draw(st.booleans()))
        S = SubsetSpec(n, indices)
        px = np.array(data.draw(st.lists(st.floats(0.05, 1.0), min_size=2 ** n, max_size=2 ** n)))
        px /= px.sum()
        pz = px @ observation_channel(S, Channel.bsc(0.2)).rows
        tapped, direct = {}, {}
        for z, p in enumerate(pz):
            key = tuple(s.value for s in decode_observation(S, z, 2, 2) if s.tag == PERFECT)
            tapped[key] = tapped.get(key, 0.0) + p
        for r, x in enumerate(itertools.product(range(2), repeat=n)):
            key = tuple(x[i - 1] for i in indices)
            direct[key] = direct.get(key, 0.0) + px[r]
        assert tapped.keys() == direct.keys()
        for k in direct:
            assert tapped[k] == pytest.approx(direct[k], abs=1e-12)

    def test_cap(self):
        with pytest.raises(ResourceLimitError):
            observation_channel(SubsetSpec(13, ()), Channel.bsc(0.1))


class TestWiretap2Channel:
    def test_full_and_empty(self):
        np.testing.assert_array_equal(wiretap2_observation_channel(SubsetSpec(3, (1, 2, 3)), 2).rows, np.eye(8))
        np.testing.assert_array_equal(wiretap2_observation_channel(SubsetSpec(3, ()), 2).rows, np.ones((8, 1)))

    def test_n3_s2(self):
        S = SubsetSpec(3, (2,))
        w = wiretap2_observation_channel(S, 2).rows
        assert w.shape == (8, 2)
        for r, x in enumerate(itertools.product(range(2), repeat=3)):
            z = int(np.argmax(w[r]))
            assert w[r, z] == 1.0 and z == x[1]
            syms = decode_wiretap2_observation(S, z, 2)
            assert [s.tag for s in syms] == [ERASED, PERFECT, ERASED]
            assert syms[1].value == x[1]
        assert len({int(np.argmax(row)) for row in w}) == 2
