import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entroscope import entropy as en
from entroscope import fixtures
from entroscope import hypotest as H
from entroscope import numkernel as nk

seeds = st.integers(0, 2**32 - 1)
P, Q = np.diag([0.7, 0.3]), np.diag([0.2, 0.8])


def test_chernoff_commuting_oracle():
    res = H.chernoff_exponent(P, Q)
    assert abs(res.value - 0.146184401458320384) < 1e-10
    assert abs(res.argmin_s - 0.511098657454659933) < 1e-4


def test_classical_chernoff_matches_quantum_on_diagonals():
    v, s = H.classical_chernoff([0.7, 0.3], [0.2, 0.8])
    assert abs(v - H.chernoff_exponent(P, Q).value) < 1e-10


def test_stein_is_relative_entropy():
    assert abs(H.stein_exponent(P, Q).value - 0.582685302043239570) < 1e-12


def test_hoeffding_endpoints():
    rng = np.random.default_rng(0)
    r, s = nk.random_state(2, rng), nk.random_state(2, rng)
    d = en.relative_entropy(r, s).value
    assert abs(H.hoeffding_exponent(r, s, 0.0).value - d) < 1e-7
    assert H.hoeffding_exponent(r, s, en.relative_entropy(s, r).value + 0.5).value < 1e-7


def test_orthogonal_states_are_infinite():
    assert H.chernoff_exponent(np.diag([1.0, 0]), np.diag([0, 1.0])).infinite


def test_helstrom_values():
    assert abs(H.min_error_prob(np.diag([1.0, 0]), np.diag([0, 1.0]))) < 1e-15
    assert abs(H.min_error_prob(P, P) - 0.5) < 1e-15
    assert abs(H.min_error_prob(P, Q) - 0.25) < 1e-15


def test_discrimination_power_trivial_povm_is_zero():
    povm = nk.Povm((np.eye(2) * 0.3, np.eye(2) * 0.7))
    assert H.discrimination_power(povm).value == 0.0


def test_stern_gerlach_closed_form():
    res = H.discrimination_power(H.noisy_stern_gerlach(0.6), restarts=4)
    assert abs(res.value - 0.223143551314209756) < 1e-6


def test_mix_povms_validation():
    with pytest.raises(nk.ValidationError):
        H.mix_povms(H.noisy_stern_gerlach(0.5), H.noisy_stern_gerlach(0.5), 1.5)


def test_finite_n_cap():
    povm, r0, r1, _ = fixtures.povm_0402()
    with pytest.raises(H.CapExceeded):
        H.finite_n_error(povm, [r0] * 5, [r1] * 5, cap=16)


def test_composite_stein_single_alternative():
    rng = np.random.default_rng(1)
    r, s = nk.random_state(2, rng), nk.random_state(2, rng)
    res = H.composite_stein_finite_n(r, [s], 1)
    assert abs(res.value - en.relative_entropy(r, s).value) < 1e-10


def test_symmetric_rate_rejects_large_n():
    with pytest.raises(nk.ValidationError):
        H.symmetric_rate_finite_n([P], [Q], 3)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_chernoff_symmetric_and_below_stein(seed):
    rng = np.random.default_rng(seed)
    r, s = nk.random_state(2, rng), nk.random_state(2, rng)
    c = H.chernoff_exponent(r, s).value
    assert abs(c - H.chernoff_exponent(s, r).value) < 1e-7
    assert c <= min(en.relative_entropy(r, s).value, en.relative_entropy(s, r).value) + 1e-9


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0.05, 0.95))
def test_audenaert_inequality(seed, s):
    rng = np.random.default_rng(seed)
    r, q = nk.random_state(3, rng), nk.random_state(3, rng)
    assert H.min_error_prob(r, q) <= 0.5 * np.exp(en.chernoff_phi(s, r, q)) + 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds, st.floats(0.1, 0.9), st.floats(0.01, 0.5))
def test_audenaert_test_bounds(seed, s, eps):
    rng = np.random.default_rng(seed)
    r, q = nk.random_state(2, rng), nk.random_state(2, rng)
    lam = H.audenaert_lambda(r, q, 2, s, eps)
    assert H.audenaert_test(r, q, 2, s, lam)["bounds_hold"]


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_pinching_gap_bound(seed):
    rng = np.random.default_rng(seed)
    r, q = nk.random_state(2, rng), nk.random_state(2, rng)
    out = H.pinching_gap(np.kron(r, r), np.kron(q, q), 2, 2)
    assert out["bound_holds"]


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_composite_stein_below_each_alternative(seed):
    rng = np.random.default_rng(seed)
    r, s1, s2 = (nk.random_state(2, rng) for _ in range(3))
    v = H.composite_stein_finite_n(r, [s1, s2], 1).value
    assert v <= min(en.relative_entropy(r, s1).value, en.relative_entropy(r, s2).value) + 1e-9
