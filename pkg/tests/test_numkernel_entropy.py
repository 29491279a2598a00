import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entroscope import entropy as en
from entroscope import numkernel as nk

LN2 = np.log(2)
seeds = st.integers(0, 2**32 - 1)


def bell():
    return nk.proj(np.array([1, 0, 0, 1]) / np.sqrt(2))


# ------------------------------------------------------------ numkernel

def test_partial_trace_of_product_state():
    rng = np.random.default_rng(0)
    a, b, c = nk.random_state(2, rng), nk.random_state(3, rng), nk.random_state(2, rng)
    rho = nk.tensor(a, b, c)
    assert np.allclose(nk.partial_trace(rho, [1], [2, 3, 2]), b)
    assert np.allclose(nk.partial_trace(rho, [0, 2], [2, 3, 2]), np.kron(a, c))
    assert np.allclose(nk.partial_trace(rho, [2, 0], [2, 3, 2]), np.kron(a, c))


def test_partial_trace_rejects_bad_index():
    with pytest.raises(IndexError):
        nk.partial_trace(np.eye(4) / 4, [2], [2, 2])


def test_permute_systems_swaps_factors():
    rng = np.random.default_rng(1)
    a, b = nk.random_state(2, rng), nk.random_state(3, rng)
    assert np.allclose(nk.permute_systems(np.kron(a, b), [1, 0], [2, 3]), np.kron(b, a))


def test_matrix_functions_on_support():
    p = np.diag([0.5, 0.5, 0.0])
    assert np.allclose(nk.mlog(p), np.diag([np.log(0.5)] * 2 + [0.0]))
    assert np.allclose(nk.mpow(p, -1), np.diag([2.0, 2.0, 0.0]))
    assert np.allclose(nk.msqrt(p) @ nk.msqrt(p), p)


def test_frechet_matches_finite_difference():
    rng = np.random.default_rng(2)
    h = nk.random_state(4, rng) + 0.1 * np.eye(4)
    x = nk.random_state(4, rng) - 0.25 * np.eye(4)
    d = nk.frechet(h, np.log, lambda w: 1 / w, x)
    eps = 1e-6
    fd = (nk.mlog(h + eps * x) - nk.mlog(h - eps * x)) / (2 * eps)
    assert np.abs(d - fd).max() < 1e-6


def test_density_matrix_validation():
    with pytest.raises(nk.ValidationError):
        nk.DensityMatrix(np.diag([0.6, 0.6]))
    with pytest.raises(nk.ValidationError):
        nk.DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(nk.ValidationError):
        nk.DensityMatrix(np.eye(4) / 4, (2, 3))


def test_povm_validation():
    with pytest.raises(nk.ValidationError):
        nk.Povm((np.diag([0.5, 0.5]), np.diag([0.4, 0.5])))


def test_load_json_reports_line(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"rows": 2,\n "cols": 2,\n "re": [[1, 0] [0, 0]]}')
    with pytest.raises(nk.ValidationError, match=r"bad.json:3:"):
        nk.load_json(f)


def test_matrix_json_roundtrip():
    rng = np.random.default_rng(3)
    m = nk.random_state(3, rng)
    assert np.allclose(nk.matrix_from_json(nk.matrix_to_json(m)), m)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4))
def test_fidelity_symmetric_and_bounded(seed, d):
    rng = np.random.default_rng(seed)
    a, b = nk.random_state(d + 1, rng), nk.random_state(d + 1, rng)
    f = nk.fidelity(a, b)
    assert 0 <= f <= 1
    assert abs(f - nk.fidelity(b, a)) < 1e-8
    assert abs(nk.fidelity(a, a) - 1) < 1e-8


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_random_unitary_is_unitary(seed):
    u = nk.random_unitary(5, np.random.default_rng(seed))
    assert np.allclose(u @ u.conj().T, np.eye(5))


# ------------------------------------------------------------ entropy

def test_binary_entropy_oracle():
    assert abs(en.binary_entropy(0.11) - 0.346515336918666152) < 1e-14
    assert abs(en.binary_entropy_inv(0.346515336918666152) - 0.11) < 1e-12
    assert en.binary_entropy(0.0) == 0.0


def test_relative_entropy_commuting_is_kl():
    val = en.relative_entropy(np.diag([0.7, 0.3]), np.diag([0.2, 0.8])).value
    assert abs(val - 0.582685302043239570) < 1e-13


def test_relative_entropy_support_violation():
    rep = en.relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0]))
    assert rep.support_violation and rep.value == np.inf


def test_bell_state_entropies():
    rho = bell()
    assert abs(en.von_neumann(rho)) < 1e-12
    assert abs(en.conditional_entropy(rho, [0], [1], [2, 2]) + LN2) < 1e-12
    assert abs(en.mutual_information(rho, [0], [1], [2, 2]) - 2 * LN2) < 1e-12


def test_cqmi_markov_chain_is_zero():
    # classical Markov chain A - C - B
    p_c = np.array([0.3, 0.7])
    pa = np.array([[0.9, 0.1], [0.2, 0.8]])
    pb = np.array([[0.6, 0.4], [0.35, 0.65]])
    diag = np.einsum("c,ca,cb->acb", p_c, pa, pb).reshape(-1)
    rho = np.diag(diag)
    assert abs(en.cqmi(rho, [0], [2], [1], [2, 2, 2])) < 1e-12


def test_measured_equals_relative_for_commuting_states():
    r, s = np.diag([0.7, 0.3]), np.diag([0.2, 0.8])
    assert abs(en.measured_relative_entropy(r, s) - en.relative_entropy(r, s).value) < 1e-9


def test_renyi_mi_of_product_is_zero():
    rng = np.random.default_rng(4)
    rho = np.kron(nk.random_state(2, rng), nk.random_state(2, rng))
    assert abs(en.renyi_mutual_information(rho, 0.5, [2, 2])) < 1e-8


def test_coherence_of_plus_state():
    plus = nk.proj(np.array([1, 1]) / np.sqrt(2))
    assert abs(en.coherence_relative_entropy(plus) - LN2) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_measured_below_relative_entropy(seed):
    rng = np.random.default_rng(seed)
    r, s = nk.random_state(2, rng), nk.random_state(2, rng)
    dm = en.measured_relative_entropy(r, s, restarts=2, rng=rng)
    assert -1e-10 <= dm <= en.relative_entropy(r, s).value + 1e-9


@settings(max_examples=25, deadline=None)
@given(seeds, st.floats(0.1, 0.9))
def test_sandwiched_below_petz(seed, s):
    rng = np.random.default_rng(seed)
    r, q = nk.random_state(3, rng), nk.random_state(3, rng)
    assert en.sandwiched_divergence(r, q, s).value <= en.petz_divergence(r, q, s).value + 1e-9


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_strong_subadditivity(seed):
    rho = nk.random_state(8, np.random.default_rng(seed))
    assert en.cqmi(rho, [0], [1], [2], [2, 2, 2]) >= -1e-10


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_conditional_entropy_bounds(seed):
    rho = nk.random_state(4, np.random.default_rng(seed))
    h = en.conditional_entropy(rho, [0], [1], [2, 2])
    assert -LN2 - 1e-12 <= h <= LN2 + 1e-12
