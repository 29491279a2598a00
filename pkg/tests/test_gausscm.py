import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entroscope import fixtures
from entroscope import gausscm as G
from entroscope.numkernel import ValidationError

seeds = st.integers(0, 2**32 - 1)
AB = [("A", 1), ("B", 1)]
ABC = [("A", 1), ("B", 1), ("C", 1)]
Z = np.diag([1.0, -1.0])


def tmsv(c):
    s = np.sqrt(c * c - 1)
    return G.CovMatrix(np.block([[c * np.eye(2), s * Z], [s * Z, c * np.eye(2)]]), AB)


def ld(m):
    return np.linalg.slogdet(m)[1]


def test_tmsv_is_pure():
    v = tmsv(3.0)
    assert np.allclose(G.symplectic_eigs(v), [1.0, 1.0])
    rep = G.is_qcm(v)
    assert rep.is_qcm and abs(rep.purity_defect) < 1e-12


def test_tmsv_steerability_and_eof():
    c = 2.5
    v = tmsv(c)
    assert abs(G.steerability(v, "A", "B") - np.log(c)) < 1e-12
    out = G.renyi2_eof_bounds(v, "A", "B")
    # pure state: every quantity in the hierarchy equals ln c
    for k in ("half_mi", "optimized", "steerability", "upper_gamma_sharp"):
        assert abs(out[k] - np.log(c)) < 1e-10
    assert out["hierarchy_ok"]


def test_thermal_symplectic_spectrum():
    v = np.diag([1.5, 1.5, 4.0, 4.0])
    assert np.allclose(G.symplectic_eigs(v), [1.5, 4.0])
    assert abs(G.g_functions(np.diag([0.5, 0.5]))["g_minus"] - np.log(2)) < 1e-14


def test_cmi_against_independent_logdets():
    v = G.random_pd(ABC, np.random.default_rng(0))
    m = v.mat
    i = lambda *ix: np.ix_(sum(ix, []), sum(ix, []))  # noqa: E731
    a, b, c = [0, 1], [2, 3], [4, 5]
    ref = 0.5 * (ld(m[i(a, c)]) + ld(m[i(b, c)]) - ld(m) - ld(m[i(c)]))
    ids = G.cmi_identities(v, "A", "B", "C")
    for k in ("direct", "schur", "inverse"):
        assert abs(ids[k] - ref) < 1e-10


def test_classical_unit_matrices():
    v = G.random_pd(ABC, np.random.default_rng(1), unit=1)
    assert v.mat.shape == (3, 3)
    ids = G.cmi_identities(v, "A", "B", "C")
    assert abs(ids["direct"] - ids["inverse"]) < 1e-10


def test_markov_instance_saturates_everything():
    v = G.random_pd(ABC, np.random.default_rng(2))
    mk = G.CovMatrix(G.v_tilde(v, "A", "B", "C"), ABC)
    out = G.saturation_tests(mk, "A", "B", "C")
    assert out["agree"] and all(out["saturated"].values())
    assert np.abs(G.petz_recovered(mk, "A", "B", "C") - mk.mat).max() < 1e-10


def test_petz_channel_output_matches_closed_form():
    v = G.random_pd(ABC, np.random.default_rng(3))
    assert np.abs(G.petz_recovered(v, "A", "B", "C") - G.v_tilde(v, "A", "B", "C")).max() < 1e-10


def test_rel_ent_to_petz_equals_cmi():
    v = G.random_pd(ABC, np.random.default_rng(4))
    d = G.gaussian_rel_ent(v.mat, G.petz_recovered(v, "A", "B", "C"))
    assert abs(d - G.logdet_cmi(v, "A", "B", "C")) < 1e-10


def test_williamson_reconstruction():
    q = G.random_qcm(AB, np.random.default_rng(5))
    s, nu = G.williamson(q.mat)
    om = G.omega(2)
    assert np.abs(s @ om @ s.T - om).max() < 1e-9
    assert np.abs(s @ np.diag(np.repeat(nu, 2)) @ s.T - q.mat).max() < 1e-9


def test_purification_marginal_and_purity():
    q = G.random_qcm(AB, np.random.default_rng(6))
    p = G.purify(q)
    assert abs(G.is_qcm(p.mat).purity_defect) < 1e-8
    assert np.abs(p.sub(["A", "B"]).mat - q.mat).max() < 1e-10


def test_gamma_sharp_is_pure_and_below():
    q = G.random_qcm(AB, np.random.default_rng(7))
    gs = G.gamma_sharp(q.mat)
    assert abs(G.is_qcm(gs).purity_defect) < 1e-8
    assert np.linalg.eigvalsh(q.mat - gs).min() > -1e-9
    pure = tmsv(2.0).mat
    assert np.abs(G.gamma_sharp(pure) - pure).max() < 1e-9


def test_measurement_family_converges_with_pure_outputs():
    q = G.random_qcm(AB, np.random.default_rng(8), nu_max=2.0)
    tau = G.renyi2_eof_bounds(q, "A", "B", restarts=2)["tau"]
    fam = G.measurement_limit_family(q, tau, [1e-1, 1e-2, 1e-3, 1e-4])
    dist = [f["distance"] for f in fam]
    assert all(b < a for a, b in zip(dist, dist[1:]))
    assert max(f["distance"] / f["t"] for f in fam) < 10.0
    assert max(abs(f["purity_defect"]) for f in fam) < 1e-7


def test_non_qcm_rejected():
    # CovMatrix itself only insists on symmetric positive definite
    with pytest.raises(ValidationError):
        G.CovMatrix(-np.eye(2), [("A", 1)])
    with pytest.raises(ValidationError):
        G.renyi2_eof_bounds(G.CovMatrix(0.5 * np.eye(4), AB), "A", "B")
    with pytest.raises(ValidationError):
        G.gamma_sharp(0.5 * np.eye(2))


def test_steerability_rejects_unknown_label():
    with pytest.raises(ValidationError):
        G.steerability(tmsv(2.0), "A", "Q")


def test_json_xxpp_ordering_roundtrip(tmp_path):
    q = G.random_qcm([("A", 2)], np.random.default_rng(9))
    perm = np.array([0, 2, 1, 3])  # interleaved → xxpp
    xx = q.mat[np.ix_(perm, perm)]
    f = tmp_path / "v.json"
    f.write_text(json.dumps({"mat": xx.tolist(), "parts": [["A", 2]], "ordering": {"A": "xxpp"}}))
    assert np.allclose(G.load_cov(f).mat, q.mat)


def test_parse_parts():
    assert G.parse_parts("A:2,B:1") == (("A", 2), ("B", 1))
    with pytest.raises(ValidationError):
        G.parse_parts("A:two")


def test_fixture_is_symmetric_8x8():
    v = fixtures.gmono8x8()
    assert v.mat.shape == (8, 8) and np.allclose(v.mat, v.mat.T)
    assert v.labels == ["A", "B1", "B2"]


def test_nondeterministic_map_wrong_size():
    v = G.random_qcm(AB, np.random.default_rng(10))
    with pytest.raises(ValidationError):
        G.nondeterministic_apply(np.eye(2), v, "B")


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_ssa_and_lower_bound_chain(seed):
    v = G.random_pd(ABC, np.random.default_rng(seed))
    assert G.ssa_operator_check(v, "A", "B", "C")["holds"]
    lb = G.cmi_lower_bound(v, "A", "B", "C")
    assert lb["cmi"] >= lb["bound1"] - 1e-9 and lb["bound1"] >= lb["bound2"] - 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_qcm_inequalities(seed):
    v = G.random_qcm(ABC, np.random.default_rng(seed))
    assert G.log_det_inequality(v, "A", "B", "C") >= -1e-9
    assert G.schur_monogamy_gap(v, "A", "B", "C") >= -1e-9
    assert G.steer_monogamy(v, "A", ["B", "C"])["gap1_ok"]


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 5))
def test_rank_additivity(seed, k):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((6, 4))
    r1, r2 = G.rank_additivity(g @ g.T + np.diag(np.r_[np.ones(k), np.zeros(6 - k)]), k)
    assert r1 == r2


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0.0, 1.0))
def test_geometric_mean_properties(seed, t):
    rng = np.random.default_rng(seed)
    a = G.random_pd(AB, rng).mat
    b = G.random_pd(AB, rng).mat
    m = G.weighted_geomean(a, b, t)
    # det(A #_t B) = det(A)^{1−t} det(B)^t
    assert abs(ld(m) - ((1 - t) * ld(a) + t * ld(b))) < 1e-8
    assert np.allclose(G.geometric_mean(a, b), G.geometric_mean(b, a), atol=1e-8)
