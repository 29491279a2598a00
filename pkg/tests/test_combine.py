import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entroscope import combine as C
from entroscope import numkernel as nk
from entroscope.entropy import binary_entropy as h2

LN2 = np.log(2)
seeds = st.integers(0, 2**32 - 1)
hs = st.floats(0.0, float(LN2))


def test_bsc_entropy_is_binary_entropy():
    assert abs(C.channel_entropy(C.bsc(0.11)) - 0.346515336918666152) < 1e-13


def test_bec_entropy_and_combinations():
    e1, e2 = 0.3, 0.6
    assert abs(C.channel_entropy(C.bec(e1)) - e1 * LN2) < 1e-13
    minus = C.channel_entropy(C.box_combine(C.bec(e1), C.bec(e2)))
    plus = C.channel_entropy(C.varo_combine(C.bec(e1), C.bec(e2)))
    assert abs(minus - (e1 + e2 - e1 * e2) * LN2) < 1e-12
    assert abs(plus - e1 * e2 * LN2) < 1e-12


def test_pure_channel_entropy():
    # overlap cos α = 1/2: H = ln 2 − h((1 + 1/2)/2)
    assert abs(C.channel_entropy(C.pure_channel(np.pi / 3)) - (LN2 - h2(0.75))) < 1e-13


def test_bsc_box_is_bsc_of_convolution():
    minus = C.channel_entropy(C.box_combine(C.bsc(0.1), C.bsc(0.2)))
    assert abs(minus - h2(0.1 * 0.8 + 0.9 * 0.2)) < 1e-13
    assert abs(C.classical_mgl(h2(0.1), h2(0.2)) - minus) < 1e-10


def test_dual_of_bsc_and_bec():
    assert abs(C.channel_entropy(C.dual_channel(C.bsc(0.11))) - (LN2 - h2(0.11))) < 1e-12
    d = C.dual_channel(C.bec(0.3))
    assert abs(C.channel_entropy(d) - 0.7 * LN2) < 1e-12
    assert abs(nk.fidelity(d.out0, d.out1) - nk.fidelity(C.bec(0.7).out0, C.bec(0.7).out1)) < 1e-12


def test_classical_upper_is_attained_by_becs():
    minus = C.channel_entropy(C.box_combine(C.bec(0.3), C.bec(0.6)))
    assert abs(C.classical_upper(0.3 * LN2, 0.6 * LN2) - minus) < 1e-12


def test_qmgl_iid_branches_meet_at_half():
    h = 0.5 * LN2
    assert abs(C.qmgl_iid(h - 1e-9) - C.qmgl_iid(h + 1e-9)) < 1e-6


def test_pure_petz_value_limits():
    assert abs(C.pure_petz_value(1.0)) < 1e-15
    assert abs(C.pure_petz_value(0.0)) < 1e-15
    # f = 0.6: ½(1 + 0.36 + 0.64^{3/2}) = 0.936
    assert abs(C.pure_petz_value(0.6) - 0.066139802504545005) < 1e-14


def test_entropy_range_check():
    with pytest.raises(nk.ValidationError):
        C.conjecture_bounds(-0.1, 0.2)


def test_batch_matches_scalar_row():
    rng = np.random.default_rng(3)
    w1, w2 = C.sample_channel(2, rng), C.sample_channel(2, rng)
    a = C.scan_row(w1, w2)
    b = C.batch_scan_rows(*[x[None] for x in (w1.out0, w1.out1, w2.out0, w2.out1)])
    for k in a:
        assert abs(a[k] - float(b[k][0])) < 1e-10


def test_scan_is_seed_deterministic():
    a = C.scan_csv(C.random_cq_scan(50, seed=9)["rows"])
    b = C.scan_csv(C.random_cq_scan(50, seed=9)["rows"])
    assert a == b


def test_concavity_equality_form_single_pair():
    rng = np.random.default_rng(5)
    out = C.concavity_bounds([nk.random_state(2, rng), nk.random_state(2, rng)], [0.3, 0.7])
    assert abs(out["lhs"] - out["eqform"]) < 1e-10
    assert out["lhs"] >= out["lb_fid"] - 1e-10


@settings(max_examples=40, deadline=None)
@given(hs, hs)
def test_bounds_are_ordered(h1, h2_):
    lo = C.qmgl_two(h1, h2_)
    cb = C.conjecture_bounds(h1, h2_)
    assert lo <= cb["lower"] + 1e-9
    assert max(h1, h2_) - 1e-9 <= cb["lower"] <= cb["upper"] + 1e-9 <= LN2 + 2e-9
    assert abs(C.qmgl_two(h1, h2_) - C.qmgl_two(h2_, h1)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(hs)
def test_iid_bound_at_least_two_pair_bound(h):
    assert C.qmgl_iid(h) >= C.qmgl_two(h, h) - 1e-9
    assert C.qmgl_iid(h) >= C.qmgl_iid_convenient(h) - 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([2, 4]))
def test_chain_rule_and_duality(seed, d):
    rng = np.random.default_rng(seed)
    w1, w2 = C.sample_channel(d, rng), C.sample_channel(d, rng)
    r = C.scan_row(w1, w2)
    assert abs(r["H_minus"] + r["H_plus"] - r["H1"] - r["H2"]) < 1e-9
    assert abs(C.channel_entropy(w1) + C.channel_entropy(C.dual_channel(w1)) - LN2) < 1e-9
    assert C.duality_swap_check(w1, w2)["ok"]


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_fidelity_window(seed):
    rng = np.random.default_rng(seed)
    assert C.fidelity_entropy_window(nk.random_state(2, rng), nk.random_state(2, rng))["ok"]
