"""Binary-input cq channels: combining, duality, and entropy bounds."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .entropy import binary_entropy as h2
from .entropy import binary_entropy_inv as h2inv
from .entropy import relative_entropy, shannon, von_neumann
from .numkernel import (LN2, ValidationError, _arr, eigh, fidelity, ket, msqrt, proj,
                        random_pure, random_state)


@dataclass(frozen=True)
class BinaryCqChannel:
    """Uniform binary input x ↦ out[x]."""

    out0: np.ndarray
    out1: np.ndarray

    def __post_init__(self):
        a, b = np.array(_arr(self.out0)), np.array(_arr(self.out1))
        if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError("channel outputs must be square and of equal size")
        object.__setattr__(self, "out0", a)
        object.__setattr__(self, "out1", b)

    @property
    def dim(self) -> int:
        return self.out0.shape[0]

    def out(self, x: int) -> np.ndarray:
        return self.out1 if x else self.out0


# ----------------------------------------------------- classical bounds

def convolve(a, b):
    return a * (1 - b) + (1 - a) * b


def _check_h(*hs):
    for h in hs:
        if np.any(np.asarray(h) < -1e-12) or np.any(np.asarray(h) > LN2 + 1e-12):
            raise ValidationError("entropies must lie in [0, ln 2]")


def classical_mgl(h1, h2_):
    _check_h(h1, h2_)
    return h2(convolve(h2inv(h1), h2inv(h2_)))


def classical_upper(h1, h2_):
    _check_h(h1, h2_)
    return LN2 - (LN2 - np.asarray(h1)) * (LN2 - np.asarray(h2_)) / LN2


def gx_lower(h):
    _check_h(h)
    h = np.asarray(h, dtype=float)
    out = 0.799 * h * (LN2 - h) / LN2 + h
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------- channels

def bsc(p: float) -> BinaryCqChannel:
    return BinaryCqChannel(np.diag([1 - p, p]).astype(complex), np.diag([p, 1 - p]).astype(complex))


def bec(eps: float) -> BinaryCqChannel:
    """Outputs (1−ε)|x⟩⟨x| + ε|e⟩⟨e| on a qutrit."""
    e = proj(ket(2, 3))
    return BinaryCqChannel((1 - eps) * proj(ket(0, 3)) + eps * e,
                           (1 - eps) * proj(ket(1, 3)) + eps * e)


def pure_channel(alpha: float) -> BinaryCqChannel:
    """Outputs |0⟩ and cos α|0⟩ + sin α|1⟩."""
    return BinaryCqChannel(proj([1, 0]), proj([np.cos(alpha), np.sin(alpha)]))


def channel_entropy(w: BinaryCqChannel) -> float:
    """H(X|B) = ln 2 + ½ΣH(ρ_x) − H(ρ̄)."""
    avg = 0.5 * (w.out0 + w.out1)
    return float(LN2 + 0.5 * (von_neumann(w.out0) + von_neumann(w.out1)) - von_neumann(avg))


def box_combine(w1: BinaryCqChannel, w2: BinaryCqChannel) -> BinaryCqChannel:
    """u ↦ ½ Σ_{u₂} ρ¹_{u⊕u₂} ⊗ ρ²_{u₂}."""
    outs = [0.5 * sum(np.kron(w1.out(u ^ v), w2.out(v)) for v in (0, 1)) for u in (0, 1)]
    return BinaryCqChannel(*outs)


def varo_combine(w1: BinaryCqChannel, w2: BinaryCqChannel) -> BinaryCqChannel:
    """u ↦ ½ Σ_{u₁} |u₁⟩⟨u₁| ⊗ ρ¹_{u₁⊕u} ⊗ ρ²_u."""
    outs = [0.5 * sum(np.kron(proj(ket(a, 2)), np.kron(w1.out(a ^ u), w2.out(u))) for a in (0, 1))
            for u in (0, 1)]
    return BinaryCqChannel(*outs)


def _purification(rho: np.ndarray) -> np.ndarray:
    """|φ⟩ = Σ_y √λ_y |e_y⟩|y⟩ on B ⊗ R, R a copy of B."""
    w, u = eigh(rho)
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)).ravel()


def dual_channel(w: BinaryCqChannel) -> BinaryCqChannel:
    """Complementary channel on conjugate-basis inputs; outputs live on R ⊗ Z.

    |σ̃_x⟩ = (1/√2) Σ_z (−1)^{xz} |φ_z⟩_{BR} |z⟩, then B is traced out.
    """
    d = w.dim
    phis = [_purification(w.out(z)).reshape(d, d) for z in (0, 1)]
    outs = []
    for x in (0, 1):
        psi = np.zeros((d, d, 2), dtype=complex)
        for z in (0, 1):
            psi[:, :, z] = (-1) ** (x * z) * phis[z] / np.sqrt(2)
        m = psi.reshape(d, 2 * d)
        outs.append(m.T @ m.conj())
    return BinaryCqChannel(*outs)


def duality_swap_check(w1: BinaryCqChannel, w2: BinaryCqChannel, tol: float = 1e-7) -> dict:
    d1, d2 = dual_channel(w1), dual_channel(w2)
    a = channel_entropy(box_combine(d1, d2))
    b = channel_entropy(dual_channel(varo_combine(w1, w2)))
    c = channel_entropy(varo_combine(d1, d2))
    e = channel_entropy(dual_channel(box_combine(w1, w2)))
    return {"box_of_duals": a, "dual_of_varo": b, "varo_of_duals": c, "dual_of_box": e,
            "ok": bool(abs(a - b) < tol and abs(c - e) < tol)}


# ------------------------------------------------------ quantum bounds

def _arccos(x):
    return np.arccos(np.clip(x, -1.0, 1.0))


def _lift(h, f, g):
    """h − 2 ln cos[½ arccos(f·g) − ½ arccos(g)]."""
    return h - 2.0 * np.log(np.cos(0.5 * _arccos(f * g) - 0.5 * _arccos(g)))


def qmgl_two_terms(h1: float, h2_: float) -> np.ndarray:
    """The four candidate lower bounds for independent, different pairs."""
    _check_h(h1, h2_)
    a1 = 1 - 2 * h2inv(LN2 - h1)
    a2 = 1 - 2 * h2inv(LN2 - h2_)
    b1 = 1 - 2 * h2inv(h1)
    b2 = 1 - 2 * h2inv(h2_)
    return np.array([
        _lift(h1, a1, np.exp(h2_) - 1),
        _lift(h2_, a2, np.exp(h1) - 1),
        _lift(h2_, b1, 2 * np.exp(-h2_) - 1),
        _lift(h1, b2, 2 * np.exp(-h1) - 1),
    ])


def qmgl_two(h1: float, h2_: float) -> float:
    return float(np.max(qmgl_two_terms(h1, h2_)))


def _qmgl_iid_branch(h: float, mirrored: bool) -> float:
    f = 1 - 2 * h2inv(LN2 - h if mirrored else h)
    return float(_lift(h, f, f))


def qmgl_iid(h: float) -> float:
    """Lower bound on H(X₁+X₂|B₁B₂) for two identical pairs of entropy h."""
    _check_h(h)
    if abs(h - 0.5 * LN2) <= 1e-12:
        return max(_qmgl_iid_branch(h, False), _qmgl_iid_branch(h, True))
    return _qmgl_iid_branch(h, h > 0.5 * LN2)


def qmgl_iid_convenient(h: float) -> float:
    _check_h(h)
    x = h if h <= 0.5 * LN2 else LN2 - h
    if x <= 0:
        return float(h)
    return float(h + 0.083 * x / (1 - np.log(x)))


def conjecture_bounds(h1: float, h2_: float) -> dict:
    """Conjectured optimal lower and upper bounds on H(X₁+X₂|B₁B₂)."""
    _check_h(h1, h2_)
    if h1 + h2_ <= LN2:
        lower = classical_mgl(h1, h2_)
    else:
        lower = h1 + h2_ - LN2 + h2(convolve(h2inv(LN2 - h1), h2inv(LN2 - h2_)))
    return {"lower": float(lower), "upper": float(classical_upper(h1, h2_))}


def pure_petz_value(f: float) -> float:
    """−ln[½(1 + f² + (1−f²)^{3/2})] for pure outputs with overlap f."""
    return float(-np.log(0.5 * (1 + f * f + (1 - f * f) ** 1.5)))


# ------------------------------------------------------------ scanning

def sample_channel(dim: int, rng: np.random.Generator, kind: str = "mixed") -> BinaryCqChannel:
    if kind == "pure":
        return BinaryCqChannel(random_pure(dim, rng), random_pure(dim, rng))
    return BinaryCqChannel(random_state(dim, rng), random_state(dim, rng))


def scan_row(w1: BinaryCqChannel, w2: BinaryCqChannel) -> dict:
    h1, h2_ = channel_entropy(w1), channel_entropy(w2)
    hm = channel_entropy(box_combine(w1, w2))
    hp = channel_entropy(varo_combine(w1, w2))
    cb = conjecture_bounds(min(max(h1, 0), LN2), min(max(h2_, 0), LN2))
    return {"H1": h1, "H2": h2_, "H_minus": hm, "H_plus": hp,
            "qmgl_two": qmgl_two(min(max(h1, 0), LN2), min(max(h2_, 0), LN2)),
            "conj_lower": cb["lower"], "conj_upper": cb["upper"]}


SCAN_COLUMNS = ["i", "H1", "H2", "H_minus", "H_plus", "qmgl_two", "conj_lower", "conj_upper"]


def _batch_entropy(m: np.ndarray) -> np.ndarray:
    w = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.sum(np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0), axis=-1)


def _batch_channel_entropy(o0: np.ndarray, o1: np.ndarray) -> np.ndarray:
    return LN2 + 0.5 * (_batch_entropy(o0) + _batch_entropy(o1)) - _batch_entropy(0.5 * (o0 + o1))


def _bkron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, d1, _ = a.shape
    d2 = b.shape[1]
    return np.einsum("nij,nkl->nikjl", a, b).reshape(n, d1 * d2, d1 * d2)


def _batch_states(n: int, dim: int, rng: np.random.Generator, ranks: np.ndarray) -> np.ndarray:
    t = rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))
    t = t * (np.arange(dim)[None, None, :] < ranks[:, None, None])
    m = t @ np.conj(np.transpose(t, (0, 2, 1)))
    return m / np.trace(m, axis1=1, axis2=2).real[:, None, None]


def batch_scan_rows(a0, a1, b0, b1) -> dict:
    """Vectorized rows for channel pairs given as stacked output arrays."""
    h1 = np.clip(_batch_channel_entropy(a0, a1), 0.0, LN2)
    h2_ = np.clip(_batch_channel_entropy(b0, b1), 0.0, LN2)
    m0 = 0.5 * (_bkron(a0, b0) + _bkron(a1, b1))
    m1 = 0.5 * (_bkron(a1, b0) + _bkron(a0, b1))
    hm = _batch_channel_entropy(m0, m1)
    # ⊛ outputs are block diagonal in the flag: H = ln 2 + mean block entropy
    blocks = {(a, u): _bkron([a0, a1][a ^ u], [b0, b1][u]) for a in (0, 1) for u in (0, 1)}
    hs = {k: _batch_entropy(v) for k, v in blocks.items()}
    avg_u = [LN2 + 0.5 * (hs[(0, u)] + hs[(1, u)]) for u in (0, 1)]
    mix = _batch_entropy(0.5 * (blocks[(0, 0)] + blocks[(0, 1)]))
    mix2 = _batch_entropy(0.5 * (blocks[(1, 0)] + blocks[(1, 1)]))
    hbar = LN2 + 0.5 * (mix + mix2)
    hp = LN2 + 0.5 * (avg_u[0] + avg_u[1]) - hbar
    terms = qmgl_two_terms(h1, h2_)
    low_a = classical_mgl(h1, h2_)
    low_b = h1 + h2_ - LN2 + h2(convolve(h2inv(LN2 - h1), h2inv(LN2 - h2_)))
    return {"H1": h1, "H2": h2_, "H_minus": hm, "H_plus": hp,
            "qmgl_two": np.max(terms, axis=0),
            "conj_lower": np.where(h1 + h2_ <= LN2, low_a, low_b),
            "conj_upper": classical_upper(h1, h2_)}


def random_cq_scan(count: int, dim: int = 2, prior: str = "uniform", seed: int = 0,
                   slack: float = 1e-7, chunk: int = 4096) -> dict:
    """Sample channel pairs and tabulate H_minus against every bound.

    ``prior="uniform"`` draws Hilbert-Schmidt mixed outputs; ``prior="random"``
    draws each output's rank uniformly (pure outputs included), the
    over-parametrized flavour. Proven bounds must never be violated; the
    conjectured ones are only counted.
    """
    if prior not in ("uniform", "random"):
        raise ValidationError("prior must be 'uniform' or 'random'")
    rng = np.random.default_rng(seed)
    cols = {k: [] for k in SCAN_COLUMNS[1:]}
    done = 0
    while done < count:
        n = min(chunk, count - done)
        if prior == "uniform":
            ranks = np.full((4, n), dim)
        else:
            ranks = rng.integers(1, dim + 1, size=(4, n))
        st = [_batch_states(n, dim, rng, ranks[k]) for k in range(4)]
        part = batch_scan_rows(*st)
        for k in cols:
            cols[k].append(part[k])
        done += n
    cols = {k: np.concatenate(v) for k, v in cols.items()}
    viol = {
        "proven": int(np.sum(cols["H_minus"] < cols["qmgl_two"] - slack)),
        "max_h": int(np.sum(cols["H_minus"] < np.maximum(cols["H1"], cols["H2"]) - slack)),
        "chain": int(np.sum(np.abs(cols["H_minus"] + cols["H_plus"] - cols["H1"] - cols["H2"]) > 1e-8)),
        "conj_lower": int(np.sum(cols["H_minus"] < cols["conj_lower"] - slack)),
        "conj_upper": int(np.sum(cols["H_minus"] > cols["conj_upper"] + slack)),
    }
    rows = [dict(i=i, **{k: float(cols[k][i]) for k in cols}) for i in range(count)]
    return {"rows": rows, "violations": viol}


def scan_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(SCAN_COLUMNS)
    for r in rows:
        wr.writerow([r["i"]] + [f"{r[c]:.12e}" for c in SCAN_COLUMNS[1:]])
    return buf.getvalue()


# -------------------------------------------------- concavity windows

def concavity_bounds(states, probs) -> dict:
    """Concavity gap of the entropy and its three lower estimates."""
    rhos = [_arr(s) for s in states]
    p = np.asarray(probs, dtype=float)
    if abs(p.sum() - 1) > 1e-10 or np.any(p < 0):
        raise ValidationError("probabilities must form a distribution")
    k, d = len(rhos), rhos[0].shape[0]
    lhs = von_neumann(sum(pi * r for pi, r in zip(p, rhos))) - float(sum(pi * von_neumann(r) for pi, r in zip(p, rhos)))
    roots = [msqrt(r) for r in rhos]
    big = np.zeros((k * d, k * d), dtype=complex)
    diag = np.zeros_like(big)
    for i in range(k):
        diag[i * d:(i + 1) * d, i * d:(i + 1) * d] = p[i] * rhos[i]
        for j in range(k):
            big[i * d:(i + 1) * d, j * d:(j + 1) * d] = np.sqrt(p[i] * p[j]) * roots[i] @ roots[j]
    hp = shannon(p)
    eqform = hp - relative_entropy(big, diag).value
    s_sqrt = s_fid = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            w = np.sqrt(p[i] * p[j])
            s_sqrt += w * np.real(np.trace(roots[i] @ roots[j]))
            s_fid += w * fidelity(rhos[i], rhos[j])
    return {"lhs": float(lhs), "eqform": float(eqform),
            "lb_sqrt": float(hp - np.log(1 + 2 * s_sqrt)),
            "lb_fid": float(hp - np.log(1 + 2 * s_fid))}


def fidelity_entropy_window(s0, s1, tol: float = 1e-9) -> dict:
    """e^H − 1 ≤ F(σ₀,σ₁) ≤ 1 − 2h₂⁻¹(ln 2 − H) for the uniform pair channel."""
    w = BinaryCqChannel(s0, s1)
    h = min(max(channel_entropy(w), 0.0), LN2)
    f = fidelity(s0, s1)
    lo = np.exp(h) - 1
    hi = 1 - 2 * h2inv(LN2 - h)
    return {"f": f, "H": h, "lower": float(lo), "upper": float(hi),
            "ok": bool(lo - tol <= f <= hi + tol)}
