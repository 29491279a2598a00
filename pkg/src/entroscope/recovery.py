"""Recovery maps and recoverability quantities.

Tripartite states are ordered (A, B, C). A recovery map acts C → BC, so the
recovered state is (I_A ⊗ R)(ρ_AC), ordered (A, B, C) again.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _isometry
from .entropy import cqmi, dlog_adjoint, measured_relative_entropy, relative_entropy
from .numkernel import (EIG_TOL, ValidationError, _arr, bloch_state, eigh, fidelity,
                        ket, mpow, msqrt, partial_trace, permute_systems, proj, tensor)

REL_EPS = 1e-9


def _lift(y: np.ndarray, d_lead: int, d_x: int, d_c: int) -> np.ndarray:
    """Y on (L, C) ↦ Y ⊗ 1_X reordered to (L, X, C)."""
    m = np.kron(y, np.eye(d_x))
    return permute_systems(m, [0, 2, 1], [d_lead, d_c, d_x])


def petz_map_apply(ref_xc, dims_xc: Sequence[int], inp, d_lead: int = 1) -> np.ndarray:
    """Petz map ρ_XC^{1/2} ρ_C^{-1/2} (·) ρ_C^{-1/2} ρ_XC^{1/2}, C → XC.

    ``inp`` lives on (L, C) where L is an untouched leading system of size
    ``d_lead``; the output lives on (L, X, C). Inverses act on supports.
    """
    return rotated_petz_apply(ref_xc, dims_xc, 0.0, inp, d_lead)


def rotated_petz_apply(ref_xc, dims_xc: Sequence[int], t: float, inp, d_lead: int = 1) -> np.ndarray:
    """ρ_XC^{(1+it)/2} ρ_C^{(−1−it)/2} (·) ρ_C^{(−1+it)/2} ρ_XC^{(1−it)/2}."""
    d_x, d_c = dims_xc
    ref = _arr(ref_xc)
    y = _arr(inp)
    if y.shape[0] != d_lead * d_c:
        raise ValidationError(f"input of size {y.shape[0]} does not match {d_lead}x{d_c}")
    rc = partial_trace(ref, [1], dims_xc)
    left = np.kron(np.eye(d_lead), mpow(ref, (1 + 1j * t) / 2))
    inner = np.kron(np.eye(d_lead), np.kron(np.eye(d_x), mpow(rc, (-1 - 1j * t) / 2)))
    k = left @ inner
    out = k @ _lift(y, d_lead, d_x, d_c) @ k.conj().T
    return 0.5 * (out + out.conj().T)


def petz_recovered(rho, dims: Sequence[int], t: float = 0.0) -> np.ndarray:
    """(I_A ⊗ R^{[t]}_{C→BC})(ρ_AC) for ρ on (A, B, C)."""
    da, db, dc = dims
    r = _arr(rho)
    rbc = partial_trace(r, [1, 2], dims)
    rac = partial_trace(r, [0, 2], dims)
    return rotated_petz_apply(rbc, (db, dc), t, rac, d_lead=da)


# ------------------------------------------------------------ β₀ average

def beta0(t):
    """π/2 (cosh πt + 1)⁻¹, written as (π/4) sech²(πt/2) to stay finite for large |t|."""
    e = np.exp(-np.pi * np.abs(np.asarray(t, dtype=float)))
    return np.pi * e / (1.0 + e) ** 2


@dataclass(frozen=True)
class RotatedPetzFamily:
    t: np.ndarray
    weights: np.ndarray
    tail_mass: float


def beta0_quadrature(t_max: float = 8.0, nodes: int = 129) -> RotatedPetzFamily:
    """Trapezoid nodes on |t| ≤ t_max, renormalized; tail mass is analytic."""
    t = np.linspace(-t_max, t_max, nodes)
    w = beta0(t)
    w[0] *= 0.5
    w[-1] *= 0.5
    w = w / w.sum()
    # ∫_{|t|>T} β₀ = 1 − tanh(πT/2)
    tail = float(1.0 - np.tanh(np.pi * t_max / 2.0))
    return RotatedPetzFamily(t, w, tail)


def beta0_averaged_state(rho, dims: Sequence[int], quad: RotatedPetzFamily | None = None):
    """Σ_k w_k (I_A ⊗ R^{[t_k]})(ρ_AC). Returns (state, tail_flag)."""
    quad = beta0_quadrature() if quad is None else quad
    out = sum(w * petz_recovered(rho, dims, t) for t, w in zip(quad.t, quad.weights))
    return 0.5 * (out + out.conj().T), quad.tail_mass > 1e-4


# ------------------------------------------ channels as Stinespring maps

def _apply_iso(v3: np.ndarray, rac4: np.ndarray) -> np.ndarray:
    """σ[a,o,b,f] = Σ V[o,e,c] ρ[a,c,b,d] V̄[f,e,d], flattened to (A·O)²."""
    s = np.einsum("oec,acbd,fed->aobf", v3, rac4, v3.conj(), optimize=True)
    da, do = s.shape[0], s.shape[1]
    return s.reshape(da * do, da * do)


def _pull_iso(v3: np.ndarray, rac4: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gradient wrt V of Re Tr(G σ(V)) for Hermitian G."""
    da = rac4.shape[0]
    do = v3.shape[0]
    g4 = g.reshape(da, do, da, do)
    return 2.0 * np.einsum("aobf,fed,bdac->oec", g4, v3, rac4, optimize=True)


def choi_from_iso(v3: np.ndarray) -> np.ndarray:
    """Choi matrix Σ |c⟩⟨c'| ⊗ R(|c⟩⟨c'|), input first."""
    do, de, dc = v3.shape
    j = np.einsum("oec,fed->codf", v3, v3.conj())
    return j.reshape(dc * do, dc * do)


def apply_choi(j: np.ndarray, rac, d_in: int, d_out: int, d_lead: int) -> np.ndarray:
    r4 = _arr(rac).reshape(d_lead, d_in, d_lead, d_in)
    j4 = j.reshape(d_in, d_out, d_in, d_out)
    s = np.einsum("acbd,codf->aobf", r4, j4)
    return s.reshape(d_lead * d_out, d_lead * d_out)


def _choi_gradient(g: np.ndarray, rac4: np.ndarray, d_out: int) -> np.ndarray:
    """Gj with Tr(G σ(J)) = Tr(Gj J)."""
    da, dc = rac4.shape[0], rac4.shape[1]
    g4 = g.reshape(da, d_out, da, d_out)
    gj = np.einsum("bfao,acbd->dfco", g4, rac4)
    return gj.reshape(dc * d_out, dc * d_out)


def _lmo_gap(gj: np.ndarray, j: np.ndarray, d_in: int, d_out: int) -> float:
    """Upper bound on ⟨G, J⟩ − min_{J' TP-PSD} ⟨G, J'⟩ via a dual-feasible Y."""
    gjj = (gj @ j).reshape(d_in, d_out, d_in, d_out)
    y = np.einsum("ioko->ik", gjj)
    y = 0.5 * (y + y.conj().T)
    lam = np.linalg.eigvalsh(gj - np.kron(y, np.eye(d_out))).min()
    y = y + lam * np.eye(d_in)
    return float(np.real(np.trace(gj @ j)) - np.real(np.trace(y)))


def _petz_isometry(rho, dims) -> np.ndarray:
    """A Stinespring isometry for the (support-completed) Petz map C → BC."""
    da, db, dc = dims
    r = _arr(rho)
    rbc = partial_trace(r, [1, 2], dims)
    rc = partial_trace(r, [2], dims)
    # Kraus operators K_{b} = ρ_BC^{1/2}(|b⟩ ⊗ ρ_C^{-1/2}); pad the kernel of ρ_C
    half = mpow(rbc, 0.5)
    ic = mpow(rc, -0.5)
    w, u = eigh(rc)
    ker = u[:, w <= EIG_TOL]
    kraus = [half @ np.kron(ket(b, db)[:, None], ic) for b in range(db)]
    if ker.shape[1]:
        for b in range(db):
            kraus.append(np.kron(ket(b, db)[:, None], ker @ ker.conj().T) / np.sqrt(db))
    do = db * dc
    de = do * dc
    v3 = np.zeros((do, de, dc), dtype=complex)
    for e, k in enumerate(kraus[:de]):
        v3[:, e, :] = k
    return v3


@dataclass
class RecoveryResult:
    value: float
    choi: np.ndarray
    gap: float
    iterations: int
    state: np.ndarray
    lower: float = float("nan")
    iso: np.ndarray | None = None


def _optimize_recovery(rho, dims, objective, restarts: int, rng, maxiter: int, extra_starts=()):
    da, db, dc = dims
    r = _arr(rho)
    rac4 = partial_trace(r, [0, 2], dims).reshape(da, dc, da, dc)
    do = db * dc
    de = do * dc
    shape = (do, de, dc)

    def fg(vflat):
        v3 = vflat.reshape(shape)
        sig = _apply_iso(v3, rac4)
        f, g = objective(sig)
        return f, _pull_iso(v3, rac4, g).reshape(vflat.shape)

    starts = [_petz_isometry(r, dims)] + list(extra_starts)
    for _ in range(restarts):
        starts.append(_isometry.random_isometry(do * de, dc, rng).reshape(shape))
    best = None
    total = 0
    for v0 in starts:
        # zero Kraus slots are stationary; a small kick lets them enter
        kick = rng.standard_normal(v0.shape) + 1j * rng.standard_normal(v0.shape)
        v0 = _isometry.polar((v0 + 1e-3 * kick).reshape(do * de, dc))[0]
        v, f, nit = _isometry.minimize_isometry(fg, v0, maxiter=maxiter)
        total += nit
        if best is None or f < best[1]:
            best = (v.reshape(shape), f)
    v3 = best[0]
    sig = _apply_iso(v3, rac4)
    _, g = objective(sig)
    j = choi_from_iso(v3)
    gap = _lmo_gap(_choi_gradient(g, rac4, do), j, dc, do)
    return v3, j, sig, max(gap, 0.0), total, float(best[1])


def _rel_objective(r: np.ndarray, eps: float):
    d = r.shape[0]
    neg_ent = float(np.real(np.trace(r @ _safe_log(r))))

    def obj(sig):
        se = (1 - eps) * sig + eps * np.eye(d) / d
        se = 0.5 * (se + se.conj().T)
        w, u = np.linalg.eigh(se)
        w = np.clip(w, 1e-300, None)
        val = neg_ent - float(np.real(np.trace(r @ ((u * np.log(w)) @ u.conj().T))))
        return val, (1 - eps) * dlog_adjoint(se, r)

    return obj


def _safe_log(r):
    w, u = np.linalg.eigh(0.5 * (r + r.conj().T))
    lw = np.where(w > EIG_TOL, np.log(np.clip(w, EIG_TOL, None)), 0.0)
    return (u * lw) @ u.conj().T


def _fid_objective(r: np.ndarray):
    sr = msqrt(r)

    def obj(sig):
        m = sr @ sig @ sr
        w, u = np.linalg.eigh(0.5 * (m + m.conj().T))
        w = np.clip(w, 0.0, None)
        f = float(np.sum(np.sqrt(w)))
        inv = np.where(w > 1e-14, 1.0 / np.sqrt(np.where(w > 1e-14, w, 1.0)), 0.0)
        g = 0.5 * sr @ ((u * inv) @ u.conj().T) @ sr
        return -f, -g

    return obj


def relative_entropy_of_recovery(rho, dims: Sequence[int], which: str = "C",
                                 restarts: int = 2, maxiter: int = 5000,
                                 eps: float = REL_EPS, rng=None) -> RecoveryResult:
    """inf_R D(ρ_ABC ‖ (I_A ⊗ R_{C→BC})(ρ_AC)).

    ``which="B"`` instead recovers C from B, i.e. R_{B→BC} applied to ρ_AB.
    ``value`` is attained by the returned channel. ``lower`` is a certified
    lower bound on the infimum: the ε-regularized objective minus its
    Frank-Wolfe duality gap minus ε (regularizing lowers D by at most ε).
    ``gap`` = value − lower.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    r, dims, back = _orient(rho, dims, which)
    v3, j, sig, fw_gap, nit, f_reg = _optimize_recovery(r, dims, _rel_objective(r, eps),
                                                         restarts, rng, maxiter)
    val = relative_entropy(r, sig).value
    if not np.isfinite(val):
        d = r.shape[0]
        val = relative_entropy(r, (1 - eps) * sig + eps * np.eye(d) / d).value
    lower = max(0.0, f_reg - fw_gap - eps)
    return RecoveryResult(float(val), j, float(val) - lower, nit, back(sig), lower, v3)


def fidelity_of_recovery(rho, dims: Sequence[int], which: str = "C", restarts: int = 2,
                         maxiter: int = 5000, rng=None, extra_starts=()) -> RecoveryResult:
    """max_R F(ρ_ABC, (I_A ⊗ R)(ρ_AC))², with F the root fidelity."""
    rng = np.random.default_rng(0) if rng is None else rng
    r, dims, back = _orient(rho, dims, which)
    v3, j, sig, gap, nit, _ = _optimize_recovery(r, dims, _fid_objective(r), restarts, rng,
                                                 maxiter, extra_starts)
    f = fidelity(r, sig)
    petz = fidelity(r, petz_recovered(r, dims))
    return RecoveryResult(max(f, petz) ** 2, j, gap, nit, back(sig), iso=v3)


def _orient(rho, dims, which):
    dims = tuple(int(d) for d in dims)
    r = _arr(rho)
    if which.upper() in ("C", "C-SIDE"):
        return r, dims, lambda s: s
    if which.upper() in ("B", "B-SIDE"):
        da, db, dc = dims
        rs = permute_systems(r, [0, 2, 1], dims)
        return rs, (da, dc, db), lambda s: permute_systems(s, [0, 2, 1], (da, dc, db))
    raise ValidationError(f"unknown recovery side {which!r}")


def measured_relative_entropy_of_recovery(rho, dims, which: str = "C", restarts: int = 2,
                                          rng=None, rec: RecoveryResult | None = None) -> float:
    """Upper estimate of inf_R D_M(ρ ‖ R(ρ)): D_M at the relative-entropy-optimal map.

    Since the map is feasible, the estimate never undercuts the true infimum.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    rec = relative_entropy_of_recovery(rho, dims, which, restarts, rng=rng) if rec is None else rec
    d = rec.state.shape[0]
    sig = (1 - REL_EPS) * rec.state + REL_EPS * np.eye(d) / d
    return measured_relative_entropy(_arr(rho), sig, restarts=4, rng=rng)


# ------------------------------------------------------------ families

def fawzi_fawzi_state(theta: float) -> np.ndarray:
    """Pure state on (A, B, C): (|000⟩ + (cosθ|0⟩_A|1⟩_C + sinθ|1⟩_A|0⟩_C)|1⟩_B)/√2."""
    if not 0.0 <= theta <= np.pi / 2 + 1e-12:
        raise ValidationError("theta must lie in [0, π/2]")
    k = lambda a, b, c: tensor(ket(a, 2), ket(b, 2), ket(c, 2))
    psi = (k(0, 0, 0) + np.cos(theta) * k(0, 1, 1) + np.sin(theta) * k(1, 1, 0)) / np.sqrt(2)
    return proj(psi)


def ccq_state(s0, s1) -> np.ndarray:
    """¼ Σ_{a,c} |a⟩⟨a| ⊗ |c⟩⟨c| ⊗ σ_{a⊕c} ⊗ σ_c on (A, C, B₁, B₂)."""
    s = [_arr(s0), _arr(s1)]
    if s[0].shape != (2, 2) or s[1].shape != (2, 2):
        raise ValidationError("ccq_state expects qubit states")
    out = np.zeros((16, 16), dtype=complex)
    for a in range(2):
        for c in range(2):
            out += 0.25 * tensor(proj(ket(a, 2)), proj(ket(c, 2)), s[a ^ c], s[c])
    return out


CCQ_DIMS = (2, 2, 4)  # (A, C, B₁B₂) viewed as a tripartite (A, B, C) state


def violation_family(x: float) -> tuple[np.ndarray, np.ndarray]:
    """Pure qubit pair with Bloch vectors (−0.9, v₀, 0.4) and (−0.9+0.01x, v₁, 0.4001).

    The unspecified second component is fixed by unit norm (taken ≥ 0).
    """
    u0, w0 = -0.9, 0.4
    u1, w1 = u0 + 0.01 * x, w0 + 0.0001
    out = []
    for u, w in ((u0, w0), (u1, w1)):
        rest = 1.0 - u * u - w * w
        if rest < 0:
            raise ValidationError(f"no unit Bloch vector with u={u}, w={w}")
        out.append(bloch_state((u, np.sqrt(rest), w)))
    return out[0], out[1]


def counterexample_scan(xs: Sequence[float], restarts: int = 1, maxiter: int = 5000,
                        with_measured: bool = True) -> list[dict]:
    """Compare I(A:C|B₁B₂) with the relative entropy of recovery B → CB."""
    rows = []
    for x in xs:
        s0, s1 = violation_family(x)
        rho = ccq_state(s0, s1)
        i = cqmi(rho, [0], [1], [2], dims=CCQ_DIMS)
        rec = relative_entropy_of_recovery(rho, CCQ_DIMS, restarts=restarts, maxiter=maxiter)
        dm = (measured_relative_entropy_of_recovery(rho, CCQ_DIMS, rec=rec)
              if with_measured else float("nan"))
        rows.append({"x": float(x), "cqmi": i, "d_rec": rec.value, "d_m_rec": dm,
                     "gap": rec.gap, "flag": bool(rec.lower > i)})
    return rows


def scan_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "cqmi", "d_rec", "d_m_rec", "gap", "flag"])
    for r in rows:
        w.writerow([f"{r['x']:.10g}", f"{r['cqmi']:.12e}", f"{r['d_rec']:.12e}",
                    f"{r['d_m_rec']:.12e}", f"{r['gap']:.3e}", int(r["flag"])])
    return buf.getvalue()


def cqmi_regularized_bound_check(rho, dims: Sequence[int], n: int,
                                 quad: RotatedPetzFamily | None = None) -> dict:
    """(1/n) D(ρ^{⊗n} ‖ Σ_k w_k (R^{[t_k]}(ρ_AC))^{⊗n}) against I(A:B|C)."""
    if n not in (1, 2):
        raise ValidationError("only n = 1, 2 are supported")
    quad = beta0_quadrature() if quad is None else quad
    r = _arr(rho)
    if r.shape[0] ** n > 4096:
        raise ValidationError("dimension cap exceeded")
    i = cqmi(r, [0], [1], [2], dims=dims)
    mix = 0
    for t, w in zip(quad.t, quad.weights):
        rec = petz_recovered(r, dims, t)
        mix = mix + w * (rec if n == 1 else np.kron(rec, rec))
    big = r if n == 1 else np.kron(r, r)
    val = relative_entropy(big, 0.5 * (mix + mix.conj().T)).value / n
    return {"n": n, "cqmi": i, "value": float(val), "holds": bool(val <= i + 1e-6)}
