"""Log-det calculus on covariance matrices and Gaussian quantum correlations.

Phase-space vectors are interleaved, r = (x₁, p₁, …, xₙ, pₙ), so the
symplectic form is Ω = ⊕[[0, 1], [−1, 0]]. Quantum covariance matrices
(QCMs) use the convention V ≥ iΩ (vacuum = identity). All logs are natural.

A ``CovMatrix`` carries party labels with mode counts; functions take party
labels (a label, a list of labels, or a comma-separated string).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm, schur as _real_schur
from scipy.optimize import minimize

from .numkernel import ValidationError, load_json

SYM_TOL = 1e-10
PD_TOL = 1e-12
QCM_TOL = 1e-8


# ------------------------------------------------------------------ types

@dataclass(frozen=True)
class CovMatrix:
    """Real symmetric matrix with labelled parties.

    ``unit`` is the number of rows per mode: 2 for phase space, 1 for plain
    classical variables. ``check=False`` skips the positivity test (used for
    the bundled rounded counterexample only).
    """

    mat: np.ndarray
    parts: tuple
    unit: int = 2
    check: bool = True

    def __post_init__(self):
        m = np.array(self.mat, dtype=float)
        parts = tuple((str(lbl), int(k)) for lbl, k in self.parts)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("covariance matrix must be square")
        if sum(k for _, k in parts) * self.unit != m.shape[0]:
            raise ValidationError(f"parts {parts} do not match matrix size {m.shape[0]}")
        if len({lbl for lbl, _ in parts}) != len(parts):
            raise ValidationError("party labels must be distinct")
        if np.max(np.abs(m - m.T), initial=0.0) > SYM_TOL * max(1.0, np.max(np.abs(m), initial=0.0)):
            raise ValidationError("covariance matrix must be symmetric")
        m = 0.5 * (m + m.T)
        if self.check and np.linalg.eigvalsh(m)[0] <= PD_TOL:
            raise ValidationError("covariance matrix must be positive definite")
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "parts", parts)

    @property
    def labels(self) -> list[str]:
        return [lbl for lbl, _ in self.parts]

    @property
    def modes(self) -> int:
        return sum(k for _, k in self.parts)

    def index(self, labels) -> np.ndarray:
        labels = _labels(labels)
        offs, pos = {}, 0
        for lbl, k in self.parts:
            offs[lbl] = (pos, pos + k * self.unit)
            pos += k * self.unit
        unknown = [lbl for lbl in labels if lbl not in offs]
        if unknown:
            raise ValidationError(f"unknown parties {unknown}; have {self.labels}")
        return np.concatenate([np.arange(*offs[lbl]) for lbl in labels]) if labels else np.zeros(0, int)

    def sub(self, labels) -> "CovMatrix":
        labels = _labels(labels)
        idx = self.index(labels)
        d = dict(self.parts)
        return CovMatrix(self.mat[np.ix_(idx, idx)], tuple((lbl, d[lbl]) for lbl in labels),
                         self.unit, self.check)


class QcmReport(NamedTuple):
    is_qcm: bool
    symplectic_eigs: list
    purity_defect: float
    heisenberg_min_eig: float


@dataclass(frozen=True)
class GaussianChannel:
    """V ↦ H V Hᵀ + K."""

    h: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        h, k = np.atleast_2d(np.asarray(self.h, float)), np.atleast_2d(np.asarray(self.k, float))
        if k.shape[0] != k.shape[1] or k.shape[0] != h.shape[0]:
            raise ValidationError("K must be square with as many rows as H")
        k = 0.5 * (k + k.T)
        if k.size and np.linalg.eigvalsh(k)[0] < -1e-10 * max(1.0, np.abs(k).max()):
            raise ValidationError("K must be positive semidefinite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "k", k)


def _labels(labels) -> list[str]:
    if labels is None:
        return []
    if isinstance(labels, str):
        return [s.strip() for s in labels.split(",") if s.strip()]
    return [str(x) for x in labels]


# ---------------------------------------------------------------- basics

def omega(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def xxpp_to_interleaved(n_modes: int) -> np.ndarray:
    """Permutation p with v_interleaved = v_xxpp[p]."""
    return np.ravel(np.column_stack([np.arange(n_modes), n_modes + np.arange(n_modes)]))


def _spow(a: np.ndarray, p: float) -> np.ndarray:
    w, u = np.linalg.eigh(0.5 * (a + a.T))
    if w[0] <= 0:
        raise ValidationError("matrix power needs a positive definite matrix")
    return (u * w ** p) @ u.T


def _logdet(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    sign, ld = np.linalg.slogdet(a)
    if sign <= 0:
        raise ValidationError("log-det needs a positive definite matrix")
    return float(ld)


def _schur_idx(m: np.ndarray, keep: np.ndarray, on: np.ndarray) -> np.ndarray:
    a = m[np.ix_(on, on)]
    x = m[np.ix_(on, keep)]
    b = m[np.ix_(keep, keep)]
    if on.size == 0:
        return b.copy()
    if np.linalg.cond(a) > 1e14:
        raise ValidationError("singular pivot block in Schur complement")
    s = b - x.T @ np.linalg.solve(a, x)
    return 0.5 * (s + s.T)


def schur(v: CovMatrix, on) -> CovMatrix:
    """V / V_on, a covariance matrix on the remaining parties (order kept)."""
    on = _labels(on)
    rest = [lbl for lbl in v.labels if lbl not in on]
    if not rest:
        raise ValidationError("Schur complement needs a nonempty complement")
    d = dict(v.parts)
    m = _schur_idx(v.mat, v.index(rest), v.index(on))
    return CovMatrix(m, tuple((lbl, d[lbl]) for lbl in rest), v.unit, v.check)


def logdet_entropy(v) -> float:
    """M(V) = ½ ln det V."""
    v = v.mat if isinstance(v, CovMatrix) else np.asarray(v, float)
    return 0.5 * _logdet(v)


def _m(v: CovMatrix, labels) -> float:
    idx = v.index(labels)
    return 0.5 * _logdet(v.mat[np.ix_(idx, idx)])


def logdet_mi(v: CovMatrix, a, b) -> float:
    a, b = _labels(a), _labels(b)
    return _m(v, a) + _m(v, b) - _m(v, a + b)


def logdet_cmi(v: CovMatrix, a, b, c) -> float:
    a, b, c = _labels(a), _labels(b), _labels(c)
    return _m(v, a + c) + _m(v, b + c) - _m(v, a + b + c) - _m(v, c)


def inverse(v: CovMatrix) -> CovMatrix:
    inv = np.linalg.inv(v.mat)
    return CovMatrix(0.5 * (inv + inv.T), v.parts, v.unit, v.check)


def cmi_identities(v: CovMatrix, a, b, c) -> dict:
    """I_M(A:B|C) three ways: direct, on V/V_C, and on V⁻¹."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    direct = logdet_cmi(v, a, b, c)
    sub = v.sub(a + b + c)
    via_schur = logdet_mi(schur(sub, c), a, b)
    via_inv = logdet_mi(inverse(sub), a, b)
    return {"direct": direct, "schur": via_schur, "inverse": via_inv}


def _min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


def ssa_operator_check(v: CovMatrix, a, b, c, tol: float = 1e-9) -> dict:
    """V_ABC/V_BC ≤ V_AC/V_C in the PSD order."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    left = schur(v.sub(a + b + c), b + c).mat
    right = schur(v.sub(a + c), c).mat
    me = _min_eig(right - left)
    return {"min_eig": me, "holds": bool(me >= -tol * max(1.0, np.abs(right).max()))}


# ------------------------------------------------------ blocks & recovery

def _blocks(v: CovMatrix, a, b, c):
    ia, ib, ic = v.index(a), v.index(b), v.index(c)
    g = lambda i, j: v.mat[np.ix_(i, j)]  # noqa: E731
    return g(ia, ia), g(ib, ib), g(ic, ic), g(ia, ib), g(ia, ic), g(ib, ic)


def markov_defect(v: CovMatrix, a, b, c) -> np.ndarray:
    """X − Y C⁻¹ Zᵀ, zero exactly on saturating matrices."""
    _, _, cc, x, y, z = _blocks(v, _labels(a), _labels(b), _labels(c))
    return x - y @ np.linalg.solve(cc, z.T)


def gaussian_petz(v: CovMatrix, a, b, c) -> GaussianChannel:
    """Petz recovery C → BC as a classical Gaussian channel on (A, C) ↦ (A, B, C)."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    aa, bb, cc, _, _, z = _blocks(v, a, b, c)
    na, nb, nc = aa.shape[0], bb.shape[0], cc.shape[0]
    zc = np.linalg.solve(cc, z.T).T
    h = np.zeros((na + nb + nc, na + nc))
    h[:na, :na] = np.eye(na)
    h[na:na + nb, na:] = zc
    h[na + nb:, na:] = np.eye(nc)
    k = np.zeros((na + nb + nc,) * 2)
    k[na:na + nb, na:na + nb] = bb - zc @ z.T
    return GaussianChannel(h, k)


def gauss_channel_apply(ch: GaussianChannel, v) -> np.ndarray:
    m = v.mat if isinstance(v, CovMatrix) else np.asarray(v, float)
    if ch.h.shape[1] != m.shape[0]:
        raise ValidationError("channel input size does not match the covariance matrix")
    out = ch.h @ m @ ch.h.T + ch.k
    return 0.5 * (out + out.T)


def petz_recovered(v: CovMatrix, a, b, c) -> np.ndarray:
    """Ṽ_ABC: the Petz map applied to V_AC (rows ordered A, B, C)."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    return gauss_channel_apply(gaussian_petz(v, a, b, c), v.sub(a + c))


def v_tilde(v: CovMatrix, a, b, c) -> np.ndarray:
    """Closed form of Ṽ: the A–B block replaced by Y C⁻¹ Zᵀ."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    out = v.sub(a + b + c).mat.copy()
    aa, bb, cc, _, y, z = _blocks(v, a, b, c)
    na, nb = aa.shape[0], bb.shape[0]
    xt = y @ np.linalg.solve(cc, z.T)
    out[:na, na:na + nb] = xt
    out[na:na + nb, :na] = xt.T
    return out


def gaussian_rel_ent(a, b) -> float:
    """D(N(0,A) ‖ N(0,B)) = ½ ln(det B / det A) + ½ Tr B⁻¹A − n/2."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    n = a.shape[0]
    return float(0.5 * (_logdet(b) - _logdet(a)) + 0.5 * np.trace(np.linalg.solve(b, a)) - 0.5 * n)


def gaussian_fidelity(a, b) -> float:
    """F with F² = det(A!B) / √(det A det B), A!B the harmonic mean."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    harm = 2.0 * np.linalg.inv(np.linalg.inv(a) + np.linalg.inv(b))
    return float(np.exp(0.5 * (_logdet(harm) - 0.5 * (_logdet(a) + _logdet(b)))))


def saturation_tests(v: CovMatrix, a, b, c, tol: float = 1e-7) -> dict:
    """The five equivalent saturation conditions, evaluated independently."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    sub = v.sub(a + b + c)
    scale = max(1.0, np.abs(sub.mat).max())
    na = sub.index(a).size
    nb = sub.index(b).size
    i_m = logdet_cmi(sub, a, b, c)
    schur_gap = np.abs(schur(sub, b + c).mat - schur(sub.sub(a + c), c).mat).max()
    inv = np.linalg.inv(sub.mat)
    offdiag = np.abs(inv[:na, na:na + nb]).max() * scale
    defect = np.abs(markov_defect(sub, a, b, c)).max()
    recov = np.abs(petz_recovered(sub, a, b, c) - sub.mat).max()
    vals = {"cmi": i_m, "schur_equality": schur_gap, "inverse_offdiag": offdiag,
            "markov_form": defect, "petz_recovery": recov}
    flags = {k: bool(abs(x) <= tol * (1.0 if k == "cmi" else scale)) for k, x in vals.items()}
    return {"values": vals, "saturated": flags, "agree": len(set(flags.values())) == 1}


def cmi_lower_bound(v: CovMatrix, a, b, c) -> dict:
    a, b, c = _labels(a), _labels(b), _labels(c)
    aa, bb, _, _, _, _ = _blocks(v, a, b, c)
    d = markov_defect(v, a, b, c)
    sac = schur(v.sub(a + c), c).mat
    sbc = schur(v.sub(b + c), c).mat
    bound1 = 0.5 * np.trace(np.linalg.solve(sac, d) @ np.linalg.solve(sbc, d.T))
    w = _spow(aa, -0.5) @ d @ _spow(bb, -0.5)
    bound2 = 0.5 * float(np.sum(w * w))
    return {"cmi": logdet_cmi(v, a, b, c), "bound1": float(bound1), "bound2": bound2}


# -------------------------------------------------------- geometric mean

def weighted_geomean(a, b, t: float) -> np.ndarray:
    """A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    ah, aih = _spow(a, 0.5), _spow(a, -0.5)
    mid = aih @ b @ aih
    out = ah @ _spow(mid, t) @ ah
    return 0.5 * (out + out.T)


def geometric_mean(a, b) -> np.ndarray:
    return weighted_geomean(a, b, 0.5)


# --------------------------------------------------- symplectic spectrum

def symplectic_eigs(v) -> np.ndarray:
    """Sorted symplectic eigenvalues ν₁ ≤ … ≤ νₙ.

    Uses the Hermitian matrix V^{1/2}(iΩ)V^{1/2} (spectrum ±ν) when V is
    positive definite, and the moduli of eig(iΩV) otherwise.
    """
    m = v.mat if isinstance(v, CovMatrix) else np.asarray(v, float)
    n = m.shape[0] // 2
    om = omega(n)
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    if w[0] > 0:
        h = _spow(m, 0.5)
        return np.linalg.eigvalsh(h @ (1j * om) @ h)[n:]
    ev = np.sort(np.abs(np.linalg.eigvals(1j * om @ m)))
    return ev[::2]


def is_qcm(v) -> QcmReport:
    m = v.mat if isinstance(v, CovMatrix) else np.asarray(v, float)
    n = m.shape[0] // 2
    nu = symplectic_eigs(m)
    heis = float(np.linalg.eigvalsh(m + 1j * omega(n))[0])
    ok = bool(nu[0] >= 1 - QCM_TOL)
    return QcmReport(ok, [float(x) for x in nu], float(np.prod(nu) - 1.0), heis)


def williamson(v) -> tuple[np.ndarray, np.ndarray]:
    """S symplectic and ν with V = S diag(ν₁, ν₁, …) Sᵀ."""
    m = v.mat if isinstance(v, CovMatrix) else np.asarray(v, float)
    n = m.shape[0] // 2
    vh, vih = _spow(m, 0.5), _spow(m, -0.5)
    k = vih @ omega(n) @ vih
    k = 0.5 * (k - k.T)
    t, o = _real_schur(k, output="real")
    o = o.copy()
    nus = []
    for i in range(n):
        a = t[2 * i, 2 * i + 1]
        if a < 0:
            o[:, [2 * i, 2 * i + 1]] = o[:, [2 * i + 1, 2 * i]]
            a = -a
        nus.append(1.0 / a)
    nus = np.array(nus)
    order = np.argsort(nus)
    cols = np.ravel([[2 * i, 2 * i + 1] for i in order])
    o, nus = o[:, cols], nus[order]
    d = np.repeat(nus, 2)
    s = vh @ o / np.sqrt(d)
    return s, nus


def gamma_sharp(v) -> np.ndarray:
    """γ# = V # (Ω V⁻¹ Ωᵀ), a pure QCM below V."""
    m = v.mat if isinstance(v, CovMatrix) else np.asarray(v, float)
    rep = is_qcm(m)
    if not rep.is_qcm:
        raise ValidationError("gamma_sharp needs a quantum covariance matrix")
    om = omega(m.shape[0] // 2)
    return geometric_mean(m, om @ np.linalg.inv(m) @ om.T)


def g_functions(a) -> dict:
    nu = symplectic_eigs(a)
    ln = np.log(nu)
    return {"g_plus": float(np.sum(np.maximum(ln, 0.0))), "g_minus": float(np.sum(np.maximum(-ln, 0.0)))}


# ---------------------------------------------------------- steerability

def steerability(v: CovMatrix, steering, steered) -> float:
    """G(X⟩Y) = g₋(V_XY / V_X)."""
    x, y = _labels(steering), _labels(steered)
    return g_functions(schur(v.sub(x + y), x).mat)["g_minus"]


def steer_monogamy(v: CovMatrix, a, bs: Sequence, tol: float = 1e-9) -> dict:
    """Gaps of G(A⟩B₁…B_k) ≥ Σ G(A⟩B_j) and G(B₁…B_k⟩A) ≥ Σ G(B_j⟩A)."""
    a = _labels(a)
    bs = [_labels(b) for b in bs]
    flat = [x for b in bs for x in b]
    gap1 = steerability(v, a, flat) - sum(steerability(v, a, b) for b in bs)
    gap2 = steerability(v, flat, a) - sum(steerability(v, b, a) for b in bs)
    sub = v.mat[np.ix_(v.index(a + flat), v.index(a + flat))]
    pure = abs(np.prod(symplectic_eigs(sub)) - 1.0) < 1e-8
    guaranteed = v.sub(a).modes == 1 or pure
    return {"gap1": float(gap1), "gap2": float(gap2), "gap1_ok": bool(gap1 >= -tol),
            "gap2_guaranteed": bool(guaranteed), "gap2_ok": bool(gap2 >= -tol)}


# ----------------------------------------------- purification & sampling

def purify(v: CovMatrix, label: str = "E") -> CovMatrix:
    """Pure QCM on (parties…, E) whose marginal is V; E has as many modes as V."""
    s, nus = williamson(v.mat)
    n = nus.size
    d = np.repeat(nus, 2)
    q = np.repeat(np.sqrt(np.maximum(nus ** 2 - 1.0, 0.0)), 2) * np.tile([1.0, -1.0], n)
    tms = np.block([[np.diag(d), np.diag(q)], [np.diag(q), np.diag(d)]])
    big = np.zeros((4 * n, 4 * n))
    big[:2 * n, :2 * n] = s
    big[2 * n:, 2 * n:] = np.eye(2 * n)
    g = big @ tms @ big.T
    if label in v.labels:
        raise ValidationError(f"label {label} already used")
    return CovMatrix(g, v.parts + ((label, n),))


def random_symplectic(n_modes: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """exp(Ω H) for a random symmetric H; Ω H lies in the symplectic Lie algebra."""
    h = rng.standard_normal((2 * n_modes, 2 * n_modes)) * scale
    return expm(omega(n_modes) @ (0.5 * (h + h.T)))


def random_qcm(parts: Sequence, rng: np.random.Generator, nu_max: float = 3.0,
               pure: bool = False, scale: float = 0.5) -> CovMatrix:
    """V = S D Sᵀ, S from ``random_symplectic``, ν uniform on [1, ν_max] (or 1 if pure)."""
    parts = tuple(parts)
    n = sum(k for _, k in parts)
    s = random_symplectic(n, rng, scale)
    nu = np.ones(n) if pure else rng.uniform(1.0, nu_max, n)
    return CovMatrix(s @ np.diag(np.repeat(nu, 2)) @ s.T, parts)


def random_pd(parts: Sequence, rng: np.random.Generator, unit: int = 2, ridge: float = 0.1) -> CovMatrix:
    parts = tuple(parts)
    n = sum(k for _, k in parts) * unit
    g = rng.standard_normal((n, n + 2))
    return CovMatrix(g @ g.T / (n + 2) + ridge * np.eye(n), parts, unit)


# ------------------------------------------------ Rényi-2 entanglement

_PENALTY = 1e6  # finite stand-in for infeasible seeds; keeps finite differences clean


def _post_measurement(g: np.ndarray, keep: np.ndarray, on: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    m = g.copy()
    m[np.ix_(on, on)] += sigma
    return _schur_idx(m, keep, on)


def _seed_for(g: np.ndarray, keep: np.ndarray, on: np.ndarray, target: np.ndarray) -> np.ndarray:
    """σ_C = Lᵀ (V − τ)⁻¹ L − γ_C, which yields τ exactly after measuring C."""
    l = g[np.ix_(keep, on)]
    vv = g[np.ix_(keep, keep)]
    s = l.T @ np.linalg.solve(vv - target, l) - g[np.ix_(on, on)]
    return 0.5 * (s + s.T)


def renyi2_eof_bounds(v: CovMatrix, a, b, restarts: int = 16,
                      rng: np.random.Generator | None = None) -> dict:
    """Gaussian Rényi-2 entanglement of formation: the γ# upper bound and a
    local minimization over pure τ ≤ V.

    Pure τ ≤ V are parameterized as post-measurement states of a fixed
    purification measured with pure seeds σ = S σ₀ Sᵀ, S = exp(ΩH); every
    point of the search is feasible. Not certified global.
    """
    a, b = _labels(a), _labels(b)
    rng = np.random.default_rng(0) if rng is None else rng
    sub = v.sub(a + b)
    na = sub.index(a).size
    half_mi = 0.5 * logdet_mi(sub, a, b)
    steer = steerability(sub, a, b)
    rep = is_qcm(sub.mat)
    if not rep.is_qcm:
        raise ValidationError("EoF bounds need a quantum covariance matrix")
    if abs(rep.purity_defect) < 1e-9:
        val = 0.5 * _logdet(sub.mat[:na, :na])
        return {"half_mi": half_mi, "upper_gamma_sharp": val, "optimized": val, "steerability": steer,
                "tau": sub.mat.copy(), "hierarchy_ok": True}
    gs = gamma_sharp(sub.mat)
    upper = 0.5 * _logdet(gs[:na, :na])
    best, best_tau = upper, gs
    if rep.symplectic_eigs[0] > 1 + 1e-9:
        pur = purify(sub, "E_")
        g = pur.mat
        keep, on = pur.index(a + b), pur.index(["E_"])
        sigma0 = _seed_for(g, keep, on, gs)
        nc = on.size // 2
        iu = np.triu_indices(2 * nc)
        om = omega(nc)

        def tau_of(x):
            h = np.zeros((2 * nc, 2 * nc))
            h[iu] = x
            h = h + h.T - np.diag(np.diag(h))
            s = expm(om @ h)
            return _post_measurement(g, keep, on, s @ sigma0 @ s.T)

        def f(x):
            try:
                t = tau_of(x)
            except (ValidationError, np.linalg.LinAlgError):
                return _PENALTY
            sign, ld = np.linalg.slogdet(t[:na, :na])
            return 0.5 * ld if sign > 0 else _PENALTY

        for r in range(max(1, restarts)):
            x0 = np.zeros(iu[0].size) if r == 0 else rng.standard_normal(iu[0].size) * 0.3
            res = minimize(f, x0, method="BFGS", options={"gtol": 1e-8, "maxiter": 200})
            if res.fun < best:
                best, best_tau = float(res.fun), tau_of(res.x)
    ok = bool(half_mi >= best - 1e-6 and best >= steer - 1e-6 and best <= upper + 1e-9)
    return {"half_mi": half_mi, "upper_gamma_sharp": upper, "optimized": best, "steerability": steer,
            "tau": best_tau, "hierarchy_ok": ok}


def measurement_limit_family(v: CovMatrix, tau: np.ndarray, ts: Iterable[float]) -> list[dict]:
    """Pure post-measurement states γ'(t) → τ as t → 0⁺ with τ(t) = τ #_t γ#."""
    tau = np.asarray(tau, float)
    rep = is_qcm(v.mat)
    if not rep.is_qcm:
        raise ValidationError("measurement family needs a quantum covariance matrix")
    if abs(np.prod(symplectic_eigs(tau)) - 1.0) > 1e-7 or _min_eig(v.mat - tau) < -1e-9:
        raise ValidationError("target must be a pure QCM with τ ≤ V")
    labels = v.labels
    if abs(rep.purity_defect) < 1e-9:
        return [{"t": float(t), "distance": float(np.abs(v.mat - tau).max()), "purity_defect": 0.0,
                 "half_cmi": 0.5 * logdet_mi(v, labels[:1], labels[1:]),
                 "half_mi_target": 0.5 * logdet_mi(CovMatrix(tau, v.parts), labels[:1], labels[1:])}
                for t in ts]
    if rep.symplectic_eigs[0] <= 1 + 1e-9:
        raise ValidationError("family implemented for V with all symplectic eigenvalues > 1")
    gs = gamma_sharp(v.mat)
    pur = purify(v, "E_")
    keep, on = pur.index(labels), pur.index(["E_"])
    a, b = labels[:1], labels[1:]
    target_mi = 0.5 * logdet_mi(CovMatrix(tau, v.parts), a, b)
    out = []
    for t in ts:
        tt = weighted_geomean(tau, gs, t)
        sigma = _seed_for(pur.mat, keep, on, tt)
        g_out = _post_measurement(pur.mat, keep, on, sigma)
        ext = pur.mat.copy()
        ext[np.ix_(on, on)] += sigma
        ext_cov = CovMatrix(ext, pur.parts)
        out.append({"t": float(t), "distance": float(np.abs(g_out - tau).max()),
                    "purity_defect": float(np.prod(symplectic_eigs(g_out)) - 1.0),
                    "seed_purity_defect": float(np.prod(symplectic_eigs(sigma)) - 1.0),
                    "half_cmi": 0.5 * logdet_cmi(ext_cov, a, b, ["E_"]),
                    "half_mi_target": target_mi})
    return out


# ------------------------------------------------- non-deterministic maps

def nondeterministic_apply(gamma: np.ndarray, v: CovMatrix, on: str, out_label: str | None = None,
                           out_modes: int | None = None) -> CovMatrix:
    """Replace party ``on`` (B) by B' via V_B ↦ γ_B' − δᵀ(γ_B + V_B)⁻¹δ.

    ``gamma`` is the positive matrix γ_BB' with B rows first.
    """
    gamma = np.asarray(gamma, float)
    d = dict(v.parts)
    if on not in d:
        raise ValidationError(f"unknown party {on}")
    nb = d[on] * v.unit
    nbp = gamma.shape[0] - nb
    if nbp <= 0 or nbp % v.unit:
        raise ValidationError("γ_BB' has the wrong size")
    out_label = on if out_label is None else out_label
    out_modes = nbp // v.unit if out_modes is None else out_modes
    rest = [lbl for lbl in v.labels if lbl != on]
    ir, ib = v.index(rest), v.index([on])
    nr = ir.size
    big = np.zeros((nr + nb + nbp,) * 2)
    big[:nr, :nr] = v.mat[np.ix_(ir, ir)]
    big[:nr, nr:nr + nb] = v.mat[np.ix_(ir, ib)]
    big[nr:nr + nb, :nr] = v.mat[np.ix_(ib, ir)]
    big[nr:, nr:] = gamma
    big[nr:nr + nb, nr:nr + nb] += v.mat[np.ix_(ib, ib)]
    keep = np.r_[np.arange(nr), np.arange(nr + nb, nr + nb + nbp)]
    res = _schur_idx(big, keep, np.arange(nr, nr + nb))
    # put B' where B was
    parts_out, order, pos_rest = [], [], 0
    for lbl, k in v.parts:
        if lbl == on:
            parts_out.append((out_label, out_modes))
            order.extend(range(nr, nr + nbp))
        else:
            parts_out.append((lbl, k))
            order.extend(range(pos_rest, pos_rest + k * v.unit))
            pos_rest += k * v.unit
    order = np.array(order)
    return CovMatrix(res[np.ix_(order, order)], tuple(parts_out), v.unit, v.check)


# ---------------------------------------------------------- misc checks

def log_det_inequality(v: CovMatrix, a, b, c) -> float:
    """M(V_AC) + M(V_BC) − M(V_A) − M(V_B); nonnegative on QCMs."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    return _m(v, a + c) + _m(v, b + c) - _m(v, a) - _m(v, b)


def schur_monogamy_gap(v: CovMatrix, a, b, c) -> float:
    """min eig of V_AC/V_A − Ω (V_BC/V_B)⁻¹ Ωᵀ (on C)."""
    a, b, c = _labels(a), _labels(b), _labels(c)
    left = schur(v.sub(a + c), a).mat
    right = schur(v.sub(b + c), b).mat
    om = omega(left.shape[0] // 2)
    return _min_eig(left - om @ np.linalg.inv(right) @ om.T)


def rank_additivity(m: np.ndarray, k: int, tol: float = 1e-10) -> tuple[int, int]:
    """(rk V, rk A + rk V/A) for the leading k×k block A (invertible)."""
    m = np.asarray(m, float)
    a = m[:k, :k]
    s = m[k:, k:] - m[:k, k:].T @ np.linalg.solve(a, m[:k, k:])
    rk = lambda x: int(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (x + x.T))) > tol))  # noqa: E731
    return rk(m), rk(a) + rk(s)


# -------------------------------------------------------------- I/O

def cov_from_json(data, source: str = "<json>") -> CovMatrix:
    """``{"mat": [[…]], "parts": [["A", 2], …]}``, optional ``"ordering": {"A": "xxpp"}``
    and ``"validate": false``."""
    if not isinstance(data, dict) or "mat" not in data or "parts" not in data:
        raise ValidationError(f"{source}: expected keys 'mat' and 'parts'")
    m = np.array(data["mat"], dtype=float)
    parts = [(str(p[0]), int(p[1])) for p in data["parts"]]
    ordering = data.get("ordering", {})
    pos = 0
    perm = np.arange(m.shape[0])
    for lbl, k in parts:
        if ordering.get(lbl, "xpxp") == "xxpp":
            perm[pos:pos + 2 * k] = pos + xxpp_to_interleaved(k)
        elif ordering.get(lbl, "xpxp") != "xpxp":
            raise ValidationError(f"{source}: ordering must be 'xxpp' or 'xpxp'")
        pos += 2 * k
    m = m[np.ix_(perm, perm)]
    return CovMatrix(m, tuple(parts), 2, bool(data.get("validate", True)))


def load_cov(path) -> CovMatrix:
    return cov_from_json(load_json(path), str(path))


def parse_parts(spec: str) -> tuple:
    """``"A:2,B:1,C:1"`` → (("A", 2), ("B", 1), ("C", 1))."""
    out = []
    for item in spec.split(","):
        lbl, _, k = item.partition(":")
        if not lbl or not k.strip().isdigit():
            raise ValidationError(f"bad parts spec {spec!r}; expected LABEL:MODES,…")
        out.append((lbl.strip(), int(k)))
    return tuple(out)


def cov_to_json(v: CovMatrix) -> str:
    return json.dumps({"mat": v.mat.tolist(), "parts": [list(p) for p in v.parts]})

