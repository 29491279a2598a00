"""Error exponents for binary state discrimination and the discrimination
power of fixed measurements, plus finite-n enumeration tools."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .entropy import chernoff_phi, dlog_adjoint, relative_entropy
from .numkernel import (EIG_TOL, Povm, ValidationError, _arr, eigh, positive_part,
                        tensor, trace_norm)

DEFAULT_CAP = 2 ** 20


class CapExceeded(RuntimeError):
    """A configured enumeration or dimension cap would be exceeded."""


@dataclass
class ExponentResult:
    value: float
    argmin_s: float | None = None
    witness: tuple | None = None
    infinite: bool = False
    orthogonal: bool | None = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CompositeSet:
    states: tuple
    weights: tuple | None = None

    def __post_init__(self):
        if not self.states:
            raise ValidationError("empty composite set")
        d = _arr(self.states[0]).shape
        if any(_arr(s).shape != d for s in self.states):
            raise ValidationError("composite set states differ in dimension")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(self.states),) or np.any(w < 0) or abs(w.sum() - 1) > 1e-10:
                raise ValidationError("composite weights must be a probability vector")


# ------------------------------------------------------------ scalar s-search

def _refine_min(fun: Callable[[float], float], lo: float = 0.0, hi: float = 1.0,
                grid: int = 101, tol: float = 1e-8) -> tuple[float, float]:
    """Grid scan then bounded scalar refinement around the best node."""
    ss = np.linspace(lo, hi, grid)
    vals = np.array([fun(s) for s in ss])
    k = int(np.nanargmin(vals))
    a, b = ss[max(k - 1, 0)], ss[min(k + 1, grid - 1)]
    res = minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": tol})
    if res.fun < vals[k]:
        return float(res.x), float(res.fun)
    return float(ss[k]), float(vals[k])


class _PhiQuantum:
    """φ(s) = ln Σ_ij λ_i^s μ_j^{1−s} |⟨a_i|b_j⟩|² from one pair of eigensolves."""

    def __init__(self, rho, sigma):
        lr, ur = eigh(rho)
        ls, us = eigh(sigma)
        self.lr, self.ls = np.clip(lr, 0, None), np.clip(ls, 0, None)
        self.ov = np.abs(ur.conj().T @ us) ** 2

    def __call__(self, s: float) -> float:
        with np.errstate(divide="ignore"):
            a = np.where(self.lr > EIG_TOL, self.lr, 0.0) ** s if s > 0 else (self.lr > EIG_TOL).astype(float)
            b = np.where(self.ls > EIG_TOL, self.ls, 0.0) ** (1 - s) if s < 1 else (self.ls > EIG_TOL).astype(float)
        q = float(a @ self.ov @ b)
        return float(np.log(q)) if q > 0 else float("-inf")


def stein_exponent(rho, sigma) -> ExponentResult:
    rep = relative_entropy(rho, sigma)
    return ExponentResult(rep.value, infinite=rep.support_violation)


def chernoff_exponent(rho, sigma, tol: float = 1e-8) -> ExponentResult:
    """−min_{s∈[0,1]} φ(s)."""
    phi = _PhiQuantum(rho, sigma)
    if phi(0.5) == float("-inf"):
        return ExponentResult(float("inf"), 0.5, infinite=True)
    s, v = _refine_min(phi, tol=tol)
    return ExponentResult(max(0.0, -v), s)


def hoeffding_exponent(rho, sigma, r: float, tol: float = 1e-8) -> ExponentResult:
    """sup_{0≤s<1} (−s r − φ(s))/(1−s)."""
    if r < 0:
        raise ValidationError("Hoeffding rate must be non-negative")
    phi = _PhiQuantum(rho, sigma)
    smax = 1.0 - 1e-6
    fun = lambda s: -(-s * r - phi(s)) / (1.0 - s)
    s, v = _refine_min(fun, 0.0, smax, tol=tol)
    best, arg = -v, s
    if r == 0:
        d = relative_entropy(rho, sigma)
        if d.value > best:
            best, arg = d.value, 1.0
        if d.support_violation:
            return ExponentResult(float("inf"), 1.0, infinite=True)
    return ExponentResult(max(0.0, best), arg)


def min_error_prob(rho, sigma, p: float = 0.5) -> float:
    """Helstrom error ½(1 − ‖pρ − (1−p)σ‖₁)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError("prior must lie in [0, 1]")
    return 0.5 * (1.0 - trace_norm(p * _arr(rho) - (1 - p) * _arr(sigma)))


# ------------------------------------------------------ classical exponents

def classical_chernoff(p, q, tol: float = 1e-8) -> tuple[float, float]:
    """(−min_s ln Σ p^s q^{1−s}, argmin s) for distributions p, q."""
    p, q = np.asarray(p, float), np.asarray(q, float)

    def phi(s):
        z = float(np.sum(np.where((p > 0) & (q > 0), p ** s * q ** (1 - s), 0.0)))
        if s == 0:
            z = float(np.sum(q[p > 0]))
        elif s == 1:
            z = float(np.sum(p[q > 0]))
        return np.log(z) if z > 0 else -np.inf

    if phi(0.5) == -np.inf:
        return float("inf"), 0.5
    s, v = _refine_min(phi, tol=tol)
    return max(0.0, -v), s


def _classical_value_grad(p, q, mode: str, r: float | None):
    """Exponent value and its gradient wrt (p, q) at the optimal s (envelope)."""
    pc = np.clip(p, 1e-300, None)
    qc = np.clip(q, 1e-300, None)
    if mode == "stein":
        val = float(np.sum(np.where(p > 1e-300, p * np.log(pc / qc), 0.0)))
        return val, np.log(pc / qc) + 1.0, -p / qc, None
    if mode == "chernoff":
        val, s = classical_chernoff(p, q)
        if not np.isfinite(val):
            return val, np.zeros_like(p), np.zeros_like(q), s
        z = np.sum(pc ** s * qc ** (1 - s))
        dp = -s * pc ** (s - 1) * qc ** (1 - s) / z
        dq = -(1 - s) * pc ** s * qc ** (-s) / z
        return val, dp, dq, s
    if mode == "hoeffding":
        rr = 0.0 if r is None else float(r)

        def phi(s):
            return float(np.log(np.sum(pc ** s * qc ** (1 - s))))

        s, v = _refine_min(lambda s: -(-s * rr - phi(s)) / (1 - s), 0.0, 1 - 1e-6)
        z = np.sum(pc ** s * qc ** (1 - s))
        dp = -s * pc ** (s - 1) * qc ** (1 - s) / z / (1 - s)
        dq = -(1 - s) * pc ** s * qc ** (-s) / z / (1 - s)
        return max(0.0, -v), dp, dq, s
    raise ValidationError(f"unknown mode {mode!r}")


# ------------------------------------------------------ discrimination power

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def _bloch(theta, phi):
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def _dbloch(theta, phi):
    return (np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)]),
            np.array([-np.sin(theta) * np.sin(phi), np.sin(theta) * np.cos(phi), 0.0]))


def _pure(vec):
    v = vec / np.linalg.norm(vec)
    return np.outer(v, v.conj())


def discrimination_power(povm: Povm, mode: str = "chernoff", r: float | None = None,
                         restarts: int = 32, rng: np.random.Generator | None = None) -> ExponentResult:
    """Best classical exponent of the outcome statistics over state pairs.

    Exponents are convex in the outcome distributions, which are linear in
    the states, so the search runs over pure pairs: Bloch angles for qubits,
    normalized vectors (rank-one T with ρ = TT†/Tr) otherwise.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    effs = np.array(povm.effects)
    d = povm.dim
    if all(np.allclose(e, np.trace(e) / d * np.eye(d), atol=1e-12) for e in effs):
        return ExponentResult(0.0, witness=None, orthogonal=None)

    if d == 2:
        coef = 0.5 * np.real(np.einsum("kij,aji->ka", effs, _PAULI))  # ∂P_k/∂n_a
        base = 0.5 * np.real(np.einsum("kii->k", effs))

        def states(x):
            return (base + coef @ _bloch(x[0], x[1]), base + coef @ _bloch(x[2], x[3]))

        def fg(x):
            p, q = states(x)
            val, dp, dq, _ = _classical_value_grad(p, q, mode, r)
            if not np.isfinite(val):
                return -1e6, np.zeros(4)
            g = np.zeros(4)
            for i, (t, ph) in enumerate(((x[0], x[1]), (x[2], x[3]))):
                dt, dph = _dbloch(t, ph)
                dv = dp if i == 0 else dq
                g[2 * i] = dv @ (coef @ dt)
                g[2 * i + 1] = dv @ (coef @ dph)
            return -val, -g

        def x0():
            return np.concatenate([[np.arccos(rng.uniform(-1, 1)), rng.uniform(0, 2 * np.pi)]
                                   for _ in range(2)])

        def to_pair(x):
            return (0.5 * (np.eye(2) + np.einsum("a,aij->ij", _bloch(x[0], x[1]), _PAULI)),
                    0.5 * (np.eye(2) + np.einsum("a,aij->ij", _bloch(x[2], x[3]), _PAULI)))
    else:
        def unpack(x):
            return x[:d] + 1j * x[d:2 * d], x[2 * d:3 * d] + 1j * x[3 * d:]

        def fg(x):
            u, v = unpack(x)
            nu, nv = np.vdot(u, u).real, np.vdot(v, v).real
            p = np.real(np.einsum("i,kij,j->k", u.conj(), effs, u)) / nu
            q = np.real(np.einsum("i,kij,j->k", v.conj(), effs, v)) / nv
            val, dp, dq, _ = _classical_value_grad(p, q, mode, r)
            if not np.isfinite(val):
                return -1e6, np.zeros_like(x)
            gu = 2 * (np.einsum("k,kij,j->i", dp, effs, u) - (dp @ p) * u) / nu
            gv = 2 * (np.einsum("k,kij,j->i", dq, effs, v) - (dq @ q) * v) / nv
            return -val, -np.concatenate([gu.real, gu.imag, gv.real, gv.imag])

        def x0():
            return rng.standard_normal(4 * d)

        def to_pair(x):
            u, v = unpack(x)
            return _pure(u), _pure(v)

    best = None
    for _ in range(restarts):
        res = minimize(fg, x0(), jac=True, method="L-BFGS-B", options={"maxiter": 500})
        if best is None or res.fun < best.fun:
            best = res
    rho, sigma = to_pair(best.x)
    p, q = povm.probs(rho), povm.probs(sigma)
    val, _, _, s = _classical_value_grad(p, q, mode, r)
    ortho = bool(abs(np.real(np.trace(rho @ sigma))) < 1e-6)
    return ExponentResult(float(val), s, (rho, sigma), infinite=not np.isfinite(val), orthogonal=ortho)


def fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + 5 ** 0.5) * i
    rxy = np.sqrt(1 - z * z)
    return np.stack([rxy * np.cos(phi), rxy * np.sin(phi), z], axis=1)


def covariant_qubit_povm(n: int = 500) -> Povm:
    """Effects ∝ (1 + n·σ) over a Fibonacci sphere, renormalized to sum to 1."""
    dirs = fibonacci_directions(n)
    raw = np.array([(np.eye(2) + np.einsum("a,aij->ij", m, _PAULI)) / n for m in dirs])
    s = raw.sum(axis=0)
    w, u = np.linalg.eigh(s)
    si = (u / np.sqrt(w)) @ u.conj().T
    return Povm(tuple(si @ e @ si for e in raw))


def noisy_stern_gerlach(r: float) -> Povm:
    z = np.diag([1.0, -1.0])
    return Povm(((np.eye(2) + r * z) / 2, (np.eye(2) - r * z) / 2))


def mix_povms(e: Povm, g: Povm, p: float) -> Povm:
    if e.dim != g.dim:
        raise ValidationError("POVMs act on different dimensions")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("mixing weight must lie in [0, 1]")
    return Povm(tuple(p * x for x in e.effects) + tuple((1 - p) * x for x in g.effects))


# ------------------------------------------------------------- finite n

def _sequence_probs(povm: Povm, states, n: int | None) -> np.ndarray:
    """Outcome-sequence distribution for a list of single-copy states or one n-copy state."""
    effs = np.array(povm.effects)
    m = len(effs)
    if isinstance(states, (list, tuple)):
        dist = np.ones(1)
        for st in states:
            dist = np.kron(dist, povm.probs(st))
        return np.clip(dist, 0.0, None)
    big = _arr(states)
    d = povm.dim
    k = int(round(np.log(big.shape[0]) / np.log(d))) if n is None else n
    out = np.empty(m ** k)
    for idx, seq in enumerate(itertools.product(range(m), repeat=k)):
        out[idx] = np.real(np.vdot(tensor([effs[j] for j in seq]), big))
    return np.clip(out, 0.0, None)


def finite_n_error(povm: Povm, rho_n, sigma_n, n: int | None = None,
                   cap: int = DEFAULT_CAP) -> dict:
    """Minimal average error over groupings of outcome sequences (equal priors)."""
    m = len(povm.effects)
    k = len(rho_n) if isinstance(rho_n, (list, tuple)) else n
    if k is None:
        k = int(round(np.log(_arr(rho_n).shape[0]) / np.log(povm.dim)))
    if m ** k > cap:
        raise CapExceeded(f"{m}^{k} outcome sequences exceed the cap {cap}")
    p = _sequence_probs(povm, rho_n, k)
    q = _sequence_probs(povm, sigma_n, k)
    group = p >= q
    return {"p_err": float(0.5 * np.sum(np.minimum(p, q))), "best_grouping": group}


def adaptive_finite_n(povm: Povm, policy: Callable[[tuple], tuple], n: int,
                      cap: int = DEFAULT_CAP) -> float:
    """Exact error of an adaptive protocol; ``policy(history)`` gives the next pair."""
    m = len(povm.effects)
    if m ** n > cap:
        raise CapExceeded(f"{m}^{n} histories exceed the cap {cap}")
    err = 0.0
    for hist in itertools.product(range(m), repeat=n):
        p = q = 1.0
        for i in range(n):
            rho, sigma = policy(hist[:i])
            p *= povm.probs(rho)[hist[i]]
            q *= povm.probs(sigma)[hist[i]]
        err += 0.5 * min(p, q)
    return float(err)


# ------------------------------------------------------ composite Stein

def project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / (np.arange(len(v)) + 1) > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1.0), 0.0)


def _power(m, n):
    return tensor([m] * n) if n > 1 else m


def composite_stein_finite_n(rho, alt, n: int, tol: float = 1e-7, max_iter: int = 20000,
                             dim_cap: int = 4096) -> ExponentResult:
    """(1/n) min_μ D(ρ^{⊗n} ‖ Σ μ_i σ_i^{⊗n}) by projected gradient on the simplex."""
    states = alt.states if isinstance(alt, CompositeSet) else tuple(alt)
    r = _arr(rho)
    if r.shape[0] ** n > dim_cap:
        raise CapExceeded("n-copy dimension exceeds the dense cap")
    rn = _power(r, n)
    sn = [_power(_arr(s), n) for s in states]
    ok = [not relative_entropy(rn, s).support_violation for s in sn]
    if not any(ok):
        return ExponentResult(float("inf"), infinite=True)
    mu = np.array(ok, float) / sum(ok)

    def f(m):
        return relative_entropy(rn, sum(w * s for w, s in zip(m, sn))).value

    fv = f(mu)
    step = 1.0
    for it in range(max_iter):
        mix = sum(w * s for w, s in zip(mu, sn))
        g = dlog_adjoint(mix, rn)
        grad = np.array([np.real(np.vdot(g, s)) for s in sn])
        while True:
            new = project_simplex(mu - step * grad)
            nv = f(new)
            if nv <= fv - 1e-4 * np.dot(grad, mu - new) or step < 1e-14:
                break
            step *= 0.5
        done = abs(fv - nv) < tol * 1e-3 or np.max(np.abs(new - mu)) < 1e-12
        mu, fv = new, min(nv, fv)
        step = min(step * 2.0, 1e6)
        if done:
            break
    return ExponentResult(fv / n, witness=tuple(mu), extra={"iterations": it + 1})


# ---------------------------------------------------------- pinching

def _check_perm_invariant(m: np.ndarray, d: int, n: int):
    from .numkernel import permute_systems
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        if np.max(np.abs(permute_systems(m, perm, [d] * n) - m)) > 1e-10:
            raise ValidationError("σ_n is not permutation invariant")


def pinch(rho, sigma, tol: float = 1e-10) -> tuple[np.ndarray, int]:
    """Pinching of ρ in the eigenspaces of σ; returns (pinched, #distinct eigenvalues)."""
    w, u = eigh(sigma)
    r = u.conj().T @ _arr(rho) @ u
    groups = np.zeros(len(w), int)
    for i in range(1, len(w)):
        groups[i] = groups[i - 1] + (w[i] - w[i - 1] > tol)
    mask = groups[:, None] == groups[None, :]
    return u @ (r * mask) @ u.conj().T, int(groups[-1] + 1)


def pinching_gap(rho_n, sigma_n, d: int, n: int) -> dict:
    s = _arr(sigma_n)
    _check_perm_invariant(s, d, n)
    pr, nspec = pinch(rho_n, s)
    dfull = relative_entropy(rho_n, s).value
    dp = relative_entropy(pr, s).value
    gap = dfull - dp
    return {"D": dfull, "D_pinched": dp, "spec_count": nspec,
            "bound_holds": bool(-1e-9 <= gap <= np.log(nspec) + 1e-9)}


# --------------------------------------------------- Audenaert tests

def audenaert_lambda(rho, sigma, n: int, s: float, eps: float) -> float:
    """λ with e^{(1−s)(λ − D_s(ρ^{⊗n}‖σ^{⊗n}))} = ε."""
    ds = n * chernoff_phi(s, rho, sigma) / (s - 1.0)
    return ds + np.log(eps) / (1.0 - s)


def audenaert_test(rho, sigma, n: int, s: float, lam: float) -> dict:
    """Test M = {ρ^{⊗n} − e^λ σ^{⊗n}}₊ with its two exponential error bounds."""
    if not 0 < s < 1:
        raise ValidationError("s must lie in (0, 1)")
    rn, sn = _power(_arr(rho), n), _power(_arr(sigma), n)
    m, _ = positive_part(rn - np.exp(lam) * sn)
    a = float(np.real(np.trace((np.eye(len(m)) - m) @ rn)))
    b = float(np.real(np.trace(m @ sn)))
    q = np.exp(n * chernoff_phi(s, rho, sigma))
    b1 = np.exp((1 - s) * lam) * q
    b2 = np.exp(-s * lam) * q
    return {"type1": a, "type2": b, "bound1": float(b1), "bound2": float(b2),
            "bounds_hold": bool(a <= b1 * (1 + 1e-9) + 1e-15 and b <= b2 * (1 + 1e-9) + 1e-15)}


def symmetric_rate_finite_n(rho_set, sigma_set, n: int) -> float:
    """−(1/n) ln of the best Helstrom error between uniform i.i.d. mixtures (n = 1, 2 only)."""
    if n not in (1, 2):
        raise ValidationError("only n = 1, 2 are evaluated")
    a = sum(_power(_arr(x), n) for x in rho_set) / len(rho_set)
    b = sum(_power(_arr(x), n) for x in sigma_set) / len(sigma_set)
    pe = min_error_prob(a, b)
    return float(-np.log(pe) / n) if pe > 0 else float("inf")
