"""Entropies and divergences (natural log throughout)."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from . import _isometry
from .numkernel import (LN2, ValidationError, _arr, eigh, mlog, mpow,
                        msqrt, partial_trace, random_unitary, support_projector)


class EntropyReport(NamedTuple):
    value: float
    support_violation: bool = False

    def __float__(self):
        return float(self.value)


def _spec(rho) -> np.ndarray:
    return np.clip(eigh(rho)[0], 0.0, None)


def shannon(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann(rho) -> float:
    return max(0.0, shannon(_spec(rho)))


def _dims(rho, dims):
    if dims is not None:
        return list(dims)
    d = getattr(rho, "dims", None)
    if d is None:
        raise ValidationError("subsystem dims are required")
    return list(d)


def _h(rho, dims, idx) -> float:
    idx = sorted(set(idx))
    if not idx:
        return 0.0
    if len(idx) == len(dims):
        return von_neumann(rho)
    return von_neumann(partial_trace(rho, idx, dims))


def _check_parts(dims, *parts):
    flat = [i for p in parts for i in p]
    if len(flat) != len(set(flat)) or any(i < 0 or i >= len(dims) for i in flat):
        raise ValidationError(f"bad partition {parts} for {len(dims)} subsystems")


def conditional_entropy(rho, a: Sequence[int] = (0,), b: Sequence[int] = (1,), dims=None) -> float:
    """H(A|B) = H(AB) − H(B)."""
    dims = _dims(rho, dims)
    _check_parts(dims, a, b)
    return _h(rho, dims, list(a) + list(b)) - _h(rho, dims, b)


def mutual_information(rho, a: Sequence[int] = (0,), b: Sequence[int] = (1,), dims=None) -> float:
    dims = _dims(rho, dims)
    _check_parts(dims, a, b)
    return _h(rho, dims, a) + _h(rho, dims, b) - _h(rho, dims, list(a) + list(b))


def cqmi(rho, a: Sequence[int] = (0,), b: Sequence[int] = (1,), c: Sequence[int] = (2,), dims=None) -> float:
    """Conditional mutual information I(A:B|C)."""
    dims = _dims(rho, dims)
    _check_parts(dims, a, b, c)
    a, b, c = list(a), list(b), list(c)
    return (_h(rho, dims, a + c) + _h(rho, dims, b + c)
            - _h(rho, dims, a + b + c) - _h(rho, dims, c))


def _supported(rho, sigma) -> bool:
    p = support_projector(sigma)
    r = _arr(rho)
    return np.abs(np.trace(r) - np.trace(p @ r)) <= 1e-9 * max(1.0, np.trace(r).real)


def relative_entropy(rho, sigma) -> EntropyReport:
    r, s = _arr(rho), _arr(sigma)
    if not _supported(r, s):
        return EntropyReport(float("inf"), True)
    val = np.real(np.trace(r @ (mlog(r) - mlog(s))))
    return EntropyReport(max(0.0, float(val)) if abs(val) < 1e-13 else float(val), False)


def dlog_adjoint(sigma, rho) -> np.ndarray:
    """Gradient of σ ↦ −Tr ρ ln σ, i.e. −Dlog(σ)[ρ]."""
    from .numkernel import frechet
    return -frechet(sigma, np.log, lambda w: 1.0 / w, rho)


# ------------------------------------------------------ measured version

def _basis_kl(u, r, s):
    p = np.clip(np.real(np.einsum("ik,ij,jk->k", u.conj(), r, u)), 0.0, None)
    q = np.clip(np.real(np.einsum("ik,ij,jk->k", u.conj(), s, u)), 1e-300, None)
    pos = p > 1e-300
    f = float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
    a = np.where(pos, np.log(np.where(pos, p, 1.0) / q) + 1.0, 0.0)
    a = np.maximum(a, -745.0)
    g = 2.0 * (r @ u) * a - 2.0 * (s @ u) * (p / q)
    return f, g


def fuchs_caves_basis(rho, sigma) -> np.ndarray:
    """Eigenbasis of σ^{-1/2}(σ^{1/2}ρσ^{1/2})^{1/2}σ^{-1/2}: attains the fidelity."""
    r, s = _arr(rho), _arr(sigma)
    sh = msqrt(s)
    sih = mpow(s, -0.5)
    op = sih @ msqrt(sh @ r @ sh) @ sih
    return eigh(op)[1]


def measured_relative_entropy(rho, sigma, restarts: int = 8, tol: float = 1e-11,
                              rng: np.random.Generator | None = None) -> float:
    """Max of classical KL over rank-one projective basis measurements.

    Starts from the fidelity-attaining basis, the eigenbases of both states
    and ``restarts`` Haar-random bases; returns the best local optimum.
    """
    r, s = _arr(rho), _arr(sigma)
    if not _supported(r, s):
        raise ValidationError("measured relative entropy needs supp ρ ⊆ supp σ")
    rng = np.random.default_rng(0) if rng is None else rng
    d = r.shape[0]
    starts = [fuchs_caves_basis(r, s), eigh(s)[1], eigh(r)[1]]
    starts += [random_unitary(d, rng) for _ in range(restarts)]
    best = -np.inf

    def fg(u):
        f, g = _basis_kl(u, r, s)
        return -f, -g

    for u0 in starts:
        best = max(best, _basis_kl(u0, r, s)[0])
        _, f, _ = _isometry.minimize_isometry(fg, u0, maxiter=2000, gtol=tol)
        best = max(best, -f)
    return float(best)


# --------------------------------------------------------- Rényi families

def chernoff_phi(s: float, rho, sigma) -> float:
    """ln Tr ρ^s σ^{1−s} (powers act on supports; 0^0 is the support projector)."""
    q = np.real(np.trace(mpow(_arr(rho), s) @ mpow(_arr(sigma), 1.0 - s)))
    return float(np.log(q)) if q > 0 else float("-inf")


def petz_divergence(rho, sigma, s: float) -> EntropyReport:
    if s <= 0:
        raise ValidationError("Petz order must be positive")
    if s == 1:
        return relative_entropy(rho, sigma)
    if s > 1 and not _supported(rho, sigma):
        return EntropyReport(float("inf"), True)
    phi = chernoff_phi(s, rho, sigma)
    if phi == float("-inf"):
        return EntropyReport(float("inf"), True)
    return EntropyReport(phi / (s - 1.0))


def sandwiched_divergence(rho, sigma, s: float) -> EntropyReport:
    if s <= 0:
        raise ValidationError("sandwiched order must be positive")
    if s == 1:
        return relative_entropy(rho, sigma)
    r, sg = _arr(rho), _arr(sigma)
    if s > 1 and not _supported(r, sg):
        return EntropyReport(float("inf"), True)
    x = mpow(sg, (1.0 - s) / (2.0 * s))
    q = np.real(np.trace(mpow(x @ r @ x, s)))
    if q <= 0:
        return EntropyReport(float("inf"), True)
    return EntropyReport(float(np.log(q)) / (s - 1.0))


# ----------------------------------------------------------- binary h₂

def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    if np.any((p < -1e-15) | (p > 1 + 1e-15)):
        raise ValidationError("binary entropy needs p in [0, 1]")
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        h -= np.where(p < 1, (1 - p) * np.log(np.where(p < 1, 1 - p, 1.0)), 0.0)
    return float(h) if h.ndim == 0 else h


def binary_entropy_inv(h):
    """Inverse of h₂ on [0, ½] by bisection (interval width 2⁻⁶⁰)."""
    h = np.asarray(h, dtype=float)
    if np.any((h < -1e-12) | (h > LN2 + 1e-12)):
        raise ValidationError("inverse binary entropy needs h in [0, ln 2]")
    h = np.clip(h, 0.0, LN2)
    lo = np.zeros_like(h)
    hi = np.full_like(h, 0.5)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = binary_entropy(mid) < h
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(h <= 0, 0.0, np.where(h >= LN2, 0.5, out))
    return float(out) if out.ndim == 0 else out


def coherence_relative_entropy(rho) -> float:
    r = _arr(rho)
    return max(0.0, shannon(np.real(np.diag(r))) - von_neumann(r))


# ------------------------------------------------ Rényi mutual information

def renyi_mutual_information(rho_ab, s: float, dims=None, tol: float = 1e-12,
                             max_iter: int = 10000) -> float:
    """min over σ_A⊗σ_B of the Petz divergence, s ∈ (0,1).

    Alternates the closed-form optimal marginal on each side: with σ_A fixed,
    the best σ_B is ∝ (Tr_A[ρ^s (σ_A^{1−s} ⊗ 1)])^{1/s}.
    """
    if not 0 < s < 1:
        raise ValidationError("Rényi mutual information implemented for s in (0,1)")
    dims = _dims(rho_ab, dims)
    if len(dims) != 2:
        raise ValidationError("expected a bipartite state")
    da, db = dims
    rs = mpow(_arr(rho_ab), s)
    sa = partial_trace(rho_ab, [0], dims)
    sb = partial_trace(rho_ab, [1], dims)
    q_old = -np.inf
    for it in range(max_iter):
        xb = partial_trace(rs @ np.kron(mpow(sa, 1 - s), np.eye(db)), [1], dims)
        xb = 0.5 * (xb + xb.conj().T)
        sb = mpow(xb, 1.0 / s)
        sb /= np.trace(sb).real
        xa = partial_trace(rs @ np.kron(np.eye(da), mpow(sb, 1 - s)), [0], dims)
        xa = 0.5 * (xa + xa.conj().T)
        q = float(np.real(np.trace(mpow(xa, 1.0 / s))) ** s)
        sa = mpow(xa, 1.0 / s)
        sa /= np.trace(sa).real
        if abs(q - q_old) < tol * max(1.0, abs(q)):
            return float(np.log(q) / (s - 1.0))
        q_old = q
    raise RuntimeError(f"Rényi mutual information did not converge in {max_iter} iterations")
