"""Dense linear-algebra substrate: tensor products, partial traces, matrix
functions, fidelity and norms.

Subsystem ordering is big-endian: the first listed subsystem is the most
significant index. Subsystem indices are zero-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

EIG_TOL = 1e-10
HERM_TOL = 1e-10
LN2 = float(np.log(2.0))


class ValidationError(ValueError):
    """Input failed a structural check (shape, hermiticity, trace...)."""


def herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _arr(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.mat
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix with subsystem dimensions."""

    mat: np.ndarray
    dims: tuple = field(default=())

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("density matrix must be square")
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if int(np.prod(dims)) != m.shape[0]:
            raise ValidationError(f"dims {dims} do not match size {m.shape[0]}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERM_TOL:
            raise ValidationError("density matrix is not Hermitian")
        m = herm(m)
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValidationError(f"trace {np.trace(m).real!r} is not 1")
        if np.linalg.eigvalsh(m).min() < -EIG_TOL:
            raise ValidationError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class Povm:
    effects: tuple

    def __post_init__(self):
        effs = [np.array(e, dtype=complex) for e in self.effects]
        if not effs:
            raise ValidationError("empty POVM")
        d = effs[0].shape[0]
        for e in effs:
            if e.shape != (d, d):
                raise ValidationError("POVM effects differ in shape")
            if np.max(np.abs(e - e.conj().T)) > HERM_TOL:
                raise ValidationError("POVM effect is not Hermitian")
            if np.linalg.eigvalsh(herm(e)).min() < -EIG_TOL:
                raise ValidationError("POVM effect is not PSD")
        if np.max(np.abs(sum(effs) - np.eye(d))) > 1e-10:
            raise ValidationError("POVM effects do not sum to identity")
        effs = [herm(e) for e in effs]
        for e in effs:
            e.setflags(write=False)
        object.__setattr__(self, "effects", tuple(effs))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def probs(self, rho) -> np.ndarray:
        r = _arr(rho)
        return np.array([np.real(np.vdot(e, r)) for e in self.effects])


# ---------------------------------------------------------------- basics

def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def tensor(*mats) -> np.ndarray:
    """Kronecker product, first factor most significant."""
    if len(mats) == 1 and isinstance(mats[0], (list, tuple)):
        mats = tuple(mats[0])
    return reduce(np.kron, [np.asarray(_arr(m)) for m in mats])


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None) -> np.ndarray:
    """Reduce onto the subsystems in ``keep`` (zero-based, order preserved)."""
    if dims is None:
        if not isinstance(rho, DensityMatrix):
            raise ValidationError("dims required for a bare array")
        dims = rho.dims
    m = _arr(rho)
    dims = [int(d) for d in dims]
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise IndexError(f"subsystem index out of range for {n} subsystems")
    t = m.reshape(dims + dims)
    # einsum keeps this a single pass
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = [letters[i] for i in range(n)]
    col = [letters[n + i] if i in keep else letters[i] for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    res = np.einsum("".join(row + col) + "->" + "".join(out), t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(dk, dk)


def permute_systems(m, perm: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new subsystem j is old subsystem perm[j]."""
    m = _arr(m)
    dims = list(dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    t = t.transpose(list(perm) + [n + p for p in perm])
    d = m.shape[0]
    return t.reshape(d, d)


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(herm(_arr(h)))


def matfun(h, f: Callable[[np.ndarray], np.ndarray], *, kernel_zero: bool = False) -> np.ndarray:
    """U f(Λ) U†. With ``kernel_zero`` eigenvalues below EIG_TOL map to 0."""
    m = _arr(h)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-8 * max(1.0, np.abs(m).max()):
        raise ValidationError("matfun needs a Hermitian input")
    w, u = eigh(m)
    if kernel_zero:
        fw = np.zeros(w.shape, dtype=complex)
        sup = w > EIG_TOL
        fw[sup] = f(w[sup])
    else:
        fw = np.asarray(f(w), dtype=complex)
    return (u * fw) @ u.conj().T


def mpow(h, p: complex) -> np.ndarray:
    """Power on the support; the kernel maps to zero.

    Positive real powers are continuous at 0, so tiny eigenvalues are kept
    (clipped at 0) rather than cut at EIG_TOL, which matters for small p.
    """
    if np.isreal(p) and np.real(p) > 0:
        return matfun(h, lambda w: np.power(np.clip(w, 0.0, None), np.real(p)))
    return matfun(h, lambda w: np.power(w.astype(complex), p), kernel_zero=True)


def msqrt(h) -> np.ndarray:
    w, u = eigh(h)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (u * w) @ u.conj().T


def mlog(h) -> np.ndarray:
    """Matrix log on the support (0 on the kernel)."""
    return matfun(h, np.log, kernel_zero=True)


def frechet(h, f, fprime, x) -> np.ndarray:
    """Fréchet derivative of the spectral function f at h in direction x."""
    w, u = eigh(h)
    fw = f(w)
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) < 1e-12 * np.maximum(1.0, np.abs(w)[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        gam = np.where(close, 0.0, (fw[:, None] - fw[None, :]) / np.where(close, 1.0, dw))
    mid = 0.5 * (w[:, None] + w[None, :])
    gam = np.where(close, fprime(mid), gam)
    return u @ (gam * (u.conj().T @ _arr(x) @ u)) @ u.conj().T


def trace_norm(m) -> float:
    return float(np.sum(np.linalg.svd(_arr(m), compute_uv=False)))


def fidelity(rho, sigma) -> float:
    """Root fidelity ‖√ρ√σ‖₁ (not squared)."""
    a, b = _arr(rho), _arr(sigma)
    if a.shape != b.shape:
        raise ValidationError("fidelity of states with different dimensions")
    return float(min(1.0, trace_norm(msqrt(a) @ msqrt(b))))


def positive_part(h) -> tuple[np.ndarray, np.ndarray]:
    """Projector onto the strictly positive eigenspace and the projected operator."""
    w, u = eigh(h)
    up = u[:, w > EIG_TOL]
    p = up @ up.conj().T
    return p, (up * w[w > EIG_TOL]) @ up.conj().T


def support_projector(h) -> np.ndarray:
    return positive_part(h)[0]


# ------------------------------------------------------------ randomness

def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """T T†/Tr with Gaussian T of shape d × rank (Hilbert-Schmidt for full rank)."""
    k = d if rank is None else rank
    t = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = t @ t.conj().T
    return m / np.trace(m).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_state(d, rng, rank=1)


def bloch_state(vec) -> np.ndarray:
    """½(1 + a·σ) with σ = (X, Y, Z)."""
    u, v, w = vec
    return 0.5 * np.array([[1 + w, u - 1j * v], [u + 1j * v, 1 - w]], dtype=complex)


# ------------------------------------------------------------------- I/O

def matrix_to_json(m, dims: Sequence[int] | None = None) -> dict:
    m = _arr(m)
    out = {"rows": m.shape[0], "cols": m.shape[1],
           "re": m.real.tolist(), "im": m.imag.tolist()}
    if dims is not None:
        out["dims"] = [int(d) for d in dims]
    return out


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        rows, cols = int(obj["rows"]), int(obj["cols"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from exc
    if re.shape != (rows, cols) or im.shape != (rows, cols):
        raise ValidationError(f"matrix entries do not match declared shape {rows}x{cols}")
    return re + 1j * im


def state_from_json(obj: dict) -> DensityMatrix:
    m = matrix_from_json(obj)
    return DensityMatrix(m, tuple(obj.get("dims", (m.shape[0],))))


def load_json(path) -> dict:
    """Read JSON, turning decode errors into line-anchored validation errors."""
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
