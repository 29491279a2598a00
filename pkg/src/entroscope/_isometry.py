"""Smooth optimization over isometries V (V†V = I) via the polar map
M ↦ M (M†M)^{-1/2}, with analytic gradients for L-BFGS."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .numkernel import frechet


def polar(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return V = M P^{-1/2} together with P = M†M and P^{-1/2}."""
    p = m.conj().T @ m
    w, u = np.linalg.eigh(p)
    a = (u / np.sqrt(w)) @ u.conj().T
    return m @ a, p, a


def pullback(m: np.ndarray, p: np.ndarray, a: np.ndarray, gv: np.ndarray) -> np.ndarray:
    """Gradient wrt M given the Euclidean gradient ``gv`` wrt V (df = Re Tr gv† dV)."""
    h = m.conj().T @ gv
    h = 0.5 * (h + h.conj().T)
    k = frechet(p, lambda w: w ** -0.5, lambda w: -0.5 * w ** -1.5, h)
    return gv @ a + 2.0 * m @ k


def _pack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real.ravel(), z.imag.ravel()])


def _unpack(x: np.ndarray, shape) -> np.ndarray:
    n = int(np.prod(shape))
    return (x[:n] + 1j * x[n:]).reshape(shape)


def minimize_isometry(fg, v0: np.ndarray, *, maxiter: int = 5000, gtol: float = 1e-11,
                      ftol: float = 1e-15) -> tuple[np.ndarray, float, int]:
    """Minimize f(V) over isometries starting at ``v0``.

    ``fg(V)`` returns (f, gradient wrt V). Returns (V, f, iterations).
    """
    shape = v0.shape

    def obj(x):
        m = _unpack(x, shape)
        v, p, a = polar(m)
        f, gv = fg(v)
        gm = pullback(m, p, a, gv)
        return f, _pack(gm)

    res = minimize(obj, _pack(v0), jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "maxcor": 30, "gtol": gtol, "ftol": ftol})
    v = polar(_unpack(res.x, shape))[0]
    return v, float(res.fun), int(res.nit)


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return polar(z)[0]
