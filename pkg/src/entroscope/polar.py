"""Polarization of binary-input cq channels under repeated ⊞ / ⊛ combining.

Three exact representations are supported:

* ``BecChannel``: erasure probability ε; ⊞ gives ε₁+ε₂−ε₁ε₂, ⊛ gives ε₁ε₂.
* ``ClassicalChannel``: a 2×m table P[x, y]; output symbols with equal
  posterior are merged, which leaves H(X|Y) unchanged.
* ``DenseChannel``: block-diagonal outputs. The classical flag created by ⊛
  only adds blocks, so the eigenvalue cost is set by the largest block.

Entropies are in nats; I(W) = ln 2 − H(W).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .combine import BinaryCqChannel, qmgl_two, qmgl_two_terms
from .entropy import binary_entropy
from .numkernel import LN2, ValidationError, load_json, matrix_from_json

DEFAULT_CAP = 4096
MERGE_TOL = 1e-12
SYMBOL_CAP = 1 << 20  # classical output alphabet, before merging


class CapExceeded(ValidationError):
    pass


@dataclass(frozen=True)
class BecChannel:
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValidationError("erasure probability must lie in [0, 1]")


@dataclass(frozen=True)
class ClassicalChannel:
    table: np.ndarray  # shape (2, m), rows are P(y|x)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] != 2 or np.any(t < -1e-15):
            raise ValidationError("classical channel needs a nonnegative 2×m table")
        if np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("classical channel rows must sum to 1")
        object.__setattr__(self, "table", _merge(np.clip(t, 0.0, None)))


@dataclass(frozen=True)
class DenseChannel:
    blocks0: tuple
    blocks1: tuple

    @property
    def max_block(self) -> int:
        return max(b.shape[0] for b in self.blocks0)

    @property
    def total_dim(self) -> int:
        return sum(b.shape[0] for b in self.blocks0)


Channel = Union[BecChannel, ClassicalChannel, DenseChannel]


@dataclass(frozen=True)
class SynthesizedChannel:
    rep: Channel
    depth: int
    path: str

    @property
    def entropy(self) -> float:
        return channel_entropy(self.rep)


@dataclass(frozen=True)
class PolarStats:
    n: int
    alpha: float
    theta: float
    beta: float
    mu: float
    nu: float


# ------------------------------------------------------------ conversions

def _merge(t: np.ndarray) -> np.ndarray:
    s = t.sum(axis=0)
    keep = s > 0
    t, s = t[:, keep], s[keep]
    key = np.round(t[0] / s / MERGE_TOL).astype(np.int64)
    uniq, inv = np.unique(key, return_inverse=True)
    out = np.zeros((2, uniq.size))
    np.add.at(out[0], inv, t[0])
    np.add.at(out[1], inv, t[1])
    return out


def from_cq(w: BinaryCqChannel) -> DenseChannel:
    return DenseChannel((w.out0,), (w.out1,))


def to_classical(w: Channel) -> ClassicalChannel:
    if isinstance(w, ClassicalChannel):
        return w
    if isinstance(w, BecChannel):
        e = w.eps
        return ClassicalChannel(np.array([[1 - e, 0.0, e], [0.0, 1 - e, e]]))
    raise ValidationError("dense channels have no classical table")


def to_dense(w: Channel) -> DenseChannel:
    if isinstance(w, DenseChannel):
        return w
    t = to_classical(w).table
    return DenseChannel((np.diag(t[0]).astype(complex),), (np.diag(t[1]).astype(complex),))


def parse_channel(spec: str) -> Channel:
    """``bec:ε``, ``bsc:p``, ``pure:α`` or ``file:path.json``."""
    try:
        return _parse_channel(spec)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad channel spec {spec!r}: {exc}") from exc


def _parse_channel(spec: str) -> Channel:
    kind, _, arg = spec.partition(":")
    if kind == "bec":
        return BecChannel(float(arg))
    if kind == "bsc":
        p = float(arg)
        return ClassicalChannel(np.array([[1 - p, p], [p, 1 - p]]))
    if kind == "pure":
        a = float(arg)
        return from_cq(BinaryCqChannel(np.array([[1, 0], [0, 0]], complex),
                                       np.outer([np.cos(a), np.sin(a)], [np.cos(a), np.sin(a)]).astype(complex)))
    if kind == "file":
        data = load_json(arg)
        if not isinstance(data, dict) or "out0" not in data or "out1" not in data:
            raise ValidationError(f"{arg}: expected keys out0 and out1")
        return from_cq(BinaryCqChannel(matrix_from_json(data["out0"]), matrix_from_json(data["out1"])))
    raise ValidationError(f"unknown channel spec {spec!r}")


# ---------------------------------------------------------------- entropy

def _block_entropy(b: np.ndarray) -> float:
    w = np.linalg.eigvalsh(b)
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def _dense_entropy_blocks(pairs) -> float:
    total = LN2
    for b0, b1 in pairs:
        total += 0.5 * (_block_entropy(b0) + _block_entropy(b1)) - _block_entropy(0.5 * (b0 + b1))
    return total


def channel_entropy(w: Channel) -> float:
    """H(X|B) for a uniform input."""
    if isinstance(w, BecChannel):
        return w.eps * LN2
    if isinstance(w, ClassicalChannel):
        t = w.table
        s = t.sum(axis=0)
        post = t[0] / s
        return float(0.5 * np.sum(s * binary_entropy(post)))
    return float(np.clip(_dense_entropy_blocks(zip(w.blocks0, w.blocks1)), 0.0, LN2))


# ------------------------------------------------------------- synthesis

def _promote(w1: Channel, w2: Channel):
    if isinstance(w1, BecChannel) and isinstance(w2, BecChannel):
        return w1, w2
    if isinstance(w1, DenseChannel) or isinstance(w2, DenseChannel):
        return to_dense(w1), to_dense(w2)
    return to_classical(w1), to_classical(w2)


def _dense_pairs(w1: DenseChannel, w2: DenseChannel, sign: str) -> Iterator[tuple]:
    o1, o2 = (w1.blocks0, w1.blocks1), (w2.blocks0, w2.blocks1)
    if sign == "-":
        for k1 in range(len(o1[0])):
            for k2 in range(len(o2[0])):
                yield tuple(0.5 * sum(np.kron(o1[u ^ v][k1], o2[v][k2]) for v in (0, 1))
                            for u in (0, 1))
    else:
        for a in (0, 1):
            for k1 in range(len(o1[0])):
                for k2 in range(len(o2[0])):
                    yield tuple(0.5 * np.kron(o1[a ^ u][k1], o2[u][k2]) for u in (0, 1))


def _check_cap(w1: DenseChannel, w2: DenseChannel, cap: int):
    if w1.max_block * w2.max_block > cap:
        raise CapExceeded(f"dense block dimension {w1.max_block * w2.max_block} exceeds cap {cap}; "
                          "use a classical or BEC channel for deeper trees")


def combine(w1: Channel, w2: Channel, sign: str, cap: int = DEFAULT_CAP) -> Channel:
    """⟨W₁, W₂⟩^sign with ``sign`` in {'-', '+'}."""
    sign = _sign(sign)
    a, b = _promote(w1, w2)
    if isinstance(a, BecChannel):
        e1, e2 = a.eps, b.eps
        return BecChannel(e1 + e2 - e1 * e2 if sign == "-" else e1 * e2)
    if isinstance(a, ClassicalChannel):
        p1, p2 = a.table, b.table
        size = p1.shape[1] * p2.shape[1] * (1 if sign == "-" else 2)
        if size > SYMBOL_CAP:
            raise CapExceeded(f"classical alphabet {size} exceeds cap {SYMBOL_CAP}; "
                              "exact tables grow quickly under repeated combining")
        if sign == "-":
            t = 0.5 * np.stack([np.kron(p1[u], p2[0]) + np.kron(p1[1 - u], p2[1]) for u in (0, 1)])
        else:
            t = 0.5 * np.stack([np.concatenate([np.kron(p1[x ^ u], p2[u]) for x in (0, 1)])
                                for u in (0, 1)])
        return ClassicalChannel(t)
    _check_cap(a, b, cap)
    pairs = list(_dense_pairs(a, b, sign))
    return DenseChannel(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def combined_entropy(w1: Channel, w2: Channel, sign: str, cap: int = DEFAULT_CAP) -> float:
    """Entropy of ⟨W₁, W₂⟩^sign without storing dense outputs."""
    sign = _sign(sign)
    a, b = _promote(w1, w2)
    if isinstance(a, DenseChannel):
        _check_cap(a, b, cap)
        return float(np.clip(_dense_entropy_blocks(_dense_pairs(a, b, sign)), 0.0, LN2))
    return channel_entropy(combine(a, b, sign))


def _sign(c: str) -> str:
    c = {"−": "-", "-": "-", "+": "+"}.get(c)
    if c is None:
        raise ValidationError("path characters must be '+' or '-'")
    return c


def synthesize(w: Channel, path: str, cap: int = DEFAULT_CAP) -> SynthesizedChannel:
    """Apply W ↦ ⟨W, W⟩^s for each character of ``path`` in order."""
    if isinstance(w, BinaryCqChannel):
        w = from_cq(w)
    cur = w
    for c in path:
        cur = combine(cur, cur, c, cap)
    return SynthesizedChannel(cur, len(path), "".join(_sign(c) for c in path))


# ------------------------------------------------------------ statistics

def _stats(n: int, info: np.ndarray, a: float, b: float) -> PolarStats:
    info = np.asarray(info, dtype=float)
    lo = float(np.mean(info < a))
    hi = float(np.mean(info > b))
    return PolarStats(n, lo, 1.0 - lo - hi, hi, float(np.mean(info)), float(np.mean(info ** 2)))


def _check_thresholds(a, b):
    if not 0 < a < b < LN2:
        raise ValidationError("thresholds need 0 < a < b < ln 2")


def _verify(stats: Sequence[PolarStats], mu_tol: float):
    for s0, s1 in zip(stats, stats[1:]):
        if s1.nu < s0.nu - 1e-10:
            raise RuntimeError(f"ν decreased at level {s1.n}: {s0.nu} -> {s1.nu}")
        if abs(s1.mu - stats[0].mu) > mu_tol:
            raise RuntimeError(f"μ not conserved at level {s1.n}: {s1.mu} vs {stats[0].mu}")


def _level_entropies(ws: list, depth: int, cap: int, pair) -> list:
    """Entropies at every level 0..depth; ``pair(level)`` yields index pairs."""
    out = [[channel_entropy(w) for w in ws]]
    for n in range(1, depth + 1):
        pairs = pair(n, len(ws))
        last = n == depth
        nxt, ent = [None] * len(ws), [0.0] * len(ws)
        for i, j in pairs:
            for slot, sign in ((i, "-"), (j, "+")):
                if last and (isinstance(ws[i], DenseChannel) or isinstance(ws[j], DenseChannel)):
                    ent[slot] = combined_entropy(ws[i], ws[j], sign, cap)
                else:
                    nxt[slot] = combine(ws[i], ws[j], sign, cap)
                    ent[slot] = channel_entropy(nxt[slot])
        ws = nxt
        out.append(ent)
    return out


def polarization_run(w: Channel, depth: int, a: float, b: float, cap: int = DEFAULT_CAP,
                     max_depth: int = 24) -> list[PolarStats]:
    """Fractions of synthesized channels below ``a``, inside [a, b] and above ``b``
    (thresholds on I), plus μₙ and νₙ, at every level of the full tree."""
    _check_thresholds(a, b)
    if depth > max_depth:
        raise CapExceeded(f"depth {depth} exceeds the depth cap {max_depth}")
    if isinstance(w, BinaryCqChannel):
        w = from_cq(w)
    if isinstance(w, BecChannel):
        e = np.array([w.eps])
        levels = [e]
        for _ in range(depth):
            e = np.stack([2 * e - e * e, e * e], axis=1).ravel()
            levels.append(e)
        ents = [LN2 * x for x in levels]
    else:
        ents = _tree_entropies(w, depth, cap)
    stats = [_stats(n, LN2 - np.asarray(h), a, b) for n, h in enumerate(ents)]
    _verify(stats, 1e-8)
    return stats


def _tree_entropies(w: Channel, depth: int, cap: int) -> list:
    """Stationary tree: every node spawns ⟨W, W⟩⁻ and ⟨W, W⟩⁺."""
    nodes = [w]
    out = [[channel_entropy(w)]]
    for n in range(1, depth + 1):
        if n == depth:
            out.append([combined_entropy(x, x, c, cap) for x in nodes for c in "-+"])
            break
        nodes = [combine(x, x, c, cap) for x in nodes for c in "-+"]
        out.append([channel_entropy(x) for x in nodes])
    return out


def _tree_pairs(n: int, size: int) -> list[tuple[int, int]]:
    big = 2 ** n
    half = big // 2
    return [(m * big + j, m * big + half + j) for m in range(size // big) for j in range(half)]


def nonstationary_run(channels: Sequence[Channel], depth: int, a: float, b: float,
                      cap: int = DEFAULT_CAP, mu_tol: float = 1e-8) -> list[PolarStats]:
    """W_{n,Nm+j} = ⟨W_{n−1,Nm+j}, W_{n−1,Nm+N/2+j}⟩⁻ and the + sibling at Nm+N/2+j."""
    _check_thresholds(a, b)
    chans = [from_cq(c) if isinstance(c, BinaryCqChannel) else c for c in channels]
    if len(chans) == 0 or len(chans) % (2 ** depth):
        raise ValidationError(f"channel list length must be a multiple of 2^{depth}")
    if all(isinstance(c, BecChannel) for c in chans):
        e = np.array([c.eps for c in chans])
        ents = [LN2 * e]
        for n in range(1, depth + 1):
            nb = 2 ** n
            g = e.reshape(-1, 2, nb // 2)
            lo, hi = g[:, 0, :], g[:, 1, :]
            e = np.concatenate([lo + hi - lo * hi, lo * hi], axis=1).ravel()
            ents.append(LN2 * e)
    else:
        ents = _level_entropies(chans, depth, cap, _tree_pairs)
    stats = [_stats(n, LN2 - np.asarray(h), a, b) for n, h in enumerate(ents)]
    _verify(stats, mu_tol)
    return stats


def stats_summary(stats: Sequence[PolarStats]) -> dict:
    mu = stats[0].mu
    thetas = [s.theta for s in stats]
    return {"target_beta": mu / LN2, "final_beta": stats[-1].beta,
            "final_alpha": stats[-1].alpha, "final_theta": stats[-1].theta,
            "theta_nonincreasing_steps": int(sum(t1 <= t0 + 1e-12 for t0, t1 in zip(thetas, thetas[1:]))),
            "nu_monotone": all(s1.nu >= s0.nu - 1e-10 for s0, s1 in zip(stats, stats[1:]))}


# ------------------------------------------------------------ gap & speed

def band_floor(a: float, b: float, grid: int = 81) -> float:
    """min over H₁, H₂ ∈ [ln2−b, ln2−a] of 2(qmgl_two − max(H₁, H₂))."""
    _check_thresholds(a, b)
    h1, h2 = np.meshgrid(np.linspace(LN2 - b, LN2 - a, grid), np.linspace(LN2 - b, LN2 - a, grid))
    lower = np.max(qmgl_two_terms(h1.ravel(), h2.ravel()), axis=0)
    return float(np.min(2 * (lower - np.maximum(h1.ravel(), h2.ravel()))))


def entropy_gap(w1: Channel, w2: Channel, a: float | None = None, b: float | None = None,
                cap: int = DEFAULT_CAP) -> dict:
    """I(⟨·⟩⁺) − I(⟨·⟩⁻) − |I(W₁) − I(W₂)| with its proven floor."""
    w1 = from_cq(w1) if isinstance(w1, BinaryCqChannel) else w1
    w2 = from_cq(w2) if isinstance(w2, BinaryCqChannel) else w2
    h1, h2_ = channel_entropy(w1), channel_entropy(w2)
    hm = combined_entropy(w1, w2, "-", cap)
    hp = combined_entropy(w1, w2, "+", cap)
    gap = (hm - hp) - abs(h1 - h2_)
    out = {"gap": float(gap), "chain_form": float(2 * (hm - max(h1, h2_))),
           "pointwise_floor": float(2 * (qmgl_two(np.clip(h1, 0, LN2), np.clip(h2_, 0, LN2)) - max(h1, h2_)))}
    if a is not None and b is not None:
        out["kappa_floor"] = band_floor(a, b)
        out["in_band"] = bool(a <= LN2 - h1 <= b and a <= LN2 - h2_ <= b)
    return out


def t_functional_run(w: Channel, depth: int, cap: int = DEFAULT_CAP) -> dict:
    """E[T] per level with T = h(1−h), h = H/ln2, and a fit of −ln E[T] ≈ √(2κn + c)."""
    if isinstance(w, BinaryCqChannel):
        w = from_cq(w)
    if isinstance(w, BecChannel):
        e = np.array([w.eps])
        series = [float(np.mean(e * (1 - e)))]
        for _ in range(depth):
            e = np.stack([2 * e - e * e, e * e], axis=1).ravel()
            series.append(float(np.mean(e * (1 - e))))
    else:
        ents = _tree_entropies(w, depth, cap)
        series = []
        for h in ents:
            x = np.asarray(h) / LN2
            series.append(float(np.mean(x * (1 - x))))
    decreasing = all(t1 <= t0 + 1e-12 for t0, t1 in zip(series, series[1:]))
    pos = [(n, t) for n, t in enumerate(series) if t > 0]
    kappa = float("nan")
    if len(pos) >= 3:
        ns = np.array([n for n, _ in pos], dtype=float)
        y = np.log(np.array([t for _, t in pos])) ** 2
        slope = np.polyfit(ns, y, 1)[0]
        kappa = float(slope / 2.0)
    return {"series": series, "decreasing": decreasing, "kappa_fit": kappa}


def stats_csv(stats: Sequence[PolarStats]) -> str:
    lines = ["n,alpha,theta,beta,mu,nu"]
    for s in stats:
        lines.append(f"{s.n},{s.alpha:.12g},{s.theta:.12g},{s.beta:.12g},{s.mu:.15g},{s.nu:.15g}")
    return "\n".join(lines) + "\n"
