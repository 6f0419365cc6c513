"""Exact Markov-chain quantities: stationary law, hitting times, mixing time,
coupon-collector means and binomial window probabilities."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .graphs import ConvergenceError, Graph, GraphError, is_bipartite
from .walks import cover_rounds

__all__ = [
    "DENSE_LIMIT",
    "PeriodicityError",
    "HittingMatrix",
    "MixingResult",
    "BinomialWindow",
    "harmonic",
    "stationary",
    "hitting_matrix",
    "mixing_time",
    "coupon_collector_mean",
    "binomial_window",
    "binomial_window_exact",
    "concentration_check",
]

DENSE_LIMIT = 4096


class PeriodicityError(ValueError):
    """Non-lazy mixing time requested on a periodic (bipartite) graph."""


def harmonic(k: int) -> float:
    """``H_k`` by exact summation, smallest terms first."""
    return math.fsum(1.0 / i for i in range(k, 0, -1))


def stationary(g: Graph) -> np.ndarray:
    if not g.connected:
        raise GraphError("stationary distribution requires a connected graph")
    deg = g.degree.astype(float)
    return deg / deg.sum()


@dataclass(frozen=True)
class HittingMatrix:
    h: np.ndarray
    h_max: float
    h_min: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.h.shape[0]
        w.writerow(["source"] + [str(v) for v in range(n)])
        for u in range(n):
            w.writerow([str(u)] + [repr(float(x)) for x in self.h[u]])
        return buf.getvalue()


def hitting_matrix(g: Graph, dense_limit: int = DENSE_LIMIT) -> HittingMatrix:
    """All-pairs expected first-passage times from the fundamental matrix.

    ``Z = (I - Q + 1 pi^T)^{-1}`` and ``h(u, v) = (Z[v, v] - Z[u, v]) / pi(v)``.
    """
    if not g.connected:
        raise GraphError("hitting times require a connected graph")
    n = g.n
    if n > dense_limit:
        raise GraphError(f"n={n} exceeds the dense limit {dense_limit}; "
                         "use Monte Carlo estimation (estimate_hitting) instead")
    pi = stationary(g)
    Q = g.transition_matrix().toarray()
    Z = np.linalg.inv(np.eye(n) - Q + np.outer(np.ones(n), pi))
    h = (np.diag(Z)[None, :] - Z) / pi[None, :]
    np.fill_diagonal(h, 0.0)
    if n == 1:
        return HittingMatrix(h, 0.0, 0.0)
    off = h[~np.eye(n, dtype=bool)]
    return HittingMatrix(h, float(off.max()), float(off.min()))


def harmonic_residual(g: Graph, hm: HittingMatrix) -> float:
    """Max |h(u,v) - 1 - mean_{w in N(u)} h(w,v)| over u != v."""
    Q = g.transition_matrix()
    r = hm.h - 1.0 - Q @ hm.h
    np.fill_diagonal(r, 0.0)
    return float(np.abs(r).max())


@dataclass(frozen=True)
class MixingResult:
    t_m: int
    distances: np.ndarray
    lazy: bool
    pi: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {"t_m": self.t_m, "lazy": self.lazy,
                "max_distance": float(self.distances.max())}


def mixing_time(g: Graph, lazy: bool = False, t_cap: int = 1_000_000) -> MixingResult:
    """Smallest ``t > 0`` with ``max_u sum_v |p^t(u, v) - pi(v)| < 1/e``.

    All ``n`` start rows are evolved exactly; the lazy kernel is ``(I + Q)/2``.
    """
    if not g.connected:
        raise GraphError("mixing time requires a connected graph")
    if not lazy and is_bipartite(g):
        raise PeriodicityError("graph is bipartite (periodic); use lazy=True")
    pi = stationary(g)
    QT = g.transition_matrix().T.tocsr()
    P = np.eye(g.n)  # row u = distribution of the walk started at u
    thresh = 1.0 / math.e
    for t in range(1, t_cap + 1):
        nxt = (QT @ P.T).T
        P = 0.5 * (P + nxt) if lazy else nxt
        dist = np.abs(P - pi[None, :]).sum(axis=1)
        if dist.max() < thresh:
            return MixingResult(t, dist, lazy, pi)
    raise ConvergenceError(f"mixing time exceeds t_cap={t_cap}", last=float(dist.max()))


def coupon_collector_mean(n: int, self_loops: bool) -> float:
    """Expected single-walk cover time of ``K_n`` (start vertex pre-collected)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return (n if self_loops else n - 1) * harmonic(n - 1)


@dataclass(frozen=True)
class BinomialWindow:
    n: int
    c: float
    lo: int
    hi: int
    prob: float
    lower_bound: float
    upper_bound: float

    @property
    def holds(self) -> bool:
        return self.lower_bound <= self.prob <= self.upper_bound


def _window(n: int, c: float) -> tuple[int, int]:
    root = math.sqrt(n)
    return math.ceil((c - 1) * root - 1e-12), math.floor(c * root + 1e-12)


def binomial_window(n: int, c: float) -> BinomialWindow:
    """``Pr[(c-1)sqrt(n) <= X - n/2 <= c sqrt(n)]`` for ``X ~ Bin(n, 1/2)``.

    Summed over the closed integer window of offsets in log space.
    """
    if n % 2:
        raise ValueError("n must be even")
    if c < 2:
        raise ValueError("c must be >= 2")
    if n < 16 * c * c:
        raise ValueError(f"n={n} < 16c^2={16 * c * c:g}: bounds not guaranteed")
    lo, hi = _window(n, c)
    half = n // 2
    ks = np.arange(half + lo, min(half + hi, n) + 1)
    if ks.size == 0:
        prob = 0.0
    else:
        logs = gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1) - n * math.log(2)
        prob = float(math.exp(logsumexp(logs)))
    return BinomialWindow(n, c, lo, hi, prob,
                          math.exp(-3 * c * c - 4), math.exp(-2 * (c - 1) ** 2))


def binomial_window_exact(n: int, c: float) -> Fraction:
    """Same window as :func:`binomial_window`, as an exact rational."""
    lo, hi = _window(n, c)
    half = n // 2
    total = sum(math.comb(n, half + j) for j in range(lo, hi + 1) if half + j <= n)
    return Fraction(total, 2**n)


def concentration_check(g: Graph, start: int, trials: int, seed: int) -> float:
    """Sample coefficient of variation of the single-walk cover time."""
    if not g.connected:
        raise GraphError("graph must be connected")
    tau = cover_rounds(g, [start], seed, range(trials)).astype(float)
    mean = tau.mean()
    if mean == 0:
        return 0.0
    return float(tau.std(ddof=1) / mean)
