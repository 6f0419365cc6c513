"""Monte Carlo estimators for cover, hitting and coverage probabilities.

Trial ``i`` of an estimate seeded with ``seed`` always uses the trial stream
``mix(seed, i)``; splitting trials over worker processes therefore cannot
change any sample, and the moments are accumulated with ``math.fsum`` so the
aggregate is independent of completion order too.
"""
from __future__ import annotations

import math
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binomtest

from .graphs import Graph, GraphError, bfs_distances
from .rng import START_TAG, draw, mix
from .walks import WalkTimeout, cover_rounds, default_cap, fixed_visited, hit_steps

__all__ = [
    "Estimate",
    "SpeedupEstimate",
    "CoverProbability",
    "StartSpec",
    "UnstableRatioError",
    "EstimateTimeout",
    "estimate_cover",
    "estimate_cover_max",
    "estimate_speedup",
    "speedup_from",
    "estimate_cover_prob",
    "estimate_hitting",
    "default_candidates",
    "resolve_workers",
]

DEFAULT_TRIALS = 1000


class UnstableRatioError(ArithmeticError):
    pass


class EstimateTimeout(RuntimeError):
    """One or more trials hit the round cap; the estimate is rejected."""

    def __init__(self, message: str, cap_hits: int):
        super().__init__(message)
        self.cap_hits = cap_hits


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    trials: int
    seed: int
    cap_hits: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_samples(cls, samples: Sequence[float], seed: int) -> "Estimate":
        x = [float(v) for v in samples]
        t = len(x)
        mean = math.fsum(x) / t
        var = math.fsum((v - mean) ** 2 for v in x) / (t - 1) if t > 1 else 0.0
        return cls(mean, math.sqrt(var / t), t, seed)


@dataclass(frozen=True)
class SpeedupEstimate:
    s_hat: float
    stderr: float
    k: int
    numerator: Estimate
    denominator: Estimate

    def to_json(self) -> dict:
        return {"s_hat": self.s_hat, "stderr": self.stderr, "k": self.k,
                "numerator": self.numerator.to_json(),
                "denominator": self.denominator.to_json()}


@dataclass(frozen=True)
class CoverProbability:
    p_hat: float
    lower: float
    upper: float
    successes: int
    trials: int
    seed: int

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.trials)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StartSpec:
    """How the k start vertices of each trial are chosen.

    ``kind`` is ``"fixed"`` (all walkers at ``vertex``), ``"stationary"`` or
    ``"uniform"`` (each walker drawn independently per trial), or
    ``"explicit"`` (the list ``vertices``, one per walker).
    """

    kind: str = "fixed"
    vertex: int = 0
    vertices: tuple[int, ...] = ()

    KINDS = ("fixed", "stationary", "uniform", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown start kind {self.kind!r}")

    @classmethod
    def fixed(cls, v: int) -> "StartSpec":
        return cls("fixed", vertex=v)

    @classmethod
    def explicit(cls, vertices: Sequence[int]) -> "StartSpec":
        return cls("explicit", vertices=tuple(vertices))

    @classmethod
    def from_json(cls, obj) -> "StartSpec":
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj.get("kind", "fixed"), int(obj.get("vertex", 0)),
                   tuple(obj.get("vertices", ())))

    def to_json(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "vertex": self.vertex}
        if self.kind == "explicit":
            return {"kind": "explicit", "vertices": list(self.vertices)}
        return {"kind": self.kind}

    def starts(self, g: Graph, k: int, seed: int, trials: Sequence[int]) -> np.ndarray:
        """Start matrix of shape ``(len(trials), k)``."""
        B = len(trials)
        if self.kind == "fixed":
            if not 0 <= self.vertex < g.n:
                raise ValueError(f"start vertex {self.vertex} out of range")
            return np.full((B, k), self.vertex, dtype=np.int64)
        if self.kind == "explicit":
            if len(self.vertices) != k:
                raise ValueError(f"explicit start list has {len(self.vertices)} "
                                 f"vertices for k={k}")
            return np.tile(np.asarray(self.vertices, dtype=np.int64), (B, 1))
        if self.kind == "uniform":
            cdf = np.arange(1, g.n + 1) / g.n
        else:
            cdf = np.cumsum(g.degree) / g.degree.sum()
        out = np.empty((B, k), dtype=np.int64)
        for r, i in enumerate(trials):
            key = mix(mix(seed, i), START_TAG)
            u = [(draw(key, j) >> 11) * 2.0**-53 for j in range(k)]
            out[r] = np.minimum(np.searchsorted(cdf, u, side="right"), g.n - 1)
        return out


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("KWALK_WORKERS", "1"))
    return max(1, workers)


def _cover_chunk(args):
    g, start, k, seed, trials, cap = args
    starts = start.starts(g, k, seed, trials)
    try:
        return cover_rounds(g, starts, seed, trials, cap), 0
    except WalkTimeout as exc:
        return None, len(exc.trials)


def _map_chunks(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(a) for a in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _chunks(trials: int, workers: int) -> list[range]:
    if workers <= 1:
        return [range(trials)]
    size = math.ceil(trials / workers)
    return [range(a, min(a + size, trials)) for a in range(0, trials, size)]


def estimate_cover(g: Graph, start: StartSpec, k: int, trials: int, seed: int,
                   cap: int | None = None, workers: int | None = None) -> Estimate:
    """Mean k-walk cover time (in rounds) over ``trials`` seeded runs."""
    if not g.connected:
        raise GraphError("cover time requires a connected graph")
    if k < 1 or trials < 2:
        raise ValueError("need k >= 1 and trials >= 2")
    if cap is None:
        cap = default_cap(g)
    w = resolve_workers(workers)
    parts = _map_chunks(_cover_chunk, [(g, start, k, seed, r, cap)
                                       for r in _chunks(trials, w)], w)
    cap_hits = sum(h for _, h in parts)
    if cap_hits:
        raise EstimateTimeout(f"{cap_hits} trial(s) exceeded the cap of {cap} rounds",
                              cap_hits)
    samples = np.concatenate([s for s, _ in parts])
    return Estimate.from_samples(samples, seed)


def default_candidates(g: Graph) -> list[int]:
    """Vertex 0 and the endpoints of a double BFS sweep (eccentric vertices)."""
    a = int(np.argmax(bfs_distances(g, 0)))
    b = int(np.argmax(bfs_distances(g, a)))
    out = []
    for v in (0, a, b):
        if v not in out:
            out.append(v)
    return out


def estimate_cover_max(g: Graph, k: int, trials: int, seed: int,
                       candidates: Sequence[int] | None = None,
                       cap: int | None = None,
                       workers: int | None = None) -> tuple[int, Estimate]:
    """Largest estimated ``C^k_v`` over candidate start vertices.

    Candidate ``i`` is estimated with seed ``mix(seed, i)``.  The result is a
    maximum over the candidate set only, not over all of ``V``.
    """
    if candidates is None:
        candidates = default_candidates(g)
    if len(candidates) == 0:
        raise ValueError("candidate set is empty")
    best = None
    for i, v in enumerate(candidates):
        est = estimate_cover(g, StartSpec.fixed(v), k, trials, mix(seed, i), cap, workers)
        if best is None or est.mean > best[1].mean:
            best = (v, est)
    return best


def speedup_from(num: Estimate, den: Estimate, k: int) -> SpeedupEstimate:
    """Ratio ``num/den`` with delta-method standard error."""
    if not den.mean > 3 * den.stderr or den.mean <= 0:
        raise UnstableRatioError(f"denominator {den.mean} not separated from 0 "
                                 f"by 3 stderr ({den.stderr})")
    s = num.mean / den.mean
    rel = math.hypot(num.stderr / num.mean if num.mean else 0.0, den.stderr / den.mean)
    return SpeedupEstimate(s, s * rel, k, num, den)


def estimate_speedup(g: Graph, start: StartSpec, k: int, trials: int, seed: int,
                     cap: int | None = None, workers: int | None = None) -> SpeedupEstimate:
    """``C/C^k`` from a single-walk and a k-walk estimate on disjoint seeds."""
    one = start
    if start.kind == "explicit":
        one = StartSpec.explicit(start.vertices[:1])
    num = estimate_cover(g, one, 1, trials, mix(seed, 0), cap, workers)
    den = estimate_cover(g, start, k, trials, mix(seed, 1), cap, workers)
    return speedup_from(num, den, k)


def estimate_cover_prob(g: Graph, starts: Sequence[int], length: int, trials: int,
                        seed: int) -> CoverProbability:
    """Fraction of runs whose visited set after ``length`` rounds is ``V``."""
    if length < 0:
        raise ValueError("length must be >= 0")
    vis = fixed_visited(g, list(starts), length, seed, range(trials))
    hits = int(vis.all(axis=1).sum())
    ci = binomtest(hits, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return CoverProbability(hits / trials, float(ci.low), float(ci.high), hits, trials, seed)


def estimate_hitting(g: Graph, u: int, v: int, trials: int, seed: int,
                     cap: int | None = None) -> Estimate:
    if not g.connected:
        raise GraphError("hitting time requires a connected graph")
    if u == v:
        return Estimate(0.0, 0.0, trials, seed)
    try:
        steps = hit_steps(g, u, v, seed, range(trials), cap)
    except WalkTimeout as exc:
        raise EstimateTimeout(str(exc), len(exc.trials)) from None
    return Estimate.from_samples(steps, seed)
