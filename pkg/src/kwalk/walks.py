"""Seeded k-walk simulation kernel.

Time is counted in parallel rounds: in one round every walker takes one step.
Walker ``j`` of trial ``i`` draws its ``t``-th step from the stream keyed by
``mix(mix(seed, i), j)`` at counter ``t``; see :mod:`kwalk.rng`.

The batched functions (``cover_rounds``, ``hit_steps``, ``fixed_visited``)
advance many independent trials at once with numpy.  The single-run wrappers
(``run_cover``, ``run_hit``, ``run_fixed``) are the batch of one.
"""
from __future__ import annotations

from collections.abc import Sequence
from typing import TextIO

import numpy as np

from .graphs import Graph
from .rng import WalkerStream, draw_array, trial_keys

__all__ = [
    "WalkTimeout",
    "KWalkRun",
    "default_cap",
    "step",
    "run_cover",
    "run_hit",
    "run_fixed",
    "cover_rounds",
    "hit_steps",
    "fixed_visited",
]


class WalkTimeout(RuntimeError):
    """A walk exceeded its round cap before stopping."""

    def __init__(self, message: str, visited_count=None, trials=None):
        super().__init__(message)
        self.visited_count = visited_count
        self.trials = trials


def default_cap(g: Graph) -> int:
    return 64 * g.n**3


def step(g: Graph, v: int, rng: WalkerStream) -> int:
    """One move of the simple walk from ``v``; advances ``rng`` by one draw."""
    d = len(g.adjacency[v])
    return g.adjacency[v][rng.next() % d]


def _advance(g: Graph, pos: np.ndarray, keys: np.ndarray, t: int) -> np.ndarray:
    # pos, keys: same shape; t is the 0-based draw counter of this round
    bits = draw_array(keys, t)
    deg = g.degree[pos]
    offset = (bits % deg.astype(np.uint64)).astype(np.int64)
    return g.indices[g.indptr[pos] + offset]


class KWalkRun:
    """State of a single k-walk: positions, visited set and round counter."""

    def __init__(self, g: Graph, starts: Sequence[int], seed: int, trial: int = 0):
        if len(starts) < 1:
            raise ValueError("need at least one walker")
        self.g = g
        self.starts = list(starts)
        self.positions = np.asarray(starts, dtype=np.int64).copy()
        if (self.positions < 0).any() or (self.positions >= g.n).any():
            raise ValueError("start vertex out of range")
        self.keys = trial_keys(seed, [trial], len(starts))[0]
        self.visited = np.zeros(g.n, dtype=bool)
        self.visited[self.positions] = True
        self.rounds_elapsed = 0

    @property
    def k(self) -> int:
        return len(self.positions)

    def visited_count(self) -> int:
        return int(self.visited.sum())

    def advance(self) -> None:
        self.positions = _advance(self.g, self.positions, self.keys, self.rounds_elapsed)
        self.visited[self.positions] = True
        self.rounds_elapsed += 1


def run_cover(g: Graph, starts: Sequence[int], seed: int, cap: int | None = None,
              trial: int = 0, trace: TextIO | None = None) -> int:
    """Rounds until the union of the walkers' visited sets is ``V``.

    ``trace`` receives one line per round: the positions and ``|visited|``.
    """
    if cap is None:
        cap = default_cap(g)
    run = KWalkRun(g, starts, seed, trial)
    count = run.visited_count()
    while count < g.n:
        if run.rounds_elapsed >= cap:
            raise WalkTimeout(f"cover not reached within {cap} rounds "
                              f"({count}/{g.n} visited)", visited_count=count)
        run.advance()
        count = run.visited_count()
        if trace is not None:
            trace.write(f"{run.rounds_elapsed} {' '.join(map(str, run.positions))} {count}\n")
    return run.rounds_elapsed


def run_hit(g: Graph, start: int, target: int, seed: int, cap: int | None = None,
            trial: int = 0) -> int:
    """First-passage step count of a single walk from ``start`` to ``target``."""
    return int(hit_steps(g, start, target, seed, [trial], cap)[0])


def run_fixed(g: Graph, starts: Sequence[int], length: int, seed: int,
              trial: int = 0) -> set[int]:
    """Set of vertices visited by the k-walk after exactly ``length`` rounds."""
    if length < 0:
        raise ValueError("length must be >= 0")
    run = KWalkRun(g, starts, seed, trial)
    for _ in range(length):
        run.advance()
    return set(np.flatnonzero(run.visited).tolist())


# ---------------------------------------------------------------------------
# batched engines
# ---------------------------------------------------------------------------


def _starts_array(starts, ntrials: int) -> np.ndarray:
    s = np.asarray(starts, dtype=np.int64)
    if s.ndim == 1:
        s = np.broadcast_to(s, (ntrials, len(s)))
    if s.shape[0] != ntrials:
        raise ValueError("starts must have one row per trial")
    return np.array(s, dtype=np.int64)


def cover_rounds(g: Graph, starts, seed: int, trials: Sequence[int],
                 cap: int | None = None) -> np.ndarray:
    """Cover rounds for each trial index in ``trials``.

    ``starts`` is either one list of k start vertices shared by every trial or
    an array of shape ``(len(trials), k)``.  Raises :class:`WalkTimeout` if any
    trial reaches ``cap``; its ``trials`` attribute lists the offenders.
    """
    if cap is None:
        cap = default_cap(g)
    trials = list(trials)
    B = len(trials)
    pos = _starts_array(starts, B)
    k = pos.shape[1]
    keys = trial_keys(seed, trials, k)
    n = g.n
    visited = np.zeros(B * n, dtype=bool)
    rows = np.arange(B, dtype=np.int64)
    visited[(rows[:, None] * n + pos).ravel()] = True
    remaining = n - visited.reshape(B, n).sum(axis=1)
    result = np.zeros(B, dtype=np.int64)

    active = remaining > 0
    idx = np.flatnonzero(active)
    pos, keys, remaining = pos[idx], keys[idx], remaining[idx]
    t = 0
    while idx.size:
        if t >= cap:
            raise WalkTimeout(f"{idx.size} trial(s) not covered within {cap} rounds",
                              visited_count=(n - remaining).tolist(),
                              trials=[trials[i] for i in idx])
        pos = _advance(g, pos, keys, t)
        t += 1
        flat = (idx[:, None] * n + pos).ravel()
        fresh = flat[~visited[flat]]
        if fresh.size:
            fresh = np.unique(fresh)
            visited[fresh] = True
            remaining -= np.bincount(np.searchsorted(idx, fresh // n), minlength=idx.size)
            done = remaining == 0
            if done.any():
                result[idx[done]] = t
                keep = ~done
                idx, pos, keys, remaining = idx[keep], pos[keep], keys[keep], remaining[keep]
    return result


def hit_steps(g: Graph, start: int, target: int, seed: int, trials: Sequence[int],
              cap: int | None = None) -> np.ndarray:
    """First-passage times of single walks, one per trial index."""
    if cap is None:
        cap = default_cap(g)
    trials = list(trials)
    result = np.zeros(len(trials), dtype=np.int64)
    if start == target:
        return result
    keys = trial_keys(seed, trials, 1)[:, 0]
    idx = np.arange(len(trials))
    pos = np.full(len(trials), start, dtype=np.int64)
    t = 0
    while idx.size:
        if t >= cap:
            raise WalkTimeout(f"{idx.size} walk(s) did not hit {target} within {cap} steps",
                              trials=[trials[i] for i in idx])
        pos = _advance(g, pos, keys, t)
        t += 1
        hit = pos == target
        if hit.any():
            result[idx[hit]] = t
            keep = ~hit
            idx, pos, keys = idx[keep], pos[keep], keys[keep]
    return result


def fixed_visited(g: Graph, starts, length: int, seed: int,
                  trials: Sequence[int]) -> np.ndarray:
    """Visited indicator matrix ``(len(trials), n)`` after ``length`` rounds."""
    if length < 0:
        raise ValueError("length must be >= 0")
    trials = list(trials)
    B = len(trials)
    pos = _starts_array(starts, B)
    keys = trial_keys(seed, trials, pos.shape[1])
    n = g.n
    visited = np.zeros(B * n, dtype=bool)
    rows = np.arange(B, dtype=np.int64)[:, None] * n
    visited[(rows + pos).ravel()] = True
    for t in range(length):
        pos = _advance(g, pos, keys, t)
        visited[(rows + pos).ravel()] = True
    return visited.reshape(B, n)
