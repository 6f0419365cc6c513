"""Graph container, generators, edge-list I/O and spectral estimates."""
from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

__all__ = [
    "Graph",
    "GraphError",
    "GenerationError",
    "ConvergenceError",
    "SpectralInfo",
    "from_edges",
    "gen_cycle",
    "gen_complete",
    "gen_torus_grid",
    "gen_hypercube",
    "gen_barbell",
    "barbell_center",
    "gen_erdos_renyi",
    "gen_random_regular",
    "second_eigenvalue",
    "parse_graph",
    "serialize_graph",
    "is_bipartite",
    "bfs_distances",
]

MAX_VERTICES = 1 << 31


class GraphError(ValueError):
    """Invalid graph parameters or malformed graph documents."""


class GenerationError(RuntimeError):
    """A randomized generator ran out of retries."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph, optionally with self-loops.

    ``adjacency[v]`` is the sorted neighbour tuple of ``v``.  A self-loop puts
    ``v`` in its own list once, so it adds one to the degree and one to ``m``.
    Equality is structural; ``family_tag`` is provenance only.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    family_tag: str = "custom"
    m: int = field(init=False)
    self_loops: bool = field(init=False)
    connected: bool = field(init=False)
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)
    degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n
        if n < 1 or len(self.adjacency) != n:
            raise GraphError(f"adjacency has {len(self.adjacency)} rows for n={n}")
        loops = 0
        half = 0
        for v, nbrs in enumerate(self.adjacency):
            if len(nbrs) == 0:
                raise GraphError(f"vertex {v} is isolated")
            prev = -1
            for u in nbrs:
                if not 0 <= u < n:
                    raise GraphError(f"neighbour {u} of {v} out of range")
                if u <= prev:
                    raise GraphError(f"neighbours of {v} not strictly sorted")
                prev = u
                if u == v:
                    loops += 1
                else:
                    half += 1
        # symmetry
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if u != v and not _contains(self.adjacency[u], v):
                    raise GraphError(f"asymmetric adjacency: {u} in N({v}) but not vice versa")
        deg = np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.fromiter(
            (u for a in self.adjacency for u in a), dtype=np.int64, count=int(indptr[-1])
        )
        for name, arr in (("indptr", indptr), ("indices", indices), ("degree", deg)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "m", half // 2 + loops)
        object.__setattr__(self, "self_loops", loops > 0)
        object.__setattr__(self, "connected", bool((bfs_distances(self, 0) >= 0).all()))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.adjacency == other.adjacency

    def __hash__(self):
        return hash((self.n, self.adjacency))

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def edges(self) -> list[tuple[int, int]]:
        """Canonical edge list: ``u <= v``, lexicographic."""
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u <= v]

    def is_regular(self) -> bool:
        return bool((self.degree == self.degree[0]).all())

    def adjacency_matrix(self) -> sps.csr_matrix:
        data = np.ones(len(self.indices), dtype=float)
        return sps.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def transition_matrix(self) -> sps.csr_matrix:
        """Row-stochastic simple-walk kernel ``Q[v, u] = 1/deg(v)``."""
        data = np.repeat(1.0 / self.degree, self.degree)
        return sps.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))


def _contains(sorted_tuple, x) -> bool:
    lo, hi = 0, len(sorted_tuple)
    while lo < hi:
        mid = (lo + hi) // 2
        if sorted_tuple[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < len(sorted_tuple) and sorted_tuple[lo] == x


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in g.adjacency[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def is_bipartite(g: Graph) -> bool:
    """Two-colourability; a self-loop makes a graph non-bipartite."""
    if g.self_loops:
        return False
    color = np.full(g.n, -1, dtype=np.int8)
    for s in range(g.n):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in g.adjacency[v]:
                if color[u] < 0:
                    color[u] = 1 - color[v]
                    queue.append(u)
                elif color[u] == color[v]:
                    return False
    return True


def from_edges(n: int, edges: Iterable[tuple[int, int]], family_tag: str = "custom") -> Graph:
    """Build a graph from an edge iterable; duplicates raise :class:`GraphError`."""
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
        if v in nbrs[u]:
            raise GraphError(f"duplicate edge ({u}, {v})")
        nbrs[u].add(v)
        nbrs[v].add(u)
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs), family_tag)


# ---------------------------------------------------------------------------
# deterministic families
# ---------------------------------------------------------------------------


def gen_cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3, got {n}")
    return from_edges(n, ((i, (i + 1) % n) for i in range(n)), f"cycle(n={n})")


def gen_complete(n: int, self_loops: bool = False) -> Graph:
    if n < 2:
        raise GraphError(f"complete graph needs n >= 2, got {n}")
    if self_loops:
        adj = tuple(tuple(range(n)) for _ in range(n))
    else:
        adj = tuple(tuple(u for u in range(n) if u != v) for v in range(n))
    return Graph(n, adj, f"complete(n={n},self_loops={self_loops})")


def gen_torus_grid(side: int, d: int = 2) -> Graph:
    """``side``-ary ``d``-dimensional torus; vertex index is the base-``side`` code."""
    if side < 3:
        raise GraphError(f"torus needs side >= 3, got {side}")
    if d < 1:
        raise GraphError(f"torus needs d >= 1, got {d}")
    if d * math.log(side) > math.log(MAX_VERTICES):
        raise GraphError(f"torus {side}^{d} exceeds {MAX_VERTICES} vertices")
    n = side**d
    edges = []
    for v in range(n):
        stride = 1
        for _ in range(d):
            coord = (v // stride) % side
            u = v - coord * stride + ((coord + 1) % side) * stride
            edges.append((v, u))
            stride *= side
    return from_edges(n, edges, f"torus(side={side},d={d})")


def gen_hypercube(dim: int) -> Graph:
    """Hypercube with vertices in reflected Gray-code order, so that
    ``gen_hypercube(2)`` has the same labelled edges as ``gen_cycle(4)``."""
    if dim < 1:
        raise GraphError(f"hypercube needs dim >= 1, got {dim}")
    if dim > 30:
        raise GraphError(f"hypercube of dimension {dim} is too large")
    n = 1 << dim
    # vertex i carries the bit-string gray(i) = i ^ (i >> 1)
    rank = np.empty(n, dtype=np.int64)
    codes = np.arange(n) ^ (np.arange(n) >> 1)
    rank[codes] = np.arange(n)
    adj = tuple(tuple(sorted(int(rank[int(c) ^ (1 << b)]) for b in range(dim)))
                for c in codes)
    return Graph(n, adj, f"hypercube(dim={dim})")


def barbell_center(n: int) -> int:
    return (n - 1) // 2


def gen_barbell(n: int) -> tuple[Graph, int]:
    """Two cliques of ``(n-1)/2`` vertices joined through a centre vertex.

    Layout: bell A is ``0..m-1``, the centre is ``m``, bell B is ``m+1..2m``.
    The centre is adjacent to ``m-1`` and ``m+1`` only.
    """
    if n < 5 or n % 2 == 0:
        raise GraphError(f"barbell needs odd n >= 5, got {n}")
    m = (n - 1) // 2
    c = m
    edges = []
    for base in (0, m + 1):
        edges.extend((base + i, base + j) for i in range(m) for j in range(i + 1, m))
    edges += [(c - 1, c), (c, c + 1)]
    return from_edges(n, edges, f"barbell(n={n})"), c


# ---------------------------------------------------------------------------
# random families
# ---------------------------------------------------------------------------


def _rng(seed: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng([seed & ((1 << 64) - 1), attempt])


def gen_erdos_renyi(n: int, p: float, seed: int, max_retries: int = 100) -> Graph:
    """G(n, p) resampled with sub-seed ``attempt`` until connected.

    The number of failed attempts is kept in ``family_tag`` as ``retries=``.
    """
    if not 0 < p <= 1:
        raise GraphError(f"p must be in (0, 1], got {p}")
    if n < 2:
        raise GraphError(f"n must be >= 2, got {n}")
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(max_retries):
        keep = _rng(seed, attempt).random(len(iu)) < p
        src, dst = iu[keep], ju[keep]
        deg = np.bincount(src, minlength=n) + np.bincount(dst, minlength=n)
        if (deg == 0).any():
            continue
        g = from_edges(n, zip(src.tolist(), dst.tolist()),
                       f"erdos_renyi(n={n},p={p:.6g},seed={seed},retries={attempt})")
        if g.connected:
            return g
    raise GenerationError(f"no connected G({n}, {p}) within {max_retries} attempts")


def _pair_stubs(n: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    # Pair stubs at random; stubs that would form loops or multi-edges are
    # shuffled and re-paired until none remain or no legal pair is left.
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    while stubs.size:
        rng.shuffle(stubs)
        bad: list[int] = []
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                bad += [a, b]
        if not bad:
            return edges
        left = sorted(set(bad))
        if not any(a != b and (a, b) not in edges
                   for i, a in enumerate(left) for b in left[i + 1:]):
            return None
        stubs = np.array(bad, dtype=np.int64)
    return edges


def gen_random_regular(n: int, d: int, seed: int, max_retries: int = 100) -> Graph:
    """Random simple connected ``d``-regular graph from the pairing model."""
    if (n * d) % 2 or not 3 <= d < n:
        raise GraphError(f"need n*d even and 3 <= d < n, got n={n}, d={d}")
    for attempt in range(max_retries):
        edges = _pair_stubs(n, d, _rng(seed, attempt))
        if edges is None:
            continue
        g = from_edges(n, sorted(edges), f"random_regular(n={n},d={d},seed={seed})")
        if g.connected:
            return g
    raise GenerationError(f"no connected {d}-regular graph on {n} vertices "
                          f"within {max_retries} attempts")


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralInfo:
    """Second eigenvalue magnitude of a regular graph and derived constants.

    ``s = ln(2n)/ln(d/lambda)`` and ``b = lambda/(d - lambda)``; both are
    ``inf``/``nan`` when lambda is 0 or reaches d.  For bipartite graphs the
    eigenvalue ``-d`` is treated as trivial alongside ``d``.
    """

    d: int
    lam: float
    s: float
    b: float
    tol: float
    iterations: int
    bipartite: bool


def second_eigenvalue(g: Graph, tol: float = 1e-9, max_iter: int = 200_000,
                      seed: int = 0) -> SpectralInfo:
    if not g.is_regular():
        raise GraphError("second_eigenvalue requires a regular graph")
    if not g.connected:
        raise GraphError("second_eigenvalue requires a connected graph")
    d = int(g.degree[0])
    A = g.adjacency_matrix()
    n = g.n
    trivial = [np.full(n, 1.0 / math.sqrt(n))]
    bip = is_bipartite(g)
    if bip:
        dist = bfs_distances(g, 0)
        trivial.append(np.where(dist % 2 == 0, 1.0, -1.0) / math.sqrt(n))

    def deflate(x):
        for t in trivial:
            x -= (t @ x) * t
        return x

    # Power iteration on A^2 so that +lambda and -lambda do not alternate.
    x = deflate(np.random.default_rng(seed).standard_normal(n))
    norm = np.linalg.norm(x)
    if norm == 0.0 or n <= len(trivial):
        return _spectral(d, 0.0, n, tol, 0, bip)
    x /= norm
    prev = None
    for it in range(1, max_iter + 1):
        y = deflate(A @ x)
        rq = float(y @ y)  # = x^T A^2 x for unit x
        ny = math.sqrt(rq)
        if ny < 1e-300:
            return _spectral(d, 0.0, n, tol, it, bip)
        x = y / ny
        if prev is not None and abs(rq - prev) < tol:
            return _spectral(d, math.sqrt(rq), n, tol, it, bip)
        prev = rq
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations",
                           last=math.sqrt(prev) if prev is not None else None)


def _spectral(d, lam, n, tol, it, bip) -> SpectralInfo:
    if 0 < lam < d:
        s = math.log(2 * n) / math.log(d / lam)
        b = lam / (d - lam)
    elif lam == 0:
        s, b = 0.0, 0.0
    else:
        s, b = math.inf, math.inf
    return SpectralInfo(d=d, lam=lam, s=s, b=b, tol=tol, iterations=it, bipartite=bip)


# ---------------------------------------------------------------------------
# edge-list format
# ---------------------------------------------------------------------------


def serialize_graph(g: Graph) -> str:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    return "\n".join(lines)


def parse_graph(text: str, family_tag: str = "parsed") -> Graph:
    """Parse the ``n m`` header plus ``m`` edge lines; errors name the line."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GraphError("line 1: empty document")
    lineno, header = lines[0]
    try:
        n, m = (int(x) for x in header.split())
    except ValueError:
        raise GraphError(f"line {lineno}: expected header 'n m', got {header!r}") from None
    if n < 1 or m < 0:
        raise GraphError(f"line {lineno}: invalid header {header!r}")
    body = lines[1:]
    if len(body) != m:
        raise GraphError(f"line {lineno}: header declares {m} edges, found {len(body)}")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for lineno, ln in body:
        try:
            u, v = (int(x) for x in ln.split())
        except ValueError:
            raise GraphError(f"line {lineno}: expected 'u v', got {ln!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"line {lineno}: vertex index out of range in {ln!r}")
        if v in nbrs[u]:
            raise GraphError(f"line {lineno}: duplicate edge {ln!r}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    try:
        return Graph(n, tuple(tuple(sorted(s)) for s in nbrs), family_tag)
    except GraphError as exc:
        raise GraphError(f"line {lineno}: {exc}") from None
