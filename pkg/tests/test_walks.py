import io
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from kwalk.graphs import gen_complete, gen_cycle, gen_torus_grid
from kwalk.rng import WalkerStream, mix
from kwalk.walks import (KWalkRun, WalkTimeout, cover_rounds, fixed_visited, hit_steps,
                         run_cover, run_fixed, run_hit, step)

from oracles import exact_kwalk_cover, first_passage

K2 = gen_complete(2)


def test_step_single_neighbour():
    rng = WalkerStream.for_walker(1)
    assert all(step(K2, 0, rng) == 1 for _ in range(50))
    assert rng.counter == 50


@pytest.mark.parametrize("g,v,support", [
    (gen_cycle(4), 0, [1, 3]),
    (gen_complete(3, True), 0, [0, 1, 2]),
])
def test_step_uniform(g, v, support):
    rng = WalkerStream.for_walker(2024)
    N = 100_000
    counts = np.zeros(g.n)
    for _ in range(N):
        counts[step(g, v, rng)] += 1
    p = 1 / len(support)
    sigma = math.sqrt(N * p * (1 - p))
    for u in range(g.n):
        if u in support:
            assert abs(counts[u] - N * p) <= 3 * sigma
        else:
            assert counts[u] == 0


def test_cover_k2():
    assert run_cover(K2, [0], seed=5) == 1
    assert run_cover(K2, [0, 1], seed=5) == 0


def test_cover_timeout_reports_visited():
    g = gen_cycle(64)
    with pytest.raises(WalkTimeout) as exc:
        run_cover(g, [0], seed=1, cap=3)
    assert exc.value.visited_count <= 4


def test_cycle_cover_mean():
    # classical n(n-1)/2; the brute-force chain agrees at small n
    assert exact_kwalk_cover(gen_cycle(8).edges(), 8, [0]) == pytest.approx(28.0)
    g = gen_cycle(64)
    tau = cover_rounds(g, [0], seed=99, trials=range(1000))
    se = tau.std(ddof=1) / math.sqrt(len(tau))
    assert abs(tau.mean() - 64 * 63 / 2) <= 3 * se


def test_run_cover_matches_batch():
    g = gen_torus_grid(4, 2)
    batch = cover_rounds(g, [0, 3, 5], seed=17, trials=range(20))
    for i in (0, 7, 19):
        assert run_cover(g, [0, 3, 5], seed=17, trial=i) == batch[i]


def test_time_accounting_equals_step_calls():
    g = gen_cycle(12)
    for trial in range(5):
        rng = WalkerStream(mix(mix(31, trial), 0))
        v, seen, calls = 0, {0}, 0
        while len(seen) < g.n:
            v = step(g, v, rng)
            seen.add(v)
            calls += 1
        assert run_cover(g, [0], seed=31, trial=trial) == calls


def test_determinism():
    g = gen_cycle(20)
    a = cover_rounds(g, [0] * 3, seed=8, trials=range(50))
    b = cover_rounds(g, [0] * 3, seed=8, trials=range(50))
    c = cover_rounds(g, [0] * 3, seed=8, trials=range(25, 50))
    assert (a == b).all()
    assert (a[25:] == c).all()


def test_trace_lines():
    buf = io.StringIO()
    r = run_cover(gen_cycle(5), [0, 0], seed=4, trace=buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == r
    last = lines[-1].split()
    assert int(last[0]) == r and int(last[-1]) == 5 and len(last) == 4


def test_kwalk_run_invariants():
    g = gen_cycle(10)
    run = KWalkRun(g, [0, 5], seed=3)
    prev = run.visited.copy()
    for t in range(1, 30):
        run.advance()
        assert run.rounds_elapsed == t
        assert len(run.positions) == 2
        assert (run.visited >= prev).all()
        assert run.visited[[0, 5]].all()
        prev = run.visited.copy()


def test_walker_marginals_match_single_step():
    # every walker's moves out of a vertex are uniform over its neighbours
    g = gen_complete(4, True)
    run = KWalkRun(g, [0, 0, 0], seed=12)
    counts = np.zeros((3, 4, 4))
    for _ in range(6000):
        before = run.positions.copy()
        run.advance()
        for j in range(3):
            counts[j, before[j], run.positions[j]] += 1
    for j in range(3):
        for v in range(4):
            row = counts[j, v]
            assert chisquare(row).pvalue > 1e-3


def test_more_walkers_cover_faster():
    g = gen_cycle(32)
    one = cover_rounds(g, [0], seed=5, trials=range(1000)).mean()
    four = cover_rounds(g, [0] * 4, seed=5, trials=range(1000)).mean()
    assert four <= one


def test_round_accounting_against_exact_chain():
    g = gen_complete(4, True)
    exact = exact_kwalk_cover(g.edges(), 4, [0, 0])
    tau = cover_rounds(g, [0, 0], seed=77, trials=range(20000))
    se = tau.std(ddof=1) / math.sqrt(len(tau))
    assert abs(tau.mean() - exact) <= 3 * se


def test_hit():
    assert run_hit(gen_cycle(5), 2, 2, seed=0) == 0
    assert run_hit(K2, 0, 1, seed=0) == 1
    g = gen_cycle(4)
    exact = first_passage(g.edges(), 4, 2)[0]
    assert exact == pytest.approx(4.0)
    steps = hit_steps(g, 0, 2, seed=3, trials=range(10_000))
    se = steps.std(ddof=1) / math.sqrt(len(steps))
    assert abs(steps.mean() - exact) <= 3 * se
    with pytest.raises(WalkTimeout):
        run_hit(gen_cycle(50), 0, 25, seed=0, cap=5)


def test_fixed():
    assert run_fixed(gen_cycle(6), [0, 3], 0, seed=1) == {0, 3}
    assert run_fixed(K2, [0], 1, seed=1) == {0, 1}
    assert run_fixed(gen_cycle(8), [0], 1, seed=1) in ({0, 1}, {0, 7})
    vis = fixed_visited(gen_cycle(8), [0], 5, seed=2, trials=range(10))
    for i in range(10):
        assert set(np.flatnonzero(vis[i])) == run_fixed(gen_cycle(8), [0], 5, seed=2, trial=i)
