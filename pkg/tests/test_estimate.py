import json
import math

import pytest

from kwalk.estimate import (CoverProbability, Estimate, EstimateTimeout, StartSpec,
                            UnstableRatioError, default_candidates, estimate_cover,
                            estimate_cover_max, estimate_cover_prob, estimate_hitting,
                            estimate_speedup, speedup_from)
from kwalk.exact import coupon_collector_mean, hitting_matrix
from kwalk.graphs import (gen_barbell, gen_complete, gen_cycle, gen_random_regular,
                          gen_torus_grid)

from oracles import exact_cover_probability

K2 = gen_complete(2)
FIXED0 = StartSpec.fixed(0)


def test_k2_cover_is_deterministic():
    est = estimate_cover(K2, FIXED0, 1, 50, seed=1)
    assert est.mean == 1.0 and est.stderr == 0.0 and est.cap_hits == 0


def test_estimate_json():
    est = estimate_cover(gen_cycle(6), FIXED0, 2, 10, seed=9)
    obj = json.loads(json.dumps(est.to_json()))
    assert set(obj) == {"mean", "stderr", "trials", "seed", "cap_hits"}
    assert obj["trials"] == 10 and obj["seed"] == 9


def test_stderr_definition():
    est = Estimate.from_samples([1, 2, 3, 4], seed=0)
    assert est.mean == 2.5
    assert est.stderr == pytest.approx(math.sqrt((1.5**2 * 2 + 0.5**2 * 2) / 3 / 4))


def test_clique_single_walk_matches_coupon_collector():
    g = gen_complete(16, True)
    exact = coupon_collector_mean(16, True)
    assert exact == pytest.approx(53.09, abs=0.01)
    est = estimate_cover(g, FIXED0, 1, 4000, seed=21)
    assert abs(est.mean - exact) <= 3 * est.stderr


def test_clique_round_robin():
    g = gen_complete(16, True)
    exact = coupon_collector_mean(16, True)
    est = estimate_cover(g, FIXED0, 4, 4000, seed=22)
    s3 = 3 * est.stderr
    assert exact / 4 - s3 <= est.mean <= exact / 4 + 1 + s3


def test_timeout_rejects_estimate():
    with pytest.raises(EstimateTimeout) as exc:
        estimate_cover(gen_cycle(40), FIXED0, 1, 20, seed=1, cap=10)
    assert exc.value.cap_hits == 20


def test_cover_max_transitive():
    g = gen_cycle(16)
    a = estimate_cover(g, StartSpec.fixed(0), 1, 1000, seed=3)
    b = estimate_cover(g, StartSpec.fixed(5), 1, 1000, seed=4)
    assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)
    v, est = estimate_cover_max(g, 1, 200, seed=3, candidates=[0, 5])
    assert v in (0, 5)


def test_cover_max_barbell_center():
    g, c = gen_barbell(13)
    v, est = estimate_cover_max(g, 1, 1000, seed=5, candidates=[c, 0])
    assert v == c


def test_cover_max_empty():
    with pytest.raises(ValueError):
        estimate_cover_max(K2, 1, 10, seed=1, candidates=[])


def test_default_candidates():
    g, c = gen_barbell(13)
    cands = default_candidates(g)
    assert cands[0] == 0 and len(cands) == len(set(cands))
    assert any(v > c for v in cands)  # reaches the far bell


def test_speedup_k2():
    sp = estimate_speedup(K2, FIXED0, 1, 20, seed=1)
    assert sp.s_hat == 1.0 and sp.stderr == 0.0


def test_speedup_clique_linear():
    sp = estimate_speedup(gen_complete(64, True), FIXED0, 8, 1000, seed=2)
    assert sp.s_hat == pytest.approx(8, rel=0.15)


def test_speedup_cycle_logarithmic():
    g = gen_cycle(64)
    s16 = estimate_speedup(g, FIXED0, 16, 1000, seed=3).s_hat
    s4 = estimate_speedup(g, FIXED0, 4, 1000, seed=4).s_hat
    assert s16 / s4 == pytest.approx(math.log(16) / math.log(4), rel=0.30)


def test_unstable_ratio():
    num = Estimate(10.0, 1.0, 10, 0)
    with pytest.raises(UnstableRatioError):
        speedup_from(num, Estimate(1.0, 0.5, 10, 0), 2)


def test_delta_method():
    sp = speedup_from(Estimate(100.0, 4.0, 10, 0), Estimate(20.0, 1.0, 10, 0), 4)
    assert sp.s_hat == 5.0
    assert sp.stderr == pytest.approx(5.0 * math.hypot(0.04, 0.05))


def test_cover_prob_trivial():
    assert estimate_cover_prob(K2, [0, 1], 0, 10, seed=1).p_hat == 1.0
    assert estimate_cover_prob(K2, [0], 0, 10, seed=1).p_hat == 0.0


def test_cover_prob_against_exact_chain():
    g = gen_cycle(8)
    exact = exact_cover_probability(g.edges(), 8, [0], 64)
    res = estimate_cover_prob(g, [0], 64, 4000, seed=8)
    assert isinstance(res, CoverProbability)
    assert res.lower <= exact <= res.upper


def test_hitting_estimates():
    assert estimate_hitting(gen_cycle(5), 1, 1, 10, seed=0).mean == 0
    est = estimate_hitting(gen_cycle(4), 0, 2, 4000, seed=2)
    assert abs(est.mean - 4.0) <= 3 * est.stderr
    g, c = gen_barbell(9)
    hm = hitting_matrix(g)
    est = estimate_hitting(g, c, 0, 4000, seed=3)
    assert abs(est.mean - hm.h[c, 0]) <= 3 * est.stderr


def test_workers_do_not_change_estimates():
    g = gen_torus_grid(6, 2)
    one = estimate_cover(g, FIXED0, 3, 60, seed=5, workers=1)
    three = estimate_cover(g, FIXED0, 3, 60, seed=5, workers=3)
    assert one == three
    st = StartSpec("stationary")
    assert estimate_cover(g, st, 2, 30, 6, workers=1) == estimate_cover(g, st, 2, 30, 6, workers=2)


@pytest.mark.parametrize("g", [gen_cycle(32), gen_torus_grid(8, 2), gen_complete(32, True)],
                         ids=lambda g: g.family_tag)
def test_monotone_in_k(g):
    means = [estimate_cover(g, FIXED0, k, 400, seed=40 + k) for k in (1, 2, 4, 8)]
    for a, b in zip(means, means[1:]):
        assert b.mean <= a.mean + 3 * math.hypot(a.stderr, b.stderr)


def test_stationary_start_not_slower():
    g = gen_random_regular(256, 8, seed=1)
    fixed = estimate_cover(g, FIXED0, 8, 300, seed=1)
    stat = estimate_cover(g, StartSpec("stationary"), 8, 300, seed=2)
    assert stat.mean <= fixed.mean + 3 * math.hypot(fixed.stderr, stat.stderr)


def test_start_specs():
    g = gen_cycle(10)
    m = StartSpec("uniform").starts(g, 4, seed=3, trials=range(200))
    assert m.shape == (200, 4) and m.min() >= 0 and m.max() < 10
    assert len(set(m.ravel().tolist())) == 10
    with pytest.raises(ValueError):
        StartSpec.explicit([1, 2]).starts(g, 3, 0, [0])
    assert StartSpec.explicit([1, 2, 3]).starts(g, 3, 0, [0, 1]).tolist() == [[1, 2, 3]] * 2
    with pytest.raises(ValueError):
        StartSpec("nowhere")
    assert StartSpec.from_json({"kind": "fixed", "vertex": 4}) == StartSpec.fixed(4)
