"""Scenario runner: joins estimates, exact oracles and bounds into reports."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy

from . import __version__
from .bounds import (baby_matthews_upper, compose_cover_prob, cycle_bounds, grid_lower,
                     kspeed_upper, matthews_bounds, mixing_speedup_lower)
from .estimate import (Estimate, StartSpec, default_candidates, estimate_cover,
                       estimate_cover_max, estimate_cover_prob, speedup_from)
from .exact import hitting_matrix, mixing_time
from .graphs import (Graph, gen_barbell, gen_complete, gen_cycle,
                     gen_erdos_renyi, gen_hypercube, gen_random_regular, gen_torus_grid,
                     is_bipartite, second_eigenvalue)
from .rng import mix
from .walks import fixed_visited

__all__ = [
    "FAMILIES",
    "ConfigError",
    "Scenario",
    "ExperimentConfig",
    "ExperimentReport",
    "build_graph",
    "run_table1",
    "run_barbell",
    "run_composition_check",
    "run_conjecture_scan",
]

FAMILIES = ("cycle", "complete", "torus", "hypercube", "barbell", "erdos_renyi",
            "random_regular")
TRANSITIVE = {"cycle", "complete", "torus", "hypercube"}
MISSING = "—"

COLUMNS = [
    "family", "size", "n", "k", "trials", "seed", "start", "cover_start",
    "C_hat", "C_se", "Ck_hat", "Ck_se", "S_hat", "S_se",
    "h_max", "h_min", "t_m", "t_m_lazy", "lambda",
    "matthews_lo", "matthews_hi", "matthews_ok",
    "baby_matthews", "baby_regime", "baby_ok",
    "kspeed_upper", "kspeed_ok",
    "cycle_lo", "cycle_hi", "cycle_ok", "grid_lo", "grid_ok", "mixing_lo",
    "flags", "error",
]
SCAN_COLUMNS = ["upper_ok", "lower_ok", "exception_candidate"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    family: str
    sizes: tuple[int, ...]
    ks: tuple[int, ...]
    trials: int
    seed: int
    start: Any = "max"
    options: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict) -> "Scenario":
        fam = obj.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}; expected one of {FAMILIES}")
        if "seed" not in obj:
            raise ConfigError(f"scenario {fam!r} has no seed")
        ks = tuple(int(k) for k in obj.get("ks", obj.get("k", [1])))
        if any(k < 1 for k in ks):
            raise ConfigError("every k must be >= 1")
        sizes = tuple(int(s) for s in obj.get("sizes", obj.get("size", [])))
        if not sizes:
            raise ConfigError(f"scenario {fam!r} has no sizes")
        start = obj.get("start", "max")
        if start != "max":
            if not isinstance(start, dict):
                raise ConfigError(f"start must be 'max' or an object, got {start!r}")
            if start.get("kind") == "explicit":
                raise ConfigError("explicit start lists are not supported in scenarios")
        trials = int(obj.get("trials", 1000))
        if trials < 2:
            raise ConfigError("trials must be >= 2")
        return cls(fam, sizes, ks, trials, int(obj["seed"]), start, dict(obj.get("options", {})))


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple[Scenario, ...]
    format: str = "csv"
    dense_limit: int = 256
    c_up: float = 2.0
    c_lo: float = 0.1

    @classmethod
    def from_json(cls, obj: dict | str) -> "ExperimentConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "scenarios" not in obj:
            raise ConfigError("config must be an object with a 'scenarios' list")
        fmt = obj.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {fmt!r}")
        scan = obj.get("conjecture", {})
        return cls(tuple(Scenario.from_json(s) for s in obj["scenarios"]), fmt,
                   int(obj.get("dense_limit", 256)),
                   float(scan.get("c_up", 2.0)), float(scan.get("c_lo", 0.1)))


def _fmt(x) -> str:
    if x is None:
        return MISSING
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


@dataclass
class ExperimentReport:
    rows: list[dict]
    columns: list[str]
    metadata: dict = field(default_factory=dict)
    checks: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"metadata": self.metadata, "columns": self.columns,
                           "rows": self.rows, "checks": self.checks},
                          indent=2, default=_json_default)

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()

    def failures(self) -> list[str]:
        """Soundness checks that failed (row-level estimator errors excluded)."""
        out = [c["name"] for c in self.checks if c.get("ok") is False]
        for row in self.rows:
            for col in ("matthews_ok", "baby_ok", "kspeed_ok", "cycle_ok", "grid_ok"):
                if row.get(col) is False:
                    out.append(f"{row['family']}(size={row['size']},k={row['k']}):{col}")
        return out


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def _metadata(seeds, started: float) -> dict:
    return {"seeds": list(seeds),
            "versions": {"kwalk": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "runtime_s": round(time.perf_counter() - started, 3)}


def build_graph(family: str, size: int, options: dict | None = None,
                seed: int = 0) -> tuple[Graph, int | None]:
    """Graph for a scenario row, plus the barbell centre (``None`` elsewhere)."""
    o = options or {}
    if family == "cycle":
        return gen_cycle(size), None
    if family == "complete":
        return gen_complete(size, bool(o.get("self_loops", True))), None
    if family == "torus":
        return gen_torus_grid(size, int(o.get("d", 2))), None
    if family == "hypercube":
        return gen_hypercube(size), None
    if family == "barbell":
        return gen_barbell(size)
    if family == "erdos_renyi":
        p = float(o.get("p", 2 * math.log(size) / size))
        return gen_erdos_renyi(size, p, int(o.get("graph_seed", seed))), None
    if family == "random_regular":
        return gen_random_regular(size, int(o.get("d", 8)), int(o.get("graph_seed", seed))), None
    raise ConfigError(f"unknown family {family!r}")


def _start_spec(start, center: int | None) -> StartSpec | None:
    if start == "max":
        return None
    if start.get("kind", "fixed") == "fixed" and start.get("vertex") == "center":
        if center is None:
            raise ConfigError("start vertex 'center' is only defined for barbell graphs")
        return StartSpec.fixed(center)
    return StartSpec.from_json(start)


def _cover(g, spec, candidates, k, trials, seed, workers) -> tuple[int | str, Estimate]:
    if spec is None:
        return estimate_cover_max(g, k, trials, seed, candidates, workers=workers)
    est = estimate_cover(g, spec, k, trials, seed, workers=workers)
    return (spec.vertex if spec.kind == "fixed" else spec.kind), est


def _scenario_rows(sc: Scenario, dense_limit: int, workers: int | None) -> list[dict]:
    rows = []
    base = {"family": sc.family, "trials": sc.trials, "seed": sc.seed,
            "start": "max" if sc.start == "max" else json.dumps(sc.start, sort_keys=True)}
    for size in sc.sizes:
        try:
            g, center = build_graph(sc.family, size, sc.options, sc.seed)
            spec = _start_spec(sc.start, center)
        except Exception as exc:  # row-level failure, keep the batch going
            rows += [dict(base, size=size, k=k, error=f"{type(exc).__name__}: {exc}")
                     for k in sc.ks]
            continue
        rows += _size_rows(sc, g, center, spec, size, base, dense_limit, workers)
    return rows


def _size_rows(sc, g, center, spec, size, base, dense_limit, workers) -> list[dict]:
    n = g.n
    shared: dict[str, Any] = {"n": n, "size": size}
    flags: list[str] = []
    if spec is None:
        flags.append("max_over_candidates")
    hm = None
    t_m = None
    notes = []
    if n <= dense_limit:
        try:
            hm = hitting_matrix(g)
            shared.update(h_max=hm.h_max, h_min=hm.h_min)
            lazy = is_bipartite(g)
            mix_res = mixing_time(g, lazy=lazy, t_cap=64 * n * n)
            t_m = mix_res.t_m
            shared.update(t_m=t_m, t_m_lazy=lazy)
        except Exception as exc:
            notes.append(f"exact: {type(exc).__name__}: {exc}")
    if g.is_regular() and g.connected:
        try:
            lam = second_eigenvalue(g, tol=1e-10).lam
            shared["lambda"] = lam
            if sc.family == "random_regular" and lam >= g.degree[0] - 1:
                flags.append("non_expander_sample")
        except Exception as exc:
            notes.append(f"spectral: {type(exc).__name__}: {exc}")
    if sc.family == "cycle":
        flags.append("reference_h_max_n^2/2_vs_exact_n^2/4")
    if sc.family == "barbell" and spec is not None and spec.kind == "fixed" \
            and spec.vertex == center:
        flags.append("barbell_center_start")

    candidates = None
    if spec is None:
        candidates = [0] if sc.family in TRANSITIVE else default_candidates(g)
        if center is not None and center not in candidates:
            candidates.append(center)

    single_spec = spec
    try:
        c_start, c_est = _cover(g, single_spec, candidates, 1, sc.trials,
                                mix(sc.seed, 0), workers)
        shared.update(C_hat=c_est.mean, C_se=c_est.stderr)
    except Exception as exc:
        c_est = None
        notes.append(f"single-walk: {type(exc).__name__}: {exc}")

    if hm is not None and c_est is not None:
        lo, hi = matthews_bounds(hm.h_min, hm.h_max, n)
        s3 = 3 * c_est.stderr
        shared.update(matthews_lo=lo, matthews_hi=hi,
                      matthews_ok=bool(lo - s3 <= c_est.mean <= hi + s3))

    rows = []
    for k in sc.ks:
        row = dict(base, **shared)
        row["k"] = k
        row_flags = list(flags)
        errors = list(notes)
        try:
            ks_start, ck = _cover(g, spec, candidates, k, sc.trials,
                                  mix(sc.seed, 1 + k), workers)
            row.update(cover_start=ks_start, Ck_hat=ck.mean, Ck_se=ck.stderr)
        except Exception as exc:
            ck = None
            errors.append(f"k-walk: {type(exc).__name__}: {exc}")
        if ck is not None and c_est is not None:
            try:
                sp = speedup_from(c_est, ck, k)
                row.update(S_hat=sp.s_hat, S_se=sp.stderr)
            except Exception as exc:
                errors.append(f"speedup: {type(exc).__name__}: {exc}")
        if ck is not None:
            _bound_columns(row, row_flags, sc, g, hm, t_m, c_est, ck, k, size)
        row["flags"] = ";".join(row_flags)
        row["error"] = " | ".join(errors) if errors else ""
        rows.append(row)
    return rows


def _bound_columns(row, flags, sc, g, hm, t_m, c_est, ck, k, size):
    n = g.n
    s3 = 3 * ck.stderr
    if hm is not None and n > math.e:
        bm = baby_matthews_upper(hm.h_max, n, k)
        row.update(baby_matthews=bm.value, baby_regime=bm.ok)
        if bm.ok:
            row["baby_ok"] = bool(ck.mean - s3 <= bm.value)
        else:
            flags.append("baby_out_of_regime")
    if hm is not None and c_est is not None:
        ks = kspeed_upper(c_est.mean, hm.h_max, k, eps=0.1)
        row["kspeed_upper"] = ks.value
        row["kspeed_ok"] = bool(ck.mean - s3 <= ks.value)
        if not ks.ok:
            flags.append("kspeed_f_nonpositive")
    if sc.family == "cycle":
        cb = cycle_bounds(n, k)
        lo, hi = cb.value
        row.update(cycle_lo=lo, cycle_hi=hi if k >= 3 else None)
        ok = ck.mean + s3 >= lo
        if k >= 3 and cb.ok:
            ok = ok and ck.mean - s3 <= hi
        row["cycle_ok"] = bool(ok)
    if sc.family == "torus" and k >= 2:
        d = int(sc.options.get("d", 2))
        if d >= 2:
            gl = grid_lower(n, d, k)
            row["grid_lo"] = gl.value
            row["grid_ok"] = bool(ck.mean + s3 >= gl.value)
    if t_m is not None and g.is_regular():
        row["mixing_lo"] = mixing_speedup_lower(k, t_m, n).value


def run_table1(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """One row per requested (family, size, k); row failures are recorded, not raised."""
    started = time.perf_counter()
    rows = []
    for sc in config.scenarios:
        rows += _scenario_rows(sc, config.dense_limit, workers)
    return ExperimentReport(rows, list(COLUMNS),
                            _metadata([s.seed for s in config.scenarios], started))


def run_conjecture_scan(config: ExperimentConfig,
                        workers: int | None = None) -> ExperimentReport:
    """Table rows flagged against ``S <= c_up k`` and ``S >= c_lo ln k``."""
    rep = run_table1(config, workers)
    for row in rep.rows:
        s, k = row.get("S_hat"), row["k"]
        if s is None:
            continue
        row["upper_ok"] = bool(s <= config.c_up * k)
        row["lower_ok"] = bool(s >= config.c_lo * math.log(k))
        row["exception_candidate"] = "barbell_center_start" in row.get("flags", "")
    rep.columns = rep.columns[:-2] + SCAN_COLUMNS + rep.columns[-2:]
    rep.metadata["c_up"] = config.c_up
    rep.metadata["c_lo"] = config.c_lo
    return rep


# ---------------------------------------------------------------------------
# barbell growth
# ---------------------------------------------------------------------------


def _half_odd(n: int) -> int:
    h = n // 2
    return h if h % 2 else h + 1


def run_barbell(n: int, trials: int, seed: int, quad_range=(3.0, 5.5),
                linear_max: float = 2.8, c_up: float = 2.0,
                workers: int | None = None) -> ExperimentReport:
    """Centre-start cover times of ``B_n`` and ``B_{n'}`` (``n'`` nearest odd to n/2)
    for one walk and for ``ceil(20 ln n)`` walks."""
    if n % 2 == 0 or n < 21:
        raise ValueError(f"barbell experiment needs odd n >= 21, got {n}")
    started = time.perf_counter()
    rows = []
    for i, size in enumerate((_half_odd(n), n)):
        g, c = gen_barbell(size)
        k = math.ceil(20 * math.log(size))
        one = estimate_cover(g, StartSpec.fixed(c), 1, trials, mix(seed, 2 * i), workers=workers)
        many = estimate_cover(g, StartSpec.fixed(c), k, trials, mix(seed, 2 * i + 1),
                              workers=workers)
        sp = speedup_from(one, many, k)
        rows.append({"family": "barbell", "size": size, "n": size, "k": k, "trials": trials,
                     "seed": seed, "start": "center", "cover_start": c,
                     "C_hat": one.mean, "C_se": one.stderr,
                     "Ck_hat": many.mean, "Ck_se": many.stderr,
                     "S_hat": sp.s_hat, "S_se": sp.stderr,
                     "upper_ok": bool(sp.s_hat <= c_up * k),
                     "exception_candidate": True, "flags": "barbell_center_start",
                     "error": ""})
    small, big = rows
    quad = big["C_hat"] / small["C_hat"]
    lin = big["Ck_hat"] / small["Ck_hat"]
    checks = [
        {"name": "single_walk_growth_ratio", "value": quad,
         "target": list(quad_range), "ok": quad_range[0] <= quad <= quad_range[1]},
        {"name": "k_walk_growth_ratio", "value": lin, "target": linear_max,
         "ok": lin <= linear_max},
        {"name": "speedup_exceeds_c_up_k", "value": big["S_hat"], "target": c_up * big["k"],
         "ok": big["S_hat"] > c_up * big["k"]},
    ]
    cols = ["family", "size", "n", "k", "trials", "seed", "start", "cover_start",
            "C_hat", "C_se", "Ck_hat", "Ck_se", "S_hat", "S_se", "upper_ok",
            "exception_candidate", "flags", "error"]
    meta = _metadata([seed], started)
    meta.update(quad_range=list(quad_range), linear_max=linear_max)
    return ExperimentReport(rows, cols, meta, checks)


# ---------------------------------------------------------------------------
# composition check
# ---------------------------------------------------------------------------


def _worst_pair_hit(g: Graph, T_h: int, trials: int, seed: int,
                    max_sources: int = 32) -> tuple[float, int, int]:
    # Minimum over sampled ordered pairs (u != v) of Pr[walk of T_h steps from u visits v].
    if g.n <= max_sources:
        sources = list(range(g.n))
    else:
        rng = np.random.default_rng([seed & ((1 << 64) - 1), 7])
        sources = sorted(rng.choice(g.n, size=max_sources, replace=False).tolist())
    best = (2.0, -1, -1)
    for u in sources:
        vis = fixed_visited(g, [u], T_h, mix(seed, u), range(trials))
        frac = vis.mean(axis=0)
        frac[u] = 2.0
        v = int(np.argmin(frac))
        if frac[v] < best[0]:
            best = (float(frac[v]), u, v)
    return best


def run_composition_check(g: Graph, T_c: int, T_h: int, k: int, ell: int, trials: int,
                          seed: int, start: int = 0) -> ExperimentReport:
    """Compare measured k-walk coverage at ``T_c/k + ell T_h`` rounds with the
    composed lower bound built from measured ``p_c`` and ``p_h``."""
    if k < 1 or ell < 1 or T_c < 1 or T_h < 1:
        raise ValueError("T_c, T_h, k and ell must be >= 1")
    if T_c % k:
        raise ValueError(f"T_c={T_c} must be divisible by k={k}")
    started = time.perf_counter()
    pc = estimate_cover_prob(g, [start], T_c, trials, mix(seed, 0))
    p_h, hu, hv = _worst_pair_hit(g, T_h, trials, mix(seed, 1))
    length = T_c // k + ell * T_h
    pk = estimate_cover_prob(g, [start] * k, length, trials, mix(seed, 2))

    bound = compose_cover_prob(pc.p_hat, p_h, k, ell)
    inner = 1 - k * (1 - p_h) ** ell
    if bound > 0:
        d_pc = inner
        d_ph = pc.p_hat * k * ell * (1 - p_h) ** (ell - 1)
    else:
        d_pc = d_ph = 0.0
    var_pc = pc.p_hat * (1 - pc.p_hat) / trials
    var_ph = p_h * (1 - p_h) / trials
    var_pk = pk.p_hat * (1 - pk.p_hat) / trials
    sigma = math.sqrt(var_pk + d_pc**2 * var_pc + d_ph**2 * var_ph)
    holds = pk.p_hat >= bound - 3 * sigma
    row = {"graph": g.family_tag, "n": g.n, "T_c": T_c, "T_h": T_h, "k": k, "ell": ell,
           "trials": trials, "seed": seed, "start": start, "length": length,
           "p_c": pc.p_hat, "p_h": p_h, "p_h_pair": f"{hu}->{hv}", "bound": bound,
           "p_k": pk.p_hat, "p_k_lo": pk.lower, "p_k_hi": pk.upper,
           "sigma_joint": sigma, "holds": holds}
    checks = [{"name": "composition_inequality", "value": pk.p_hat,
               "target": bound - 3 * sigma, "ok": holds}]
    return ExperimentReport([row], list(row), _metadata([seed], started), checks)
