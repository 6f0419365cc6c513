"""Closed-form cover-time bounds as explicit finite formulas.

Every function is pure.  Asymptotic factors are replaced by explicit
parameters (``eps`` for ``1 + o(1)``, ``f_val`` for a slowly growing ``f(n)``)
and each report lists the preconditions it checked; preconditions that do not
hold go to ``failed`` rather than being silently clamped.  Logs are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .exact import harmonic

__all__ = [
    "BoundReport",
    "matthews_bounds",
    "baby_matthews_upper",
    "compose_cover_prob",
    "kspeed_upper",
    "expander_hit_lower",
    "expander_walk_budget",
    "cycle_bounds",
    "grid_lower",
    "mixing_speedup_lower",
]


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float | tuple[float | None, float | None]
    inputs: dict
    intermediates: dict = field(default_factory=dict)
    assumptions: list[str] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_json(self) -> dict:
        value = list(self.value) if isinstance(self.value, tuple) else self.value
        return {"name": self.name, "value": value, "inputs": dict(self.inputs),
                "intermediates": dict(self.intermediates),
                "assumptions": list(self.assumptions), "failed": list(self.failed)}


def _check(cond: bool, text: str, ok: list, bad: list) -> bool:
    (ok if cond else bad).append(text)
    return cond


def matthews_bounds(h_min: float, h_max: float, n: int) -> tuple[float, float]:
    """``(h_min H_n, h_max H_n)``."""
    if not 0 < h_min <= h_max:
        raise ValueError(f"need 0 < h_min <= h_max, got {h_min}, {h_max}")
    if n < 2:
        raise ValueError("n must be >= 2")
    hn = harmonic(n)
    return h_min * hn, h_max * hn


def baby_matthews_upper(h_max: float, n: int, k: int) -> BoundReport:
    """Finite form of the k-walk Matthews bound.

    With ``r = ceil((ln n + 2 ln ln n)/k)`` a k-walk of ``e r h_max`` rounds
    misses a fixed vertex with probability at most ``1/(n ln^2 n)``, giving
    ``e r h_max (1 + 1/ln^2 n) + h_max H_n / ln^2 n``.
    """
    if n <= math.e:
        raise ValueError(f"n={n} too small: ln ln n undefined or non-positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    ok, bad = [], []
    ln = math.log(n)
    _check(k <= ln, f"k={k} <= ln n={ln:.6g}", ok, bad)
    r = math.ceil((ln + 2 * math.log(ln)) / k)
    ln2 = ln * ln
    hn = harmonic(n)
    value = math.e * r * h_max * (1 + 1 / ln2) + h_max * hn / ln2
    return BoundReport(
        "baby_matthews_upper", value, {"h_max": h_max, "n": n, "k": k},
        {"r": r, "H_n": hn, "ln_n": ln, "ln2_n": ln2, "walk_rounds": math.e * r * h_max},
        ok, bad)


def compose_cover_prob(p_c: float, p_h: float, k: int, ell: int) -> float:
    """``p_c (1 - k (1 - p_h)^ell)``, clamped below at 0."""
    if not (0 <= p_c <= 1 and 0 <= p_h <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if k < 1 or ell < 1:
        raise ValueError("k and ell must be >= 1")
    return max(0.0, p_c * (1 - k * (1 - p_h) ** ell))


def kspeed_upper(cover: float, h_max: float, k: int, f_val: float | None = None,
                 eps: float = 0.1) -> BoundReport:
    """``(1 + eps)/k * C + (3 ln k + 2 f) h_max``; ``f`` defaults to ``ln(C/h_max)``."""
    if cover <= 0 or h_max <= 0:
        raise ValueError("cover and h_max must be positive")
    if k < 1 or eps < 0:
        raise ValueError("need k >= 1 and eps >= 0")
    ok, bad = [f"(1+o(1)) replaced by 1+eps with eps={eps}", "natural logarithms"], []
    g_n = cover / h_max
    if f_val is None:
        f_val = math.log(g_n) if g_n > 0 else 0.0
        ok.append("f(n) = ln g(n)")
    if not _check(f_val > 0, f"f_val={f_val:.6g} > 0", ok, bad):
        f_val = max(f_val, 0.0)
    value = (1 + eps) / k * cover + (3 * math.log(k) + 2 * f_val) * h_max
    return BoundReport(
        "kspeed_upper", value,
        {"cover": cover, "h_max": h_max, "k": k, "eps": eps},
        {"g_n": g_n, "f_val": f_val, "main_term": (1 + eps) / k * cover,
         "additive_term": (3 * math.log(k) + 2 * f_val) * h_max},
        ok, bad)


def _spectral_params(n: int, d: float, lam: float) -> tuple[float, float, list[str]]:
    if lam >= d:
        raise ValueError(f"lambda={lam} must be < d={d}")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if n < 2:
        raise ValueError("n must be >= 2")
    if lam == 0:
        return 0.0, 0.0, ["lambda = 0: degenerate limit s -> 0, b -> 0"]
    return math.log(2 * n) / math.log(d / lam), lam / (d - lam), []


def expander_hit_lower(n: int, d: float, lam: float) -> BoundReport:
    """Probability that a walk of ``2s`` steps visits a given vertex."""
    s, b, notes = _spectral_params(n, d, lam)
    value = s / (2 * n + 4 * s + 4 * b * n)
    return BoundReport(
        "expander_hit_lower", value, {"n": n, "d": d, "lambda": lam},
        {"s": s, "b": b, "walk_length": 2 * s},
        [f"0 <= lambda={lam} < d={d}"] + notes, [])


def expander_walk_budget(n: int, d: float, lam: float, k: int) -> BoundReport:
    """Per-walker length ``16 (b+1) n ln n / k`` after which a fixed vertex is
    missed by all k walkers with probability below ``1/n^2``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s, b, notes = _spectral_params(n, d, lam)
    t = 16 * (b + 1) * n * math.log(n) / k
    ok, bad = list(notes), []
    _check(t > 2 * s, f"t={t:.6g} > 2s={2 * s:.6g}", ok, bad)
    _check(n >= 2 * s, f"n={n} >= 2s={2 * s:.6g}", ok, bad)
    return BoundReport(
        "expander_walk_budget", t, {"n": n, "d": d, "lambda": lam, "k": k},
        {"s": s, "b": b, "miss_probability": 1 / n**2, "subwalks": t / (2 * s) if s else math.inf},
        ok, bad)


def cycle_bounds(n: int, k: int) -> BoundReport:
    """Two-sided ``(n^2/(16 ln 8k), 2 n^2/ln k)`` for the k-walk on ``L_n``.

    The lower side inverts "C^k <= n^2/s implies k >= e^{s/16}/8".  The upper
    side needs ``3 <= k <= e^{n/4}``; it is ``None`` for ``k = 1``.
    """
    if n < 3 or k < 1:
        raise ValueError("need n >= 3 and k >= 1")
    ok, bad = [], []
    lower = n * n / (16 * math.log(8 * k))
    _check(k >= 3, f"k={k} >= 3", ok, bad)
    _check(math.log(k) <= n / 4, f"ln k={math.log(k):.6g} <= n/4={n / 4:g}", ok, bad)
    upper = 2 * n * n / math.log(k) if k > 1 else None
    return BoundReport(
        "cycle_bounds", (lower, upper), {"n": n, "k": k},
        {"lower": lower, "upper": upper, "s_at_lower": 16 * math.log(8 * k),
         "derivation": "C^k <= n^2/s => k >= e^(s/16)/8, so C^k >= n^2/(16 ln 8k)"},
        ok, bad)


def _int_root(n: int, d: int) -> int | None:
    r = round(n ** (1.0 / d))
    for c in (r - 1, r, r + 1):
        if c > 0 and c**d == n:
            return c
    return None


def grid_lower(n: int, d: int, k: int) -> BoundReport:
    """Cycle lower bound applied to the projection on one torus axis."""
    if d < 2 or k < 2:
        raise ValueError("need d >= 2 and k >= 2")
    side = _int_root(n, d)
    if side is None:
        raise ValueError(f"n={n} is not a perfect {d}-th power")
    value = side * side / (16 * math.log(8 * k))
    return BoundReport(
        "grid_lower", value, {"n": n, "d": d, "k": k},
        {"side": side, "projected_cycle_length": side,
         "projection": "one coordinate of each walker is a lazy walk on a cycle of "
                       "length n^(1/d); covering the torus requires covering it"},
        [f"n = {side}^{d}"], [])


def mixing_speedup_lower(k: int, t_m: float, n: float) -> BoundReport:
    if t_m < 1:
        raise ValueError("t_m must be >= 1")
    ok, bad = ["order-only reference: hidden constant taken as 1"], []
    _check(k <= n, f"k={k} <= n={n:g}", ok, bad)
    value = k / (t_m * math.log(n))
    return BoundReport("mixing_speedup_lower", value, {"k": k, "t_m": t_m, "n": n},
                       {"ln_n": math.log(n)}, ok, bad)
