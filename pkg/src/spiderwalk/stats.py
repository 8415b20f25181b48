"""Goodness-of-fit tests, moment checks and occupation aggregators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats as sps

MIN_SAMPLES = 10


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    n_samples: int
    passed: bool
    criterion: str = ""
    extra: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: stat={self.statistic:.6g} p={self.p_value:.4g} "
                f"n={self.n_samples} ({self.criterion})")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "n_samples": int(self.n_samples),
            "passed": bool(self.passed),
            "criterion": self.criterion,
            "extra": {k: _plain(v) for k, v in self.extra.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestResult":
        return cls(d["name"], d["statistic"], d["p_value"], d["n_samples"], d["passed"],
                   d.get("criterion", ""), dict(d.get("extra", {})))


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _verdict(p: float, d: float, p_threshold, d_bound) -> tuple:
    if d_bound is not None:
        return d <= d_bound, f"D <= {d_bound:g}"
    return p > p_threshold, f"p > {p_threshold:g}"


def ecdf(samples):
    """Right-continuous empirical CDF as a callable."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size

    def F(x):
        return np.searchsorted(xs, x, side="right") / n

    return F


def ks_distance(samples, cdf) -> float:
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    f = np.asarray(cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_one_sample(samples, cdf, name: str = "ks", p_threshold: float = 1e-3,
                  d_bound: float | None = None) -> TestResult:
    """One-sample KS; sup distance evaluated exactly at the jump points."""
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_SAMPLES:
        raise ValueError(f"KS needs at least {MIN_SAMPLES} samples")
    d = ks_distance(x, cdf)
    p = float(special.kolmogorov(math.sqrt(x.size) * d))
    ok, crit = _verdict(p, d, p_threshold, d_bound)
    return TestResult(name, d, p, int(x.size), bool(ok), crit)


def ks_two_sample(a, b, name: str = "ks2", p_threshold: float = 1e-3,
                  d_bound: float | None = None) -> TestResult:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size < MIN_SAMPLES or b.size < MIN_SAMPLES:
        raise ValueError(f"KS needs at least {MIN_SAMPLES} samples per group")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    p = float(special.kolmogorov(en * d))
    ok, crit = _verdict(p, d, p_threshold, d_bound)
    return TestResult(name, d, p, int(a.size + b.size), bool(ok), crit)


def counts_of(samples) -> dict:
    vals, cnt = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, cnt)}


def chi_square_pmf(counts: dict, pmf, tail_cut: int, name: str = "chi2",
                   p_threshold: float = 1e-3) -> TestResult:
    """Pearson test of integer counts against ``pmf`` on ``{0, 1, ...}``.

    Values ``>= tail_cut`` are pooled into one bin; the cut is lowered further
    until every expected count is at least 5.
    """
    total = sum(counts.values())
    if total < 1000:
        raise ValueError("chi-square test needs at least 1000 observations")
    if any(k < 0 for k in counts):
        raise ValueError("counts must be indexed by nonnegative integers")
    probs = np.array([pmf(m) for m in range(tail_cut)], dtype=float)
    cut = tail_cut
    while cut >= 1:
        exp_head = total * probs[:cut]
        exp_tail = total * max(1.0 - probs[:cut].sum(), 0.0)
        if np.all(exp_head >= 5) and exp_tail >= 5:
            break
        cut -= 1
    if cut < 1:
        raise ValueError("cannot pool bins to reach expected counts >= 5")
    obs_head = np.array([counts.get(m, 0) for m in range(cut)], dtype=float)
    obs_tail = float(total - obs_head.sum())
    obs = np.append(obs_head, obs_tail)
    exp = np.append(exp_head, exp_tail)
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    p = float(sps.chi2.sf(stat, dof))
    return TestResult(name, stat, p, int(total), p > p_threshold, f"p > {p_threshold:g}",
                      {"bins": int(obs.size), "tail_cut": int(cut)})


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    mean_se: float
    var: float
    var_se: float
    n: int


def moments(samples) -> MomentEstimate:
    """Sample mean and variance with standard errors (fourth-moment SE for the variance)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    m = float(x.mean())
    c = x - m
    v = float(np.mean(c * c)) * n / (n - 1)
    m4 = float(np.mean(c**4))
    var_se = math.sqrt(max(m4 - v * v, 0.0) / n)
    return MomentEstimate(m, math.sqrt(v / n), v, var_se, n)


def mean_test(samples, expected: float, name: str = "mean", n_se: float = 3.0) -> TestResult:
    est = moments(samples)
    z = (est.mean - expected) / est.mean_se if est.mean_se > 0 else 0.0
    return TestResult(name, est.mean, float(2 * special.ndtr(-abs(z))), est.n, abs(z) <= n_se,
                      f"|mean - {expected:g}| <= {n_se:g} SE", {"se": est.mean_se, "expected": expected})


def var_test(samples, expected: float, name: str = "variance", n_se: float = 3.0) -> TestResult:
    est = moments(samples)
    z = (est.var - expected) / est.var_se if est.var_se > 0 else 0.0
    return TestResult(name, est.var, float(2 * special.ndtr(-abs(z))), est.n, abs(z) <= n_se,
                      f"|var - {expected:g}| <= {n_se:g} SE", {"se": est.var_se, "expected": expected})


# ---------------------------------------------------------------------------
# extreme leg occupations


@dataclass(frozen=True)
class MinMaxOccupation:
    max_frac: np.ndarray
    min_frac: np.ndarray
    sandwich: np.ndarray  # T_m <= (n - xi(0, n)) / N <= T_M, per replication


def minmax_occupation(per_leg, horizon: int, origin_time=None) -> MinMaxOccupation:
    """Max/min leg occupation fractions for a ``(reps, N)`` array of ``T(j, n)``."""
    occ = np.atleast_2d(np.asarray(per_leg, dtype=np.int64))
    n_legs = occ.shape[1]
    if n_legs < 2:
        raise ValueError("min/max occupation needs N >= 2")
    t_max = occ.max(axis=1)
    t_min = occ.min(axis=1)
    if origin_time is None:
        origin_time = horizon - occ.sum(axis=1)
    on_legs = horizon - np.asarray(origin_time)
    # compare N*T against n - xi(0, n) to stay in exact integer arithmetic
    sandwich = (n_legs * t_min <= on_legs) & (on_legs <= n_legs * t_max)
    return MinMaxOccupation(t_max / horizon, t_min / horizon, sandwich)


@dataclass(frozen=True)
class DyadicMinMax:
    checkpoints: np.ndarray
    max_frac: np.ndarray  # (reps, K)
    min_frac: np.ndarray
    io_counts: np.ndarray | None  # checkpoints with T_m(2^k) < 2^k / f(2^k), per replication


def dyadic_minmax(running, checkpoints, f=None) -> DyadicMinMax:
    """Running max/min fractions from ``running[r, k, j] = T(j, checkpoints[k])``."""
    run = np.asarray(running, dtype=float)
    if run.ndim == 2:
        run = run[None]
    cps = np.asarray(checkpoints, dtype=float)
    mx = run.max(axis=2) / cps
    mn = run.min(axis=2) / cps
    io = None
    if f is not None:
        thresh = np.array([1.0 / f(c) for c in cps])
        io = np.count_nonzero(mn < thresh, axis=1)
    return DyadicMinMax(cps.astype(np.int64), mx, mn, io)


def quantiles99(samples) -> list:
    """ECDF quantiles at the levels 0.01, ..., 0.99."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        return []
    return np.quantile(x, np.arange(1, 100) / 100.0).tolist()
