"""Named, reproducible Monte Carlo experiments.

Replication ``r`` of a run with master seed ``s`` draws from
``derive_stream(SeedSpec(s), r)``; results are merged in replication order, so
a report depends only on its config and not on the worker count. The
experiments that collect a target number of i.i.d. samples (``excursion-pmf``,
``exp-increments``) read ``replications`` as that target and generate it in
fixed-size seeded blocks.
"""
from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analytic
from .coupling import build_coupled_pair, discrepancy_records, extract_a_increments
from .localtime import (
    contrast_final,
    leg_occupation_from_ssrw,
    running_occupation,
    simulate_excursion_local_times,
)
from .randkit import SeedSpec, derive_stream, make_rng
from .spider import SpiderConfig, simulate_rws, simulate_ssrw
from .stats import (
    TestResult,
    chi_square_pmf,
    counts_of,
    dyadic_minmax,
    ks_one_sample,
    ks_two_sample,
    mean_test,
    minmax_occupation,
    quantiles99,
    var_test,
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# stream ids reserved for reference samplers, disjoint from replication children
REFERENCE_STREAM = 0x5EED_0F_0CC
EXCURSION_BLOCK = 1 << 16
PAIR_BLOCK = 64


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    num_legs: int = 2
    leg_probs: tuple = (0.5, 0.5)
    walk_length: int = 1000
    replications: int = 100
    seed: int = 0
    dt: float | None = None
    x: int | None = None
    leg: int | None = None
    output_path: str | None = None
    threads: int = 1
    emit_samples: bool = False

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config must name an experiment")
        kw = dict(data)
        if "leg_probs" in kw:
            kw["leg_probs"] = tuple(kw["leg_probs"])
        return cls(**kw).validated()

    def spider(self) -> SpiderConfig:
        return SpiderConfig(self.num_legs, self.leg_probs)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["leg_probs"] = list(self.leg_probs)
        return d

    def validated(self) -> "ExperimentConfig":
        if self.experiment not in CATALOG:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name in ("walk_length", "replications", "threads", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.walk_length < 1:
            raise ConfigError("walk_length must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            cfg = self.spider()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        CATALOG[self.experiment].validate(self, cfg)
        return self


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _target_site(c: ExperimentConfig) -> tuple:
    """``(leg, radius)`` from ``x`` and ``leg`` (signed ``x`` allowed when N = 2)."""
    _need(c.x is not None and c.x != 0, "x must be a nonzero integer")
    if c.leg is None:
        _need(c.num_legs == 2, "leg is required when num_legs != 2")
        return (1, c.x) if c.x > 0 else (2, -c.x)
    _need(1 <= c.leg <= c.num_legs, "leg out of range")
    _need(c.x > 0, "x must be positive when a leg is given")
    return c.leg, c.x


def _lattice_m(c: ExperimentConfig) -> int:
    _need(c.dt is not None and c.dt > 0, "dt must be positive")
    m = int(round(1.0 / math.sqrt(c.dt)))
    _need(m >= 1 and abs(m * m * c.dt - 1.0) < 1e-9, "dt must equal 1/m^2 for an integer m")
    return m


# ---------------------------------------------------------------------------
# runner


def replicate(task: Callable, seed: int, count: int, threads: int = 1, start: int = 0) -> list:
    """``[task(rng_r) for r in range(start, start + count)]`` with per-replication streams."""
    root = SeedSpec(seed)
    seeds = [derive_stream(root, r) for r in range(start, start + count)]
    if threads <= 1 or count <= 1:
        return [task(make_rng(s)) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: task(make_rng(s)), seeds))


def reference_rng(seed: int) -> np.random.Generator:
    return make_rng(SeedSpec(seed, REFERENCE_STREAM))


def _collect_blocks(task: Callable, seed: int, target: int, threads: int,
                    max_blocks: int = 10**6) -> np.ndarray:
    """Run seeded blocks in order until their samples reach ``target``; truncate to it."""
    out, have, b = [], 0, 0
    wave = max(threads, 1)
    while have < target:
        if b >= max_blocks:
            raise RuntimeError("sample target not reached")
        for chunk in replicate(task, seed, wave, threads, start=b):
            if have >= target:
                break
            out.append(chunk)
            have += len(chunk)
        b += wave
    return np.concatenate(out)[:target]


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    config: dict
    anchor: str
    samples: dict  # statistic name -> per-replication values
    summary: dict
    tests: list
    verdict: bool
    timing: dict = field(default_factory=dict)

    def lines(self) -> list:
        return [t.line() for t in self.tests]


def _summarize(samples: dict) -> dict:
    out = {}
    for name, vals in samples.items():
        v = np.asarray(vals, dtype=float)
        out[name] = {
            "n": int(v.size),
            "mean": float(v.mean()) if v.size else float("nan"),
            "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
            "min": float(v.min()) if v.size else float("nan"),
            "max": float(v.max()) if v.size else float("nan"),
            "quantiles99": quantiles99(v),
        }
    return out


def _check(name: str, ok: bool, value: float, criterion: str, **extra) -> TestResult:
    """Deterministic pass/fail diagnostic; p_value is 1 on pass, 0 on fail."""
    return TestResult(name, float(value), 1.0 if ok else 0.0, int(extra.pop("n", 0)), bool(ok),
                      criterion, extra)


# ---------------------------------------------------------------------------
# experiments


def _excursion_pmf(c: ExperimentConfig) -> tuple:
    p, x = c.leg_probs[0], c.x

    def block(rng):
        return simulate_excursion_local_times(p, x, EXCURSION_BLOCK, rng)

    v = np.asarray(_collect_blocks(block, c.seed, c.replications, c.threads), dtype=np.int64)
    mean, var = analytic.excursion_moments(x, p)
    tests = [
        chi_square_pmf(counts_of(v), lambda m: analytic.excursion_pmf(x, p, m), tail_cut=80,
                       name="chi2 vs excursion pmf"),
        mean_test(v, mean, name="mean = c(x)"),
        var_test(v, var, name="variance = c(x)(4|x|-1) - c(x)^2"),
    ]
    return {"visits": v}, tests, {"c": analytic.c_of(x, p), "expected_mean": mean, "expected_var": var}


def _dobrushin(c: ExperimentConfig) -> tuple:
    leg, radius = _target_site(c)
    n = c.walk_length
    cval = 2.0 * c.leg_probs[leg - 1]
    sigma = analytic.dobrushin_scale(radius, cval)
    scale = sigma * n**0.25

    def rep(rng):
        site, body = contrast_final(simulate_ssrw(n, rng), c.leg_probs, leg, radius, rng)
        return (site - cval * body) / scale

    stat = np.array(replicate(rep, c.seed, c.replications, c.threads))
    tests = [
        ks_one_sample(stat, analytic.dobrushin_cdf, name="KS vs U*sqrt|V|", d_bound=0.03),
        mean_test(stat, 0.0, name="mean = 0"),
    ]
    return {"scaled_contrast": stat}, tests, {"c": cval, "sigma": sigma}


def _lamperti(c: ExperimentConfig) -> tuple:
    leg = c.leg or 1
    p = c.leg_probs[leg - 1]
    n = c.walk_length

    def rep(rng):
        per_leg, _ = leg_occupation_from_ssrw(simulate_ssrw(n, rng), c.leg_probs, rng)
        return per_leg[leg - 1] / n

    frac = np.array(replicate(rep, c.seed, c.replications, c.threads))
    tests = [ks_one_sample(frac, lambda u: analytic.lamperti_cdf(u, p), name="KS vs Lamperti",
                           d_bound=0.02)]
    if p == 0.5:
        tests.append(ks_one_sample(frac, analytic.arcsine_cdf, name="KS vs arcsine", d_bound=0.02))
    return {"occupation_fraction": frac}, tests, {"p": p}


def _joint_occupation(c: ExperimentConfig) -> tuple:
    n, cfg = c.walk_length, c.spider()

    def rep(rng):
        per_leg, _ = leg_occupation_from_ssrw(simulate_ssrw(n, rng), c.leg_probs, rng)
        return per_leg

    occ = np.array(replicate(rep, c.seed, c.replications, c.threads))
    walk = occ / n
    ref = analytic.sample_joint_occupation(cfg, reference_rng(c.seed), size=c.replications)
    tests = [
        ks_two_sample(walk[:, j], ref[:, j], name=f"KS2 leg {j + 1} fraction", d_bound=0.02)
        for j in range(c.num_legs)
    ]
    mm = minmax_occupation(occ, n)
    tests.append(ks_two_sample(mm.min_frac, ref.min(axis=1), name="KS2 min fraction", d_bound=0.02))
    tests.append(ks_two_sample(mm.max_frac, ref.max(axis=1), name="KS2 max fraction", d_bound=0.02))
    samples = {f"leg{j + 1}_fraction": walk[:, j] for j in range(c.num_legs)}
    samples.update({"min_fraction": mm.min_frac, "max_fraction": mm.max_frac})
    return samples, tests, {}


def _coupling_rate(c: ExperimentConfig) -> tuple:
    m, n, cfg = _lattice_m(c), c.walk_length, c.spider()
    sizes = [n // 16, n // 4, n]

    def rep(rng):
        pair = build_coupled_pair(cfg, n, m, rng)
        recs = discrepancy_records(pair, sizes)
        inc = np.diff(pair.tau[: n + 1])
        return recs, float(inc.mean()), float(inc.var())

    # a 2^16-step pair holds ~1.4 GB of fine path; cap concurrency (results do not depend on it)
    out = replicate(rep, c.seed, c.replications, min(c.threads, 2))
    samples, tests = {}, []
    for col, label, expo in ((1, "walk", 0.35), (2, "localtime", 0.35), (3, "occupation", 0.85)):
        med = []
        for i, size in enumerate(sizes):
            vals = np.array([r[0][i][col] for r in out])
            samples[f"{label}_{size}"] = vals
            med.append(float(np.median(vals / size**expo)))
        ok = all(a > b for a, b in zip(med, med[1:]))
        tests.append(_check(f"median {label} discrepancy / n^{expo} decreasing", ok, med[-1] / med[0],
                            "strictly decreasing over sizes", medians=med, sizes=sizes,
                            n=c.replications))
    tau_means = np.array([r[1] for r in out])
    samples["tau_increment_mean"] = tau_means
    samples["tau_increment_var"] = np.array([r[2] for r in out])
    # per-pair means of n increments: pooled mean has SE sqrt(var / (reps * n))
    pooled = float(tau_means.mean())
    se = math.sqrt(float(np.mean(samples["tau_increment_var"])) / (c.replications * n))
    tests.append(_check("tau increment mean = 1", abs(pooled - 1.0) <= 3 * se, pooled,
                        "|mean - 1| <= 3 SE", se=se, n=c.replications * n))
    extra = {"sizes": sizes, "m": m,
             "tau_increment_variance": float(np.mean(samples["tau_increment_var"])),
             "tau_increment_variance_lattice": 2.0 / 3.0 * (1.0 - 1.0 / (m * m))}
    return samples, tests, extra


def _exp_increments(c: ExperimentConfig) -> tuple:
    m, n, cfg = _lattice_m(c), c.walk_length, c.spider()
    leg, radius = _target_site(c)

    def block(rng):
        out = []
        for _ in range(PAIR_BLOCK):
            pair = build_coupled_pair(cfg, n, m, rng)
            out.append(extract_a_increments(pair, radius, leg))
        return np.concatenate(out)

    a = np.asarray(_collect_blocks(block, c.seed, c.replications, c.threads))
    tests = [
        ks_one_sample(a, analytic.exponential_cdf, name="KS vs Exp(1)", d_bound=0.02),
        mean_test(a, 1.0, name="mean = 1"),
    ]
    return {"a_increment": a}, tests, {"m": m}


def _minmax(c: ExperimentConfig) -> tuple:
    n, cfg, N = c.walk_length, c.spider(), c.num_legs
    cps = 2 ** np.arange(0, int(math.log2(n)) + 1)

    def rep(rng):
        path = simulate_rws(cfg, n, rng)
        return running_occupation(path, cps)

    run = np.array(replicate(rep, c.seed, c.replications, c.threads))  # (reps, K, N)
    origin = cps[None, :] - run.sum(axis=2)
    on_legs = cps[None, :] - origin
    sandwich = (N * run.min(axis=2) <= on_legs) & (on_legs <= N * run.max(axis=2))
    dy = dyadic_minmax(run, cps)
    band = 0.05
    hit_max = np.any((dy.max_frac >= 1 / N) & (dy.max_frac <= 1 / N + band), axis=1)
    hit_min = np.any((dy.min_frac >= 1 / N - band) & (dy.min_frac <= 1 / N), axis=1)
    tests = [
        _check("sandwich T_m <= (n - xi(0,n))/N <= T_M", bool(sandwich.all()), float(sandwich.mean()),
               "holds at every checkpoint of every path", n=int(sandwich.size)),
        _check("T_M/n enters [1/N, 1/N + 0.05]", hit_max.mean() >= 0.5, float(hit_max.mean()),
               "fraction of paths >= 0.5", n=c.replications),
        _check("T_m/n enters [1/N - 0.05, 1/N]", hit_min.mean() >= 0.5, float(hit_min.mean()),
               "fraction of paths >= 0.5", n=c.replications),
    ]
    samples = {"max_fraction": dy.max_frac[:, -1], "min_fraction": dy.min_frac[:, -1],
               "closest_max_gap": np.min(np.abs(dy.max_frac - 1 / N), axis=1),
               "closest_min_gap": np.min(np.abs(dy.min_frac - 1 / N), axis=1)}
    return samples, tests, {"checkpoints": cps.tolist()}


CHUNG_ERDOS_EXPONENTS = (1.0, 1.5, 2.0, 2.5, 3.0, 4.0)


def _chung_erdos(c: ExperimentConfig) -> tuple:
    k_max = 60
    tests, extra = [], {}
    for a in CHUNG_ERDOS_EXPONENTS:
        res = analytic.chung_erdos_test(analytic.log_power(a), k_max)
        lo, hi = analytic.log_power_dyadic_bounds(a, k_max)
        extra[f"a={a:g}"] = {"verdict": res.verdict, "dyadic_sum": res.dyadic_sum,
                             "tail_exponent": res.tail_exponent, "bounds": [lo, hi]}
        expected = "divergent" if a <= 2 else "convergent"
        tests.append(_check(f"(log x)^{a:g} classified {expected}", res.verdict == expected,
                            res.tail_exponent, f"verdict == {expected}"))
        ok = lo * 0.99 <= res.dyadic_sum <= hi * 1.01
        tests.append(_check(f"(log x)^{a:g} dyadic sum within integral bounds", ok, res.dyadic_sum,
                            "lower*0.99 <= sum <= upper*1.01", lower=lo, upper=hi))
    # empirical: dyadic checkpoints with T_m(2^k) < 2^k / f(2^k), for a divergent and a convergent f
    n, cfg = c.walk_length, c.spider()
    cps = 2 ** np.arange(1, int(math.log2(n)) + 1)

    def rep(rng):
        return running_occupation(simulate_rws(cfg, n, rng), cps)

    run = np.array(replicate(rep, c.seed, c.replications, c.threads))
    samples = {}
    for a in (1.0, 4.0):
        f = analytic.log_power(a)
        valid = cps >= f.x_min
        dy = dyadic_minmax(run[:, valid, :], cps[valid], f)
        samples[f"io_count_a{a:g}"] = dy.io_counts
    return samples, tests, extra


def _ibm_law(c: ExperimentConfig) -> tuple:
    samples, tests = {}, []
    for i, t in enumerate((1.0, float(c.walk_length))):
        rng = make_rng(derive_stream(SeedSpec(c.seed), i))
        z = analytic.sample_ibm(t, rng, size=c.replications)
        scaled = z / t**0.25
        samples[f"scaled_t{t:g}"] = scaled
        tests.append(ks_one_sample(scaled, analytic.dobrushin_cdf, name=f"KS t={t:g} vs U*sqrt|V|",
                                   d_bound=0.002))
        tests.append(mean_test(scaled, 0.0, name=f"mean t={t:g}"))
        tests.append(mean_test(z * z / math.sqrt(t), math.sqrt(2 / math.pi),
                               name=f"E Z(t)^2 / sqrt(t) t={t:g}"))
    return samples, tests, {}


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    anchor: str
    run: Callable
    validate: Callable
    defaults: dict


def _v_excursion(c, cfg):
    _need(c.num_legs == 2, "excursion-pmf needs num_legs = 2")
    _need(c.x is not None and c.x != 0, "x must be a nonzero integer")


def _v_site(c, cfg):
    _target_site(c)


def _v_lamperti(c, cfg):
    leg = c.leg or 1
    _need(1 <= leg <= c.num_legs, "leg out of range")
    _need(0 < c.leg_probs[leg - 1] < 1, "Lamperti law needs 0 < p < 1")


def _v_joint(c, cfg):
    _need(c.num_legs >= 2, "joint-occupation needs num_legs >= 2")
    _need(all(p > 0 for p in c.leg_probs), "all leg probabilities must be positive")
    _need(c.replications >= 10, "KS tests need replications >= 10")


def _v_coupling(c, cfg):
    _lattice_m(c)
    _need(c.walk_length >= 16, "coupling-rate needs walk_length >= 16")


def _v_exp(c, cfg):
    _lattice_m(c)
    _target_site(c)


def _v_minmax(c, cfg):
    _need(c.num_legs >= 2, "minmax needs num_legs >= 2")


def _v_none(c, cfg):
    pass


CATALOG = {
    e.name: e
    for e in (
        CatalogEntry("excursion-pmf", "excursion local-time pmf of the skew walk (first return)",
                     _excursion_pmf, _v_excursion,
                     dict(leg_probs=[0.5, 0.5], x=1, replications=10**6)),
        CatalogEntry("dobrushin", "second-order local time limit U*sqrt|V| (Dobrushin type)",
                     _dobrushin, _v_site,
                     dict(leg_probs=[0.3, 0.7], x=2, walk_length=10**6, replications=10**4)),
        CatalogEntry("lamperti", "Lamperti occupation density of the skew walk",
                     _lamperti, _v_lamperti,
                     dict(leg_probs=[0.3, 0.7], walk_length=10**4, replications=5 * 10**4)),
        CatalogEntry("joint-occupation", "joint leg occupation identity via stable-1/2 variables",
                     _joint_occupation, _v_joint,
                     dict(num_legs=3, leg_probs=[0.2, 0.3, 0.5], walk_length=10**4,
                          replications=2 * 10**4)),
        CatalogEntry("coupling-rate", "strong approximation rates (walk, local time, occupation)",
                     _coupling_rate, _v_coupling,
                     dict(leg_probs=[0.3, 0.7], walk_length=2**16, replications=100, dt=1 / 1024)),
        CatalogEntry("exp-increments", "Exp(1) local time increments under Skorokhod embedding",
                     _exp_increments, _v_exp,
                     dict(leg_probs=[0.3, 0.7], x=1, walk_length=64, replications=10**5,
                          dt=1 / 1024)),
        CatalogEntry("minmax", "liminf/limsup 1/N of extreme leg occupations",
                     _minmax, _v_minmax,
                     dict(num_legs=3, leg_probs=[1 / 3, 1 / 3, 1 / 3], walk_length=2**20,
                          replications=200)),
        CatalogEntry("chung-erdos", "Chung-Erdos integral test for extreme leg occupations",
                     _chung_erdos, _v_minmax,
                     dict(num_legs=3, leg_probs=[1 / 3, 1 / 3, 1 / 3], walk_length=2**16,
                          replications=50)),
        CatalogEntry("ibm-law", "iterated Brownian motion marginal U*sqrt|V|",
                     _ibm_law, _v_none, dict(walk_length=100, replications=10**6)),
    )
}


def default_config(name: str, **overrides) -> ExperimentConfig:
    if name not in CATALOG:
        raise ConfigError(f"unknown experiment {name!r}")
    d = dict(CATALOG[name].defaults)
    if "leg_probs" in d and "num_legs" not in d:
        d["num_legs"] = len(d["leg_probs"])
    d.update(overrides)
    d["experiment"] = name
    return ExperimentConfig.from_mapping(d)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    config = config.validated()
    entry = CATALOG[config.experiment]
    t0 = time.perf_counter()
    samples, tests, extra = entry.run(config)
    wall = time.perf_counter() - t0
    samples = {k: np.asarray(v) for k, v in samples.items()}
    summary = _summarize(samples)
    if extra:
        summary["_extra"] = {k: _plain(v) for k, v in extra.items()}
    n_rep = max((v.size for v in samples.values()), default=0)
    return ExperimentReport(
        config=config.to_dict(),
        anchor=entry.anchor,
        samples=samples,
        summary=summary,
        tests=tests,
        verdict=all(t.passed for t in tests),
        timing={"wall_seconds": wall, "replications_per_second": n_rep / wall if wall > 0 else None},
    )


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v
