"""Distributional self-checks of the samplers and closed-form laws.

Each check draws from a fixed seed, so the outcome is deterministic; the
thresholds (p > 1e-3 or explicit distance bounds) leave a wide margin for a
correct implementation.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from . import analytic, randkit
from .randkit import SeedSpec, derive_stream, make_rng
from .spider import SpiderConfig
from .stats import TestResult, chi_square_pmf, counts_of, ks_one_sample, mean_test

SELFTEST_SEED = 20240917
N_DRAWS = 200_000


def _rng(k: int):
    return make_rng(derive_stream(SeedSpec(SELFTEST_SEED), k))


def _close(name: str, got: float, want: float, tol: float) -> TestResult:
    err = abs(got - want)
    return TestResult(name, float(got), 1.0 if err <= tol else 0.0, 0, err <= tol,
                      f"|value - {want:.10g}| <= {tol:g}")


def check_uniform():
    return ks_one_sample(randkit.sample_uniform(_rng(0), N_DRAWS), lambda u: np.clip(u, 0, 1),
                         name="randkit uniform KS")


def check_normal():
    return ks_one_sample(randkit.sample_normal(_rng(1), N_DRAWS), special.ndtr,
                         name="randkit normal KS")


def check_exponential():
    x = randkit.sample_exponential(_rng(2), rate=2.5, size=N_DRAWS)
    return ks_one_sample(x, lambda t: analytic.exponential_cdf(t, 2.5), name="randkit exponential KS")


def check_bernoulli():
    x = randkit.sample_bernoulli(_rng(3), 0.3, size=N_DRAWS).astype(np.int64)
    return chi_square_pmf(counts_of(x), lambda k: 0.7 if k == 0 else 0.3, tail_cut=2,
                          name="randkit bernoulli chi2")


def check_categorical():
    probs = (0.1, 0.2, 0.3, 0.4)
    x = randkit.sample_categorical(probs, _rng(4), size=N_DRAWS) - 1
    return chi_square_pmf(counts_of(x), lambda k: probs[k] if k < 4 else 0.0, tail_cut=4,
                          name="randkit categorical chi2")


def check_signs():
    s = randkit.sample_signs(N_DRAWS, _rng(5))
    return chi_square_pmf(counts_of((s + 1) // 2), lambda k: 0.5, tail_cut=2, name="randkit signs chi2")


def check_levy():
    return ks_one_sample(randkit.sample_levy_stable_half(_rng(6), N_DRAWS), analytic.levy_cdf,
                         name="randkit stable-1/2 KS")


def check_excursion_pmf_mass():
    worst = 0.0
    for p, x in ((0.5, 1), (0.3, -2), (0.8, 5)):
        m = np.arange(0, 20000)
        pm = analytic.excursion_pmf(x, p, m)
        mean, var = analytic.excursion_moments(x, p)
        worst = max(worst, abs(pm.sum() - 1), abs((m * pm).sum() - mean),
                    abs((m * m * pm).sum() - mean * mean - var))
    return _close("analytic excursion pmf mass and moments", worst, 0.0, 1e-9)


def check_lamperti():
    worst = 0.0
    for p in (0.3, 0.5, 0.9):
        for u in (0.1, 0.5, 0.77):
            q, _ = integrate.quad(lambda t: analytic.lamperti_pdf(t, p), 0, u, limit=200)
            worst = max(worst, abs(q - analytic.lamperti_cdf(u, p)))
    return _close("analytic Lamperti cdf vs integrated density", worst, 0.0, 1e-8)


def check_dobrushin_table():
    zs = np.linspace(-6, 6, 61)
    quad = np.array([analytic.dobrushin_cdf(float(z)) for z in zs])
    worst = float(np.max(np.abs(analytic.dobrushin_cdf(zs) - quad)))
    return _close("analytic U*sqrt|V| table vs quadrature", worst, 0.0, 1e-7)


def check_dobrushin_sampler():
    return ks_one_sample(analytic.sample_dobrushin(_rng(7), N_DRAWS), analytic.dobrushin_cdf,
                         name="analytic U*sqrt|V| sampler KS")


def check_joint_occupation_two_legs():
    cfg = SpiderConfig.skew(0.3)
    u = analytic.sample_joint_occupation(cfg, _rng(8), size=N_DRAWS)[:, 0]
    return ks_one_sample(u, lambda v: analytic.lamperti_cdf(v, 0.3),
                         name="analytic joint occupation (N=2) vs Lamperti KS")


def check_ibm():
    z = analytic.sample_ibm(16.0, _rng(9), size=N_DRAWS) / 2.0
    return ks_one_sample(z, analytic.dobrushin_cdf, name="analytic IBM scaled KS")


def check_sbm_laplace_moments():
    # cumulants from finite differences of log E exp(-b X), using log L(0) = 0
    worst = 0.0
    h = 1e-6
    for p, x in ((0.3, 1.0), (0.7, -2.5)):
        mean, var = analytic.sbm_excursion_moments(x, p)
        l1 = math.log(analytic.sbm_excursion_laplace(x, h, p))
        l2 = math.log(analytic.sbm_excursion_laplace(x, 2 * h, p))
        d1 = -(4 * l1 - l2) / (2 * h)
        d2 = (l2 - 2 * l1) / (h * h)
        worst = max(worst, abs(d1 - mean) / mean, abs(d2 - var) / var)
    return _close("analytic skew-BM excursion cumulants", worst, 0.0, 1e-4)


def check_excursion_sampler():
    from .localtime import simulate_excursion_local_times

    v = simulate_excursion_local_times(0.3, -2, N_DRAWS, _rng(10))
    return chi_square_pmf(counts_of(v), lambda m: analytic.excursion_pmf(-2, 0.3, m), tail_cut=60,
                          name="excursion visit sampler chi2")


def check_exponential_mean():
    return mean_test(randkit.sample_exponential(_rng(11), size=N_DRAWS), 1.0, name="randkit Exp(1) mean")


CHECKS = (
    check_uniform,
    check_normal,
    check_exponential,
    check_exponential_mean,
    check_bernoulli,
    check_categorical,
    check_signs,
    check_levy,
    check_excursion_pmf_mass,
    check_lamperti,
    check_dobrushin_table,
    check_dobrushin_sampler,
    check_joint_occupation_two_legs,
    check_ibm,
    check_sbm_laplace_moments,
    check_excursion_sampler,
)


def run_selftest() -> list:
    return [check() for check in CHECKS]
