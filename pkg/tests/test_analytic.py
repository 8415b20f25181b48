import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from spiderwalk import analytic
from spiderwalk.analytic import (
    IntegralTestFunction,
    SkewParams,
    c_of,
    chung_erdos_test,
    constant,
    dobrushin_cdf,
    excursion_moments,
    excursion_pmf,
    lamperti_cdf,
    lamperti_pdf,
    log_power,
    log_power_dyadic_bounds,
    sample_dobrushin,
    sample_ibm,
    sample_joint_occupation,
    sbm_excursion_laplace,
    sbm_excursion_moments,
)
from spiderwalk.spider import SpiderConfig
from spiderwalk.stats import ks_one_sample, mean_test

xs = st.integers(-12, 12).filter(lambda v: v != 0)
ps = st.floats(0.01, 0.99)


def test_c_of_examples():
    assert c_of(5, 0.3) == pytest.approx(0.6)
    assert c_of(-1, SkewParams(0.3)) == pytest.approx(1.4)
    assert c_of(7, 0.5) == c_of(-3, 0.5) == 1.0
    with pytest.raises(ValueError):
        c_of(0, 0.5)
    with pytest.raises(ValueError):
        SkewParams(1.5)


# --- excursion pmf ----------------------------------------------------------------


def test_pmf_symmetric_examples():
    assert excursion_pmf(1, 0.5, 0) == 0.5
    for m in range(1, 10):
        assert excursion_pmf(1, 0.5, m) == pytest.approx(0.25 * 0.5 ** (m - 1), rel=1e-14)
    assert excursion_pmf(2, 0.5, 0) == 0.75
    assert excursion_pmf(2, 0.5, 1) == pytest.approx(1 / 16)


@given(xs, ps)
def test_pmf_normalized(x, p):
    # head terms summed directly, geometric tail summed in closed form
    k = 50
    ax = abs(x)
    r = (2 * ax - 1) / (2 * ax)
    head = float(np.sum(excursion_pmf(x, p, np.arange(k))))
    tail = excursion_pmf(x, p, k) / (1 - r)
    assert head + tail == pytest.approx(1.0, abs=1e-12)


def test_pmf_vectorized_and_validated():
    m = np.arange(5)
    assert np.allclose(excursion_pmf(-2, 0.3, m), [excursion_pmf(-2, 0.3, int(i)) for i in m])
    with pytest.raises(ValueError):
        excursion_pmf(1, 0.5, -1)


def test_moment_examples():
    assert excursion_moments(1, 0.5) == pytest.approx((1.0, 2.0))
    assert excursion_moments(1, 0.3) == pytest.approx((0.6, 1.44))


@settings(max_examples=30)
@given(xs, ps)
def test_moments_match_series(x, p):
    m = np.arange(0, 4000 * abs(x) + 200)
    pm = excursion_pmf(x, p, m)
    mean, var = excursion_moments(x, p)
    assert (m * pm).sum() == pytest.approx(mean, abs=1e-10)
    assert (m * m * pm).sum() - mean**2 == pytest.approx(var, abs=1e-10 * max(1, var))


# --- skew BM Laplace transform ---------------------------------------------------------


def _richardson(f, h, levels=6):
    t = [[f(h / 2**i)] for i in range(levels)]
    for j in range(1, levels):
        for i in range(j, levels):
            t[i].append((2**j * t[i][j - 1] - t[i - 1][j - 1]) / (2**j - 1))
    return t[-1][-1]


def test_laplace_value():
    assert sbm_excursion_laplace(1.0, 1.0, 0.5) == pytest.approx(math.exp(-1 / 3), rel=1e-14)
    assert sbm_excursion_laplace(1.0, 1.0, 0.5) == pytest.approx(0.7165, abs=1e-4)
    with pytest.raises(ValueError):
        sbm_excursion_laplace(1.0, 0.0, 0.5)


@pytest.mark.parametrize("x,p", [(1.0, 0.3), (-2.5, 0.3), (0.4, 0.8)])
def test_laplace_cumulants_by_numeric_differentiation(x, p):
    # g(b) = log L(b) / b is smooth at 0 with g(0) = -mean and g'(0) = var / 2
    def g(b):
        return math.log(sbm_excursion_laplace(x, b, p)) / b

    mean, var = sbm_excursion_moments(x, p)
    m_num = -_richardson(g, 0.01)
    v_num = 2 * _richardson(lambda b: (g(b) + m_num) / b, 0.01)
    assert m_num == pytest.approx(mean, rel=1e-10)
    assert v_num == pytest.approx(var, rel=1e-8)
    assert mean == pytest.approx(c_of(x, p)) and var == pytest.approx(4 * c_of(x, p) * abs(x))


# --- Lamperti law -------------------------------------------------------------------------


def test_lamperti_symmetric_is_arcsine():
    u = np.linspace(0.01, 0.99, 99)
    assert np.allclose(lamperti_pdf(u, 0.5), 1 / (np.pi * np.sqrt(u * (1 - u))), rtol=1e-14)
    assert np.allclose(lamperti_cdf(u, 0.5), analytic.arcsine_cdf(u), atol=1e-14)


def test_lamperti_pdf_value():
    assert lamperti_pdf(0.5, 0.3) == pytest.approx(0.21 / (np.pi * 0.5 * 0.29), rel=1e-14)
    assert lamperti_pdf(0.5, 0.3) == pytest.approx(0.4610, abs=1e-4)


def _lamperti_mass(p, u):
    # u = sin^2(theta) removes both endpoint singularities
    def f(th):
        return lamperti_pdf(math.sin(th) ** 2, p) * 2 * math.sin(th) * math.cos(th)

    val, _ = integrate.quad(f, 0, math.asin(math.sqrt(u)), epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.9])
def test_lamperti_density_integrates_to_one(p):
    assert _lamperti_mass(p, 1.0) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(0.01, 0.99))
def test_lamperti_cdf_matches_integrated_density(p, u):
    assert lamperti_cdf(u, p) == pytest.approx(_lamperti_mass(p, u), abs=1e-8)


@given(ps, st.floats(0.0, 1.0))
def test_lamperti_cdf_swap_symmetry(p, u):
    assert lamperti_cdf(u, p) + lamperti_cdf(1 - u, 1 - p) == pytest.approx(1.0, abs=1e-6)


def test_lamperti_cdf_endpoints():
    assert lamperti_cdf(0.5, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert lamperti_cdf(1.0, 0.3) == pytest.approx(1.0, abs=1e-6)
    assert lamperti_cdf(0.0, 0.3) == 0.0
    with pytest.raises(ValueError):
        lamperti_cdf(0.5, 1.0)


# --- U sqrt|V| law ---------------------------------------------------------------------------


def _dobrushin_oracle(z):
    # condition on |V| = v instead of on U: F(z) = int_0^inf Phi(z / sqrt(v)) 2 phi(v) dv
    f = lambda v: special.ndtr(z / math.sqrt(v)) * 2 * math.exp(-v * v / 2) / math.sqrt(2 * math.pi)
    a, _ = integrate.quad(f, 0, 1, epsabs=1e-13, limit=200)
    b, _ = integrate.quad(f, 1, np.inf, epsabs=1e-13, limit=200)
    return a + b


@pytest.mark.parametrize("z", [-3.0, -0.7, 0.1, 0.5, 1.0, 2.0, 4.5])
def test_dobrushin_cdf_against_independent_integral(z):
    assert dobrushin_cdf(z) == pytest.approx(_dobrushin_oracle(z), abs=1e-9)


def test_dobrushin_frozen_values():
    # values of the conditioning-on-V integral, frozen
    for z, want in ((0.5, 0.75674), (1.0, 0.88885), (2.0, 0.98025)):
        assert dobrushin_cdf(z) == pytest.approx(want, abs=1e-5)


def test_dobrushin_symmetry():
    assert dobrushin_cdf(0.0) == 0.5
    for z in (0.5, 1.0, 2.0):
        assert dobrushin_cdf(z) + dobrushin_cdf(-z) == pytest.approx(1.0, abs=1e-8)
    zs = np.linspace(-30, 30, 1001)
    f = dobrushin_cdf(zs)
    assert np.allclose(f + f[::-1], 1.0, atol=1e-15)
    # monotone up to ulp-level interpolation noise where F is within 1e-15 of 0 or 1
    assert np.all(np.diff(f) >= -4 * np.finfo(float).eps) and f.min() >= 0 and f.max() <= 1


def test_dobrushin_table_matches_quadrature():
    zs = np.linspace(-8, 8, 157)
    assert np.allclose(dobrushin_cdf(zs), [dobrushin_cdf(float(z)) for z in zs], atol=1e-8)


def test_dobrushin_sampler_ks(rng):
    assert ks_one_sample(sample_dobrushin(rng, 10**6), dobrushin_cdf, d_bound=0.002).passed


# --- joint occupation -------------------------------------------------------------------------


def test_joint_occupation_single_leg(rng):
    assert sample_joint_occupation(SpiderConfig(1, (1.0,)), rng).tolist() == [1.0]


def test_joint_occupation_two_legs_arcsine(rng):
    u = sample_joint_occupation(SpiderConfig.skew(0.5), rng, size=10**6)[:, 0]
    assert ks_one_sample(u, analytic.arcsine_cdf, d_bound=0.002).passed


def test_joint_occupation_sums_to_one(rng):
    w = sample_joint_occupation(SpiderConfig(3, (0.2, 0.3, 0.5)), rng, size=10**5)
    assert w.shape == (10**5, 3) and np.all(w >= 0)
    assert np.max(np.abs(w.sum(axis=1) - 1.0)) <= 4 * np.finfo(float).eps


def test_joint_occupation_rejects_zero_leg(rng):
    with pytest.raises(ValueError):
        sample_joint_occupation(SpiderConfig(3, (0.0, 0.5, 0.5)), rng)


# --- iterated Brownian motion --------------------------------------------------------------------


@pytest.mark.parametrize("t", [1.0, 100.0])
def test_ibm_scaled_law(rng, t):
    z = sample_ibm(t, rng, size=10**6) / t**0.25
    assert ks_one_sample(z, dobrushin_cdf, d_bound=0.002).passed
    assert mean_test(z, 0.0).passed


def test_ibm_second_moment(rng):
    z = sample_ibm(1.0, rng, size=10**6)
    assert mean_test(z * z, math.sqrt(2 / math.pi)).passed
    with pytest.raises(ValueError):
        sample_ibm(0.0, rng)


# --- Chung-Erdos integral test -----------------------------------------------------------------------


@pytest.mark.parametrize("a,verdict", [(1, "divergent"), (1.5, "divergent"), (2, "divergent"),
                                       (3, "convergent"), (4, "convergent")])
def test_log_power_verdicts(a, verdict):
    assert chung_erdos_test(log_power(a), 60).verdict == verdict


def test_constant_is_divergent():
    assert chung_erdos_test(constant(4.0), 60).verdict == "divergent"


def test_fast_decay_is_convergent():
    f = IntegralTestFunction(lambda x: x, "x")
    assert chung_erdos_test(f, 60).verdict == "convergent"


def test_log_loglog_boundary_is_not_divergent():
    f = IntegralTestFunction(lambda x: math.log(x) ** 2 * math.log(math.log(x)) ** 4,
                             "log^2 loglog^4", x_min=math.exp(math.e**2))
    assert chung_erdos_test(f, 60).verdict != "divergent"


def _dyadic_sum_oracle(a, k_max):
    # sum_{k<=K} (k log 2)^(-s) = (log 2)^(-s) (zeta(s) - zeta(s, K + 1)), s = a / 2 (harmonic at s = 1)
    s = mpmath.mpf(a) / 2
    if s == 1:
        head = mpmath.harmonic(k_max)
    else:
        head = mpmath.zeta(s) - mpmath.zeta(s, k_max + 1)
    return float(mpmath.log(2) ** -s * head)


@pytest.mark.parametrize("a", [1, 1.5, 2, 2.5, 3, 4])
def test_dyadic_sum_matches_zeta_oracle_and_bounds(a):
    res = chung_erdos_test(log_power(a), 60)
    assert res.dyadic_sum == pytest.approx(_dyadic_sum_oracle(a, 60), rel=1e-12)
    lo, hi = log_power_dyadic_bounds(a, 60)
    assert lo <= res.dyadic_sum <= hi


def test_integral_function_validation():
    with pytest.raises(ValueError):
        IntegralTestFunction(lambda x: -1.0, "neg").validate()
    with pytest.raises(ValueError):
        IntegralTestFunction(lambda x: x * x, "x^2").validate()  # x / f decreasing
    with pytest.raises(ValueError):
        chung_erdos_test(log_power(2), 5)


def test_cdf_helpers():
    assert analytic.exponential_cdf(np.array([-1.0, 0.0, 1.0])).tolist() == pytest.approx(
        [0.0, 0.0, 1 - math.exp(-1)])
    assert analytic.half_normal_cdf(1.0) == pytest.approx(special.erf(1 / math.sqrt(2)))
    assert analytic.levy_cdf(0.0) == 0.0
