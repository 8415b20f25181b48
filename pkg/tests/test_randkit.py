import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from spiderwalk.analytic import levy_cdf
from spiderwalk.randkit import (
    SeedSpec,
    derive_stream,
    make_rng,
    sample_bernoulli,
    sample_categorical,
    sample_exponential,
    sample_levy_stable_half,
    sample_signs,
    sample_uniform,
)
from spiderwalk.stats import chi_square_pmf, counts_of

from conftest import se_band

u64 = st.integers(min_value=0, max_value=2**64 - 1)


def test_same_seed_gives_identical_stream():
    a = make_rng(SeedSpec(7, 3)).random(1000)
    b = make_rng(SeedSpec(7, 3)).random(1000)
    assert np.array_equal(a, b)


def test_distinct_stream_ids_do_not_share_state():
    a = make_rng(SeedSpec(7, 3)).random(1000)
    b = make_rng(SeedSpec(7, 4)).random(1000)
    assert not np.any(a == b)


def test_derive_stream_is_deterministic_and_distinguishes_indices():
    s = SeedSpec(99)
    assert derive_stream(s, 0) == derive_stream(s, 0)
    assert derive_stream(s, 1) != derive_stream(s, 2)


@settings(max_examples=50, deadline=None)
@given(master=u64, stream=u64, k1=st.integers(0, 2**40), k2=st.integers(0, 2**40))
def test_derive_stream_injective_in_index(master, stream, k1, k2):
    s = SeedSpec(master, stream)
    assert (derive_stream(s, k1) == derive_stream(s, k2)) == (k1 == k2)


def test_derive_stream_children_unique_over_a_range():
    ids = {derive_stream(SeedSpec(0), k).stream_id for k in range(100_000)}
    assert len(ids) == 100_000


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, "3"])
def test_seedspec_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        SeedSpec(bad)


def test_derive_stream_rejects_negative_index():
    with pytest.raises(ValueError):
        derive_stream(SeedSpec(1), -1)


def test_uniforms_in_unit_interval():
    u = sample_uniform(make_rng(derive_stream(SeedSpec(5), 0)), 10**6)
    assert u.min() >= 0.0 and u.max() < 1.0


def test_categorical_degenerate_mass(rng):
    assert np.all(sample_categorical((1.0, 0.0, 0.0), rng, size=10_000) == 1)
    assert np.all(sample_categorical((0.0, 0.0, 1.0), rng, size=10_000) == 3)


def test_categorical_scalar_draw_is_int(rng):
    v = sample_categorical((0.5, 0.5), rng)
    assert isinstance(v, int) and v in (1, 2)


def test_categorical_frequencies(rng):
    probs = np.array([0.2, 0.3, 0.5])
    n = 10**6
    x = sample_categorical(probs, rng, size=n)
    freq = np.bincount(x, minlength=4)[1:] / n
    assert np.all(np.abs(freq - probs) <= se_band(probs, n))


def test_categorical_fair_chi_square(rng):
    x = sample_categorical((0.5, 0.5), rng, size=10**6) - 1
    res = chi_square_pmf(counts_of(x), lambda k: 0.5 if k < 2 else 0.0, tail_cut=2)
    assert res.p_value > 1e-3


@pytest.mark.parametrize("probs", [(0.5, 0.6), (-0.1, 1.1), (), (np.nan, 1.0), (0.5, 0.5 + 1e-9)])
def test_categorical_rejects_invalid_vectors(probs, rng):
    with pytest.raises(ValueError):
        sample_categorical(probs, rng)


def test_categorical_accepts_rounding_within_tolerance(rng):
    sample_categorical((1 / 3, 1 / 3, 1 / 3), rng, size=10)


def test_signs_are_fair_and_valued(rng):
    s = sample_signs(10**6 + 3, rng)
    assert s.dtype == np.int8 and set(np.unique(s)) == {-1, 1}
    assert abs(s.mean()) <= 3 / np.sqrt(s.size)


def test_signs_edge_cases(rng):
    assert sample_signs(0, rng).size == 0
    with pytest.raises(ValueError):
        sample_signs(-1, rng)


def test_levy_probability_below_one(rng):
    u = sample_levy_stable_half(rng, 10**6)
    # F(1) = 2 (1 - Phi(1)) = 0.3173
    assert abs((u <= 1).mean() - 0.3173) <= 0.002
    assert levy_cdf(1.0) == pytest.approx(2 * special.ndtr(-1.0), abs=1e-14)


def test_levy_positive_and_median(rng):
    u = sample_levy_stable_half(rng, 10**6)
    assert np.all(u > 0)
    # median = 1 / Phi^{-1}(0.75)^2
    assert 1 / special.ndtri(0.75) ** 2 == pytest.approx(2.198, abs=1e-3)
    assert abs(np.median(u) - 2.198) <= 0.03


def test_exponential_rate_and_validation(rng):
    x = sample_exponential(rng, rate=4.0, size=10**5)
    assert abs(x.mean() - 0.25) <= 3 * 0.25 / np.sqrt(x.size)
    with pytest.raises(ValueError):
        sample_exponential(rng, rate=0.0)


def test_bernoulli(rng):
    assert sample_bernoulli(rng, 1.0) is True
    assert not sample_bernoulli(rng, 0.0, size=100).any()
    x = sample_bernoulli(rng, 0.25, size=10**5)
    assert abs(x.mean() - 0.25) <= se_band(0.25, x.size)
    with pytest.raises(ValueError):
        sample_bernoulli(rng, 1.5)
