"""Seeded, splittable random sampling.

Every replication owns one :class:`numpy.random.Generator` built from a
:class:`SeedSpec`. Child seeds are derived with a bijective 64-bit mix so that
``derive_stream(s, k)`` is injective in ``k``; generators are seeded through
``SeedSequence`` so distinct stream ids never share state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
PROB_TOL = 1e-12


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def rng(self) -> np.random.Generator:
        return make_rng(self)


def derive_stream(seed: SeedSpec, k: int) -> SeedSpec:
    """Child seed number ``k`` of ``seed``; distinct ``k`` give distinct children."""
    if k < 0:
        raise ValueError("stream index must be nonnegative")
    # splitmix64 is a bijection on 64-bit words, so the child id is injective in k
    base = (int(seed.stream_id) * 0xD1342543DE82EF95 + int(k) + 1) & _MASK64
    return SeedSpec(seed.master_seed, _splitmix64(base))


def make_rng(seed: SeedSpec) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed.master_seed), spawn_key=(int(seed.stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def _check_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be a nonempty 1-d sequence")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"probabilities must be finite and nonnegative: {p}")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities must sum to 1 (got {p.sum()!r})")
    return p


def sample_categorical(probs, rng: np.random.Generator, size=None):
    """Draw 1-based category indices with ``P(j) = probs[j-1]``."""
    p = _check_probs(probs)
    cum = np.cumsum(p)
    cum[-1] = 1.0
    u = rng.random(size)
    idx = np.searchsorted(cum, u, side="right") + 1
    # zero-mass trailing categories can never be returned
    last = int(np.flatnonzero(p > 0)[-1]) + 1
    idx = np.minimum(idx, last)
    if size is None:
        return int(idx)
    return idx.astype(np.int64)


def sample_signs(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent fair +-1 steps as int8 (one random bit per step)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.zeros(0, dtype=np.int8)
    bits = np.unpackbits(np.frombuffer(rng.bytes((n + 7) // 8), dtype=np.uint8), count=n)
    steps = bits.view(np.int8)
    steps *= 2
    steps -= 1
    return steps


def sample_uniform(rng: np.random.Generator, size=None):
    return rng.random(size)


def sample_normal(rng: np.random.Generator, size=None):
    return rng.standard_normal(size)


def sample_exponential(rng: np.random.Generator, rate: float = 1.0, size=None):
    if rate <= 0:
        raise ValueError("rate must be positive")
    return rng.standard_exponential(size) / rate


def sample_bernoulli(rng: np.random.Generator, p: float, size=None):
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    out = rng.random(size) < p
    return out if size is not None else bool(out)


def sample_levy_stable_half(rng: np.random.Generator, size=None):
    """One-sided stable-1/2 (Levy) law, drawn as ``1 / Z**2`` with ``Z`` standard normal."""
    z = rng.standard_normal(size)
    return 1.0 / (z * z)
