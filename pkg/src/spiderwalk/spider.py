"""Spider graph SP(N): points, metric, and the three path constructions.

Paths are stored as two parallel arrays: ``legs`` (0 at the body, 1..N on a
leg) and ``radii`` in lattice units. A walk has ``step_scale = time_scale = 1``;
the lattice Brownian approximant has spatial step ``sqrt(dt)`` and time step
``dt``. Skew (N = 2) paths are also handled in signed form, with leg 1 the
positive half-line and leg 2 the negative one.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .randkit import PROB_TOL, sample_categorical, sample_signs


@dataclass(frozen=True)
class SpiderConfig:
    num_legs: int
    leg_probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.leg_probs)
        object.__setattr__(self, "leg_probs", probs)
        if int(self.num_legs) < 1:
            raise ValueError("num_legs must be >= 1")
        if len(probs) != self.num_legs:
            raise ValueError(f"expected {self.num_legs} leg probabilities, got {len(probs)}")
        if any(p < 0 or not math.isfinite(p) for p in probs):
            raise ValueError(f"leg probabilities must be nonnegative: {probs}")
        if abs(sum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"leg probabilities must sum to 1, got {sum(probs)!r}")

    @classmethod
    def uniform(cls, n: int) -> "SpiderConfig":
        return cls(n, tuple([1.0 / n] * n))

    @classmethod
    def skew(cls, p: float) -> "SpiderConfig":
        return cls(2, (p, 1.0 - p))

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.leg_probs)


@dataclass(frozen=True)
class SpiderPoint:
    """A point of the spider; ``leg == 0`` is the body (radius 0)."""

    leg: int = 0
    radius: float = 0

    def __post_init__(self):
        if self.leg < 0:
            raise ValueError("leg index must be >= 0")
        if self.leg == 0 and self.radius != 0:
            raise ValueError("the body has radius 0")
        if self.leg > 0 and not self.radius > 0:
            raise ValueError("points on a leg have positive radius")

    @property
    def is_origin(self) -> bool:
        return self.leg == 0


ORIGIN = SpiderPoint()


def distance(a: SpiderPoint, b: SpiderPoint) -> float:
    if a.is_origin or b.is_origin:
        return a.radius + b.radius
    if a.leg == b.leg:
        return abs(a.radius - b.radius)
    return a.radius + b.radius


def distance_arrays(legs_a, radii_a, legs_b, radii_b) -> np.ndarray:
    """Vectorized spider distance between two point sequences."""
    same = (legs_a == legs_b) | (legs_a == 0) | (legs_b == 0)
    ra = np.asarray(radii_a, dtype=float)
    rb = np.asarray(radii_b, dtype=float)
    return np.where(same, np.abs(ra - rb), ra + rb)


@dataclass(frozen=True)
class SpiderPath:
    legs: np.ndarray
    radii: np.ndarray
    config: SpiderConfig
    step_scale: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self):
        if self.legs.shape != self.radii.shape or self.legs.ndim != 1:
            raise ValueError("legs and radii must be 1-d arrays of equal length")
        if self.legs.size == 0 or self.legs[0] != 0 or self.radii[0] != 0:
            raise ValueError("a spider path starts at the body")

    def __len__(self) -> int:
        return int(self.legs.size)

    @property
    def n_steps(self) -> int:
        return len(self) - 1

    def point(self, i: int) -> SpiderPoint:
        leg = int(self.legs[i])
        if leg == 0:
            return ORIGIN
        return SpiderPoint(leg, self.radii[i].item() * self.step_scale)

    def points(self) -> list:
        return [self.point(i) for i in range(len(self))]

    def check_steps(self) -> bool:
        """True when consecutive points are one lattice step apart."""
        d = distance_arrays(self.legs[1:], self.radii[1:], self.legs[:-1], self.radii[:-1])
        return bool(np.all(d == 1))


def from_points(points, config: SpiderConfig, step_scale=1.0, time_scale=1.0) -> SpiderPath:
    legs = np.array([p.leg for p in points], dtype=np.int8)
    radii = np.array([round(p.radius / step_scale) for p in points], dtype=np.int64)
    return SpiderPath(legs, radii, config, step_scale, time_scale)


def to_signed(path: SpiderPath) -> np.ndarray:
    """Signed form of a two-legged path: leg 1 positive, leg 2 negative."""
    if path.config.num_legs != 2:
        raise ValueError("signed form exists only for N = 2")
    r = path.radii.astype(np.int64)
    return np.where(path.legs == 2, -r, r)


def from_signed(signed, p: float) -> SpiderPath:
    s = np.asarray(signed, dtype=np.int64)
    legs = np.where(s > 0, 1, np.where(s < 0, 2, 0)).astype(np.int8)
    return SpiderPath(legs, np.abs(s), SpiderConfig.skew(p))


# ---------------------------------------------------------------------------
# simple symmetric walk and its excursions


def simulate_ssrw(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be nonnegative")
    path = np.zeros(n + 1, dtype=np.int32 if n < 2**31 - 1 else np.int64)
    np.cumsum(sample_signs(n, rng), out=path[1:], dtype=path.dtype)
    return path


@dataclass(frozen=True)
class ExcursionInterval:
    start: int
    end: Optional[int]  # None when the excursion is still open at the horizon
    label: Optional[int] = None

    @property
    def complete(self) -> bool:
        return self.end is not None


def excursion_ids(ssrw: np.ndarray) -> np.ndarray:
    """Index m >= 1 of the excursion containing each step (meaningless at zeros)."""
    zeros = np.flatnonzero(ssrw == 0)
    dtype = np.int32 if ssrw.size < 2**31 - 1 else np.int64
    runs = np.diff(np.append(zeros, ssrw.size))
    return np.repeat(np.arange(1, zeros.size + 1, dtype=dtype), runs)


def count_excursions(ssrw: np.ndarray) -> int:
    """Excursions started within the path (every zero except a final one)."""
    return int(np.count_nonzero(ssrw[:-1] == 0))


def decompose_excursions(ssrw) -> list:
    s = np.asarray(ssrw)
    if s.size == 0 or s[0] != 0:
        raise ValueError("path must start at 0")
    zeros = np.flatnonzero(s == 0)
    out = []
    for a, b in zip(zeros[:-1], zeros[1:]):
        if b > a + 1:
            out.append(ExcursionInterval(int(a), int(b)))
    last = int(zeros[-1])
    if last < s.size - 1:
        out.append(ExcursionInterval(last, None))
    return out


def _labels(probs, n_exc: int, rng, labels) -> np.ndarray:
    if labels is None:
        return sample_categorical(probs, rng, size=n_exc)
    lab = np.asarray(labels, dtype=np.int64)
    if lab.size < n_exc:
        raise ValueError(f"need {n_exc} excursion labels, got {lab.size}")
    return lab[:n_exc]


def build_rws_from_ssrw(config: SpiderConfig, ssrw, rng=None, labels=None) -> SpiderPath:
    """Put each excursion of ``|ssrw|`` on an independently chosen leg."""
    s = np.asarray(ssrw)
    if s.size == 0 or s[0] != 0:
        raise ValueError("path must start at 0")
    lab = _labels(config.leg_probs, count_excursions(s), rng, labels)
    zeros = np.flatnonzero(s == 0)
    # run k covers zero k up to the next zero and carries the label of excursion k
    per_run = np.zeros(zeros.size, dtype=np.int8)
    per_run[: lab.size] = lab
    legs = np.repeat(per_run, np.diff(np.append(zeros, s.size)))
    legs[zeros] = 0
    return SpiderPath(legs, np.abs(s), config)


def build_skew_from_ssrw(p: float, ssrw, rng=None, labels=None) -> np.ndarray:
    """Skew walk: every excursion keeps its modulus and gets sign + with probability ``p``.

    Labels follow the two-legged spider convention (1 -> +, 2 -> -), so the
    same generator state gives ``to_signed(build_rws_from_ssrw(skew(p), ...))``.
    """
    s = np.asarray(ssrw)
    if s.size == 0 or s[0] != 0:
        raise ValueError("path must start at 0")
    lab = _labels((p, 1.0 - p), count_excursions(s), rng, labels)
    ids = excursion_ids(s)
    out = np.abs(s).astype(np.int64)
    nz = s != 0
    neg = np.zeros(s.size, dtype=bool)
    neg[nz] = lab[ids[nz] - 1] == 2
    out[neg] = -out[neg]
    return out


# ---------------------------------------------------------------------------
# direct Markov simulation


def simulate_rws_markov_batch(config: SpiderConfig, n: int, reps: int, rng) -> tuple:
    """``reps`` independent spider walks of ``n`` steps by direct transitions.

    Returns ``(legs, radii)`` arrays of shape ``(reps, n + 1)``.
    """
    if n < 0 or reps < 0:
        raise ValueError("n and reps must be nonnegative")
    cum = np.cumsum(config.probs)
    cum[-1] = 1.0
    last = int(np.flatnonzero(config.probs > 0)[-1]) + 1
    legs = np.zeros((reps, n + 1), dtype=np.int8)
    radii = np.zeros((reps, n + 1), dtype=np.int64)
    leg = np.zeros(reps, dtype=np.int8)
    r = np.zeros(reps, dtype=np.int64)
    for i in range(1, n + 1):
        u = rng.random(reps)
        at0 = r == 0
        new_leg = np.minimum(np.searchsorted(cum, u, side="right") + 1, last)
        leg = np.where(at0, new_leg, leg).astype(np.int8)
        r = np.where(at0, 1, r + np.where(u < 0.5, 1, -1))
        leg[r == 0] = 0
        legs[:, i] = leg
        radii[:, i] = r
    return legs, radii


def simulate_rws_markov(config: SpiderConfig, n: int, rng) -> SpiderPath:
    legs, radii = simulate_rws_markov_batch(config, n, 1, rng)
    return SpiderPath(legs[0], radii[0], config)


def simulate_rws(config: SpiderConfig, n: int, rng) -> SpiderPath:
    """Spider walk via the excursion construction (fast path)."""
    return build_rws_from_ssrw(config, simulate_ssrw(n, rng), rng)


def simulate_bms_lattice(config: SpiderConfig, horizon: float, dt: float, rng,
                         method: str = "excursion") -> SpiderPath:
    """Lattice Brownian spider on ``[0, horizon]`` with time step ``dt``.

    Radii are kept in fine-lattice units; multiply by ``step_scale = sqrt(dt)``
    for spatial values.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    n = int(math.floor(horizon / dt + 1e-9))
    if method == "excursion":
        base = simulate_rws(config, n, rng)
    elif method == "markov":
        base = simulate_rws_markov(config, n, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpiderPath(base.legs, base.radii, config, math.sqrt(dt), dt)


def write_path_dump(path: SpiderPath, fh) -> None:
    """Debug dump: one ``step,leg,radius`` row per point (radius in spatial units)."""
    w = csv.writer(fh)
    w.writerow(["step", "leg", "radius"])
    for i in range(len(path)):
        w.writerow([i, int(path.legs[i]), repr(path.radii[i].item() * path.step_scale)])


def read_path_dump(fh, config: SpiderConfig, step_scale=1.0, time_scale=1.0) -> SpiderPath:
    rows = list(csv.DictReader(fh))
    legs = np.array([int(r["leg"]) for r in rows], dtype=np.int8)
    radii = np.array([round(float(r["radius"]) / step_scale) for r in rows], dtype=np.int64)
    return SpiderPath(legs, radii, config, step_scale, time_scale)
