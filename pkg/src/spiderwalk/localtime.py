"""Visit-count functionals of spider and skew paths.

Walk local times and occupation times count steps ``1..n`` (step 0, the
start at the body, is excluded). Lattice Brownian local times count the
visits that *start* a fine step, i.e. steps ``0..n-1``, since the Brownian
path accrues local time at the body from time 0 onwards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import c_of
from .randkit import sample_categorical
from .spider import SpiderPath, count_excursions, excursion_ids


class NoCompleteExcursion(ValueError):
    """The path never returns to the body, so no excursion is complete."""


@dataclass(frozen=True)
class LocalTimeLedger:
    origin_count: int
    leg_counts: dict  # (leg, radius) -> visits, visited sites only
    horizon: int

    def at(self, leg: int, radius: int) -> int:
        if radius == 0:
            return self.origin_count
        return self.leg_counts.get((leg, radius), 0)

    def total(self) -> int:
        return self.origin_count + sum(self.leg_counts.values())


@dataclass(frozen=True)
class OccupationVector:
    per_leg: np.ndarray
    origin_time: int
    horizon: int

    @property
    def fractions(self) -> np.ndarray:
        return self.per_leg / self.horizon


@dataclass(frozen=True)
class ReturnTimes:
    rho: np.ndarray  # rho_1 < rho_2 < ...; rho_0 = 0 is implicit

    def __len__(self):
        return int(self.rho.size)


def _positions(path):
    """Return ``(legs, radii)`` for a SpiderPath, or ``(None, signed)`` for a signed path."""
    if isinstance(path, SpiderPath):
        return path.legs, path.radii
    return None, np.asarray(path)


def local_time(path: SpiderPath) -> LocalTimeLedger:
    legs = path.legs[1:]
    radii = path.radii[1:].astype(np.int64)
    at0 = legs == 0
    n_legs = path.config.num_legs
    codes = radii[~at0] * (n_legs + 1) + legs[~at0]
    sites, counts = np.unique(codes, return_counts=True)
    table = {
        (int(c % (n_legs + 1)), int(c // (n_legs + 1))): int(k) for c, k in zip(sites, counts)
    }
    return LocalTimeLedger(int(np.count_nonzero(at0)), table, path.n_steps)


def skew_local_time(signed, k: int, n: int | None = None) -> int:
    """Visits of a signed path to site ``k`` during steps ``1..n``."""
    s = np.asarray(signed)
    n = s.size - 1 if n is None else n
    return int(np.count_nonzero(s[1:n + 1] == k))


def occupation_times(path: SpiderPath, n: int | None = None) -> OccupationVector:
    n = path.n_steps if n is None else n
    legs = path.legs[1:n + 1]
    counts = np.bincount(legs, minlength=path.config.num_legs + 1)
    return OccupationVector(counts[1:].astype(np.int64), int(counts[0]), n)


def running_occupation(path: SpiderPath, checkpoints) -> np.ndarray:
    """``T(j, n_k)`` for each checkpoint ``n_k``; shape ``(len(checkpoints), N)``."""
    cps = np.asarray(checkpoints, dtype=np.int64)
    if cps.size and (cps.min() < 1 or cps.max() > path.n_steps):
        raise ValueError("checkpoints must lie in 1..n")
    legs = path.legs[1:]
    out = np.empty((cps.size, path.config.num_legs), dtype=np.int64)
    for j in range(1, path.config.num_legs + 1):
        out[:, j - 1] = np.cumsum(legs == j)[cps - 1]
    return out


def return_times(path) -> ReturnTimes:
    legs, pos = _positions(path)
    at0 = (legs == 0) if legs is not None else (pos == 0)
    if not at0[0]:
        raise ValueError("path must start at the body")
    return ReturnTimes(np.flatnonzero(at0[1:]) + 1)


def _hits(path, x: int, leg: int | None) -> np.ndarray:
    legs, pos = _positions(path)
    if legs is None:
        if x == 0:
            raise ValueError("x must be nonzero")
        return pos == x
    if leg is None or x <= 0:
        raise ValueError("spider paths need a leg and a positive radius")
    return (legs == leg) & (pos == x)


def excursion_local_time_samples(path, x: int, leg: int | None = None) -> np.ndarray:
    """Visits to ``x`` during each complete excursion from the body.

    ``V_i`` counts visits in ``(rho_{i-1}, rho_i]``; an unfinished final
    excursion contributes nothing.
    """
    rho = return_times(path).rho
    if rho.size == 0:
        raise NoCompleteExcursion("no complete excursion within the horizon")
    cum = np.concatenate(([0], np.cumsum(_hits(path, x, leg))))
    at = cum[rho]
    return np.diff(np.concatenate(([0], at))).astype(np.int64)


def simulate_excursion_local_times(p: float, x: int, size: int, rng) -> np.ndarray:
    """Visit counts to ``x`` over ``size`` independent skew-walk excursions.

    Exact in law: excursions are simulated on the strip ``[0, |x|]`` only. A
    step up from ``|x|`` starts a sub-excursion above ``|x|`` that returns to
    ``|x|`` with probability one before the walk can reach 0, so it is folded
    into a single extra visit without simulating its (heavy-tailed) length.
    """
    if x == 0:
        raise ValueError("x must be nonzero")
    ax = abs(int(x))
    side = sample_categorical((p, 1.0 - p), rng, size=size)
    counts = np.zeros(size, dtype=np.int64)
    idx = np.flatnonzero(side == (1 if x > 0 else 2))
    r = np.ones(idx.size, dtype=np.int64)
    if ax == 1:
        counts[idx] += 1
    while idx.size:
        up = rng.random(idx.size) < 0.5
        at_top = r == ax
        counts[idx[at_top & up]] += 1
        r = np.where(at_top & up, r, np.where(up, r + 1, r - 1))
        counts[idx[(r == ax) & ~(at_top & up)]] += 1
        alive = r > 0
        idx, r = idx[alive], r[alive]
    return counts


def contrast_process(path: SpiderPath, x: int, leg: int) -> np.ndarray:
    """Running ``xi((x, j), k) - 2 p_j xi(0, k)`` for ``k = 1..n``."""
    if x < 1 or not 1 <= leg <= path.config.num_legs:
        raise ValueError("need x >= 1 and a valid leg")
    legs, radii = path.legs[1:], path.radii[1:]
    site = np.cumsum((legs == leg) & (radii == x))
    body = np.cumsum(legs == 0)
    return site - 2.0 * path.config.leg_probs[leg - 1] * body


def skew_contrast_process(signed, x: int, p: float) -> np.ndarray:
    """Running ``xi*(x, k) - c(x) xi*(0, k)`` for a signed skew path."""
    s = np.asarray(signed)[1:]
    return np.cumsum(s == x) - c_of(x, p) * np.cumsum(s == 0)


def excursion_visit_table(ssrw: np.ndarray, radius: int) -> tuple:
    """Per-excursion visit counts of ``|S|`` to ``radius`` over steps ``1..n``.

    Returns ``(visits, body_visits)`` where ``visits[m-1]`` belongs to the
    ``m``-th excursion (the open final one included) and ``body_visits`` is
    ``xi(0, n)``.
    """
    s = np.asarray(ssrw)
    n_exc = count_excursions(s)
    ids = excursion_ids(s)
    hit = np.abs(s[1:]) == radius
    visits = np.bincount(ids[1:][hit] - 1, minlength=n_exc)[:n_exc]
    body = int(np.count_nonzero(s[1:] == 0))
    return visits, body


def contrast_final(ssrw: np.ndarray, probs, leg: int, radius: int, rng) -> tuple:
    """``(xi((radius, leg), n), xi(0, n))`` of the spider walk built from ``ssrw``.

    Draws the excursion labels exactly as :func:`build_rws_from_ssrw` does, so
    both routes agree on the same generator state.
    """
    visits, body = excursion_visit_table(ssrw, radius)
    labels = sample_categorical(probs, rng, size=visits.size)
    return int(visits[labels == leg].sum()), body


def leg_occupation_from_ssrw(ssrw: np.ndarray, probs, rng) -> tuple:
    """``(T(1..N, n), origin_time)`` of the spider walk built from ``ssrw``."""
    s = np.asarray(ssrw)
    n_exc = count_excursions(s)
    ids = excursion_ids(s)
    nz = s[1:] != 0
    lengths = np.bincount(ids[1:][nz] - 1, minlength=n_exc)[:n_exc]
    labels = sample_categorical(probs, rng, size=n_exc)
    per_leg = np.bincount(labels, weights=lengths, minlength=len(probs) + 1)[1:]
    return per_leg.astype(np.int64), int(s.size - 1 - np.count_nonzero(nz))


def brownian_local_time_estimate(path: SpiderPath, x: float, leg: int | None = None,
                                 rng=None) -> float:
    """Lattice estimate of Brownian local time at spatial point ``x`` on ``leg``.

    Without ``rng`` each visit to the nearest lattice site contributes the
    spacing ``sqrt(dt)``. With ``rng`` each visit instead contributes
    ``sqrt(dt) * E`` with ``E ~ Exp(1)``: the exact conditional law of the
    Brownian local time accrued before the path next moves one spacing,
    which removes the lattice granularity of the counting estimate.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    site = int(round(x / path.step_scale))
    starts_legs = path.legs[:-1]
    starts_radii = path.radii[:-1]
    if site == 0:
        hit = starts_legs == 0
    else:
        if leg is None:
            raise ValueError("leg is required for x > 0")
        hit = (starts_legs == leg) & (starts_radii == site)
    k = int(np.count_nonzero(hit))
    if rng is None:
        return k * path.step_scale
    return float(rng.standard_exponential(k).sum()) * path.step_scale
