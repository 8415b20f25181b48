"""Skorokhod embedding of a unit-step spider walk into a lattice Brownian spider.

The Brownian path is a fine lattice spider walk with spacing ``h = 1/m`` and
time step ``h^2``. Unit-distance stopping times are then exact lattice events:
``tau_i`` is the first fine step after ``tau_{i-1}`` at which the path sits on
an integer site different from the one it occupied at ``tau_{i-1}``.

Brownian local time at an integer site is accumulated over the fine visits to
that site. Each visit contributes ``h`` (counting) or ``h * E`` with
``E ~ Exp(1)`` (refined marks, drawn once per pair so all functionals of a
pair see the same local time).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spider import SpiderConfig, SpiderPath, distance_arrays, simulate_bms_lattice


class HorizonExhausted(ValueError):
    """The fine path ended before the requested number of embedded steps."""


@dataclass(frozen=True)
class CoupledPair:
    bm_path: SpiderPath
    m: int  # fine steps per unit length
    tau_idx: np.ndarray  # fine-step index of tau_0 = 0, tau_1, ...
    embedded_walk: SpiderPath
    hit_idx: np.ndarray  # fine-step indices where the path sits on an integer site
    hit_code: np.ndarray  # site code at those steps (0 = body)
    marks: np.ndarray | None  # Exp(1) weight per hit, or None for plain counting

    @property
    def dt(self) -> float:
        return self.bm_path.time_scale

    @property
    def tau(self) -> np.ndarray:
        return self.tau_idx * self.dt

    @property
    def n_embedded(self) -> int:
        return self.embedded_walk.n_steps

    def site_code(self, x: int, leg: int | None = None) -> int:
        return site_code(self.bm_path.config.num_legs, x, leg)


def site_code(num_legs: int, x: int, leg: int | None = None) -> int:
    """Integer code of a site: 0 for the body, ``r (N+1) + leg`` otherwise.

    For two legs a signed ``x`` may be given instead of ``leg`` (negative
    values live on leg 2).
    """
    if x == 0:
        return 0
    if leg is None:
        if num_legs != 2:
            raise ValueError("leg is required when N != 2")
        leg, x = (1, x) if x > 0 else (2, -x)
    elif x < 0:
        raise ValueError("use a positive radius together with a leg")
    return int(x) * (num_legs + 1) + int(leg)


def _lattice_factor(step_scale: float) -> int:
    m = int(round(1.0 / step_scale))
    if m < 1 or abs(m * step_scale - 1.0) > 1e-9:
        raise ValueError("the lattice spacing must divide 1 exactly (dt = 1/m^2)")
    return m


def skorokhod_embed(bm_path: SpiderPath, n_steps: int | None = None, rng=None) -> CoupledPair:
    m = _lattice_factor(bm_path.step_scale)
    n_legs = bm_path.config.num_legs
    radii = bm_path.radii
    on_site = (radii & (m - 1)) == 0 if m & (m - 1) == 0 else radii % m == 0
    hit_idx = np.flatnonzero(on_site)
    hit_code = (radii[hit_idx] // m).astype(np.int64) * (n_legs + 1) + bm_path.legs[hit_idx]
    hit_code[radii[hit_idx] == 0] = 0
    moved = np.flatnonzero(hit_code[1:] != hit_code[:-1]) + 1
    tau_pos = np.concatenate(([0], moved))
    if n_steps is not None:
        if tau_pos.size < n_steps + 1:
            raise HorizonExhausted(
                f"only {tau_pos.size - 1} embedded steps fit in the horizon, need {n_steps}")
    codes = hit_code[tau_pos]
    walk_r = codes // (n_legs + 1)
    walk_l = np.where(codes == 0, 0, codes % (n_legs + 1)).astype(np.int8)
    walk = SpiderPath(walk_l, walk_r, bm_path.config)
    marks = rng.standard_exponential(hit_idx.size) if rng is not None else None
    return CoupledPair(bm_path, m, hit_idx[tau_pos], walk, hit_idx, hit_code, marks)


def build_coupled_pair(config: SpiderConfig, n_steps: int, m: int, rng,
                       refine: bool = True) -> CoupledPair:
    """Fine lattice path long enough (8 standard deviations of ``tau_n``) for ``n_steps``."""
    horizon = n_steps + 8.0 * math.sqrt(n_steps) + 16.0
    path = simulate_bms_lattice(config, horizon, 1.0 / (m * m), rng)
    return skorokhod_embed(path, n_steps, rng if refine else None)


def _weights(pair: CoupledPair) -> np.ndarray:
    if pair.marks is None:
        return np.ones(pair.hit_idx.size)
    return pair.marks


def extract_a_increments(pair: CoupledPair, x: int, leg: int | None = None) -> np.ndarray:
    """Brownian local time at ``x`` between each embedded visit to ``x`` and the next step."""
    if x == 0:
        raise ValueError("x must be nonzero")
    code = pair.site_code(x, leg)
    walk_codes = pair.hit_code[np.searchsorted(pair.hit_idx, pair.tau_idx)]
    nu = np.flatnonzero(walk_codes[:-1] == code)
    if nu.size == 0:
        return np.zeros(0)
    sel = pair.hit_code == code
    idx = pair.hit_idx[sel]
    cum = np.concatenate(([0.0], np.cumsum(_weights(pair)[sel])))
    lo = np.searchsorted(idx, pair.tau_idx[nu], side="left")
    hi = np.searchsorted(idx, pair.tau_idx[nu + 1], side="left")
    return (cum[hi] - cum[lo]) / pair.m


def _check_n(pair: CoupledPair, n: int) -> None:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > pair.n_embedded or n * pair.m * pair.m > pair.bm_path.n_steps:
        raise HorizonExhausted(f"pair does not cover n = {n}")


def discrepancy_walk(pair: CoupledPair, n: int) -> float:
    """``max_{k<=n}`` spider distance between the embedded walk and the path at time ``k``."""
    _check_n(pair, n)
    if n == 0:
        return 0.0
    k = np.arange(n + 1)
    fine = k * pair.m * pair.m
    w = pair.embedded_walk
    d = distance_arrays(w.legs[: n + 1], w.radii[: n + 1] * pair.m,
                        pair.bm_path.legs[fine], pair.bm_path.radii[fine])
    return float(d.max()) / pair.m


def discrepancy_localtime(pair: CoupledPair, n: int) -> float:
    """``max_{k<=n} max_x |xi(x, k) - eta(x, k)|`` over integer sites."""
    _check_n(pair, n)
    if n == 0:
        return 0.0
    mm = pair.m * pair.m
    w = pair.embedded_walk
    n_legs = pair.bm_path.config.num_legs
    wcode = np.where(w.legs[1 : n + 1] == 0, 0,
                     w.radii[1 : n + 1].astype(np.int64) * (n_legs + 1) + w.legs[1 : n + 1])
    keep = pair.hit_idx < n * mm
    bcode = pair.hit_code[keep]
    bk = pair.hit_idx[keep] // mm + 1
    codes = np.concatenate((wcode, bcode))
    ks = np.concatenate((np.arange(1, n + 1), bk))
    vals = np.concatenate((np.ones(n), -_weights(pair)[keep] / pair.m))
    order = np.lexsort((ks, codes))
    codes, ks, vals = codes[order], ks[order], vals[order]
    cum = np.cumsum(vals)
    start = np.flatnonzero(np.concatenate(([True], codes[1:] != codes[:-1])))
    before = np.concatenate(([0.0], cum))[start]
    group = np.cumsum(np.concatenate(([True], codes[1:] != codes[:-1]))) - 1
    within = cum - before[group]
    last = np.concatenate(((codes[1:] != codes[:-1]) | (ks[1:] != ks[:-1]), [True]))
    return float(np.max(np.abs(within[last])))


def discrepancy_occupation(pair: CoupledPair, n: int) -> float:
    """``max_j |T(j, n) - Z(j, n)|`` with ``Z`` the lattice time spent on leg ``j``."""
    _check_n(pair, n)
    if n == 0:
        return 0.0
    n_legs = pair.bm_path.config.num_legs
    t = np.bincount(pair.embedded_walk.legs[1 : n + 1], minlength=n_legs + 1)[1:]
    mm = pair.m * pair.m
    fine = pair.bm_path.legs[1 : n * mm + 1]
    z = np.array([np.count_nonzero(fine == j) for j in range(1, n_legs + 1)]) / mm
    return float(np.max(np.abs(t - z)))


def discrepancy_records(pair: CoupledPair, sizes) -> list:
    """One ``(n, walk, localtime, occupation)`` record per size."""
    return [
        (int(n), discrepancy_walk(pair, n), discrepancy_localtime(pair, n),
         discrepancy_occupation(pair, n))
        for n in sizes
    ]
