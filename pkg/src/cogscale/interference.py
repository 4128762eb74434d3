"""Interference powers: Monte Carlo sums, closed-form averages and the hexagonal lattice sum."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import tx_power
from .core import DomainError, NetworkConfig
from .geometry import (
    NodePlacement,
    SQRT3,
    hex_lattice,
    sample_annulus,
    sample_cognitive_tx,
)
from .streams import pmap, substream

DEFAULT_TRUNCATION_K = 200
DEFAULT_THETA_GRID = 720

ROLE_FILTERS = ("cognitive", "primary", "both")


class RunningStats:
    """Welford single-pass mean/variance accumulator."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def push(self, x: float):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    def extend(self, xs):
        for x in xs:
            self.push(float(x))
        return self

    @property
    def variance(self) -> float:
        return self._m2 / (self.count - 1) if self.count > 1 else 0.0


@dataclass(frozen=True)
class InterferenceEstimate:
    mean: float
    variance: float
    stderr: float
    n_trials: int
    seed: Optional[int]
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_samples(cls, samples, seed=None, keep=True) -> "InterferenceEstimate":
        acc = RunningStats().extend(samples)
        n = acc.count
        stderr = math.sqrt(acc.variance / n) if n else 0.0
        arr = np.asarray(samples, dtype=float) if keep else None
        return cls(max(acc.mean, 0.0), acc.variance, stderr, n, seed, arr)

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr


@dataclass(frozen=True)
class LatticeSumResult:
    value: float
    truncation_K: int
    tail_bound: float
    theta: float


# ---------------------------------------------------------------- Monte Carlo

def interference_from(point, tx: np.ndarray, powers, alpha: float, protect: float = 0.0) -> float:
    """Sum of ``powers[i] / |point - tx[i]|**alpha``.

    Raises DomainError if any transmitter sits closer than ``protect`` (or at
    distance zero).
    """
    if len(tx) == 0:
        return 0.0
    p = np.asarray(point, dtype=float)
    d = np.hypot(tx[:, 0] - p[0], tx[:, 1] - p[1])
    dmin = d.min()
    if dmin <= 0 or dmin < protect * (1 - 1e-12):
        raise DomainError(f"transmitter at distance {dmin:.6g} violates protected radius {protect}")
    return float(np.sum(np.asarray(powers, dtype=float) * d ** (-alpha)))


def mc_interference_at(point, placement: NodePlacement, config: NetworkConfig,
                       role_filter: str = "both", exclude: Optional[int] = None,
                       protect: Optional[float] = None) -> float:
    """Interference power at ``point`` from the transmitters of a placement.

    ``role_filter`` picks cognitive transmitters, primary transmitters or
    both; ``exclude`` drops one cognitive transmitter (the receiver's own).
    ``protect`` defaults to the cognitive-receiver radius ``eps_c``.
    """
    if role_filter not in ROLE_FILTERS:
        raise ValueError(f"role_filter must be one of {ROLE_FILTERS}")
    protect = config.rx_protect_eps_c if protect is None else protect
    alpha = config.path_loss_alpha
    total = 0.0
    if role_filter in ("cognitive", "both") and placement.n:
        tx = placement.cognitive_tx
        if exclude is not None:
            tx = np.delete(tx, exclude, axis=0)
        if len(tx):
            powers = tx_power(np.hypot(tx[:, 0], tx[:, 1]), config)
            total += interference_from(point, tx, powers, alpha, protect)
    if role_filter in ("primary", "both") and len(placement.primary_tx):
        ptx = placement.primary_tx
        total += interference_from(point, ptx, np.full(len(ptx), config.primary_power_P0),
                                   alpha, protect)
    return total


def avg_cog_interference(config: NetworkConfig, R: Optional[float] = None) -> float:
    """Worst-case mean interference at a central cognitive receiver.

    Transmitters fill the annulus ``eps_c <= r <= R`` around the receiver at
    density ``lambda``. ``R = inf`` gives the limiting constant. In
    distance-scaled mode the exponent ``alpha - 2`` becomes ``alpha - 2 - gamma``.
    """
    R = config.network_radius_R if R is None else R
    eps_c = config.rx_protect_eps_c
    if R < eps_c:
        raise DomainError("R must be at least eps_c")
    k = config.path_loss_alpha - 2 - config.gamma
    if k <= 0:
        raise DomainError("alpha - 2 - gamma must be positive")
    coef = 2 * math.pi * config.density_lambda * config.power_coefficient / k
    tail = 0.0 if math.isinf(R) else R ** (-k)
    return coef * (eps_c ** (-k) - tail)


def _central_trial(args) -> float:
    config, seed, i, R = args
    rng = substream(seed, i)
    eps_c = config.rx_protect_eps_c
    count = rng.poisson(config.density_lambda * math.pi * (R * R - eps_c * eps_c))
    pts = sample_annulus(count, eps_c, R, rng)
    if count == 0:
        return 0.0
    r = np.hypot(pts[:, 0], pts[:, 1])
    return float(np.sum(tx_power(r, config) * r ** (-config.path_loss_alpha)))


def mc_central_rx_interference(config: NetworkConfig, n_trials: int, rng_seed: int,
                               R: Optional[float] = None, workers: int = 1) -> InterferenceEstimate:
    """Monte Carlo counterpart of :func:`avg_cog_interference`."""
    R = config.network_radius_R if R is None else R
    draws = pmap(_central_trial, [(config, rng_seed, i, R) for i in range(n_trials)], workers)
    return InterferenceEstimate.from_samples(draws, seed=rng_seed)


def primary_rx_interference_draw(config: NetworkConfig, rng, n: Optional[int] = None) -> float:
    """Interference at the worst-case primary receiver ``(R0, 0)`` for one placement."""
    tx, _ = sample_cognitive_tx(config, n, rng)
    if len(tx) == 0:
        return 0.0
    r = np.hypot(tx[:, 0], tx[:, 1])
    return interference_from((config.per_radius_R0, 0.0), tx, tx_power(r, config),
                             config.path_loss_alpha, protect=config.guard_band_eps_p)


def _primary_trial(args) -> float:
    config, seed, i, n = args
    return primary_rx_interference_draw(config, substream(seed, i), n)


def mc_primary_rx_interference(config: NetworkConfig, n_trials: int, rng_seed: int,
                               n: Optional[int] = None, workers: int = 1) -> InterferenceEstimate:
    """Monte Carlo estimate of the mean interference at the PER-edge primary receiver.

    Only the transmitters matter for this quantity, so receivers are not drawn.
    ``n=None`` uses Poisson placement; ``n=0`` gives the empty network.
    """
    config.require_valid()
    if config.primary_layout != "single":
        raise DomainError("primary receiver interference needs a single central PER")
    draws = pmap(_primary_trial, [(config, rng_seed, i, n) for i in range(n_trials)], workers)
    return InterferenceEstimate.from_samples(draws, seed=rng_seed)


# ---------------------------------------------------------------- lattice sum

@functools.lru_cache(maxsize=16)
def _lattice_points(K: int) -> np.ndarray:
    return hex_lattice(K).points


def _generic_tail(a: float, b: float, c: float, d: float, alpha: float) -> float:
    """Upper bound on ``sum_{k,m>=0} [(a k + b)**2 + (c m + d)**2]**(-alpha/2)``.

    Needs ``a, c > 0`` and ``b + d > 0``; uses ``x**2 + y**2 >= (x+y)**2 / 2``
    and the integral bound on a decreasing series, twice.
    """
    s = b + d
    if a <= 0 or c <= 0 or s <= 0:
        raise ValueError("generic tail bound needs a, c > 0 and b + d > 0")
    return 2 ** (alpha / 2) * (
        s ** -alpha
        + s ** (1 - alpha) / ((alpha - 1) * c)
        + (s ** (1 - alpha) + s ** (2 - alpha) / ((alpha - 2) * c)) / ((alpha - 1) * a)
    )


def lattice_tail_bound(theta: float, eps_c: float, alpha: float, K: int) -> float:
    """Bound on the part of the lattice sum outside the index box ``|k|, |m| <= K``.

    Every omitted point has ``|k| > K`` or ``|m| > K``. Each such strip is
    split by the signs of ``k`` and ``m`` into quadrant sums whose
    coordinates are arithmetic progressions ``a j + b`` and ``c i + d``,
    each bounded with :func:`_generic_tail`. Overlaps only loosen the bound.
    """
    x0 = eps_c * math.cos(theta)
    y0 = eps_c * math.sin(theta)
    a, c = 2 * SQRT3, 2.0
    total = 0.0
    # (shift_x, shift_y) of each sublattice: x = a k + sx - x0, y = c m + sy - y0
    for sx, sy in ((0.0, 0.0), (SQRT3, 1.0)):
        # offsets of |x| for k >= K+1 and k <= -(K+1); for k >= 0 and k <= -1
        x_far = (a * (K + 1) + sx - x0, a * (K + 1) - sx + x0)
        x_all = (sx - x0, a - sx + x0)
        y_far = (c * (K + 1) + sy - y0, c * (K + 1) - sy + y0)
        y_all = (sy - y0, c - sy + y0)
        for bx in x_far:
            for dy in y_all:
                total += _generic_tail(a, bx, c, dy, alpha)
        for dy in y_far:
            for bx in x_all:
                total += _generic_tail(a, bx, c, dy, alpha)
    return total


def _lattice_values(thetas: np.ndarray, eps_c: float, alpha: float, K: int,
                    include_origin: bool) -> np.ndarray:
    pts = _lattice_points(K)
    if not include_origin:
        pts = pts[np.any(pts != 0.0, axis=1)]
    px = pts[:, 0]
    py = pts[:, 1]
    out = np.empty(len(thetas))
    half = -alpha / 2.0
    block = max(1, 4_000_000 // len(pts))
    for start in range(0, len(thetas), block):
        th = thetas[start:start + block]
        dx = px[None, :] - eps_c * np.cos(th)[:, None]
        dy = py[None, :] - eps_c * np.sin(th)[:, None]
        terms = (dx * dx + dy * dy) ** half
        # the nearest point can dominate by many orders; add it last
        rows = np.arange(len(th))
        top = terms.argmax(axis=1)
        big = terms[rows, top].copy()
        terms[rows, top] = 0.0
        out[start:start + block] = big + terms.sum(axis=1)
    return out


def _check_lattice_args(eps_c: float, alpha: float, K: int):
    if not 0 < eps_c < 1:
        raise DomainError("eps_c must lie in (0, 1) in units of R0")
    if alpha <= 2:
        raise DomainError("path loss must exceed 2")
    if K < 1:
        raise DomainError("truncation_K must be >= 1")


def lattice_interference(theta: float, eps_c: float, alpha: float,
                         truncation_K: int = DEFAULT_TRUNCATION_K,
                         include_origin: bool = True) -> LatticeSumResult:
    """Truncated hexagonal-lattice interference at angle ``theta`` on the ``eps_c`` circle.

    Units are normalized so that ``R0 = 1`` and each primary transmits unit
    power; multiply by ``P0 / R0**alpha`` (and pass ``eps_c / R0``) for
    physical units. ``include_origin=False`` drops the primary at the origin.
    """
    _check_lattice_args(eps_c, alpha, truncation_K)
    value = _lattice_values(np.array([theta], dtype=float), eps_c, alpha, truncation_K,
                            include_origin)[0]
    tail = lattice_tail_bound(theta, eps_c, alpha, truncation_K)
    return LatticeSumResult(float(value), truncation_K, tail, float(theta))


def lattice_scan(thetas, eps_c: float, alpha: float,
                 truncation_K: int = DEFAULT_TRUNCATION_K,
                 include_origin: bool = True) -> list[LatticeSumResult]:
    _check_lattice_args(eps_c, alpha, truncation_K)
    thetas = np.asarray(thetas, dtype=float)
    vals = _lattice_values(thetas, eps_c, alpha, truncation_K, include_origin)
    return [LatticeSumResult(float(v), truncation_K,
                             lattice_tail_bound(t, eps_c, alpha, truncation_K), float(t))
            for t, v in zip(thetas, vals)]


def theta_grid(size: int) -> np.ndarray:
    return np.arange(size) * (2 * math.pi / size)


@functools.lru_cache(maxsize=32)
def worst_case_primary_interference(eps_c: float, alpha: float,
                                    truncation_K: int = DEFAULT_TRUNCATION_K,
                                    theta_grid_size: int = DEFAULT_THETA_GRID,
                                    include_origin: bool = True) -> LatticeSumResult:
    """Maximum of the lattice sum over a uniform angle grid on ``[0, 2 pi)``.

    ``value`` is the grid maximum at angle ``theta``; ``tail_bound`` is the
    largest truncation tail over the grid, so ``value + tail_bound`` encloses
    the untruncated maximum on the grid.
    """
    if theta_grid_size < 1:
        raise DomainError("theta grid needs at least one point")
    scan = lattice_scan(theta_grid(theta_grid_size), eps_c, alpha, truncation_K, include_origin)
    best = max(scan, key=lambda s: s.value)
    worst_tail = max(s.tail_bound for s in scan)
    return LatticeSumResult(best.value, truncation_K, worst_tail, best.theta)


def primary_interference_bound(config: NetworkConfig,
                               truncation_K: int = DEFAULT_TRUNCATION_K,
                               theta_grid_size: int = DEFAULT_THETA_GRID) -> float:
    """Worst-case primary interference at a cognitive receiver, physical units.

    Scales the normalized lattice maximum by ``P0 / R0**alpha`` and adds its
    tail bound so the result stays an upper bound.
    """
    R0 = config.per_radius_R0
    res = worst_case_primary_interference(config.rx_protect_eps_c / R0, config.path_loss_alpha,
                                          truncation_K, theta_grid_size)
    return config.primary_power_P0 * (res.value + res.tail_bound) / R0 ** config.path_loss_alpha
