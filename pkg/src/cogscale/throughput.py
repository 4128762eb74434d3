"""Monte Carlo checks of the linear sum-rate scaling law and its concentration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import tx_power
from .core import NetworkConfig
from .geometry import NodePlacement, place_network
from .interference import (
    DEFAULT_THETA_GRID,
    DEFAULT_TRUNCATION_K,
    avg_cog_interference,
    primary_interference_bound,
)
from .streams import pmap, substream

DEFAULT_N_GRID = (50, 100, 200, 400, 800, 1600)


@dataclass(frozen=True)
class LinkBudget:
    """Per-pair received signal, cognitive interference and primary interference."""

    signal: np.ndarray
    cognitive_interference: np.ndarray
    primary_interference: np.ndarray
    noise: float

    @property
    def sinr(self) -> np.ndarray:
        return self.signal / (self.cognitive_interference + self.primary_interference + self.noise)


def link_budget(placement: NodePlacement, config: NetworkConfig) -> LinkBudget:
    tx, rx = placement.cognitive_tx, placement.cognitive_rx
    alpha = config.path_loss_alpha
    n = len(tx)
    if n == 0:
        empty = np.zeros(0)
        return LinkBudget(empty, empty, empty, config.noise_sigma2)
    powers = tx_power(np.hypot(tx[:, 0], tx[:, 1]), config)
    dx = rx[:, None, 0] - tx[None, :, 0]
    dy = rx[:, None, 1] - tx[None, :, 1]
    gain = (dx * dx + dy * dy) ** (-alpha / 2)
    received = gain * powers[None, :]
    signal = received.diagonal().copy()
    np.fill_diagonal(received, 0.0)
    cognitive = received.sum(axis=1)
    ptx = placement.primary_tx
    if len(ptx):
        px = rx[:, None, 0] - ptx[None, :, 0]
        py = rx[:, None, 1] - ptx[None, :, 1]
        primary = config.primary_power_P0 * ((px * px + py * py) ** (-alpha / 2)).sum(axis=1)
    else:
        primary = np.zeros(n)
    return LinkBudget(signal, cognitive, primary, config.noise_sigma2)


def per_user_rates(placement: NodePlacement, config: NetworkConfig) -> np.ndarray:
    """Rate of every cognitive pair, ``log(1 + SINR)`` in base ``config.log_base``."""
    sinr = link_budget(placement, config).sinr
    return np.log1p(sinr) / math.log(config.log_base)


def network_radius_for(config: NetworkConfig, n: int) -> float:
    """Radius keeping density fixed: ``sqrt(n / (lambda pi) + (R0 + eps_p)**2)``."""
    excl = config.per_radius_R0 + config.guard_band_eps_p
    return math.sqrt(n / (config.density_lambda * math.pi) + excl * excl)


def rate_lower_bound(config: NetworkConfig, truncation_K: int = DEFAULT_TRUNCATION_K,
                     theta_grid_size: int = DEFAULT_THETA_GRID) -> float:
    """Per-user rate lower bound in the ``n -> inf`` limit.

    Constant power: ``log(1 + P_rmin / (sigma2 + I_P + I_inf))`` with
    ``P_rmin = P / D_max**alpha``. Distance-scaled power:
    ``log(1 + P_c / (K_d**alpha (I_P + sigma2 + I_inf)))``.
    """
    i_p = primary_interference_bound(config, truncation_K, theta_grid_size)
    i_inf = avg_cog_interference(config, math.inf)
    alpha = config.path_loss_alpha
    if config.scaled:
        snr = config.cognitive_power_Pc / (config.pairing_coefficient ** alpha
                                           * (i_p + config.noise_sigma2 + i_inf))
    else:
        p_rmin = config.cognitive_power_P / config.pairing_coefficient ** alpha
        snr = p_rmin / (config.noise_sigma2 + i_p + i_inf)
    return math.log1p(snr) / math.log(config.log_base)


@dataclass(frozen=True)
class TrialRates:
    n: int
    trial: int
    mean_rate: float
    var_rate: float


def _trial(args) -> TrialRates:
    config, n, seed, trial = args
    cfg = config.with_(network_radius_R=network_radius_for(config, n))
    placement = place_network(cfg, n, substream(seed, n, trial))
    rates = per_user_rates(placement, cfg)
    return TrialRates(n, trial, float(rates.mean()), float(rates.var(ddof=1)) if n > 1 else 0.0)


def _run_trials(config, n_values, trials, rng_seed, workers) -> dict[int, list[TrialRates]]:
    config.require_valid()
    tasks = [(config, int(n), rng_seed, t) for n in n_values for t in range(trials)]
    results = pmap(_trial, tasks, workers)
    out: dict[int, list[TrialRates]] = {int(n): [] for n in n_values}
    for r in results:
        out[r.n].append(r)
    return out


@dataclass(frozen=True)
class ScalingPoint:
    n: int
    mean_per_user_rate: float
    sum_rate: float
    std_across_seeds: float
    lower_bound_C1bar: float
    seeds_used: int

    @property
    def filling_constant(self) -> float:
        """Empirical ``K`` in ``E[S_n] = n K C1bar``."""
        return self.mean_per_user_rate / self.lower_bound_C1bar


@dataclass(frozen=True)
class ScalingRun:
    n_values: tuple[int, ...]
    per_n: tuple[ScalingPoint, ...]
    per_seed: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def T(self) -> np.ndarray:
        return np.array([p.mean_per_user_rate for p in self.per_n])

    @property
    def S(self) -> np.ndarray:
        return np.array([p.sum_rate for p in self.per_n])

    def flatness(self) -> float:
        """max/min ratio of the mean per-user rate across n."""
        return float(self.T.max() / self.T.min())

    def sum_rate_slope(self) -> float:
        return float(np.polyfit(np.array(self.n_values, dtype=float), self.S, 1)[0])


def scaling_experiment(config: NetworkConfig, n_values: Sequence[int] = DEFAULT_N_GRID,
                       seeds_per_n: int = 20, rng_seed: int = 0, workers: int = 1,
                       truncation_K: int = DEFAULT_TRUNCATION_K,
                       theta_grid_size: int = DEFAULT_THETA_GRID) -> ScalingRun:
    """Mean per-user rate versus n at fixed density (network radius grows with n)."""
    n_values = tuple(int(n) for n in n_values)
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    c1 = rate_lower_bound(config, truncation_K, theta_grid_size)
    by_n = _run_trials(config, n_values, seeds_per_n, rng_seed, workers)
    points = []
    per_seed = {}
    for n in n_values:
        t = np.array([r.mean_rate for r in by_n[n]])
        per_seed[n] = t
        mean_t = float(t.mean())
        std = float(t.std(ddof=1)) if len(t) > 1 else 0.0
        points.append(ScalingPoint(n, mean_t, n * mean_t, std, c1, len(t)))
    return ScalingRun(n_values, tuple(points), per_seed)


@dataclass(frozen=True)
class ConcentrationRow:
    n: int
    mean_rate: float
    std_rate: float
    p_delta: float
    var_rate: float
    k2_proxy: float


@dataclass
class ConcentrationTable:
    delta: float
    rows: list[ConcentrationRow]
    per_trial: dict[int, np.ndarray] = field(repr=False, default_factory=dict)

    def p_delta(self, delta: float) -> list[float]:
        out = []
        for row in self.rows:
            s = self.per_trial[row.n]
            out.append(float(np.mean(np.abs(s - s.mean()) >= delta)))
        return out

    def decay_slope(self) -> float:
        """Least-squares slope of log std(S_n / n) against log n."""
        n = np.array([r.n for r in self.rows], dtype=float)
        s = np.array([r.std_rate for r in self.rows])
        return float(np.polyfit(np.log(n), np.log(s), 1)[0])


def concentration_experiment(config: NetworkConfig, n_values: Sequence[int] = DEFAULT_N_GRID,
                             trials: int = 100, delta: Optional[float] = None,
                             rng_seed: int = 0, workers: int = 1) -> ConcentrationTable:
    """Spread of the realized per-user throughput ``S_n / n`` over independent placements.

    ``delta`` defaults to a tenth of the mean per-user rate at the smallest n.
    ``p_delta`` is the fraction of trials whose ``S_n / n`` deviates from the
    across-trial mean by at least ``delta``.
    """
    if trials < 100:
        raise ValueError("concentration needs at least 100 trials per n")
    n_values = tuple(int(n) for n in n_values)
    by_n = _run_trials(config, n_values, trials, rng_seed, workers)
    per_trial = {n: np.array([r.mean_rate for r in by_n[n]]) for n in n_values}
    if delta is None:
        delta = 0.1 * float(per_trial[n_values[0]].mean())
    rows = []
    for n in n_values:
        s = per_trial[n]
        within = np.array([r.var_rate for r in by_n[n]])
        # total variance of C_i = mean within-trial variance + variance of trial means
        var_rate = float(within.mean() + s.var(ddof=1))
        rows.append(ConcentrationRow(
            n=n,
            mean_rate=float(s.mean()),
            std_rate=float(s.std(ddof=1)),
            p_delta=float(np.mean(np.abs(s - s.mean()) >= delta)),
            var_rate=var_rate,
            k2_proxy=float(n * s.var(ddof=1)),
        ))
    return ConcentrationTable(float(delta), rows, per_trial)
