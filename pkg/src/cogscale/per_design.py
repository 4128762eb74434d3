"""Primary-exclusive-region radius design under a primary outage constraint.

The outage event at the PER-edge receiver is
``log2(1 + P0 R0**-alpha / (I0 + sigma2)) <= C0``, equivalently
``I0 >= P0 R0**-alpha / (2**C0 - 1) - sigma2``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import optimize

from .bounds import INF, upper_bound
from .core import (
    DomainError,
    InfeasibleError,
    NetworkConfig,
    UnsupportedError,
    is_integer,
    outage_rate,
)
from .interference import primary_rx_interference_draw
from .streams import pmap, substream

BISECTION_XTOL = 1e-9


class Binding(str, enum.Enum):
    NOISE = "Noise"
    MARKOV = "MarkovBound"
    IMPLICIT = "Implicit"


@dataclass(frozen=True)
class PerSolution:
    r0_interference_free: float
    r0_markov: float
    r0_implicit: Optional[float]
    binding_constraint: Binding

    @property
    def design_radius(self) -> float:
        return self.r0_implicit if self.r0_implicit is not None else self.r0_markov


def _snr_margin(config: NetworkConfig) -> float:
    c0 = outage_rate(config)
    if c0 <= 0:
        raise DomainError("outage rate C0 must be positive")
    return 2.0 ** c0 - 1.0


def interference_free_radius(config: NetworkConfig) -> float:
    """Largest R0 whose PER-edge receiver meets the rate target on noise alone."""
    margin = _snr_margin(config)
    return (config.primary_power_P0 / (config.noise_sigma2 * margin)) ** (1 / config.path_loss_alpha)


def markov_radius(config: NetworkConfig) -> float:
    """Radius from Markov's inequality with the infinite-network upper bound on mean interference."""
    beta = config.outage_prob_beta
    if not 0 < beta < 1:
        raise DomainError("beta must lie in (0, 1)")
    if config.path_loss_alpha <= 2:
        raise DomainError("path loss must exceed 2")
    margin = _snr_margin(config)
    mean_ub = upper_bound(config, INF)
    rhs = config.primary_power_P0 / margin / (mean_ub / beta + config.noise_sigma2)
    return rhs ** (1 / config.path_loss_alpha)


def _require_alpha4(config: NetworkConfig):
    if config.gamma != 0 or not is_integer(config.path_loss_alpha) or round(config.path_loss_alpha) != 4:
        raise UnsupportedError("the implicit radius equation needs alpha = 4 and constant power")


def implicit_sides(config: NetworkConfig, r0):
    """Left and right sides of the alpha = 4 radius inequality (lhs <= rhs is feasible)."""
    r0 = np.asarray(r0, dtype=float)
    eps_p = config.guard_band_eps_p
    lhs = (r0 + eps_p) ** 2 / (eps_p ** 2 * (2 * r0 + eps_p) ** 2)
    scale = config.outage_prob_beta / (config.density_lambda * math.pi * config.cognitive_power_P)
    rhs = scale * (config.primary_power_P0 / r0 ** 4 / _snr_margin(config) - config.noise_sigma2)
    return lhs, rhs


def implicit_radius_alpha4(config: NetworkConfig, scan_points: int = 2000) -> float:
    """Largest R0 satisfying the exact-mean (alpha = 4) outage inequality.

    The gap ``rhs - lhs`` is positive near 0 and negative at the
    interference-free radius. A log-spaced scan locates the last sign change
    below that radius, which is then bisected. If the scan finds several
    crossings a warning is issued and the largest is returned.
    """
    _require_alpha4(config)
    r_u = interference_free_radius(config)

    def gap(r):
        lhs, rhs = implicit_sides(config, r)
        return rhs - lhs

    lo = r_u * 1e-9
    grid = np.geomspace(lo, r_u, scan_points)
    g = gap(grid)
    if not np.any(g > 0):
        raise InfeasibleError("no R0 satisfies the outage inequality")
    sign_change = np.nonzero((g[:-1] > 0) & (g[1:] <= 0))[0]
    if len(sign_change) == 0:
        raise InfeasibleError("no sign change of the outage inequality below R0^u")
    if len(sign_change) > 1:
        warnings.warn("several feasible-radius crossings; returning the largest", RuntimeWarning)
    i = sign_change[-1]
    return float(optimize.bisect(lambda r: float(gap(r)), grid[i], grid[i + 1],
                                 xtol=BISECTION_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500))


def solve(config: NetworkConfig, noise_tol: float = 0.01) -> PerSolution:
    """All radius solutions; ``Noise`` binds when the design radius is within ``noise_tol`` of R0^u."""
    r_u = interference_free_radius(config)
    r_m = markov_radius(config)
    r_i = None
    try:
        _require_alpha4(config)
    except UnsupportedError:
        pass
    else:
        r_i = implicit_radius_alpha4(config)
    design = r_i if r_i is not None else r_m
    if design >= (1 - noise_tol) * r_u:
        binding = Binding.NOISE
    else:
        binding = Binding.IMPLICIT if r_i is not None else Binding.MARKOV
    return PerSolution(r_u, r_m, r_i, binding)


def required_primary_power(config: NetworkConfig, r0: float, variant: str = "auto") -> float:
    """Smallest P0 that makes ``r0`` feasible.

    ``markov`` inverts the Markov-bound radius, ``implicit`` the alpha = 4
    inequality. Both are linear in P0, so the inversion is closed form.
    """
    variant = _pick_variant(config, variant)
    margin = _snr_margin(config)
    if variant == "markov":
        interference = upper_bound(config.with_(per_radius_R0=r0), INF) / config.outage_prob_beta
    else:
        lhs, _ = implicit_sides(config, r0)
        interference = config.density_lambda * math.pi * config.cognitive_power_P * float(lhs) \
            / config.outage_prob_beta
    return r0 ** config.path_loss_alpha * margin * (interference + config.noise_sigma2)


def _pick_variant(config: NetworkConfig, variant: str) -> str:
    if variant == "auto":
        alpha4 = config.gamma == 0 and is_integer(config.path_loss_alpha) and round(config.path_loss_alpha) == 4
        return "implicit" if alpha4 else "markov"
    if variant not in ("markov", "implicit"):
        raise ValueError("variant must be auto, markov or implicit")
    if variant == "implicit":
        _require_alpha4(config)
    return variant


def design_radius(config: NetworkConfig, variant: str = "auto") -> float:
    variant = _pick_variant(config, variant)
    return implicit_radius_alpha4(config) if variant == "implicit" else markov_radius(config)


@dataclass
class TradeoffCurve:
    sweep: str
    variant: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    missing: list[tuple] = field(default_factory=list)

    def series(self, key) -> list[tuple]:
        return [r for r in self.rows if r[0] == key]


def tradeoff_curve(config: NetworkConfig, sweep: str, grid: Sequence[float],
                   series: Iterable[float], variant: str = "auto") -> TradeoffCurve:
    """Design trade-off tables.

    ``sweep="R0_vs_eps_p"``: for each outage rate C0 in ``series`` and each
    guard band in ``grid``, the feasible radius; rows ``(C0, eps_p, R0)``.

    ``sweep="P0_vs_R0"``: for each guard band in ``series`` and each radius
    in ``grid``, the required primary power; rows ``(eps_p, R0, P0)``.

    Infeasible points go to ``missing`` instead of aborting the sweep.
    """
    if not len(grid):
        raise ValueError("grid must be nonempty")
    chosen = _pick_variant(config, variant)
    if sweep == "R0_vs_eps_p":
        curve = TradeoffCurve(sweep, chosen, ("C0", "eps_p", "R0"))
        for c0 in series:
            for eps_p in grid:
                cfg = config.with_(outage_rate_C0=float(c0), eta_fraction=None,
                                   guard_band_eps_p=float(eps_p))
                try:
                    curve.rows.append((float(c0), float(eps_p), design_radius(cfg, chosen)))
                except (InfeasibleError, DomainError):
                    curve.missing.append((float(c0), float(eps_p)))
    elif sweep == "P0_vs_R0":
        curve = TradeoffCurve(sweep, chosen, ("eps_p", "R0", "P0"))
        for eps_p in series:
            cfg = config.with_(guard_band_eps_p=float(eps_p))
            for r0 in grid:
                try:
                    curve.rows.append((float(eps_p), float(r0),
                                       required_primary_power(cfg, float(r0), chosen)))
                except (InfeasibleError, DomainError):
                    curve.missing.append((float(eps_p), float(r0)))
    else:
        raise ValueError("sweep must be R0_vs_eps_p or P0_vs_R0")
    return curve


# ------------------------------------------------------------ outage check

@dataclass(frozen=True)
class OutageEstimate:
    r0: float
    outage_prob: float
    stderr: float
    n_draws: int
    threshold: float


def _outage_trial(args) -> float:
    cfg, seed, i = args
    return primary_rx_interference_draw(cfg, substream(seed, i))


def empirical_outage(config: NetworkConfig, r0: float, n_draws: int, rng_seed: int,
                     workers: int = 1) -> OutageEstimate:
    """Fraction of Poisson placements that put the PER-edge receiver in outage at radius ``r0``."""
    cfg = config.with_(per_radius_R0=float(r0))
    if cfg.network_radius_R <= r0 + cfg.guard_band_eps_p:
        raise DomainError("network radius too small for this R0")
    threshold = cfg.primary_power_P0 * r0 ** (-cfg.path_loss_alpha) / _snr_margin(cfg) \
        - cfg.noise_sigma2
    draws = np.asarray(pmap(_outage_trial, [(cfg, rng_seed, i) for i in range(n_draws)], workers))
    rate = np.log2(1 + cfg.primary_power_P0 * r0 ** (-cfg.path_loss_alpha)
                   / (draws + cfg.noise_sigma2))
    out = rate <= outage_rate(cfg)
    p = float(out.mean())
    return OutageEstimate(float(r0), p, math.sqrt(max(p * (1 - p), 0.0) / n_draws),
                          n_draws, float(threshold))
