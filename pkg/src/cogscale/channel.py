"""Path-loss channel gains and the cognitive transmit-power law."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, NetworkConfig


@dataclass(frozen=True)
class LinkGain:
    distance: float
    power_gain: float


def power_gain(d, alpha: float):
    """Power gain ``d**-alpha`` of a path-loss-only link (channel constant 1).

    Works elementwise on arrays. Non-positive distances raise DomainError.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise DomainError("distance must be positive")
    g = d_arr ** (-float(alpha))
    return float(g) if g.ndim == 0 else g


def link(d: float, alpha: float) -> LinkGain:
    return LinkGain(float(d), power_gain(d, alpha))


def tx_power(r, config: NetworkConfig):
    """Transmit power of a cognitive node at distance ``r`` from the primary."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("radius must be positive")
    if config.scaled:
        p = config.cognitive_power_Pc * r_arr ** config.power_exponent_gamma
    else:
        p = np.full_like(r_arr, config.cognitive_power_P)
    return float(p) if p.ndim == 0 else p
