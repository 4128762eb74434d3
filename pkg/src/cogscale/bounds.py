"""Closed-form bounds on the mean interference at the PER-edge primary receiver.

All bounds depend on the path loss and the power law only through the
effective exponent ``alpha - gamma`` and the power coefficient (``P`` or
``P_c``), so distance-scaled power is the constant-power formula evaluated
at ``alpha - gamma``. The numerical double integral in
:func:`quadrature_oracle` keeps the true ``r**gamma`` weighting instead and
is the independent reference for every closed form here.

``R`` may be ``math.inf``; the limit formulas are then used directly rather
than evaluating the finite-R ones at a huge radius.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from scipy import integrate, special

from .core import (
    DomainError,
    NetworkConfig,
    NumericError,
    PowerMode,
    UnsupportedError,
    is_integer,
)

INF = math.inf

# integer alpha -> A(alpha) = integral of cos(phi)**(alpha-2) over [-pi/2, pi/2]
A_TABLE = {
    2: math.pi,
    3: 2.0,
    4: math.pi / 2,
    5: 4.0 / 3.0,
    6: 3 * math.pi / 8,
    7: 16.0 / 15.0,
    8: 5 * math.pi / 16,
    9: 32.0 / 35.0,
    10: 35 * math.pi / 128,
}


@dataclass(frozen=True)
class BoundSet:
    lb1: float
    lb2: float
    ub: float
    exact_alpha4: Optional[float]
    finite_R: bool
    gamma_used: float

    @property
    def best_lower(self) -> float:
        return max(self.lb1, self.lb2)

    def ordered(self, rel: float = 1e-9) -> bool:
        slack = rel * abs(self.ub)
        if self.lb1 > self.ub + slack or self.lb2 > self.ub + slack:
            return False
        if self.exact_alpha4 is not None:
            return self.best_lower - slack <= self.exact_alpha4 <= self.ub + slack
        return True


def a_alpha_quadrature(alpha: float) -> float:
    val, _ = integrate.quad(lambda p: math.cos(p) ** (alpha - 2), -math.pi / 2, math.pi / 2,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def a_alpha(alpha: float) -> float:
    """``A(alpha)``: table value for integer alpha in [2, 10], else adaptive quadrature."""
    if alpha < 2:
        raise DomainError("A(alpha) needs alpha >= 2")
    if is_integer(alpha) and 2 <= round(alpha) <= 10:
        return A_TABLE[int(round(alpha))]
    return a_alpha_quadrature(alpha)


def _effective(config: NetworkConfig) -> tuple[float, float]:
    k = config.effective_alpha - 2
    if k <= 0:
        raise DomainError("alpha - 2 - gamma must be positive")
    return k, config.power_coefficient


def _check_R(config: NetworkConfig, R: float):
    if not math.isinf(R) and R <= config.per_radius_R0 + config.guard_band_eps_p:
        raise DomainError("R must exceed R0 + eps_p")


def lower_bound_1(config: NetworkConfig, R: float = INF) -> float:
    """Lower bound from the ring ``2 R0 + eps_p <= d <= R - R0`` centred on the receiver.

    Returns 0 when that ring is empty.
    """
    _check_R(config, R)
    k, p = _effective(config)
    R0, eps_p = config.per_radius_R0, config.guard_band_eps_p
    inner = 2 * R0 + eps_p
    coef = 2 * math.pi * config.density_lambda * p / k
    if math.isinf(R):
        return coef * inner ** (-k)
    outer = R - R0
    if outer <= inner:
        return 0.0
    return coef * (inner ** (-k) - outer ** (-k))


def lower_bound_2(config: NetworkConfig, R: float = INF) -> float:
    """Two-half-plane lower bound, ``P lambda / (alpha-2) * (A/eps_p^(alpha-2) + ...)``."""
    _check_R(config, R)
    k, p = _effective(config)
    R0, eps_p = config.per_radius_R0, config.guard_band_eps_p
    A = a_alpha(config.effective_alpha)
    val = A * eps_p ** (-k) + A * (2 * R0 + eps_p) ** (-k)
    if not math.isinf(R):
        val -= math.pi * R ** (-k)
    return max(p * config.density_lambda / k * val, 0.0)


def upper_bound(config: NetworkConfig, R: float = INF) -> float:
    """Upper bound from the ring ``eps_p <= d <= R + R0`` centred on the receiver."""
    _check_R(config, R)
    k, p = _effective(config)
    R0, eps_p = config.per_radius_R0, config.guard_band_eps_p
    coef = 2 * math.pi * p * config.density_lambda / k
    tail = 0.0 if math.isinf(R) else (R + R0) ** (-k)
    return coef * (eps_p ** (-k) - tail)


def exact_interference_alpha4(config: NetworkConfig, R: float = INF) -> float:
    """Exact mean interference when the effective exponent ``alpha - gamma`` is 4."""
    if not is_integer(config.effective_alpha) or round(config.effective_alpha) != 4:
        raise UnsupportedError(
            "closed form exists only for alpha - gamma = 4; use quadrature_oracle instead"
        )
    _check_R(config, R)
    R0, eps_p = config.per_radius_R0, config.guard_band_eps_p
    near = (R0 + eps_p) ** 2 / (eps_p ** 2 * (2 * R0 + eps_p) ** 2)
    far = 0.0 if math.isinf(R) else R * R / (R * R - R0 * R0) ** 2
    return config.density_lambda * math.pi * config.power_coefficient * (near - far)


def _theta_integral_even(r: float, R0: float, half_alpha: int) -> float:
    """Closed form of the angle integral for even alpha.

    ``int_0^{2pi} (a + b cos x)^-(n+1) dx = 2 pi (a^2-b^2)^-(n+1)/2 P_n(a / sqrt(a^2-b^2))``
    with ``a = r^2 + R0^2``, ``b = -2 R0 r``; here ``a^2 - b^2 = (r^2 - R0^2)^2``.
    """
    a = r * r + R0 * R0
    root = r * r - R0 * R0
    n = half_alpha - 1
    return 2 * math.pi * root ** (-half_alpha) * special.eval_legendre(n, a / root)


def _theta_integral_numeric(r: float, R0: float, alpha: float) -> tuple[float, float]:
    a = r * r + R0 * R0
    b = 2 * R0 * r
    val, err = integrate.quad(lambda t: (a - b * math.cos(t)) ** (-alpha / 2), 0.0, math.pi,
                              epsabs=1e-13, epsrel=1e-12, limit=400)
    return 2 * val, 2 * err


def quadrature_oracle(config: NetworkConfig, R: Optional[float] = None,
                      epsabs: float = 1e-10, angle: str = "auto") -> float:
    """Numerical double integral for the mean interference at ``(R0, 0)``.

    Integrand ``lambda P_c r**(gamma+1) / d(r, theta)**alpha`` over
    ``R0 + eps_p <= r <= R``, ``0 <= theta < 2 pi``. The angle integral is
    closed form for even integer alpha and adaptive otherwise; the radial
    integral is always adaptive. ``angle="numeric"`` forces adaptive
    angle quadrature for every alpha. ``R = inf`` is accepted.
    """
    R = config.network_radius_R if R is None else R
    alpha = config.path_loss_alpha
    if alpha <= 2:
        raise DomainError("path loss must exceed 2")
    if config.effective_alpha <= 2:
        raise DomainError("alpha - 2 - gamma must be positive")
    _check_R(config, R)
    if config.density_lambda == 0:
        return 0.0
    R0 = config.per_radius_R0
    gamma = config.gamma
    even = angle != "numeric" and is_integer(alpha) and round(alpha) % 2 == 0
    inner_err = [0.0]

    def radial(r: float) -> float:
        if even:
            th = _theta_integral_even(r, R0, int(round(alpha)) // 2)
        else:
            th, e = _theta_integral_numeric(r, R0, alpha)
            inner_err[0] = max(inner_err[0], e)
        return r ** (gamma + 1) * th

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(radial, R0 + config.guard_band_eps_p, R,
                                      epsabs=epsabs, epsrel=1e-12, limit=400)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"radial quadrature did not converge: {exc}") from exc
    scale = config.density_lambda * config.power_coefficient
    achieved = scale * (err + inner_err[0] * (R if math.isfinite(R) else 1.0))
    if not math.isfinite(val) or err > max(epsabs, 1e-12 * abs(val)) * 10:
        raise NumericError(f"quadrature tolerance not met (achieved {achieved:.3g})")
    return scale * val


def bound_set(config: NetworkConfig, R: float = INF) -> BoundSet:
    exact = None
    if is_integer(config.effective_alpha) and round(config.effective_alpha) == 4:
        exact = exact_interference_alpha4(config, R)
    return BoundSet(
        lb1=lower_bound_1(config, R),
        lb2=lower_bound_2(config, R),
        ub=upper_bound(config, R),
        exact_alpha4=exact,
        finite_R=not math.isinf(R),
        gamma_used=config.gamma,
    )


def alpha4_reference(config: NetworkConfig, R: float = INF) -> float:
    """The alpha = 4 closed form evaluated with the other parameters of ``config``.

    For alpha = 3 it sits below the true mean, for alpha = 5 above it.
    """
    cfg = config.with_(path_loss_alpha=4.0, mode=PowerMode.CONSTANT,
                       cognitive_power_P=config.power_coefficient)
    return exact_interference_alpha4(cfg, R)


def figure_rows(alpha: float, r0_values=range(1, 21), eps_p: float = 2.0,
                density: float = 1.0, power: float = 1.0, with_oracle: bool = True) -> list[dict]:
    """Rows of bound values versus R0 at ``R = inf`` for one path loss."""
    rows = []
    for r0 in r0_values:
        cfg = NetworkConfig(per_radius_R0=float(r0), guard_band_eps_p=eps_p,
                            density_lambda=density, cognitive_power_P=power,
                            path_loss_alpha=float(alpha))
        row = {
            "R0": float(r0),
            "lb1": lower_bound_1(cfg),
            "lb2": lower_bound_2(cfg),
            "ub": upper_bound(cfg),
            "exact_alpha4": alpha4_reference(cfg),
        }
        if with_oracle:
            row["oracle"] = quadrature_oracle(cfg, INF)
        rows.append(row)
    return rows
