"""Scenario parameters, admissibility rules and derived quantities.

All lengths share one abstract unit and the channel constant is fixed at 1,
so received power from a transmitter of power ``P`` at distance ``d`` is
simply ``P / d**alpha``.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class CogScaleError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CogScaleError, ValueError):
    pass


class DomainError(CogScaleError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class UnsupportedError(DomainError):
    pass


class NumericError(CogScaleError, ArithmeticError):
    pass


class InfeasibleError(NumericError):
    pass


class PlacementError(CogScaleError, RuntimeError):
    pass


class PowerMode(str, enum.Enum):
    CONSTANT = "ConstantPower"
    SCALED = "DistanceScaledPower"


INTEGER_TOL = 1e-12


def is_integer(x: float) -> bool:
    return abs(x - round(x)) < INTEGER_TOL


@dataclass(frozen=True)
class NetworkConfig:
    """Every scenario parameter, immutable.

    ``dmax`` is the maximum tx-rx pairing distance in constant-power mode and
    the growth coefficient ``K_d`` (``D_max <= K_d r**(gamma/alpha)``) in
    distance-scaled mode. ``None`` selects the documented default
    (``5 * eps_c`` and ``1`` respectively).

    When ``eta_fraction`` is set it overrides ``outage_rate_C0`` through
    ``C0 = eta * log2(1 + P0 / sigma2)``.
    """

    network_radius_R: float = 10.0
    per_radius_R0: float = 2.0
    guard_band_eps_p: float = 2.0
    rx_protect_eps_c: float = 0.5
    density_lambda: float = 1.0
    path_loss_alpha: float = 4.0
    cognitive_power_P: float = 1.0
    cognitive_power_Pc: float = 1.0
    power_exponent_gamma: float = 0.0
    primary_power_P0: float = 100.0
    noise_sigma2: float = 1.0
    outage_rate_C0: float = 3.0
    outage_prob_beta: float = 0.1
    eta_fraction: Optional[float] = None
    dmax: Optional[float] = None
    mode: PowerMode = PowerMode.CONSTANT
    # placement knobs
    primary_layout: str = "single"
    primary_spacing: Optional[float] = None
    edge_policy: str = "clip"
    min_pair_distance: float = 1e-3
    log_base: float = 2.0

    def __post_init__(self):
        if not isinstance(self.mode, PowerMode):
            try:
                object.__setattr__(self, "mode", PowerMode(self.mode))
            except ValueError:
                raise ConfigError(f"unknown power mode {self.mode!r}") from None

    @property
    def scaled(self) -> bool:
        return self.mode is PowerMode.SCALED

    @property
    def gamma(self) -> float:
        """Power exponent actually in effect (0 in constant-power mode)."""
        return self.power_exponent_gamma if self.scaled else 0.0

    @property
    def power_coefficient(self) -> float:
        return self.cognitive_power_Pc if self.scaled else self.cognitive_power_P

    @property
    def effective_alpha(self) -> float:
        return self.path_loss_alpha - self.gamma

    @property
    def pairing_coefficient(self) -> float:
        if self.dmax is not None:
            return self.dmax
        return 1.0 if self.scaled else 5.0 * self.rx_protect_eps_c

    @property
    def hex_spacing(self) -> float:
        if self.primary_spacing is not None:
            return self.primary_spacing
        return 3.0 * (self.per_radius_R0 + self.guard_band_eps_p)

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)

    def require_valid(self) -> "NetworkConfig":
        report = validate(self)
        if not report.ok:
            raise ConfigError("; ".join(v.message for v in report.violations))
        return self

    def as_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, PowerMode) else v
        return out


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def _positive(x) -> bool:
    try:
        return x is not None and math.isfinite(x) and x > 0
    except TypeError:
        return False


def validate(config: NetworkConfig) -> ValidationReport:
    """Check every admissibility rule; never raises."""
    c = config
    out: list[Violation] = []

    def rule(code: str, ok: bool, message: str):
        if not ok:
            out.append(Violation(code, message))

    lengths = {
        "network_radius_R": c.network_radius_R,
        "per_radius_R0": c.per_radius_R0,
        "guard_band_eps_p": c.guard_band_eps_p,
        "rx_protect_eps_c": c.rx_protect_eps_c,
    }
    bad_lengths = [k for k, v in lengths.items() if not _positive(v)]
    rule("lengths_positive", not bad_lengths,
         f"lengths must be strictly positive: {', '.join(bad_lengths)}")
    rule("alpha_gt_2", c.path_loss_alpha > 2, "path loss must exceed 2")
    rule("density_positive", _positive(c.density_lambda), "density must be positive")
    powers = {"cognitive_power_P": c.cognitive_power_P,
              "cognitive_power_Pc": c.cognitive_power_Pc,
              "primary_power_P0": c.primary_power_P0,
              "noise_sigma2": c.noise_sigma2}
    bad_powers = [k for k, v in powers.items() if not _positive(v)]
    rule("powers_positive", not bad_powers,
         f"powers must be strictly positive: {', '.join(bad_powers)}")
    rule("beta_range", 0 < c.outage_prob_beta < 1, "outage probability must lie in (0, 1)")
    rule("c0_nonnegative", c.outage_rate_C0 >= 0, "outage rate must be nonnegative")
    rule("eta_range", c.eta_fraction is None or 0 <= c.eta_fraction <= 1,
         "eta fraction must lie in [0, 1]")
    rule("dmax_positive", c.dmax is None or _positive(c.dmax), "dmax must be positive")
    rule("gamma_nonnegative", c.power_exponent_gamma >= 0, "power exponent must be >= 0")
    if not bad_lengths:
        rule("eps_c_lt_R0", c.rx_protect_eps_c < c.per_radius_R0,
             "eps_c must be smaller than R0")
        rule("R_gt_R0_eps_p", c.network_radius_R > c.per_radius_R0 + c.guard_band_eps_p,
             "R must exceed R0 + eps_p")
    if c.scaled:
        rule("gamma_lt_alpha_minus_2", c.power_exponent_gamma < c.path_loss_alpha - 2,
             "gamma < alpha - 2 required")
        rule("R0_gt_1_scaled", c.per_radius_R0 > 1, "R0 > 1 required in distance-scaled mode")
        rule("single_primary_scaled", c.primary_layout == "single",
             "distance-scaled mode needs a single central primary")
    rule("primary_layout", c.primary_layout in ("single", "hex"),
         "primary_layout must be 'single' or 'hex'")
    if c.primary_layout == "hex" and c.primary_spacing is not None:
        rule("primary_spacing", c.primary_spacing >= 2 * c.per_radius_R0,
             "primary_spacing must be at least 2 R0 (PERs may not overlap)")
    rule("edge_policy", c.edge_policy in ("clip", "wrap_none"),
         "edge_policy must be 'clip' or 'wrap_none'")
    rule("min_pair_distance", _positive(c.min_pair_distance)
         and c.min_pair_distance < c.pairing_coefficient,
         "min_pair_distance must be positive and below dmax")
    rule("log_base", _positive(c.log_base) and c.log_base != 1, "log_base must be positive and != 1")
    return ValidationReport(tuple(out))


@dataclass(frozen=True)
class DerivedQuantities:
    n_expected: float
    capacity_C: float
    outage_rate_C0: float


def expected_count(config: NetworkConfig) -> float:
    r_excl = config.per_radius_R0 + config.guard_band_eps_p
    return config.density_lambda * math.pi * (config.network_radius_R**2 - r_excl**2)


def interference_free_capacity(config: NetworkConfig) -> float:
    return math.log2(1 + config.primary_power_P0 / config.noise_sigma2)


def outage_rate(config: NetworkConfig) -> float:
    if config.eta_fraction is not None:
        return config.eta_fraction * interference_free_capacity(config)
    return config.outage_rate_C0


def derived_quantities(config: NetworkConfig) -> DerivedQuantities:
    config.require_valid()
    return DerivedQuantities(
        n_expected=expected_count(config),
        capacity_C=interference_free_capacity(config),
        outage_rate_C0=outage_rate(config),
    )


# ---------------------------------------------------------------- config files

_FIELD_NAMES = {f.name for f in fields(NetworkConfig)}


def config_from_mapping(data: dict[str, Any], base: Optional[NetworkConfig] = None) -> NetworkConfig:
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return replace(base or NetworkConfig(), **data)


def load_config(path: str | Path) -> NetworkConfig:
    """Read a flat TOML file of ``field = value`` pairs.

    Every key is optional; missing keys keep the dataclass defaults.
    Unknown keys raise :class:`ConfigError`.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; found tables: {', '.join(nested)}")
    return config_from_mapping(data)


def dump_config(config: NetworkConfig) -> str:
    lines = []
    for key, value in config.as_dict().items():
        if value is None:
            continue
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"
