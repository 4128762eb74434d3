"""Interference bounds, exclusion-region design and throughput scaling for cognitive networks."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CogScaleError,
    ConfigError,
    DomainError,
    InfeasibleError,
    NetworkConfig,
    NumericError,
    PlacementError,
    PowerMode,
    UnsupportedError,
    derived_quantities,
    load_config,
    validate,
)
from .geometry import NodePlacement, hex_lattice, place_network  # noqa: E402
from .interference import (  # noqa: E402
    avg_cog_interference,
    lattice_interference,
    mc_central_rx_interference,
    mc_primary_rx_interference,
    worst_case_primary_interference,
)
from .bounds import (  # noqa: E402
    a_alpha,
    bound_set,
    exact_interference_alpha4,
    lower_bound_1,
    lower_bound_2,
    quadrature_oracle,
    upper_bound,
)
from .per_design import (  # noqa: E402
    implicit_radius_alpha4,
    interference_free_radius,
    markov_radius,
    solve,
    tradeoff_curve,
)
from .throughput import concentration_experiment, per_user_rates, scaling_experiment  # noqa: E402
