import numpy as np
import pytest
from hypothesis import given, strategies as st

from cogscale.channel import link, power_gain, tx_power
from cogscale.core import DomainError, NetworkConfig, PowerMode


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 7.3])
def test_unit_distance(alpha):
    assert power_gain(1.0, alpha) == 1.0


def test_known_gains():
    assert power_gain(2.0, 4.0) == 1 / 16
    assert power_gain(0.5, 3.0) == pytest.approx(8.0, rel=1e-15)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_nonpositive_distance(d):
    with pytest.raises(DomainError):
        power_gain(d, 4.0)


def test_array_input():
    g = power_gain(np.array([1.0, 2.0]), 2.0)
    assert np.allclose(g, [1.0, 0.25])


@given(st.floats(1e-3, 1e3), st.floats(2.01, 8.0))
def test_gain_times_distance_power_is_one(d, alpha):
    lg = link(d, alpha)
    assert lg.power_gain * d ** alpha == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.01, 100.0), st.floats(0.01, 10.0), st.floats(2.1, 6.0))
def test_gain_decreasing_in_distance(d, step, alpha):
    assert power_gain(d + step, alpha) < power_gain(d, alpha)


@given(st.floats(1.01, 100.0), st.floats(2.1, 6.0), st.floats(0.01, 2.0))
def test_gain_alpha_monotonicity(d, alpha, step):
    assert power_gain(d, alpha + step) < power_gain(d, alpha)
    assert power_gain(1 / d, alpha + step) > power_gain(1 / d, alpha)


def test_tx_power_constant_mode():
    cfg = NetworkConfig(cognitive_power_P=1.0)
    assert tx_power(0.3, cfg) == 1.0 and tx_power(40.0, cfg) == 1.0


def test_tx_power_linear_law():
    cfg = NetworkConfig(mode=PowerMode.SCALED, cognitive_power_Pc=1.0, power_exponent_gamma=1.0)
    assert tx_power(4.0, cfg) == 4.0


@given(st.floats(0.01, 100.0), st.floats(0.1, 10.0))
def test_gamma_zero_matches_constant(r, p):
    scaled = NetworkConfig(mode=PowerMode.SCALED, cognitive_power_Pc=p, power_exponent_gamma=0.0)
    const = NetworkConfig(cognitive_power_P=p)
    assert tx_power(r, scaled) == tx_power(r, const) == p


def test_tx_power_rejects_nonpositive_radius():
    with pytest.raises(DomainError):
        tx_power(0.0, NetworkConfig())
