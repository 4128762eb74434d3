import math

import pytest
from hypothesis import given, strategies as st

from cogscale.core import (
    ConfigError,
    NetworkConfig,
    PowerMode,
    config_from_mapping,
    derived_quantities,
    dump_config,
    is_integer,
    load_config,
    validate,
)


def test_default_config_is_admissible():
    report = validate(NetworkConfig())
    assert report.ok and len(report) == 0


def test_alpha_two_rejected_with_message():
    report = validate(NetworkConfig(path_loss_alpha=2.0))
    assert "alpha_gt_2" in report.codes
    assert any(v.message == "path loss must exceed 2" for v in report)


def test_gamma_too_large_in_scaled_mode():
    cfg = NetworkConfig(mode=PowerMode.SCALED, path_loss_alpha=4.0, power_exponent_gamma=2.0)
    report = validate(cfg)
    assert report.codes == ["gamma_lt_alpha_minus_2"]
    assert report.violations[0].message == "gamma < alpha - 2 required"


def test_gamma_ignored_in_constant_mode():
    cfg = NetworkConfig(power_exponent_gamma=5.0)
    assert validate(cfg).ok
    assert cfg.gamma == 0.0 and cfg.effective_alpha == 4.0


@pytest.mark.parametrize("changes, code", [
    (dict(network_radius_R=3.0), "R_gt_R0_eps_p"),
    (dict(rx_protect_eps_c=2.5), "eps_c_lt_R0"),
    (dict(outage_prob_beta=1.0), "beta_range"),
    (dict(outage_prob_beta=0.0), "beta_range"),
    (dict(density_lambda=0.0), "density_positive"),
    (dict(guard_band_eps_p=-1.0), "lengths_positive"),
    (dict(eta_fraction=1.5), "eta_range"),
    (dict(mode=PowerMode.SCALED, per_radius_R0=0.9, rx_protect_eps_c=0.5), "R0_gt_1_scaled"),
    (dict(primary_layout="ring"), "primary_layout"),
    (dict(edge_policy="wrap"), "edge_policy"),
    (dict(dmax=-1.0), "dmax_positive"),
])
def test_each_rule_reports_its_code(changes, code):
    assert code in validate(NetworkConfig(**changes)).codes


def test_require_valid_raises_config_error():
    with pytest.raises(ConfigError):
        NetworkConfig(path_loss_alpha=1.5).require_valid()


def test_unknown_mode_string_is_config_error():
    with pytest.raises(ConfigError):
        NetworkConfig(mode="Loud")


def test_mode_accepts_string_value():
    assert NetworkConfig(mode="DistanceScaledPower").scaled


@given(st.floats(allow_nan=True, allow_infinity=True),
       st.floats(allow_nan=True, allow_infinity=True),
       st.floats(allow_nan=True, allow_infinity=True))
def test_validate_is_total(alpha, radius, gamma):
    report = validate(NetworkConfig(path_loss_alpha=alpha, network_radius_R=radius,
                                    power_exponent_gamma=gamma, mode=PowerMode.SCALED))
    assert len(set(report.codes)) == len(report.codes)


def test_expected_count_demo():
    d = derived_quantities(NetworkConfig())
    assert d.n_expected == pytest.approx(math.pi * 84, rel=1e-12)
    assert d.n_expected == pytest.approx(263.89, abs=5e-3)


def test_capacity_is_one_bit_when_p0_equals_noise():
    d = derived_quantities(NetworkConfig(primary_power_P0=1.0, noise_sigma2=1.0))
    assert d.capacity_C == 1.0


def test_eta_zero_gives_zero_c0():
    assert derived_quantities(NetworkConfig(eta_fraction=0.0)).outage_rate_C0 == 0.0


def test_eta_scales_capacity():
    d = derived_quantities(NetworkConfig(eta_fraction=0.5, primary_power_P0=3.0))
    assert d.outage_rate_C0 == pytest.approx(1.0)


@given(st.floats(1.0, 3.0), st.floats(5.0, 50.0), st.floats(0.1, 5.0))
def test_count_monotone(r0, R, lam):
    base = NetworkConfig(per_radius_R0=r0, network_radius_R=R + r0 + 2, density_lambda=lam,
                         rx_protect_eps_c=0.5)
    n0 = derived_quantities(base).n_expected
    assert derived_quantities(base.with_(network_radius_R=base.network_radius_R + 1)).n_expected > n0
    assert derived_quantities(base.with_(density_lambda=lam * 2)).n_expected > n0
    assert derived_quantities(base.with_(per_radius_R0=r0 + 0.5)).n_expected < n0
    assert derived_quantities(base.with_(guard_band_eps_p=2.5)).n_expected < n0


def test_is_integer_tolerance():
    assert is_integer(4.0 + 1e-13)
    assert not is_integer(4.0 + 1e-9)


def test_config_file_round_trip(tmp_path):
    cfg = NetworkConfig(path_loss_alpha=3.5, mode=PowerMode.SCALED, power_exponent_gamma=0.5,
                        dmax=2.0)
    path = tmp_path / "c.toml"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_config_file_partial_keys(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("path_loss_alpha = 3\nnetwork_radius_R = 20.0\n")
    cfg = load_config(path)
    assert cfg.path_loss_alpha == 3 and cfg.network_radius_R == 20.0
    assert cfg.per_radius_R0 == NetworkConfig().per_radius_R0


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("alpha = 3\n")
    with pytest.raises(ConfigError, match="unknown config keys: alpha"):
        load_config(path)


def test_config_file_nested_table(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[net]\npath_loss_alpha = 3\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_from_mapping_rejects_unknown():
    with pytest.raises(ConfigError):
        config_from_mapping({"R": 3})
