import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogscale.core import DomainError, NetworkConfig, PowerMode
from cogscale.geometry import NodePlacement, place_network
from cogscale.interference import (
    InterferenceEstimate,
    RunningStats,
    avg_cog_interference,
    lattice_interference,
    lattice_scan,
    lattice_tail_bound,
    mc_central_rx_interference,
    mc_interference_at,
    mc_primary_rx_interference,
    primary_interference_bound,
    theta_grid,
    worst_case_primary_interference,
)

from oracles import central_mean_interference, exact_alpha4_literal, lattice_sum_loops

EMPTY = np.empty((0, 2))


def _placement(tx, ptx=EMPTY):
    tx = np.asarray(tx, dtype=float).reshape(-1, 2)
    return NodePlacement(tx, tx.copy(), np.asarray(ptx, dtype=float).reshape(-1, 2), EMPTY)


def test_empty_placement_zero():
    assert mc_interference_at((0, 0), _placement(EMPTY), NetworkConfig()) == 0.0


def test_single_tx_term():
    p = _placement([[2.0, 0.0]])
    assert mc_interference_at((0, 0), p, NetworkConfig()) == 1 / 16


def test_ring_of_equal_distance():
    n, d = 7, 1.5
    ang = np.arange(n) * 2 * math.pi / n
    p = _placement(np.column_stack([d * np.cos(ang), d * np.sin(ang)]))
    assert mc_interference_at((0, 0), p, NetworkConfig()) == pytest.approx(n / d ** 4, rel=1e-12)


def test_role_filter_and_exclude():
    cfg = NetworkConfig(primary_power_P0=100.0)
    p = _placement([[1.0, 0.0], [0.0, 2.0]], ptx=[[-1.0, 0.0]])
    assert mc_interference_at((0, 0), p, cfg, "primary") == 100.0
    assert mc_interference_at((0, 0), p, cfg, "cognitive") == pytest.approx(1 + 1 / 16)
    assert mc_interference_at((0, 0), p, cfg, "both", exclude=0) == pytest.approx(100 + 1 / 16)
    with pytest.raises(ValueError):
        mc_interference_at((0, 0), p, cfg, "everyone")


def test_protect_violation_raises():
    p = _placement([[0.2, 0.0]])
    with pytest.raises(DomainError):
        mc_interference_at((0, 0), p, NetworkConfig(rx_protect_eps_c=0.5))


def test_scaled_power_used():
    cfg = NetworkConfig(mode=PowerMode.SCALED, power_exponent_gamma=1.0, cognitive_power_Pc=2.0)
    p = _placement([[4.0, 0.0]])
    assert mc_interference_at((5.0, 0.0), p, cfg) == pytest.approx(8.0)


def test_running_stats_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.exponential(size=1000)
    acc = RunningStats().extend(x)
    assert acc.mean == pytest.approx(x.mean(), rel=1e-12)
    assert acc.variance == pytest.approx(x.var(ddof=1), rel=1e-10)
    est = InterferenceEstimate.from_samples(x)
    assert est.stderr == pytest.approx(math.sqrt(est.variance / est.n_trials))


# ------------------------------------------------------------- closed forms

def test_avg_interference_limit_value():
    cfg = NetworkConfig(rx_protect_eps_c=1.0, per_radius_R0=2.0)
    assert avg_cog_interference(cfg, math.inf) == pytest.approx(math.pi, rel=1e-14)


def test_avg_interference_empty_annulus():
    cfg = NetworkConfig()
    assert avg_cog_interference(cfg, cfg.rx_protect_eps_c) == 0.0


@pytest.mark.parametrize("R", [5.0, 10.0, 40.0])
@pytest.mark.parametrize("alpha", [3.0, 4.0, 5.5])
def test_avg_interference_against_quadrature(R, alpha):
    cfg = NetworkConfig(path_loss_alpha=alpha, rx_protect_eps_c=0.7, cognitive_power_P=1.7,
                        density_lambda=0.4)
    assert avg_cog_interference(cfg, R) == pytest.approx(
        central_mean_interference(0.4, 1.7, alpha, 0.7, R), rel=1e-10)


def test_avg_interference_gamma_shift():
    scaled = NetworkConfig(mode=PowerMode.SCALED, power_exponent_gamma=1.0, path_loss_alpha=5.0,
                           cognitive_power_Pc=1.3)
    plain = NetworkConfig(path_loss_alpha=4.0, cognitive_power_P=1.3)
    for R in (10.0, math.inf):
        assert avg_cog_interference(scaled, R) == pytest.approx(avg_cog_interference(plain, R),
                                                                rel=1e-12)


def test_central_mc_matches_closed_form():
    cfg = NetworkConfig()
    est = mc_central_rx_interference(cfg, 2000, 3)
    assert est.within(avg_cog_interference(cfg))


def test_primary_mc_matches_exact():
    cfg = NetworkConfig()
    est = mc_primary_rx_interference(cfg, 2000, 0)
    exact = exact_alpha4_literal(1, 1, 2, 2, 10)
    assert exact == pytest.approx(0.31498, abs=1e-5)
    assert est.within(exact)


def test_primary_mc_seed_replicates():
    cfg = NetworkConfig()
    exact = exact_alpha4_literal(1, 1, 2, 2, 10)
    means = []
    for seed in range(10):
        est = mc_primary_rx_interference(cfg, 300, 100 + seed)
        assert est.within(exact, k=4)
        means.append(est.mean)
    assert len(set(means)) == 10


def test_primary_mc_empty_network():
    est = mc_primary_rx_interference(NetworkConfig(), 5, 0, n=0)
    assert est.mean == 0.0 and est.variance == 0.0


def test_primary_mc_monotone_in_guard_band():
    # larger guard band removes transmitters from a coupled superset
    means = [mc_primary_rx_interference(NetworkConfig(guard_band_eps_p=e), 400, 8).mean
             for e in (1.0, 2.0, 3.0)]
    assert means[0] > means[1] > means[2]


def test_primary_mc_workers_identical():
    cfg = NetworkConfig()
    a = mc_primary_rx_interference(cfg, 40, 5, workers=1)
    b = mc_primary_rx_interference(cfg, 40, 5, workers=3)
    assert np.array_equal(a.samples, b.samples)


def test_primary_mc_requires_single_layout():
    with pytest.raises(DomainError):
        mc_primary_rx_interference(NetworkConfig(primary_layout="hex", network_radius_R=30.0), 2, 0)


# ------------------------------------------------------------- lattice sums

@pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 7])
@pytest.mark.parametrize("alpha", [2.5, 4.0])
def test_lattice_against_loops(theta, alpha):
    got = lattice_interference(theta, 0.3, alpha, 6).value
    assert got == pytest.approx(lattice_sum_loops(theta, 0.3, alpha, 6), rel=1e-13)


def test_lattice_exclude_origin():
    with_o = lattice_interference(0.0, 0.1, 4.0, 20).value
    without = lattice_interference(0.0, 0.1, 4.0, 20, include_origin=False).value
    assert with_o - without == pytest.approx(1e4, rel=1e-12)
    assert without == pytest.approx(lattice_sum_loops(0.0, 0.1, 4.0, 20, False), rel=1e-12)


def test_lattice_origin_dominates_small_eps():
    v = lattice_interference(0.0, 0.1, 4.0, 50).value
    assert 1e4 < v < 1e4 + 2.0


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 6.0])
@pytest.mark.parametrize("eps_c", [0.1, 0.5, 0.9])
def test_tail_bound_dominates_remainder(alpha, eps_c):
    for theta in (0.0, 1.0):
        for K in (10, 25):
            small = lattice_interference(theta, eps_c, alpha, K)
            big = lattice_interference(theta, eps_c, alpha, 2 * K)
            assert big.value >= small.value
            assert big.value - small.value <= small.tail_bound
            assert small.tail_bound >= 0


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.1, 2.0])
def test_lattice_point_symmetry(theta):
    # the second sublattice is not symmetric once truncated (k = K maps to -K-1),
    # so the gap is a truncation effect bounded by the tail
    a = lattice_interference(theta, 0.5, 4.0)
    b = lattice_interference(theta + math.pi, 0.5, 4.0)
    assert abs(a.value - b.value) <= 1e-10
    a = lattice_interference(theta, 0.5, 4.0, 60)
    b = lattice_interference(theta + math.pi, 0.5, 4.0, 60)
    assert abs(a.value - b.value) <= a.tail_bound


def test_tail_shrinks_with_k():
    tails = [lattice_tail_bound(0.0, 0.5, 3.0, K) for K in (10, 20, 40, 80)]
    assert all(b < a for a, b in zip(tails, tails[1:]))


@pytest.mark.parametrize("eps_c", [0.0, 1.0, 1.5])
def test_lattice_domain(eps_c):
    with pytest.raises(DomainError):
        lattice_interference(0.0, eps_c, 4.0, 5)


def test_worst_case_single_grid_point():
    one = worst_case_primary_interference(0.5, 4.0, 20, 1)
    assert one.theta == 0.0
    assert one.value == lattice_interference(0.0, 0.5, 4.0, 20).value


def test_worst_case_dominates_scan():
    best = worst_case_primary_interference(0.5, 4.0, 50, 360)
    scan = lattice_scan(theta_grid(360), 0.5, 4.0, 50)
    assert all(best.value >= s.value for s in scan)
    assert best.value in {s.value for s in scan}
    doubled = worst_case_primary_interference(0.5, 4.0, 100, 360)
    assert 0 <= doubled.value - best.value <= best.tail_bound


def test_primary_bound_physical_units():
    cfg = NetworkConfig(primary_power_P0=50.0, per_radius_R0=2.0, rx_protect_eps_c=0.5)
    res = worst_case_primary_interference(0.25, 4.0, 200, 720)
    assert primary_interference_bound(cfg) == pytest.approx(50 * (res.value + res.tail_bound) / 16)


@settings(max_examples=20)
@given(st.floats(0.05, 0.95), st.floats(2.2, 7.0), st.floats(0, 2 * math.pi))
def test_lattice_value_positive_and_above_origin_term(eps_c, alpha, theta):
    res = lattice_interference(theta, eps_c, alpha, 8)
    assert res.value > eps_c ** (-alpha)
    assert res.tail_bound > 0


def test_placement_interference_nonnegative():
    cfg = NetworkConfig()
    p = place_network(cfg, 100, 2)
    for i in range(5):
        assert mc_interference_at(p.cognitive_rx[i], p, cfg, exclude=i) >= 0
