"""Node placement: uniform annuli, paired receivers and the hexagonal primary lattice."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import DomainError, NetworkConfig, PlacementError
from .streams import as_generator, substream

RETRY_BUDGET = 10_000
SQRT3 = math.sqrt(3.0)
ROLES = ("ctx", "crx", "ptx", "prx")


@dataclass(frozen=True)
class HexLattice:
    """Primary-tx positions of the densest PER packing, in units of R0.

    ``points`` stacks sublattice 1, ``(2*sqrt3*k, 2*m)``, then sublattice 2,
    ``(sqrt3*(2k+1), 2m+1)``, for ``|k|, |m| <= truncation_K``.
    """

    truncation_K: int
    points: np.ndarray
    sublattice: np.ndarray


@dataclass
class NodePlacement:
    cognitive_tx: np.ndarray
    cognitive_rx: np.ndarray
    primary_tx: np.ndarray
    primary_rx: np.ndarray
    seed: Optional[int] = None
    acceptance_ratio: float = 1.0
    network_radius: float = math.nan

    @property
    def n(self) -> int:
        return len(self.cognitive_tx)

    def same_as(self, other: "NodePlacement") -> bool:
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("cognitive_tx", "cognitive_rx", "primary_tx", "primary_rx")
        )


def _points(a) -> np.ndarray:
    return np.asarray(a, dtype=float).reshape(-1, 2)


def distance_to_per_edge(r, theta, R0):
    """Distance from a node at polar ``(r, theta)`` to the receiver at ``(R0, 0)``."""
    r = np.asarray(r, dtype=float)
    d2 = r * r + R0 * R0 - 2.0 * R0 * r * np.cos(theta)
    d = np.sqrt(np.maximum(d2, 0.0))
    return float(d) if d.ndim == 0 else d


def hex_lattice(truncation_K: int) -> HexLattice:
    if truncation_K < 1:
        raise DomainError("truncation_K must be >= 1")
    idx = np.arange(-truncation_K, truncation_K + 1, dtype=float)
    k, m = np.meshgrid(idx, idx, indexing="ij")
    k = k.ravel()
    m = m.ravel()
    sub1 = np.column_stack([2 * SQRT3 * k, 2 * m])
    sub2 = np.column_stack([SQRT3 * (2 * k + 1), 2 * m + 1])
    pts = np.vstack([sub1, sub2])
    tag = np.repeat([1, 2], len(k))
    return HexLattice(truncation_K, pts, tag)


def _uniform_disc_radius(u: np.ndarray, inner: float, outer: float) -> np.ndarray:
    return np.sqrt(inner * inner + u * (outer * outer - inner * inner))


def sample_annulus(count: int, inner: float, outer: float, rng_seed) -> np.ndarray:
    """``count`` i.i.d. uniform points on the annulus ``inner <= |x| <= outer``.

    Radial CDF is ``(r**2 - inner**2) / (outer**2 - inner**2)``.
    """
    if not 0 < inner < outer:
        raise DomainError("annulus needs 0 < inner < outer")
    rng = as_generator(rng_seed)
    if count <= 0:
        return np.empty((0, 2))
    r = _uniform_disc_radius(rng.random(count), inner, outer)
    th = rng.random(count) * (2 * math.pi)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def _uniform_disc(rng: np.random.Generator, count: int, radius) -> np.ndarray:
    r = np.sqrt(rng.random(count)) * radius
    th = rng.random(count) * (2 * math.pi)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def primary_positions(config: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Primary transmitters and their receivers.

    Receivers sit on the PER edge at angle 0, the worst-case position used by
    every outage calculation.
    """
    if config.primary_layout == "single":
        ptx = np.zeros((1, 2))
    else:
        half = config.hex_spacing / 2.0
        K = int(math.ceil(config.network_radius_R / half)) + 1
        pts = hex_lattice(K).points * half
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= config.network_radius_R]
        order = np.lexsort((pts[:, 0], pts[:, 1]))
        ptx = pts[order]
    prx = ptx + np.array([config.per_radius_R0, 0.0])
    return ptx, prx


def _outside_pers(pts: np.ndarray, ptx: np.ndarray, radius: float) -> np.ndarray:
    if len(pts) == 0:
        return np.zeros(0, dtype=bool)
    d2 = ((pts[:, None, :] - ptx[None, :, :]) ** 2).sum(axis=-1)
    return np.all(d2 >= radius * radius, axis=1)


def sample_cognitive_tx(config: NetworkConfig, n: Optional[int], rng,
                        fill_pers: bool = False) -> tuple[np.ndarray, float]:
    """Cognitive transmitters uniform on the disc of radius R minus every PER+guard disc.

    ``n=None`` draws a Poisson process of intensity ``lambda`` (thinning of a
    Poisson count on the whole disc); an integer draws exactly ``n`` points
    by rejection. Returns the points and the observed acceptance ratio.
    ``fill_pers`` drops the exclusion, giving the homogeneous process used
    for worst-case interference bounds at cognitive receivers.
    """
    rng = as_generator(rng)
    ptx, _ = primary_positions(config)
    R = config.network_radius_R
    excl = 0.0 if fill_pers else config.per_radius_R0 + config.guard_band_eps_p
    if n is None:
        total = rng.poisson(config.density_lambda * math.pi * R * R)
        cand = _uniform_disc(rng, total, R)
        keep = _outside_pers(cand, ptx, excl)
        ratio = float(keep.mean()) if total else 1.0
        return cand[keep], ratio
    if n < 0:
        raise DomainError("node count must be nonnegative")
    if n == 0:
        return np.empty((0, 2)), 1.0
    accepted: list[np.ndarray] = []
    have = drawn = 0
    budget = RETRY_BUDGET * n
    while have < n:
        if drawn >= budget:
            raise PlacementError(
                f"placed only {have} of {n} cognitive transmitters after {drawn} draws"
            )
        rate = have / drawn if drawn else 1.0
        batch = 16 + int(1.2 * (n - have) / max(rate, 0.05))
        batch = min(batch, budget - drawn)
        cand = _uniform_disc(rng, batch, R)
        drawn += batch
        ok = cand[_outside_pers(cand, ptx, excl)]
        accepted.append(ok)
        have += len(ok)
    pts = np.vstack(accepted)[:n]
    return pts, have / drawn


def pairing_radius(tx: np.ndarray, config: NetworkConfig) -> np.ndarray:
    """Per-transmitter admissible receiver distance (``D_max`` or ``K_d r**(gamma/alpha)``)."""
    if config.scaled:
        r = np.hypot(tx[:, 0], tx[:, 1])
        return config.pairing_coefficient * r ** (config.power_exponent_gamma / config.path_loss_alpha)
    return np.full(len(tx), config.pairing_coefficient)


def sample_receivers(tx: np.ndarray, ptx: np.ndarray, config: NetworkConfig, rng) -> np.ndarray:
    """One receiver per transmitter, uniform in its pairing disc, redrawn until admissible.

    Admissible: at least ``min_pair_distance`` from its own transmitter, at
    least ``eps_c`` from every other cognitive and every primary transmitter,
    and (edge_policy ``clip``) inside the network disc.
    """
    rng = as_generator(rng)
    n = len(tx)
    rx = np.empty((n, 2))
    if n == 0:
        return rx
    radius = pairing_radius(tx, config)
    eps_c = config.rx_protect_eps_c
    tree = cKDTree(tx) if n > 1 else None
    pending = np.arange(n)
    for _ in range(RETRY_BUDGET):
        cand = tx[pending] + _uniform_disc(rng, len(pending), radius[pending])
        own = np.hypot(*(cand - tx[pending]).T)
        ok = own >= config.min_pair_distance
        if config.edge_policy == "clip":
            ok &= np.hypot(cand[:, 0], cand[:, 1]) <= config.network_radius_R
        if tree is not None:
            dist, idx = tree.query(cand, k=2)
            other = np.where(idx[:, 0] == pending, dist[:, 1], dist[:, 0])
            ok &= other >= eps_c
        if len(ptx):
            ok &= _outside_pers(cand, ptx, eps_c)
        rx[pending[ok]] = cand[ok]
        pending = pending[~ok]
        if len(pending) == 0:
            return rx
    raise PlacementError(f"{len(pending)} receivers could not be placed within the retry budget")


def place_network(config: NetworkConfig, n: Optional[int] = None, rng_seed=0,
                  fill_pers: bool = False) -> NodePlacement:
    """Sample a full placement. ``n=None`` is Poisson mode, an int is Fixed(n).

    ``rng_seed`` is a 64-bit seed or an existing Generator.
    """
    config.require_valid()
    if isinstance(rng_seed, np.random.Generator):
        rng, seed = rng_seed, None
    else:
        rng, seed = substream(rng_seed), int(rng_seed)
    ptx, prx = primary_positions(config)
    tx, ratio = sample_cognitive_tx(config, n, rng, fill_pers)
    rx = sample_receivers(tx, ptx, config, rng)
    return NodePlacement(tx, rx, ptx, prx, seed=seed, acceptance_ratio=ratio,
                         network_radius=config.network_radius_R)


def check_placement(placement: NodePlacement, config: NetworkConfig, tol: float = 1e-9,
                    fill_pers: bool = False) -> list[str]:
    """Replay every placement invariant; returns human-readable failures."""
    problems = []
    tx, rx, ptx, prx = (placement.cognitive_tx, placement.cognitive_rx,
                        placement.primary_tx, placement.primary_rx)
    if len(tx) != len(rx):
        problems.append("tx/rx length mismatch")
        return problems
    pair = np.hypot(*(tx - rx).T) if len(tx) else np.zeros(0)
    limit = pairing_radius(tx, config)
    if np.any(pair > limit + tol):
        problems.append("receiver beyond pairing radius")
    if np.any(pair < config.min_pair_distance - tol):
        problems.append("receiver closer than min_pair_distance")
    if len(tx) and len(ptx) and not fill_pers:
        d = np.sqrt(((tx[:, None] - ptx[None]) ** 2).sum(-1))
        if d.min() < config.per_radius_R0 + config.guard_band_eps_p - tol:
            problems.append("cognitive tx inside a PER guard band")
    if len(tx) and len(prx) and not fill_pers:
        d = np.sqrt(((tx[:, None] - prx[None]) ** 2).sum(-1))
        if d.min() < config.guard_band_eps_p - tol:
            problems.append("cognitive tx within eps_p of a primary rx")
    if len(rx):
        all_tx = np.vstack([tx, ptx]) if len(ptx) else tx
        d = np.sqrt(((rx[:, None] - all_tx[None]) ** 2).sum(-1))
        d[np.arange(len(rx)), np.arange(len(rx))] = np.inf
        if d.min() < config.rx_protect_eps_c - tol:
            problems.append("interfering tx within eps_c of a cognitive rx")
    if len(ptx) and np.any(np.hypot(*(prx - ptx).T) > config.per_radius_R0 + tol):
        problems.append("primary rx outside its PER")
    return problems


# ------------------------------------------------------------------ CSV i/o

def placement_to_csv(placement: NodePlacement, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["role", "pair_id", "x", "y"])
    for role, pts in zip(ROLES, (placement.cognitive_tx, placement.cognitive_rx,
                                 placement.primary_tx, placement.primary_rx)):
        for i, (x, y) in enumerate(pts):
            w.writerow([role, i, repr(float(x)), repr(float(y))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def placement_from_csv(source: str | Path) -> NodePlacement:
    """Inverse of :func:`placement_to_csv`. Accepts a path or the CSV text itself."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    groups: dict[str, dict[int, tuple[float, float]]] = {r: {} for r in ROLES}
    for row in rows:
        role = row["role"]
        if role not in groups:
            raise ValueError(f"unknown role {role!r}")
        groups[role][int(row["pair_id"])] = (float(row["x"]), float(row["y"]))

    def arr(role):
        g = groups[role]
        return _points([g[i] for i in sorted(g)]) if g else np.empty((0, 2))

    return NodePlacement(arr("ctx"), arr("crx"), arr("ptx"), arr("prx"))
