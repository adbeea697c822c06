"""Quadrature over origin-centred balls and spheres.

Two schemes: tensor-polar (Gauss-Legendre in r and polar cosines, uniform in
azimuth; n <= 3) with a half-resolution error estimate, and seeded
Monte-Carlo for any n with a 3-sigma error estimate. Reductions use a
fixed-order tree so results do not depend on the worker count.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from lorentz_heinz import config
from lorentz_heinz.errors import QuadratureError
from lorentz_heinz.expr import Expression, evaluate_jets

logger = logging.getLogger(__name__)

SCHEMES = ("tensor-polar", "monte-carlo")


@dataclass(frozen=True)
class BallDomain:
    n: int
    R: float

    def __post_init__(self):
        if self.n < 1:
            raise QuadratureError(f"dimension must be at least 1, got {self.n}")
        if not self.R > 0:
            raise QuadratureError(f"radius must be positive, got {self.R}")


@dataclass(frozen=True)
class QuadratureSpec:
    """resolution is points per axis (tensor-polar) or the sample count (monte-carlo)"""

    scheme: str = "tensor-polar"
    resolution: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise QuadratureError(f"unknown scheme '{self.scheme}' (choose from {', '.join(SCHEMES)})")
        if self.resolution < 8:
            raise QuadratureError(f"resolution must be at least 8, got {self.resolution}")
        if not 0 <= self.seed < 2**64:
            raise QuadratureError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def coarse_resolution(self) -> int:
        """Resolution of the companion rule used for the tensor-polar error estimate"""
        return max(self.resolution // 2, 4)


def unit_ball_constants(n: int) -> tuple[float, float]:
    """(V_n, A_{n-1}): volume of the unit n-ball and area of the unit (n-1)-sphere"""
    if not 1 <= n <= 10:
        raise QuadratureError(f"unit ball constants are tabulated for 1 <= n <= 10, got {n}")
    volume = math.pi ** (n / 2) / float(special.gamma(n / 2 + 1))
    return volume, n * volume


# Reduction and parallel evaluation

def pairwise_sum(values) -> float:
    """Tree reduction folding the upper half onto the lower half until one value is left"""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    while x.size > 1:
        half = (x.size + 1) // 2
        if x.size % 2:
            x = np.append(x, 0.0)
        x = x[:half] + x[half:]
    return float(x[0])


def evaluate_chunks(fn, nodes: np.ndarray, workers: int | None = None, chunk_size: int | None = None):
    """Apply fn to fixed-size chunks of nodes (possibly in threads) and join results in chunk order"""
    workers = config.WORKERS if workers is None else workers
    chunk_size = config.CHUNK_SIZE if chunk_size is None else chunk_size
    chunks = [nodes[i : i + chunk_size] for i in range(0, max(len(nodes), 1), chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(fn, chunks))
    else:
        results = [fn(chunk) for chunk in chunks]
    if isinstance(results[0], np.ndarray):
        return np.concatenate(results)
    return type(results[0]).concatenate(results)


# Node sets

def _gauss_legendre(count: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(count)
    return a + (b - a) * (x + 1.0) / 2.0, w * (b - a) / 2.0


def _azimuths(count: int) -> tuple[np.ndarray, np.ndarray]:
    # periodic trapezoid rule
    phi = 2.0 * np.pi * np.arange(count) / count
    return phi, np.full(count, 2.0 * np.pi / count)


def _polar_ball(n: int, R: float, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        x, w = _gauss_legendre(resolution, -R, R)
        return x[:, None], w
    r, wr = _gauss_legendre(resolution, 0.0, R)
    phi, wphi = _azimuths(resolution)
    if n == 2:
        rr, pp = np.meshgrid(r, phi, indexing="ij")
        nodes = np.stack([rr * np.cos(pp), rr * np.sin(pp)], axis=-1).reshape(-1, 2)
        weights = np.outer(wr * r, wphi).ravel()
        return nodes, weights
    t, wt = _gauss_legendre(resolution, -1.0, 1.0)
    rr, tt, pp = np.meshgrid(r, t, phi, indexing="ij")
    sin_polar = np.sqrt(1.0 - tt**2)
    nodes = np.stack([rr * sin_polar * np.cos(pp), rr * sin_polar * np.sin(pp), rr * tt], axis=-1)
    nodes = nodes.reshape(-1, 3)
    weights = np.einsum("i,j,k->ijk", wr * r**2, wt, wphi).ravel()
    return nodes, weights


def _polar_sphere(n: int, R: float, resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n == 1:
        normals = np.array([[-1.0], [1.0]])
        return R * normals, normals, np.ones(2)
    phi, wphi = _azimuths(resolution)
    if n == 2:
        normals = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return R * normals, normals, R * wphi
    t, wt = _gauss_legendre(resolution, -1.0, 1.0)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    sin_polar = np.sqrt(1.0 - tt**2)
    normals = np.stack([sin_polar * np.cos(pp), sin_polar * np.sin(pp), tt], axis=-1).reshape(-1, 3)
    return R * normals, normals, R**2 * np.outer(wt, wphi).ravel()


def _random_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    directions = rng.standard_normal((count, n))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def ball_nodes(d: BallDomain, q: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nodes inside the open ball and their weights"""
    if q.scheme == "tensor-polar":
        if d.n > 3:
            raise QuadratureError(f"tensor-polar quadrature supports n <= 3, got n = {d.n}; use monte-carlo")
        return _polar_ball(d.n, d.R, q.resolution)
    rng = np.random.default_rng(q.seed)
    directions = _random_directions(rng, d.n, q.resolution)
    radii = d.R * rng.random(q.resolution) ** (1.0 / d.n)
    volume, _ = unit_ball_constants(d.n)
    return directions * radii[:, None], np.full(q.resolution, volume * d.R**d.n / q.resolution)


def sphere_nodes(d: BallDomain, q: QuadratureSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes on the sphere of radius R, outward unit normals and surface weights"""
    if q.scheme == "tensor-polar":
        if d.n > 3:
            raise QuadratureError(f"tensor-polar quadrature supports n <= 3, got n = {d.n}; use monte-carlo")
        return _polar_sphere(d.n, d.R, q.resolution)
    rng = np.random.default_rng(q.seed)
    normals = _random_directions(rng, d.n, q.resolution)
    _, area = unit_ball_constants(d.n)
    return d.R * normals, normals, np.full(q.resolution, area * d.R ** (d.n - 1) / q.resolution)


# Integration

def _field(f):
    if isinstance(f, Expression):
        return lambda points: evaluate_jets(f, points).values
    return f


def weighted_sum(values: np.ndarray, weights: np.ndarray, q: QuadratureSpec) -> tuple[float, float]:
    """Quadrature value plus the 3-sigma error for monte-carlo nodes (0 for tensor-polar)"""
    value = pairwise_sum(values * weights)
    if q.scheme == "monte-carlo":
        samples = values * weights * len(values)
        mean = pairwise_sum(samples) / len(samples)
        spread = math.sqrt(pairwise_sum((samples - mean) ** 2) / max(len(samples) - 1, 1))
        return value, 3.0 * spread / math.sqrt(len(samples))
    return value, 0.0


def integrate_ball(f, d: BallDomain, q: QuadratureSpec) -> tuple[float, float]:
    """Integral of a scalar field over B^n(R) with an error estimate"""
    field = _field(f)
    nodes, weights = ball_nodes(d, q)
    value, error = weighted_sum(evaluate_chunks(field, nodes), weights, q)
    if q.scheme == "tensor-polar":
        coarse_nodes, coarse_weights = _polar_ball(d.n, d.R, q.coarse_resolution)
        error = abs(value - pairwise_sum(evaluate_chunks(field, coarse_nodes) * coarse_weights))
    logger.debug("ball integral n=%d R=%g: %.15g +- %.3g (%d nodes)", d.n, d.R, value, error, len(nodes))
    return value, error


def coarse_sphere_nodes(d: BallDomain, q: QuadratureSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Companion tensor-polar sphere rule at half resolution, for error estimates"""
    return _polar_sphere(d.n, d.R, q.coarse_resolution)
