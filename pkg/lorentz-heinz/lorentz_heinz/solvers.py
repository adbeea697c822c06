"""Constant-mean-curvature space-like graphs.

solve_radial_cmc integrates the first integral of the radial equation
(entire solutions, the hyperboloid family). solve_dirichlet_cmc solves the
expanded prescribed mean curvature equation for n = 2,

    (1 - py^2) pxx + 2 px py pxy + (1 - px^2) pyy = 2 H (1 - px^2 - py^2)^(3/2),

by central differences on the square [-R, R]^2 and damped Newton iteration
with an analytic Jacobian.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_simpson
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import spsolve

from lorentz_heinz.errors import CausalBreakdownError, NonConvergenceError, UsageError
from lorentz_heinz.expr import Expression, Jet, JetBatch, evaluate_jets
from lorentz_heinz.reports import to_csv

logger = logging.getLogger(__name__)


# Radial problem

@dataclass(frozen=True, eq=False)
class RadialProfile:
    n: int
    H: float
    r_grid: np.ndarray
    psi_values: np.ndarray
    psi_prime_values: np.ndarray

    def first_integral_residual(self) -> float:
        """sup over the grid of |r^(n-1) psi' / sqrt(1 - psi'^2) - H r^n|"""
        r, dpsi = self.r_grid, self.psi_prime_values
        lhs = r ** (self.n - 1) * dpsi / np.sqrt(1.0 - dpsi**2)
        return float(np.max(np.abs(lhs - self.H * r**self.n)))

    def at(self, r: float) -> tuple[float, float]:
        """(psi, psi') at the grid radius closest to r"""
        i = int(np.argmin(np.abs(self.r_grid - r)))
        return float(self.psi_values[i]), float(self.psi_prime_values[i])

    def table(self) -> tuple[tuple, list]:
        """CSV columns and rows, one row per grid radius"""
        rows = list(zip(self.r_grid.tolist(), self.psi_values.tolist(), self.psi_prime_values.tolist()))
        return ("r", "psi", "psi_prime"), rows

    def to_csv(self) -> str:
        return to_csv(*self.table())

    def to_dict(self) -> dict:
        return {"n": self.n, "H": self.H, "r_max": float(self.r_grid[-1]), "points": len(self.r_grid),
                "psi_at_origin": float(self.psi_values[0]), "psi_at_r_max": float(self.psi_values[-1]),
                "first_integral_residual": self.first_integral_residual()}


def solve_radial_cmc(n: int, H: float, r_max: float, step: float) -> RadialProfile:
    """Entire space-like CMC graph psi(r) with psi(0) = 1/H"""
    if n < 1:
        raise UsageError(f"dimension must be at least 1, got {n}")
    if not H > 0 or not r_max > 0 or not step > 0:
        raise UsageError(f"radial solver needs H, r_max, step > 0, got H={H}, r_max={r_max}, step={step}")
    count = max(math.ceil(r_max / step), 2)
    r = np.linspace(0.0, r_max, count + 1)
    # r^(n-1) psi' / sqrt(1 - psi'^2) = H r^n with zero constant at the regular origin
    dpsi = H * r / np.sqrt(1.0 + (H * r) ** 2)
    psi = 1.0 / H + cumulative_simpson(dpsi, x=r, initial=0.0)
    logger.debug("radial profile n=%d H=%g: %d points up to r=%g", n, H, len(r), r_max)
    return RadialProfile(n, float(H), r, psi, dpsi)


# Dirichlet problem on a square grid

@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_iters: int = 50
    max_halvings: int = 20
    delta_guard: float = 1e-3

    def __post_init__(self):
        for name in ("newton_tol", "max_iters", "max_halvings", "delta_guard"):
            if not getattr(self, name) > 0:
                raise UsageError(f"solver setting {name} must be positive, got {getattr(self, name)}")
        if self.delta_guard >= 1:
            raise UsageError(f"delta_guard must be below 1, got {self.delta_guard}")


@dataclass(frozen=True, eq=False)
class GridSolution:
    """psi on the (2m+1) x (2m+1) grid over [-R, R]^2; values[i, j] sits at (axis[i], axis[j])"""

    axis: np.ndarray
    values: np.ndarray
    H_target: float
    R: float
    m: int
    iterations: int
    final_residual: float
    residual_history: list = field(default_factory=list)

    @property
    def spacing(self) -> float:
        return self.R / self.m

    def nodes(self) -> np.ndarray:
        uu, vv = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([uu.ravel(), vv.ravel()], axis=-1)

    def as_surface(self) -> "SplineSurface":
        return SplineSurface(RectBivariateSpline(self.axis, self.axis, self.values, kx=3, ky=3), self.R)

    def header(self) -> dict:
        return {"H": self.H_target, "R": self.R, "m": self.m, "iterations": self.iterations,
                "final_residual": self.final_residual}

    def table(self) -> tuple[tuple, list]:
        """CSV columns and rows, u2 varying fastest"""
        rows = [(a, b, v) for (a, b), v in zip(self.nodes().tolist(), self.values.ravel().tolist())]
        return ("u1", "u2", "psi"), rows

    def to_csv(self) -> str:
        return to_csv(*self.table())


@dataclass(frozen=True, eq=False)
class SplineSurface:
    """Bicubic interpolant of a grid solution, usable wherever a surface is expected"""

    spline: RectBivariateSpline
    R: float
    n: int = 2

    def jets(self, points) -> JetBatch:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = points[:, 0], points[:, 1]
        ev = self.spline.ev
        gradients = np.stack([ev(x, y, dx=1), ev(x, y, dy=1)], axis=-1)
        pxy = ev(x, y, dx=1, dy=1)
        hessians = np.stack([np.stack([ev(x, y, dx=2), pxy], axis=-1),
                             np.stack([pxy, ev(x, y, dy=2)], axis=-1)], axis=-2)
        return JetBatch(ev(x, y), gradients, hessians)

    def jet(self, point) -> Jet:
        return self.jets(np.asarray(point, dtype=float)[None, :])[0]


def _derivatives(psi: np.ndarray, h: float):
    """Central differences (px, py, pxx, pyy, pxy) at interior nodes"""
    c = psi[1:-1, 1:-1]
    px = (psi[2:, 1:-1] - psi[:-2, 1:-1]) / (2 * h)
    py = (psi[1:-1, 2:] - psi[1:-1, :-2]) / (2 * h)
    pxx = (psi[2:, 1:-1] - 2 * c + psi[:-2, 1:-1]) / h**2
    pyy = (psi[1:-1, 2:] - 2 * c + psi[1:-1, :-2]) / h**2
    pxy = (psi[2:, 2:] - psi[2:, :-2] - psi[:-2, 2:] + psi[:-2, :-2]) / (4 * h**2)
    return px, py, pxx, pyy, pxy


def _operator(psi: np.ndarray, h: float, H: float) -> np.ndarray:
    px, py, pxx, pyy, pxy = _derivatives(psi, h)
    s = np.clip(1.0 - px**2 - py**2, 0.0, None)
    return (1 - py**2) * pxx + 2 * px * py * pxy + (1 - px**2) * pyy - 2 * H * s**1.5


def _jacobian(psi: np.ndarray, h: float, H: float) -> sparse.csr_matrix:
    px, py, pxx, pyy, pxy = _derivatives(psi, h)
    root = np.sqrt(np.clip(1.0 - px**2 - py**2, 0.0, None))
    d_px = 2 * py * pxy - 2 * px * pyy + 6 * H * px * root
    d_py = 2 * px * pxy - 2 * py * pxx + 6 * H * py * root
    d_pxx = 1 - py**2
    d_pyy = 1 - px**2
    d_pxy = 2 * px * py

    k = psi.shape[0] - 2
    index = np.arange(k * k).reshape(k, k)
    stencil = {
        (0, 0): -2 * (d_pxx + d_pyy) / h**2,
        (1, 0): d_px / (2 * h) + d_pxx / h**2,
        (-1, 0): -d_px / (2 * h) + d_pxx / h**2,
        (0, 1): d_py / (2 * h) + d_pyy / h**2,
        (0, -1): -d_py / (2 * h) + d_pyy / h**2,
        (1, 1): d_pxy / (4 * h**2),
        (-1, -1): d_pxy / (4 * h**2),
        (1, -1): -d_pxy / (4 * h**2),
        (-1, 1): -d_pxy / (4 * h**2),
    }
    rows, cols, data = [], [], []
    for (di, dj), coefficient in stencil.items():
        # neighbours on the boundary row are fixed data and drop out
        i0, i1 = max(0, -di), k - max(0, di)
        j0, j1 = max(0, -dj), k - max(0, dj)
        rows.append(index[i0:i1, j0:j1].ravel())
        cols.append(index[i0 + di : i1 + di, j0 + dj : j1 + dj].ravel())
        data.append(coefficient[i0:i1, j0:j1].ravel())
    size = k * k
    return sparse.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(size, size))


def _harmonic_extension(boundary_grid: np.ndarray) -> np.ndarray:
    """Discrete Laplace solution with the boundary rows of boundary_grid as data"""
    psi = boundary_grid.copy()
    k = psi.shape[0] - 2
    identity = sparse.identity(k, format="csr")
    second = sparse.diags([np.ones(k - 1), -2 * np.ones(k), np.ones(k - 1)], [-1, 0, 1], format="csr")
    laplacian = sparse.kron(second, identity) + sparse.kron(identity, second)
    rhs = np.zeros((k, k))
    rhs[0, :] -= psi[0, 1:-1]
    rhs[-1, :] -= psi[-1, 1:-1]
    rhs[:, 0] -= psi[1:-1, 0]
    rhs[:, -1] -= psi[1:-1, -1]
    psi[1:-1, 1:-1] = spsolve(laplacian.tocsc(), rhs.ravel()).reshape(k, k)
    return psi


def _guard_violation(psi: np.ndarray, h: float, delta: float) -> tuple[int, int] | None:
    px, py, *_ = _derivatives(psi, h)
    slope = np.sqrt(px**2 + py**2)
    if np.all(slope <= 1.0 - delta):
        return None
    i, j = np.unravel_index(int(np.argmax(slope)), slope.shape)
    return int(i) + 1, int(j) + 1


def _boundary_blend(boundary_grid: np.ndarray) -> np.ndarray:
    """Transfinite (Coons) interpolant of the edge rows of boundary_grid"""
    g = boundary_grid
    s = np.linspace(0.0, 1.0, g.shape[0])[:, None]
    t = s.T
    corners = ((1 - s) * (1 - t) * g[0, 0] + s * (1 - t) * g[-1, 0]
               + (1 - s) * t * g[0, -1] + s * t * g[-1, -1])
    return (1 - s) * g[0, :] + s * g[-1, :] + (1 - t) * g[:, :1] + t * g[:, -1:] - corners


def _initial_guess(boundary_grid: np.ndarray, axis: np.ndarray, h: float, config: SolverConfig) -> np.ndarray:
    """Harmonic extension, its interior deviation from the edge blend halved until the guard holds"""
    harmonic = _harmonic_extension(boundary_grid)
    if _guard_violation(harmonic, h, config.delta_guard) is None:
        return harmonic
    base = _boundary_blend(boundary_grid)
    base[[0, -1], :] = boundary_grid[[0, -1], :]
    base[:, [0, -1]] = boundary_grid[:, [0, -1]]
    scale = 0.5
    for _ in range(config.max_halvings):
        psi = base + scale * (harmonic - base)
        if _guard_violation(psi, h, config.delta_guard) is None:
            logger.info("harmonic guess clipped to the guard (scale %g)", scale)
            return psi
        scale /= 2
    bad = _guard_violation(base, h, config.delta_guard)
    if bad is None:
        logger.info("harmonic guess clipped to the edge blend")
        return base
    node = (axis[bad[0]], axis[bad[1]])
    raise CausalBreakdownError(f"boundary data leave no space-like initial guess, steep at {list(node)}",
                               node)


def _boundary_values(boundary, nodes: np.ndarray) -> np.ndarray:
    if isinstance(boundary, Expression):
        return evaluate_jets(boundary, nodes).values
    if hasattr(boundary, "jets"):
        return boundary.jets(nodes).values
    return np.asarray(boundary(nodes[:, 0], nodes[:, 1]), dtype=float)


def solve_dirichlet_cmc(H: float, R: float, boundary, m: int,
                        config: SolverConfig = SolverConfig()) -> GridSolution:
    """Space-like graph over [-R, R]^2 with mean curvature H and psi = boundary on the edges.

    boundary is an Expression or surface of arity 2, or a callable g(u1, u2)
    on arrays; only its values on the edge nodes are used.
    """
    if m < 16:
        raise UsageError(f"grid needs m >= 16, got {m}")
    if not R > 0:
        raise UsageError(f"radius must be positive, got {R}")
    axis = np.linspace(-R, R, 2 * m + 1)
    h = R / m
    uu, vv = np.meshgrid(axis, axis, indexing="ij")
    edge = np.zeros(uu.shape, dtype=bool)
    edge[[0, -1], :] = edge[:, [0, -1]] = True
    grid = np.zeros(uu.shape)
    grid[edge] = _boundary_values(boundary, np.stack([uu[edge], vv[edge]], axis=-1))

    psi = _initial_guess(grid, axis, h, config)

    residual = float(np.max(np.abs(_operator(psi, h, H))))
    history = [residual]
    logger.info("dirichlet H=%g R=%g m=%d: initial residual %.3e", H, R, m, residual)
    for iteration in range(1, config.max_iters + 1):
        step = spsolve(_jacobian(psi, h, H).tocsc(), -_operator(psi, h, H).ravel())
        step = step.reshape(2 * m - 1, 2 * m - 1)
        damping = 1.0
        for _ in range(config.max_halvings + 1):
            trial = psi.copy()
            trial[1:-1, 1:-1] += damping * step
            bad = _guard_violation(trial, h, config.delta_guard)
            if bad is None:
                break
            damping /= 2
        else:
            node = (axis[bad[0]], axis[bad[1]])
            raise CausalBreakdownError(
                f"iterate leaves |grad psi| <= {1 - config.delta_guard} at {list(node)} "
                f"after {config.max_halvings} halvings", node)
        psi = trial
        residual = float(np.max(np.abs(_operator(psi, h, H))))
        history.append(residual)
        logger.debug("newton %d: residual %.3e (damping %g)", iteration, residual, damping)
        if residual <= config.newton_tol:
            logger.info("✓ converged in %d Newton steps, residual %.3e", iteration, residual)
            return GridSolution(axis, psi, float(H), float(R), m, iteration, residual, history)

    partial = GridSolution(axis, psi, float(H), float(R), m, config.max_iters, residual, history)
    raise NonConvergenceError(
        f"no convergence in {config.max_iters} Newton steps (residual {residual:.3e})", history, partial)


def residual(sol: GridSolution, s_reference=None) -> tuple[float, float | None]:
    """(sup of the discrete operator at interior nodes, sup node error against a reference surface)"""
    pde = float(np.max(np.abs(_operator(sol.values, sol.spacing, sol.H_target))))
    if s_reference is None:
        return pde, None
    exact = s_reference.jets(sol.nodes()).values.reshape(sol.values.shape)
    return pde, float(np.max(np.abs(sol.values - exact)))
