"""Numerical verification of Heinz-type estimates on origin-centred balls.

Sup/inf quantities (gradient bounds, inf |H|, m_D) are estimated on a closed
polar lattice with one local refinement pass around the extremal node; they
are certified only at the sampled nodes and the lattice spacing is reported
with every result. Integrals use lorentz_heinz.quadrature.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from lorentz_heinz import config
from lorentz_heinz.errors import CausalTypeError, HypothesisError, QuadratureError, UsageError
from lorentz_heinz.geometry import (
    LIGHT,
    SPACE,
    TIME,
    CausalType,
    Surface,
    causal_codes,
    causal_of,
    mean_curvature_from_jets,
    tilt_from_norm_sq,
)
from lorentz_heinz.quadrature import (
    BallDomain,
    QuadratureSpec,
    coarse_sphere_nodes,
    evaluate_chunks,
    integrate_ball,
    pairwise_sum,
    sphere_nodes,
    unit_ball_constants,
    weighted_sum,
)
from lorentz_heinz.reports import CheckReport, ProbeReport

logger = logging.getLogger(__name__)

# slack on the hypothesis bound at a node (equality cases are sampled exactly)
BOUND_RTOL = 1e-9
BOUND_ATOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Closed-ball polar lattice: radial steps, angular density, refinement switch"""

    radial: int = 32
    angular: int = 16
    refine: bool = True

    def __post_init__(self):
        if self.radial < 2 or self.angular < 2:
            raise QuadratureError(f"lattice needs radial >= 2 and angular >= 2, got {self}")


@dataclass(frozen=True)
class BoundFit:
    """Smallest M with tilt <= M (|u|^2)^k at the sampled nodes"""

    M: float
    k: float
    valid: bool
    R: float
    node: list
    spacing: float

    def to_dict(self) -> dict:
        return {"M": self.M, "k": self.k, "valid": self.valid, "R": self.R, "node": self.node,
                "lattice_spacing": self.spacing}


# Lattice sampling

def _directions(n: int, angular: int) -> np.ndarray:
    if n == 1:
        return np.array([[-1.0], [1.0]])
    m = max(1, (angular // 2) // (n - 1))
    # a single shell of the cube: no two points share a direction
    cube = np.array([c for c in itertools.product(range(-m, m + 1), repeat=n) if max(map(abs, c)) == m],
                    dtype=float)
    return cube / np.linalg.norm(cube, axis=1, keepdims=True)


def lattice_nodes(n: int, R: float, lattice: LatticeSpec) -> tuple[np.ndarray, float]:
    """Origin, interior shells and the boundary sphere; returns nodes and radial spacing"""
    spacing = R / lattice.radial
    directions = _directions(n, lattice.angular)
    shells = [spacing * j * directions for j in range(1, lattice.radial + 1)]
    return np.concatenate([np.zeros((1, n))] + shells), spacing


def _refinement_nodes(center: np.ndarray, R: float, spacing: float) -> np.ndarray:
    n = center.shape[0]
    offsets = np.array(list(itertools.product((-0.5, 0.0, 0.5), repeat=n))) * spacing
    nodes = center + offsets
    radii = np.linalg.norm(nodes, axis=1)
    outside = radii > R
    nodes[outside] *= (R / radii[outside])[:, None]
    return nodes


@dataclass
class _Sample:
    nodes: np.ndarray
    batch: object
    codes: np.ndarray
    spacing: float


def _sample(s: Surface, R: float, lattice: LatticeSpec, tau) -> _Sample:
    if not R > 0:
        raise QuadratureError(f"radius must be positive, got {R}")
    nodes, spacing = lattice_nodes(s.n, R, lattice)
    batch = evaluate_chunks(s.jets, nodes)
    codes = causal_codes(batch.grad_norm_sq, tau)
    logger.debug("sampled %d lattice nodes on B^%d(%g)", len(nodes), s.n, R)
    return _Sample(nodes, batch, codes, spacing)


def _uniform_causal(nodes: np.ndarray, codes: np.ndarray) -> CausalType:
    """Single causal type over the nodes, else a CausalTypeError naming a node"""
    light = np.flatnonzero(codes == LIGHT)
    if light.size:
        node = nodes[light[0]]
        raise CausalTypeError(f"light-like point at {node.tolist()}", point=node,
                              causal=CausalType.LIGHT_LIKE)
    if np.any(codes == SPACE) and np.any(codes == TIME):
        minority = TIME if np.count_nonzero(codes == TIME) <= np.count_nonzero(codes == SPACE) else SPACE
        node = nodes[np.flatnonzero(codes == minority)[0]]
        raise CausalTypeError(
            f"mixed causal type on the domain: {causal_of(minority).value} point at {node.tolist()}",
            point=node,
            causal=causal_of(minority),
        )
    return causal_of(codes[0])


def _check_refinement(local: np.ndarray, local_codes: np.ndarray, sample_codes: np.ndarray):
    light = np.flatnonzero(local_codes == LIGHT)
    if light.size:
        node = local[light[0]]
        raise CausalTypeError(f"light-like point at {node.tolist()}", point=node,
                              causal=CausalType.LIGHT_LIKE)
    if np.all(sample_codes == sample_codes[0]) and np.any(local_codes != sample_codes[0]):
        node = local[np.flatnonzero(local_codes != sample_codes[0])[0]]
        raise CausalTypeError(f"mixed causal type near {node.tolist()}", point=node)


def _extremum(s: Surface, R: float, sample: _Sample, quantity, mode: str, lattice: LatticeSpec, tau,
              exclude_origin: bool = False) -> tuple[float, np.ndarray]:
    """max or min of quantity(nodes, batch) over the lattice, refined once around the extremal node"""
    worst = -np.inf if mode == "max" else np.inf
    pick = np.argmax if mode == "max" else np.argmin

    def evaluate(nodes, batch):
        values = quantity(nodes, batch)
        if exclude_origin:
            values = np.where(np.linalg.norm(nodes, axis=1) > 0, values, worst)
        return values

    values = evaluate(sample.nodes, sample.batch)
    index = int(pick(values))
    best, node = float(values[index]), sample.nodes[index]
    if lattice.refine and math.isfinite(best):
        local = _refinement_nodes(node, R, sample.spacing)
        local_batch = s.jets(local)
        _check_refinement(local, causal_codes(local_batch.grad_norm_sq, tau), sample.codes)
        local_values = evaluate(local, local_batch)
        j = int(pick(local_values))
        if (local_values[j] > best) if mode == "max" else (local_values[j] < best):
            best, node = float(local_values[j]), local[j]
    return best, node


def _abs_mean_curvature(n: int):
    return lambda nodes, batch: np.abs(mean_curvature_from_jets(batch, n))


def _tilt(nodes, batch):
    return tilt_from_norm_sq(batch.grad_norm_sq)


def _grad_norm(nodes, batch):
    return np.sqrt(batch.grad_norm_sq)


# Flux of omega through the sphere

def _flux_values(s: Surface, nodes: np.ndarray, normals: np.ndarray, tau, expected=None) -> np.ndarray:
    batch = evaluate_chunks(s.jets, nodes)
    q = batch.grad_norm_sq
    codes = causal_codes(q, tau)
    light = np.flatnonzero(codes == LIGHT)
    if light.size:
        node = nodes[light[0]]
        raise CausalTypeError(f"light-like point on the boundary sphere at {node.tolist()}", point=node,
                              causal=CausalType.LIGHT_LIKE)
    if expected is not None and np.any(codes != expected):
        node = nodes[np.flatnonzero(codes != expected)[0]]
        raise CausalTypeError(f"mixed causal type on the boundary sphere at {node.tolist()}", point=node)
    field = batch.gradients / np.sqrt(np.abs(1.0 - q))[:, None]
    return np.einsum("ki,ki->k", field, normals)


def integrate_sphere_flux(s: Surface, R: float, q: QuadratureSpec, tau: float | None = None,
                          expected=None) -> tuple[float, float]:
    """Flux of grad psi / sqrt|1 - |grad psi|^2| through the sphere of radius R (the integral of omega)"""
    d = BallDomain(s.n, R)
    nodes, normals, weights = sphere_nodes(d, q)
    value, error = weighted_sum(_flux_values(s, nodes, normals, tau, expected), weights, q)
    if q.scheme == "tensor-polar" and s.n > 1:
        coarse_nodes, coarse_normals, coarse_weights = coarse_sphere_nodes(d, q)
        coarse = _flux_values(s, coarse_nodes, coarse_normals, tau, expected)
        error = abs(value - pairwise_sum(coarse * coarse_weights))
    logger.debug("sphere flux n=%d R=%g: %.15g +- %.3g", s.n, R, value, error)
    return value, error


def _tolerance(tolerance: float | None) -> float:
    return config.TOLERANCE if tolerance is None else float(tolerance)


def _check_radii(radii) -> list[float]:
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise UsageError(f"radii must be positive and strictly increasing, got {radii}")
    return radii


def _n_times_mean_curvature(s: Surface, expected: int, tau):
    def field(points):
        batch = s.jets(points)
        codes = causal_codes(batch.grad_norm_sq, tau)
        if np.any(codes != expected):
            node = points[np.flatnonzero(codes != expected)[0]]
            raise CausalTypeError(f"causal type changes inside the ball at {node.tolist()}", point=node,
                                  causal=causal_of(codes[np.flatnonzero(codes != expected)[0]]))
        return s.n * mean_curvature_from_jets(batch, s.n)

    return field


# Checks

def stokes_check(s: Surface, R: float, q: QuadratureSpec, tolerance: float | None = None,
                 lattice: LatticeSpec = LatticeSpec(), tau: float | None = None) -> CheckReport:
    """Integral of n H over the ball against the flux of omega through its boundary"""
    tolerance = _tolerance(tolerance)
    sample = _sample(s, R, lattice, tau)
    causal = _uniform_causal(sample.nodes, sample.codes)
    expected = int(sample.codes[0])
    lhs, lhs_error = integrate_ball(_n_times_mean_curvature(s, expected, tau), BallDomain(s.n, R), q)
    rhs, rhs_error = integrate_sphere_flux(s, R, q, tau, expected)
    residual = abs(lhs - rhs)
    quadrature_error = lhs_error + rhs_error
    passed = residual <= tolerance + quadrature_error
    logger.info("%s stokes R=%g: %.12g vs %.12g", "✓" if passed else "✗", R, lhs, rhs)
    return CheckReport("stokes", lhs, rhs, residual, tolerance, quadrature_error, passed, {
        "n": s.n, "R": R, "causal": causal.value, "scheme": q.scheme, "resolution": q.resolution,
        "seed": q.seed, "lhs_error": lhs_error, "rhs_error": rhs_error,
    })


def fit_gradient_bound(s: Surface, R: float, k: float, lattice: LatticeSpec = LatticeSpec(),
                       tau: float | None = None) -> BoundFit:
    """Smallest M with tilt(u) <= M (|u|^2)^k on the sampled closed ball"""
    sample = _sample(s, R, lattice, tau)
    light = np.flatnonzero(sample.codes == LIGHT)
    if light.size:
        node = sample.nodes[light[0]]
        raise CausalTypeError(f"light-like sample at {node.tolist()}", point=node,
                              causal=CausalType.LIGHT_LIKE)
    tilt_at_origin = float(_tilt(sample.nodes[:1], sample.batch)[0])
    if k > 0 and tilt_at_origin > BOUND_ATOL:
        raise HypothesisError(
            f"no finite M for k = {k}: tilt at the origin is {tilt_at_origin:.6g} while (|u|^2)^k vanishes",
            node=sample.nodes[0],
            detail={"k": k, "tilt_at_origin": tilt_at_origin},
        )

    def ratio(nodes, batch):
        r2 = np.einsum("ki,ki->k", nodes, nodes)
        with np.errstate(divide="ignore", invalid="ignore"):
            return _tilt(nodes, batch) / r2**k

    # (|u|^2)^0 = 1 at the origin, so only k > 0 leaves it out
    M, node = _extremum(s, R, sample, ratio, "max", lattice, tau, exclude_origin=k > 0)
    valid = math.isfinite(M)
    # M > 0 even for a flat graph
    M = max(M, np.finfo(float).tiny)
    logger.debug("fit R=%g k=%g: M=%.12g at %s", R, k, M, node.tolist())
    return BoundFit(M, float(k), valid, float(R), node.tolist(), sample.spacing)


def _ball_chain(s: Surface, R: float, q: QuadratureSpec, expected: int, tau) -> dict:
    ball, ball_error = integrate_ball(_n_times_mean_curvature(s, expected, tau), BallDomain(s.n, R), q)
    flux, flux_error = integrate_sphere_flux(s, R, q, tau, expected)
    return {"ball_integral": abs(ball), "ball_integral_error": ball_error,
            "boundary_flux": abs(flux), "boundary_flux_error": flux_error}


def heinz_check(s: Surface, R: float, M: float, k: float, q: QuadratureSpec | None = None,
                lattice: LatticeSpec = LatticeSpec(), tolerance: float | None = None,
                tau: float | None = None) -> CheckReport:
    """alpha = inf |H| against M R^(2k - 1) once tilt <= M (|u|^2)^k is verified at every node"""
    if not M > 0:
        raise UsageError(f"M must be positive, got {M}")
    tolerance = _tolerance(tolerance)
    sample = _sample(s, R, lattice, tau)
    causal = _uniform_causal(sample.nodes, sample.codes)

    tilts = _tilt(sample.nodes, sample.batch)
    r2 = np.einsum("ki,ki->k", sample.nodes, sample.nodes)
    with np.errstate(divide="ignore"):
        bound = M * r2**k
    violated = np.flatnonzero(tilts > bound * (1.0 + BOUND_RTOL) + BOUND_ATOL)
    if violated.size:
        i = violated[0]
        raise HypothesisError(
            f"gradient bound fails at {sample.nodes[i].tolist()}: tilt {tilts[i]:.12g} > {bound[i]:.12g}",
            node=sample.nodes[i],
            detail={"tilt": float(tilts[i]), "bound": float(bound[i]), "M": M, "k": k},
        )

    alpha, alpha_node = _extremum(s, R, sample, _abs_mean_curvature(s.n), "min", lattice, tau)
    rhs = M * R ** (2 * k - 1)
    passed = alpha <= rhs + tolerance
    volume, area = unit_ball_constants(s.n)
    metadata = {
        "n": s.n, "R": R, "M": M, "k": k, "alpha": alpha, "alpha_node": alpha_node.tolist(),
        "causal": causal.value, "lattice_spacing": sample.spacing, "V_n": volume, "A_{n-1}": area,
    }
    if q is not None:
        chain = _ball_chain(s, R, q, int(sample.codes[0]), tau)
        lower = s.n * alpha * volume * R**s.n
        upper = M * R ** (s.n + 2 * k - 1) * area
        chain["ball_lower_bound"] = lower
        chain["boundary_upper_bound"] = upper
        chain["chain_holds"] = bool(
            chain["ball_integral"] + chain["ball_integral_error"] + tolerance >= lower
            and chain["boundary_flux"] <= upper + chain["boundary_flux_error"] + tolerance
        )
        metadata.update(chain)
    logger.info("%s heinz R=%g: alpha=%.12g <= %.12g", "✓" if passed else "✗", R, alpha, rhs)
    return CheckReport("heinz", alpha, rhs, alpha - rhs, tolerance, 0.0, passed, metadata)


def salavessa_check(s: Surface, R: float, q: QuadratureSpec | None = None,
                    lattice: LatticeSpec = LatticeSpec(), tolerance: float | None = None,
                    tau: float | None = None) -> CheckReport:
    """min |H| <= (1/n) m_D / sqrt|1 - m_D^2| * A(boundary) / V(ball) on a ball domain"""
    tolerance = _tolerance(tolerance)
    lightlike_tol = config.LIGHTLIKE_TOL if tau is None else tau
    sample = _sample(s, R, lattice, tau)
    causal = _uniform_causal(sample.nodes, sample.codes)

    # t / sqrt|1 - t^2| increases on (0, 1) and decreases on (1, inf)
    mode = "max" if causal is CausalType.SPACE_LIKE else "min"
    m_D, m_node = _extremum(s, R, sample, _grad_norm, mode, lattice, tau)
    if abs(1.0 - m_D**2) <= lightlike_tol:
        raise CausalTypeError(f"m_D = {m_D} is light-like", point=m_node, causal=CausalType.LIGHT_LIKE)
    lhs, lhs_node = _extremum(s, R, sample, _abs_mean_curvature(s.n), "min", lattice, tau)

    volume, area = unit_ball_constants(s.n)
    slope = m_D / math.sqrt(abs(1.0 - m_D**2))
    rhs = slope * (area * R ** (s.n - 1)) / (volume * R**s.n) / s.n
    passed = lhs <= rhs + tolerance
    metadata = {
        "n": s.n, "R": R, "m_D": m_D, "m_D_node": m_node.tolist(), "min_H_node": lhs_node.tolist(),
        "causal": causal.value, "lattice_spacing": sample.spacing, "V_n": volume, "A_{n-1}": area,
    }
    if q is not None:
        flux, flux_error = integrate_sphere_flux(s, R, q, tau, int(sample.codes[0]))
        flux_bound = slope * area * R ** (s.n - 1)
        metadata.update({
            "boundary_flux": abs(flux), "boundary_flux_error": flux_error, "flux_bound": flux_bound,
            "flux_bound_holds": bool(abs(flux) <= flux_bound + flux_error + tolerance),
        })
    logger.info("%s salavessa R=%g: %.12g <= %.12g", "✓" if passed else "✗", R, lhs, rhs)
    return CheckReport("salavessa", lhs, rhs, lhs - rhs, tolerance, 0.0, passed, metadata)


def boundedness_equivalence(s: Surface, R: float, lattice: LatticeSpec = LatticeSpec(),
                            tau: float | None = None) -> CheckReport:
    """sup sinh(theta) = s and sup |grad psi| = C are tied by C = s / sqrt(1 + s^2)"""
    sample = _sample(s, R, lattice, tau)
    if np.any(sample.codes != SPACE):
        node = sample.nodes[np.flatnonzero(sample.codes != SPACE)[0]]
        raise CausalTypeError(f"boundedness equivalence needs a space-like graph, see {node.tolist()}",
                              point=node)
    tilt_sup, _ = _extremum(s, R, sample, _tilt, "max", lattice, tau)
    grad_sup, node = _extremum(s, R, sample, _grad_norm, "max", lattice, tau)
    bound = tilt_sup / math.sqrt(1.0 + tilt_sup**2)
    residual = abs(grad_sup - bound)
    return CheckReport("boundedness", grad_sup, bound, residual, 1e-12, 0.0, residual <= 1e-12, {
        "n": s.n, "R": R, "sup_sinh_theta": tilt_sup, "node": node.tolist(),
        "lattice_spacing": sample.spacing,
    })


# Probes over growing balls

def bernstein_probe(s: Surface, eps: float, radii, lattice: LatticeSpec = LatticeSpec(),
                    tolerance: float | None = None, growth_tol: float = 1e-2,
                    tau: float | None = None) -> ProbeReport:
    """Heinz ceiling M_R R^(-2 eps) with k = 1/2 - eps on each ball, and whether H is forced to vanish"""
    if not eps > 0:
        raise UsageError(f"epsilon must be positive, got {eps}")
    tolerance = _tolerance(tolerance)
    radii = _check_radii(radii)
    if len(radii) < 2:
        raise UsageError("the growth test needs at least two radii")
    largest = _sample(s, radii[-1], lattice, tau)
    causal = _uniform_causal(largest.nodes, largest.codes)
    k = 0.5 - eps

    rows = []
    failure = None
    for R in radii:
        try:
            M_R = fit_gradient_bound(s, R, k, lattice, tau).M
        except HypothesisError as exc:
            M_R, failure = math.inf, str(exc)
        sample = largest if R == radii[-1] else _sample(s, R, lattice, tau)
        alpha, _ = _extremum(s, R, sample, _abs_mean_curvature(s.n), "min", lattice, tau)
        rows.append((R, M_R, alpha, M_R * R ** (-2 * eps)))

    fits = [row[1] for row in rows]
    ceilings = [row[3] for row in rows]
    growth, decay = math.inf, 0.0
    if failure is None:
        growth = (fits[-1] - fits[-2]) / fits[-2]
        decay = 1.0 - ceilings[-1] / ceilings[-2] if ceilings[-2] > 0 else 1.0
    # bounded M_R: the ceiling shrinks by (R_prev / R)^(2 eps)
    if failure is None and growth > growth_tol:
        failure = f"fitted M_R keeps growing (relative growth {growth:.3g} > {growth_tol})"
    elif failure is None and decay <= growth_tol:
        failure = f"ceiling M_R R^(-2 eps) does not decay (relative decay {decay:.3g} <= {growth_tol})"
    hypothesis_holds = failure is None
    violated = [row[0] for row in rows if math.isfinite(row[3]) and row[2] > row[3] + tolerance]
    decreasing = all(math.isfinite(b) and b < a * (1.0 - growth_tol) for a, b in zip(ceilings, ceilings[1:]))

    if not hypothesis_holds:
        verdict = "hypothesis-fails"
    elif violated:
        verdict = "theorem-violation"
    else:
        verdict = "consistent-with-vanishing"
    logger.info("bernstein probe eps=%g: %s", eps, verdict)
    return ProbeReport("bernstein", ("R", "M_R", "alpha_R", "ceiling"), rows, verdict, {
        "n": s.n, "eps": eps, "k": k, "causal": causal.value, "growth": growth, "ceiling_decay": decay,
        "growth_tol": growth_tol,
        "hypothesis_holds": hypothesis_holds, "hypothesis_failure": failure, "violated_radii": violated,
        "ceiling_decreasing": decreasing,
        "vanishing": rows[-1][2] <= tolerance,
        # entire time-like graphs: evidence only, optimality of the criterion is open
        "sharpness_claimed": False,
    })


def dong_condition_probe(s: Surface, radii, lattice: LatticeSpec = LatticeSpec(),
                         tolerance: float | None = None, decay_margin: float = 0.1,
                         tau: float | None = None) -> ProbeReport:
    """Evidence for 1/sqrt(1 - |grad psi|^2) = o(r) and for H vanishing"""
    tolerance = _tolerance(tolerance)
    radii = _check_radii(radii)
    if len(radii) < 2:
        raise UsageError("the growth test needs at least two radii")

    def lorentz_factor(nodes, batch):
        return 1.0 / np.sqrt(1.0 - batch.grad_norm_sq)

    rows = []
    H_inf = math.inf
    for R in radii:
        sample = _sample(s, R, lattice, tau)
        if np.any(sample.codes != SPACE):
            node = sample.nodes[np.flatnonzero(sample.codes != SPACE)[0]]
            raise CausalTypeError(f"non-space-like sample at {node.tolist()}", point=node,
                                  causal=causal_of(sample.codes[np.flatnonzero(sample.codes != SPACE)[0]]))
        G, _ = _extremum(s, R, sample, lorentz_factor, "max", lattice, tau)
        H_sup, _ = _extremum(s, R, sample, _abs_mean_curvature(s.n), "max", lattice, tau)
        H_min, _ = _extremum(s, R, sample, _abs_mean_curvature(s.n), "min", lattice, tau)
        H_inf = min(H_inf, H_min)
        rows.append((R, G / R, G, H_sup))

    exponent = math.log(rows[-1][2] / rows[-2][2]) / math.log(radii[-1] / radii[-2])
    ratios = [row[1] for row in rows]
    non_increasing = all(b <= a * (1 + 1e-12) for a, b in zip(ratios, ratios[1:]))
    sublinear = exponent <= 1.0 - decay_margin and non_increasing
    H_sup = max(row[3] for row in rows)
    maximal = H_sup <= tolerance
    constant_mean_curvature = H_sup - H_inf <= tolerance

    if not sublinear:
        verdict = "hypothesis-fails"
    elif maximal:
        verdict = "consistent-with-hyperplane"
    elif constant_mean_curvature:
        verdict = "theorem-violation"
    else:
        verdict = "not-constant-mean-curvature"
    logger.info("dong probe: %s (growth exponent %.4g)", verdict, exponent)
    return ProbeReport("dong", ("R", "ratio", "sup_lorentz_factor", "sup_abs_H"), rows, verdict, {
        "n": s.n, "growth_exponent": exponent, "decay_margin": decay_margin, "sublinear": sublinear,
        "maximal": maximal, "constant_mean_curvature": constant_mean_curvature,
    })
