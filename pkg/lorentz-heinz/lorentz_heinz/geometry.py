"""Point-wise geometry of a graph in Lorentz-Minkowski space R^{n+1}_1.

Causal type, tilt |grad psi| / sqrt|1 - |grad psi|^2|, hyperbolic angle,
time-like unit normal, induced metric and mean curvature of the graph of psi,
plus a catalog of closed-form surfaces with exact reference values.

Orientation: at space-like points the normal has positive last component; at
time-like points H follows the divergence of grad psi / sqrt(|grad psi|^2 - 1).
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np

from lorentz_heinz import config
from lorentz_heinz.errors import CatalogError, CausalTypeError, UndefinedQuantityError
from lorentz_heinz.expr import Expression, Jet, JetBatch, evaluate_jet, evaluate_jets, parse

logger = logging.getLogger(__name__)


class CausalType(str, Enum):
    SPACE_LIKE = "SpaceLike"
    TIME_LIKE = "TimeLike"
    LIGHT_LIKE = "LightLike"


# numeric codes used by the batch helpers
SPACE, LIGHT, TIME = 1, 0, -1
_CODES = {SPACE: CausalType.SPACE_LIKE, LIGHT: CausalType.LIGHT_LIKE, TIME: CausalType.TIME_LIKE}


class Surface(Protocol):
    """Anything with a dimension and pointwise jets of its height function"""

    n: int

    def jet(self, point) -> Jet: ...

    def jets(self, points) -> JetBatch: ...


@dataclass(frozen=True)
class SurfaceReference:
    """Exact values a catalog surface is known to have"""

    causal: CausalType
    mean_curvature: float | None
    parameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GraphSurface:
    n: int
    psi: Expression
    name: str | None = None
    reference: SurfaceReference | None = None

    def __post_init__(self):
        if self.n < 1:
            raise CatalogError(f"dimension must be at least 1, got {self.n}")
        if self.psi.arity != self.n:
            raise CatalogError(f"expression arity {self.psi.arity} does not match n = {self.n}")

    @classmethod
    def from_text(cls, text: str, n: int) -> "GraphSurface":
        return cls(n, parse(text, n))

    def jet(self, point) -> Jet:
        return evaluate_jet(self.psi, point)

    def jets(self, points) -> JetBatch:
        return evaluate_jets(self.psi, points)


# Batch helpers

def causal_codes(norm_sq, tau: float | None = None) -> np.ndarray:
    """+1 space-like, -1 time-like, 0 light-like for each squared gradient norm"""
    tau = config.LIGHTLIKE_TOL if tau is None else tau
    q = np.asarray(norm_sq, dtype=float)
    return np.where(q < 1.0 - tau, SPACE, np.where(q > 1.0 + tau, TIME, LIGHT)).astype(np.int8)


def causal_of(code: int) -> CausalType:
    return _CODES[int(code)]


def tilt_from_norm_sq(norm_sq) -> np.ndarray:
    q = np.asarray(norm_sq, dtype=float)
    return np.sqrt(q) / np.sqrt(np.abs(1.0 - q))


def mean_curvature_from_jets(batch: JetBatch, n: int) -> np.ndarray:
    """H from gradients and Hessians; callers exclude light-like points"""
    g, h = batch.gradients, batch.hessians
    q = np.einsum("ki,ki->k", g, g)
    laplacian = np.trace(h, axis1=1, axis2=2)
    quadratic = np.einsum("ki,kij,kj->k", g, h, g)
    s = 1.0 - q
    # space-like: (S lap + g^T H g) / (n S^{3/2}); time-like is the negative over |S|^{3/2}
    return np.sign(s) * (s * laplacian + quadratic) / (n * np.abs(s) ** 1.5)


def lorentz_inner(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(x[:-1] @ y[:-1] - x[-1] * y[-1])


# Point operations

def _point(s: Surface, p) -> np.ndarray:
    return np.atleast_1d(np.asarray(p, dtype=float))


def classify_point(s: Surface, p, tau: float | None = None) -> CausalType:
    """SpaceLike if |grad psi|^2 < 1 - tau, TimeLike if > 1 + tau, else LightLike"""
    return causal_of(causal_codes(s.jet(_point(s, p)).grad_norm_sq, tau))


def _require_not_lightlike(s: Surface, p, tau, quantity: str) -> tuple[Jet, CausalType]:
    jet = s.jet(_point(s, p))
    causal = causal_of(causal_codes(jet.grad_norm_sq, tau))
    if causal is CausalType.LIGHT_LIKE:
        raise UndefinedQuantityError(
            f"{quantity} is undefined at light-like point {list(_point(s, p))}", point=p, causal=causal
        )
    return jet, causal


def _require_spacelike(s: Surface, p, tau, quantity: str) -> Jet:
    jet = s.jet(_point(s, p))
    causal = causal_of(causal_codes(jet.grad_norm_sq, tau))
    if causal is not CausalType.SPACE_LIKE:
        raise CausalTypeError(
            f"{quantity} needs a space-like point, {list(_point(s, p))} is {causal.value}",
            point=p,
            causal=causal,
        )
    return jet


def tilt(s: Surface, p, tau: float | None = None) -> float:
    """|grad psi| / sqrt|1 - |grad psi|^2|, the quantity bounded by the Heinz hypothesis"""
    jet, _ = _require_not_lightlike(s, p, tau, "tilt")
    return float(tilt_from_norm_sq(jet.grad_norm_sq))


def hyperbolic_angle(s: Surface, p, tau: float | None = None) -> float:
    """theta >= 0 with <nu, e_{n+1}>_L = -cosh(theta); space-like points only"""
    jet = _require_spacelike(s, p, tau, "hyperbolic angle")
    return math.asinh(float(tilt_from_norm_sq(jet.grad_norm_sq)))


def unit_normal(s: Surface, p, tau: float | None = None) -> np.ndarray:
    """Future-pointing time-like unit normal (grad psi, 1) / sqrt(1 - |grad psi|^2)"""
    jet = _require_spacelike(s, p, tau, "unit normal")
    return np.append(jet.gradient, 1.0) / math.sqrt(1.0 - jet.grad_norm_sq)


def mean_curvature(s: Surface, p, tau: float | None = None) -> float:
    jet, _ = _require_not_lightlike(s, p, tau, "mean curvature")
    batch = JetBatch(np.array([jet.value]), jet.gradient[None, :], jet.hessian[None, :, :])
    return float(mean_curvature_from_jets(batch, s.n)[0])


@dataclass(frozen=True, eq=False)
class MetricData:
    """Induced metric g_ij = delta_ij - psi_i psi_j and its determinant"""

    g: np.ndarray
    det: float

    def causal(self, tau: float | None = None) -> CausalType:
        # det = 1 - |grad psi|^2, so the light-like band is |det| <= tau
        return causal_of(causal_codes(1.0 - self.det, tau))


def induced_metric(s: Surface, p) -> MetricData:
    gradient = s.jet(_point(s, p)).gradient
    g = np.eye(s.n) - np.outer(gradient, gradient)
    # matrix determinant lemma
    return MetricData(g, 1.0 - float(gradient @ gradient))


@dataclass(frozen=True, eq=False)
class PointReport:
    point: list
    grad_norm: float
    causal: CausalType
    tilt: float | None
    sinh_theta: float | None
    mean_curvature: float | None

    def to_dict(self) -> dict:
        return {
            "point": [float(x) for x in self.point],
            "grad_norm": self.grad_norm,
            "causal": self.causal.value,
            "tilt": self.tilt,
            "sinh_theta": self.sinh_theta,
            "mean_curvature": self.mean_curvature,
        }


def point_report(s: Surface, p, tau: float | None = None) -> PointReport:
    p = _point(s, p)
    jet = s.jet(p)
    causal = causal_of(causal_codes(jet.grad_norm_sq, tau))
    grad_norm = math.sqrt(jet.grad_norm_sq)
    if causal is CausalType.LIGHT_LIKE:
        return PointReport(list(p), grad_norm, causal, None, None, None)
    t = tilt(s, p, tau)
    return PointReport(
        list(p),
        grad_norm,
        causal,
        t,
        t if causal is CausalType.SPACE_LIKE else None,
        mean_curvature(s, p, tau),
    )


# Catalog

def _number(x: float) -> str:
    return repr(float(x))


def _hyperboloid(n: int, H: float, shift: float = 0.0) -> GraphSurface:
    if H <= 0:
        raise CatalogError(f"hyperboloid needs H > 0, got {H}")
    squares = " + ".join(f"u{i}^2" for i in range(1, n + 1))
    text = f"sqrt({squares} + {_number(1.0 / H**2)})"
    if shift:
        text += f" + {_number(shift)}"
    reference = SurfaceReference(CausalType.SPACE_LIKE, float(H), {"n": n, "H": H, "shift": shift})
    return GraphSurface(n, parse(text, n), "hyperboloid", reference)


def _hyperplane(n: int, a, b: float = 0.0, tau: float | None = None) -> GraphSurface:
    a = [float(x) for x in np.atleast_1d(a)]
    if len(a) != n:
        raise CatalogError(f"hyperplane needs {n} slope components, got {len(a)}")
    terms = [f"{_number(ai)}*u{i}" for i, ai in enumerate(a, start=1) if ai != 0.0]
    text = " + ".join(terms + [_number(b)])
    causal = causal_of(causal_codes(sum(ai * ai for ai in a), tau))
    if causal is CausalType.LIGHT_LIKE:
        logger.warning("hyperplane with |a| = 1 is light-like; mean curvature is undefined")
    mean = None if causal is CausalType.LIGHT_LIKE else 0.0
    reference = SurfaceReference(causal, mean, {"n": n, "a": a, "b": float(b)})
    return GraphSurface(n, parse(text, n), "hyperplane", reference)


def _translation(n: int, h: str) -> GraphSurface:
    if n < 2:
        raise CatalogError("translation surfaces need n >= 2")
    profile = parse(h, 1)
    samples = np.linspace(-10.0, 10.0, 401)[:, None]
    slopes = evaluate_jets(profile, samples).gradients[:, 0]
    if np.any(slopes <= 0):
        bad = float(samples[np.flatnonzero(slopes <= 0)[0], 0])
        raise CatalogError(f"translation profile needs h' > 0, h'({bad}) <= 0")
    psi = parse(f"u{n} + ({h})", n)
    reference = SurfaceReference(CausalType.TIME_LIKE, 0.0, {"n": n, "h": h})
    return GraphSurface(n, psi, "translation", reference)


def _lightlike_plane(n: int) -> GraphSurface:
    reference = SurfaceReference(CausalType.LIGHT_LIKE, None, {"n": n})
    return GraphSurface(n, parse("u1", n), "lightlike_plane", reference)


def _constant(n: int, c: float = 0.0) -> GraphSurface:
    surface = _hyperplane(n, [0.0] * n, c)
    reference = SurfaceReference(CausalType.SPACE_LIKE, 0.0, {"n": n, "c": float(c)})
    return GraphSurface(n, surface.psi, "constant", reference)


CATALOG = {
    "hyperboloid": _hyperboloid,
    "hyperplane": _hyperplane,
    "translation": _translation,
    "lightlike_plane": _lightlike_plane,
    "constant": _constant,
}


def catalog(name: str, **parameters) -> GraphSurface:
    """Closed-form surface with its exact mean curvature and causal type attached"""
    if name not in CATALOG:
        raise CatalogError(f"unknown catalog surface '{name}' (choose from {', '.join(CATALOG)})")
    n = parameters.get("n")
    if not isinstance(n, int) or n < 1:
        raise CatalogError(f"catalog surface '{name}' needs an integer n >= 1, got {n!r}")
    try:
        return CATALOG[name](**parameters)
    except TypeError as exc:
        raise CatalogError(f"invalid parameters for '{name}': {exc}") from None
