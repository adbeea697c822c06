"""Command-line entry point: one subcommand per operation, JSON or CSV on stdout.

Exit status: 0 check passed or computation succeeded, 1 check failed
(theorem violation, hypothesis failure or solver failure), 2 usage, domain
or causal-type error.
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from lorentz_heinz import config
from lorentz_heinz.analysis import (
    LatticeSpec,
    bernstein_probe,
    boundedness_equivalence,
    dong_condition_probe,
    fit_gradient_bound,
    heinz_check,
    salavessa_check,
    stokes_check,
)
from lorentz_heinz.errors import ConfigError, HypothesisError, LorentzError, SolverError, UsageError
from lorentz_heinz.geometry import (
    GraphSurface,
    catalog,
    classify_point,
    hyperbolic_angle,
    induced_metric,
    mean_curvature,
    point_report,
    unit_normal,
)
from lorentz_heinz.quadrature import QuadratureSpec, unit_ball_constants
from lorentz_heinz.reports import HYPOTHESIS_FAILURE, PASSED, clean, to_csv, to_json
from lorentz_heinz.solvers import SolverConfig, residual, solve_dirichlet_cmc, solve_radial_cmc

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "classify", "curvature", "angle", "metric", "stokes", "heinz", "salavessa", "bernstein", "dong",
    "fit-bound", "solve-radial", "solve-dirichlet", "catalog", "constants", "boundedness",
)
FORMATS = ("json", "csv")


def _flag(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


@dataclass
class RunConfig:
    """Everything a subcommand needs; built from flags and an optional key=value file"""

    surface: str | None = None
    expr: str | None = None
    n: int | None = None
    H: float | None = None
    a: list | None = None
    b: float = 0.0
    c: float = 0.0
    shift: float = 0.0
    h: str | None = None
    point: list | None = None
    R: float | None = None
    radii: list | None = None
    M: float | None = None
    k: float | None = None
    eps: float | None = None
    scheme: str = "tensor-polar"
    resolution: int = 64
    seed: int = 0
    tolerance: float | None = None
    tau: float | None = None
    radial: int = 32
    angular: int = 16
    chain: bool = False
    step: float = 1e-3
    m: int = 32
    max_iters: int = 50
    output: str | None = None
    format: str = "json"

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        converters = {
            "n": int, "resolution": int, "seed": int, "radial": int, "angular": int, "m": int,
            "max_iters": int,
            "H": float, "b": float, "c": float, "shift": float, "R": float, "M": float, "k": float,
            "eps": float, "tolerance": float, "tau": float, "step": float, "chain": _flag,
        }
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"unknown setting '{key}'")
            try:
                if key in ("a", "point", "radii"):
                    kwargs[key] = config.parse_floats(value, key) if isinstance(value, str) else list(value)
                elif key in converters and value is not None:
                    kwargs[key] = converters[key](value)
                else:
                    kwargs[key] = value
            except (TypeError, ValueError):
                raise ConfigError(f"invalid value for '{key}': {value!r}") from None
        cfg = cls(**kwargs)
        if cfg.format not in FORMATS:
            raise UsageError(f"unknown format '{cfg.format}' (choose from {', '.join(FORMATS)})")
        if cfg.radii is not None and (any(r <= 0 for r in cfg.radii)
                                      or any(b <= a for a, b in zip(cfg.radii, cfg.radii[1:]))):
            raise UsageError(f"radii must be positive and increasing, got {cfg.radii}")
        return cfg

    def require(self, *names: str):
        missing = [f"--{name.replace('_', '-')}" for name in names if getattr(self, name) is None]
        if missing:
            raise UsageError(f"missing required option(s): {', '.join(missing)}")

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.scheme, self.resolution, self.seed)

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.radial, self.angular)


# Surfaces

def _catalog_parameters(cfg: RunConfig) -> dict:
    if cfg.surface == "hyperboloid":
        cfg.require("H")
        return {"H": cfg.H, "shift": cfg.shift}
    if cfg.surface == "hyperplane":
        cfg.require("a")
        return {"a": cfg.a, "b": cfg.b, "tau": cfg.tau}
    if cfg.surface == "translation":
        cfg.require("h")
        return {"h": cfg.h}
    if cfg.surface == "constant":
        return {"c": cfg.c}
    return {}


def build_surface(cfg: RunConfig) -> GraphSurface:
    """The one surface named by --surface (catalog) or --expr"""
    if (cfg.surface is None) == (cfg.expr is None):
        raise UsageError("give exactly one of --surface or --expr")
    cfg.require("n")
    if cfg.expr is not None:
        return GraphSurface.from_text(cfg.expr, cfg.n)
    return catalog(cfg.surface, n=cfg.n, **_catalog_parameters(cfg))


def _point(cfg: RunConfig, s: GraphSurface) -> list[float]:
    cfg.require("point")
    if len(cfg.point) != s.n:
        raise UsageError(f"--point needs {s.n} coordinates, got {len(cfg.point)}")
    return cfg.point


# Subcommands; each returns (payload, table or None, exit status)

def _classify(cfg: RunConfig):
    s = build_surface(cfg)
    report = point_report(s, _point(cfg, s), cfg.tau)
    return {"command": "classify", "point": report.point, "grad_norm": report.grad_norm,
            "causal": classify_point(s, report.point, cfg.tau).value}, None, 0


def _curvature(cfg: RunConfig):
    s = build_surface(cfg)
    p = _point(cfg, s)
    # light-like points raise with the point attached
    mean_curvature(s, p, cfg.tau)
    return {"command": "curvature", **point_report(s, p, cfg.tau).to_dict()}, None, 0


def _angle(cfg: RunConfig):
    s = build_surface(cfg)
    p = _point(cfg, s)
    theta = hyperbolic_angle(s, p, cfg.tau)
    return {"command": "angle", "point": p, "theta": theta, "sinh_theta": math.sinh(theta),
            "unit_normal": unit_normal(s, p, cfg.tau).tolist()}, None, 0


def _metric(cfg: RunConfig):
    s = build_surface(cfg)
    p = _point(cfg, s)
    metric = induced_metric(s, p)
    return {"command": "metric", "point": p, "g": metric.g.tolist(), "det": metric.det,
            "causal": metric.causal(cfg.tau).value}, None, 0


def _check_result(report):
    payload = {**report.to_dict(), "outcome": report.outcome}
    return payload, None, 0 if report.passed else 1


def _stokes(cfg: RunConfig):
    cfg.require("R")
    report = stokes_check(build_surface(cfg), cfg.R, cfg.quadrature(), cfg.tolerance, cfg.lattice(), cfg.tau)
    return _check_result(report)


def _heinz(cfg: RunConfig):
    cfg.require("R", "M", "k")
    q = cfg.quadrature() if cfg.chain else None
    return _check_result(heinz_check(build_surface(cfg), cfg.R, cfg.M, cfg.k, q, cfg.lattice(), cfg.tolerance,
                                     cfg.tau))


def _salavessa(cfg: RunConfig):
    cfg.require("R")
    q = cfg.quadrature() if cfg.chain else None
    return _check_result(salavessa_check(build_surface(cfg), cfg.R, q, cfg.lattice(), cfg.tolerance, cfg.tau))


def _boundedness(cfg: RunConfig):
    cfg.require("R")
    return _check_result(boundedness_equivalence(build_surface(cfg), cfg.R, cfg.lattice(), cfg.tau))


def _probe_result(report):
    payload = {**report.to_dict(), "outcome": report.outcome}
    return payload, (report.columns, report.rows), 0 if report.outcome == PASSED else 1


def _bernstein(cfg: RunConfig):
    cfg.require("eps", "radii")
    return _probe_result(bernstein_probe(build_surface(cfg), cfg.eps, cfg.radii, cfg.lattice(), cfg.tolerance,
                                         tau=cfg.tau))


def _dong(cfg: RunConfig):
    cfg.require("radii")
    return _probe_result(dong_condition_probe(build_surface(cfg), cfg.radii, cfg.lattice(), cfg.tolerance,
                                              tau=cfg.tau))


def _fit_bound(cfg: RunConfig):
    cfg.require("R", "k")
    fit = fit_gradient_bound(build_surface(cfg), cfg.R, cfg.k, cfg.lattice(), cfg.tau)
    return {"check": "fit-bound", **fit.to_dict()}, None, 0


def _solve_radial(cfg: RunConfig):
    cfg.require("n", "H", "R")
    profile = solve_radial_cmc(cfg.n, cfg.H, cfg.R, cfg.step)
    return {"command": "solve-radial", **profile.to_dict()}, profile.table(), 0


def _solve_dirichlet(cfg: RunConfig):
    cfg.require("H", "R")
    if cfg.n is None:
        cfg.n = 2
    boundary = build_surface(cfg)
    if boundary.n != 2:
        raise UsageError(f"the Dirichlet solver works on planar grids, got n = {boundary.n}")
    solution = solve_dirichlet_cmc(cfg.H, cfg.R, boundary, cfg.m, SolverConfig(max_iters=cfg.max_iters))
    pde, _ = residual(solution)
    payload = {"command": "solve-dirichlet", **solution.header(), "pde_residual": pde,
               "residual_history": solution.residual_history}
    return payload, solution.table(), 0


def _catalog(cfg: RunConfig):
    cfg.require("surface")
    s = build_surface(cfg)
    reference = s.reference
    return {"command": "catalog", "name": s.name, "n": s.n, "expression": s.psi.text,
            "causal": reference.causal.value, "mean_curvature": reference.mean_curvature,
            "parameters": clean(reference.parameters)}, None, 0


def _constants(cfg: RunConfig):
    cfg.require("n")
    volume, area = unit_ball_constants(cfg.n)
    return {"command": "constants", "n": cfg.n, "V_n": volume, "A_{n-1}": area}, None, 0


COMMANDS = {
    "classify": _classify,
    "curvature": _curvature,
    "angle": _angle,
    "metric": _metric,
    "stokes": _stokes,
    "heinz": _heinz,
    "salavessa": _salavessa,
    "boundedness": _boundedness,
    "bernstein": _bernstein,
    "dong": _dong,
    "fit-bound": _fit_bound,
    "solve-radial": _solve_radial,
    "solve-dirichlet": _solve_dirichlet,
    "catalog": _catalog,
    "constants": _constants,
}


def _error_payload(subcommand: str, exc: LorentzError) -> dict:
    return {"command": subcommand, "error": exc.kind, "message": str(exc), **clean(exc.details())}


def run(subcommand: str, cfg: RunConfig, stream=None) -> int:
    """Execute one subcommand, write its report and return the exit status"""
    stream = sys.stdout if stream is None else stream
    table = None
    try:
        if subcommand not in COMMANDS:
            raise UsageError(f"unknown subcommand '{subcommand}' (choose from {', '.join(SUBCOMMANDS)})")
        if cfg.format == "csv" and subcommand not in ("bernstein", "dong", "solve-radial", "solve-dirichlet"):
            raise UsageError("csv output is available for bernstein, dong, solve-radial and solve-dirichlet")
        payload, table, status = COMMANDS[subcommand](cfg)
    except HypothesisError as exc:
        logger.warning("hypothesis fails: %s", exc)
        payload, table, status = {**_error_payload(subcommand, exc), "outcome": HYPOTHESIS_FAILURE}, None, 1
    except SolverError as exc:
        logger.error("solver failed: %s", exc)
        payload, table, status = _error_payload(subcommand, exc), None, 1
    except LorentzError as exc:
        logger.error("%s", exc)
        payload, table, status = _error_payload(subcommand, exc), None, 2

    if cfg.format == "csv" and table is not None:
        text = to_csv(*table)
    else:
        text = to_json({key: clean(value) for key, value in payload.items()})
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
        logger.info("✓ wrote %s", cfg.output)
    else:
        stream.write(text)
    return status


# Argument parsing

_OPTIONS = {
    "surface": "catalog surface: hyperboloid, hyperplane, translation, lightlike_plane, constant",
    "expr": "height function psi as an expression in u1..un",
    "n": "dimension of the domain",
    "H": "mean curvature (hyperboloid, solvers)",
    "a": "hyperplane slope, comma-separated",
    "b": "hyperplane offset",
    "c": "value of the constant graph",
    "shift": "additive constant on the hyperboloid",
    "h": "translation profile as an expression in u1",
    "point": "evaluation point, comma-separated",
    "R": "ball radius (r_max for solve-radial, half side for solve-dirichlet)",
    "radii": "increasing radii for probes, comma-separated",
    "M": "gradient bound constant",
    "k": "gradient bound exponent",
    "eps": "decay exponent of the vanishing criterion",
    "scheme": "quadrature scheme: tensor-polar or monte-carlo",
    "resolution": "points per axis or sample count",
    "seed": "monte-carlo seed",
    "tolerance": "absolute check tolerance",
    "tau": "light-like tolerance",
    "radial": "radial steps of the sampling lattice",
    "angular": "angular density of the sampling lattice",
    "step": "radial step for solve-radial",
    "m": "half grid size for solve-dirichlet",
    "max-iters": "Newton iteration cap",
    "output": "write the report to this path instead of stdout",
    "format": "json or csv",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Graph hypersurfaces in Lorentz-Minkowski space")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    for name, help_text in _OPTIONS.items():
        # unset options stay out of the namespace so config files can fill them
        parser.add_argument(f"--{name}", default=argparse.SUPPRESS, help=help_text)
    parser.add_argument("--chain", action="store_true", default=argparse.SUPPRESS,
                        help="also integrate the intermediate bounds (heinz, salavessa)")
    parser.add_argument("--config", help="key=value file supplying any option")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging on stderr")
    return parser


def configure_logging(verbose: bool = False):
    level = logging.DEBUG if verbose else getattr(logging, str(config.LOG_LEVEL).upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    subcommand = args.pop("subcommand")
    config_path = args.pop("config")
    configure_logging(args.pop("verbose"))

    try:
        values = config.load_config_file(config_path) if config_path else {}
        values.update(args)
        cfg = RunConfig.from_mapping(values)
    except LorentzError as exc:
        sys.stdout.write(to_json(_error_payload(subcommand, exc)))
        return 2
    return run(subcommand, cfg)
