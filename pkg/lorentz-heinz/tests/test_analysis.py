"""Tests for the Stokes identity, Heinz/Salavessa checks and the vanishing probes"""
import math

import numpy as np
import pytest

from lorentz_heinz.analysis import (
    LatticeSpec,
    bernstein_probe,
    boundedness_equivalence,
    dong_condition_probe,
    fit_gradient_bound,
    heinz_check,
    integrate_sphere_flux,
    lattice_nodes,
    salavessa_check,
    stokes_check,
)
from lorentz_heinz.errors import CausalTypeError, HypothesisError, QuadratureError, UsageError
from lorentz_heinz.geometry import GraphSurface, catalog
from lorentz_heinz.quadrature import QuadratureSpec
from lorentz_heinz.reports import HYPOTHESIS_FAILURE, PASSED, to_json


def surface(text: str, n: int) -> GraphSurface:
    return GraphSurface.from_text(text, n)


@pytest.fixture
def hyperboloid():
    return catalog("hyperboloid", n=2, H=1.0)


@pytest.fixture
def slope_plane():
    """Space-like hyperplane with |a| = 0.6"""
    return catalog("hyperplane", n=2, a=[0.6, 0.0], b=1.0)


def perturbed(rng, n: int, time_like: bool) -> GraphSurface:
    """Quadratic plus bump field kept away from the light cone on balls up to R = 2"""
    coefficients = [float(x) for x in rng.uniform(-1, 1, 4)]
    slope = "2*u1 + " if time_like else f"{0.3 * coefficients[0]!r}*u1 + "
    squares = " + ".join(f"u{i}^2" for i in range(1, n + 1))
    text = (f"{slope}{0.05 * coefficients[1]!r}*u1^2 + {0.05 * coefficients[2]!r}*u1*u2"
            f" + {0.1 * coefficients[3]!r}*exp(-({squares}))")
    return surface(text, n)


class TestLattice:
    def test_nodes_cover_origin_and_boundary(self):
        """Test the closed-ball lattice includes the origin and the sphere"""
        nodes, spacing = lattice_nodes(2, 3.0, LatticeSpec(radial=10, angular=8))
        radii = np.linalg.norm(nodes, axis=1)
        assert radii.min() == 0.0
        assert radii.max() == pytest.approx(3.0)
        assert spacing == pytest.approx(0.3)

    @pytest.mark.parametrize("n,angular", [(2, 8), (2, 16), (3, 16)])
    def test_directions_are_distinct(self, n, angular):
        """Test every lattice shell carries each direction once"""
        nodes, _ = lattice_nodes(n, 1.0, LatticeSpec(radial=2, angular=angular))
        boundary = nodes[np.isclose(np.linalg.norm(nodes, axis=1), 1.0)]
        assert len(np.unique(np.round(boundary, 12), axis=0)) == len(boundary)

    def test_lattice_validation(self):
        """Test degenerate lattices are rejected"""
        with pytest.raises(QuadratureError):
            LatticeSpec(radial=1)


class TestSphereFlux:
    def test_hyperboloid_flux(self, hyperboloid):
        """Test F = u gives flux 2 pi through the unit circle"""
        value, _ = integrate_sphere_flux(hyperboloid, 1.0, QuadratureSpec(resolution=64))
        assert value == pytest.approx(2 * math.pi, rel=1e-12)

    def test_constant_field_has_no_flux(self, slope_plane):
        """Test the flux of a constant field vanishes"""
        value, _ = integrate_sphere_flux(slope_plane, 2.5, QuadratureSpec(resolution=32))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_time_like_minimal_flux(self):
        """Test psi = u2 + exp(u1) has zero flux"""
        value, _ = integrate_sphere_flux(surface("u2 + exp(u1)", 2), 1.0, QuadratureSpec(resolution=64))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_light_like_boundary(self):
        """Test light-like boundary points are rejected"""
        with pytest.raises(CausalTypeError):
            integrate_sphere_flux(surface("u1", 2), 1.0, QuadratureSpec(resolution=16))


class TestStokes:
    def test_hyperboloid(self, hyperboloid):
        """Test both sides are 2 pi on the unit disk"""
        report = stokes_check(hyperboloid, 1.0, QuadratureSpec(resolution=64))
        assert report.passed
        assert report.lhs == pytest.approx(2 * math.pi, abs=1e-9)
        assert report.rhs == pytest.approx(2 * math.pi, abs=1e-9)
        assert report.metadata["causal"] == "SpaceLike"

    def test_hyperplane_in_three_dimensions(self):
        """Test lhs = rhs = 0 for a hyperplane in n = 3"""
        s = catalog("hyperplane", n=3, a=[0.2, -0.3, 0.1], b=4.0)
        report = stokes_check(s, 2.0, QuadratureSpec(resolution=16))
        assert report.passed
        assert report.lhs == 0.0
        assert abs(report.rhs) <= 1e-12

    def test_translation_surface(self):
        """Test the time-like minimal translation surface"""
        report = stokes_check(catalog("translation", n=2, h="exp(u1)"), 1.0, QuadratureSpec(resolution=64))
        assert report.passed
        assert report.metadata["causal"] == "TimeLike"
        assert abs(report.lhs) <= 1e-10

    def test_one_dimensional_ball(self):
        """Test n = 1 reduces to the fundamental theorem of calculus"""
        report = stokes_check(catalog("hyperboloid", n=1, H=1.0), 1.5, QuadratureSpec(resolution=32))
        assert report.passed
        assert report.rhs == pytest.approx(3.0, rel=1e-12)

    def test_monte_carlo_in_four_dimensions(self):
        """Test monte-carlo Stokes for hyperboloid(4, 1)"""
        q = QuadratureSpec("monte-carlo", 20_000, 9)
        report = stokes_check(catalog("hyperboloid", n=4, H=1.0), 1.0, q)
        assert report.passed

    def test_mixed_domain_is_rejected(self):
        """Test a ball crossing the light cone raises with a node"""
        with pytest.raises(CausalTypeError) as info:
            stokes_check(surface("0.5*u1^2", 2), 3.0, QuadratureSpec(resolution=16))
        assert info.value.point is not None

    @pytest.mark.parametrize("time_like", [False, True])
    def test_random_perturbations(self, time_like):
        """Test a few randomized space-like and time-like fields"""
        rng = np.random.default_rng(31 + time_like)
        for _ in range(3):
            report = stokes_check(perturbed(rng, 2, time_like), 1.0, QuadratureSpec(resolution=64))
            assert report.residual <= report.tolerance + report.quadrature_error

    @pytest.mark.slow
    @pytest.mark.parametrize("n,resolution", [(2, 256), (3, 64)])
    def test_catalog_and_perturbations_acceptance(self, n, resolution):
        """Test every catalog surface and 20 perturbations at R in {0.5, 1, 2}"""
        q = QuadratureSpec(resolution=resolution)
        surfaces = [
            catalog("hyperboloid", n=n, H=0.5),
            catalog("hyperplane", n=n, a=[0.3] + [0.0] * (n - 1), b=1.0),
            catalog("translation", n=n, h="exp(u1)"),
            catalog("constant", n=n, c=2.0),
        ]
        rng = np.random.default_rng(100 + n)
        surfaces += [perturbed(rng, n, i % 2 == 1) for i in range(20)]
        for s in surfaces:
            for R in (0.5, 1.0, 2.0):
                report = stokes_check(s, R, q)
                assert report.residual <= 1e-6 + report.quadrature_error, s.psi.text


class TestFitGradientBound:
    @pytest.mark.parametrize("n,H", [(1, 1.0), (2, 0.5), (3, 2.0)])
    def test_hyperboloid(self, n, H):
        """Test M = H for k = 1/2"""
        fit = fit_gradient_bound(catalog("hyperboloid", n=n, H=H), 2.0, 0.5)
        assert fit.valid
        assert fit.M == pytest.approx(H, rel=1e-9)

    def test_slope_plane(self, slope_plane):
        """Test M = 0.75 for k = 0"""
        assert fit_gradient_bound(slope_plane, 4.0, 0.0).M == pytest.approx(0.75, rel=1e-12)

    def test_time_like_plane(self):
        """Test M = sqrt(2) for psi = u1 + u2"""
        assert fit_gradient_bound(surface("u1 + u2", 2), 1.0, 0.0).M == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_unbounded_when_tilt_at_origin_is_nonzero(self, slope_plane):
        """Test k > 0 with tilt(0) != 0 has no finite M"""
        with pytest.raises(HypothesisError, match="no finite M") as info:
            fit_gradient_bound(slope_plane, 1.0, 0.25)
        assert info.value.node == [0.0, 0.0]

    def test_flat_graph_gets_positive_M(self):
        """Test M stays positive for psi = c"""
        fit = fit_gradient_bound(catalog("constant", n=2, c=1.0), 1.0, 0.5)
        assert fit.M > 0

    def test_steepest_point_at_origin_with_k_zero(self):
        """Test the origin counts for k = 0 and heinz_check accepts the fitted M"""
        s = surface("0.5*u1*exp(-(u1^2 + u2^2))", 2)
        fit = fit_gradient_bound(s, 1.0, 0.0)
        assert fit.M == pytest.approx(1 / math.sqrt(3), rel=1e-12)
        assert fit.node == [0.0, 0.0]
        assert heinz_check(s, 1.0, fit.M, 0.0).passed


class TestHeinz:
    @pytest.mark.parametrize("n,H", [(2, 0.5), (2, 1.0), (2, 2.0), (3, 1.0)])
    @pytest.mark.parametrize("R", [0.5, 1.0, 5.0, 20.0])
    def test_equality_case(self, n, H, R):
        """Test lhs = rhs = H for the hyperboloid with M = H, k = 1/2"""
        report = heinz_check(catalog("hyperboloid", n=n, H=H), R, H, 0.5)
        assert report.passed
        assert report.lhs == pytest.approx(H, abs=1e-9)
        assert report.rhs == pytest.approx(H, abs=1e-9)

    def test_larger_hyperboloid(self):
        """Test hyperboloid(3, 2) with M = 2 at R = 10"""
        report = heinz_check(catalog("hyperboloid", n=3, H=2.0), 10.0, 2.0, 0.5)
        assert report.passed
        assert report.lhs == pytest.approx(2.0, abs=1e-9)

    def test_hyperplane_with_fitted_M(self, slope_plane):
        """Test alpha = 0 <= M / 5"""
        fit = fit_gradient_bound(slope_plane, 5.0, 0.0)
        report = heinz_check(slope_plane, 5.0, fit.M, 0.0)
        assert report.passed
        assert report.lhs == 0.0
        assert report.rhs == pytest.approx(0.15)

    def test_precondition_violation_names_node(self, hyperboloid):
        """Test a too-small M raises a hypothesis failure"""
        with pytest.raises(HypothesisError) as info:
            heinz_check(hyperboloid, 2.0, 0.5, 0.5)
        assert info.value.node is not None
        assert info.value.details()["M"] == 0.5

    def test_chain_metadata(self, hyperboloid):
        """Test the intermediate bounds of the estimate are recorded"""
        report = heinz_check(hyperboloid, 1.0, 1.0, 0.5, q=QuadratureSpec(resolution=64))
        assert report.metadata["chain_holds"]
        assert report.metadata["ball_integral"] == pytest.approx(2 * math.pi, abs=1e-9)
        assert report.metadata["boundary_upper_bound"] == pytest.approx(2 * math.pi, rel=1e-12)

    def test_non_positive_M(self, hyperboloid):
        """Test M must be positive"""
        with pytest.raises(UsageError):
            heinz_check(hyperboloid, 1.0, 0.0, 0.5)

    def test_time_like_surface(self):
        """Test the time-like estimate on a minimal translation surface"""
        s = catalog("translation", n=2, h="u1 + sinh(u1)")
        fit = fit_gradient_bound(s, 2.0, 0.0)
        report = heinz_check(s, 2.0, fit.M, 0.0)
        assert report.passed
        assert report.metadata["causal"] == "TimeLike"


class TestSalavessa:
    def test_hyperboloid_unit_disk(self, hyperboloid):
        """Test m_D = 1/sqrt(2) and equality lhs = rhs = 1"""
        report = salavessa_check(hyperboloid, 1.0)
        assert report.metadata["m_D"] == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert report.passed
        assert report.lhs == pytest.approx(1.0, abs=1e-9)
        assert report.rhs == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("n,H,R", [(2, 2.0, 0.5), (3, 0.5, 3.0), (1, 1.0, 2.0)])
    def test_hyperboloid_equality_for_all_R(self, n, H, R):
        """Test rhs = H exactly"""
        report = salavessa_check(catalog("hyperboloid", n=n, H=H), R)
        assert report.rhs == pytest.approx(H, rel=1e-9)
        assert abs(report.lhs - report.rhs) <= 1e-6

    def test_slope_plane(self, slope_plane):
        """Test lhs = 0 <= 0.25 for |a| = 0.6, R = 3"""
        report = salavessa_check(slope_plane, 3.0)
        assert report.passed
        assert report.lhs == 0.0
        assert report.rhs == pytest.approx(0.25, rel=1e-12)

    def test_time_like_uses_minimum_gradient(self):
        """Test m_D is the minimum of |grad psi| on time-like balls"""
        report = salavessa_check(catalog("translation", n=2, h="exp(u1)"), 1.0)
        assert report.passed
        assert report.metadata["m_D"] == pytest.approx(math.sqrt(1 + math.exp(-2)), rel=1e-3)

    def test_flux_bound_metadata(self, hyperboloid):
        """Test the boundary-flux step is recorded"""
        report = salavessa_check(hyperboloid, 1.0, q=QuadratureSpec(resolution=64))
        assert report.metadata["flux_bound_holds"]
        assert report.metadata["flux_bound"] == pytest.approx(2 * math.pi, rel=1e-9)

    @pytest.mark.slow
    @pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
    def test_equality_at_high_resolution(self, hyperboloid, R):
        """Test |lhs - rhs| <= 1e-6 with quadrature resolution 512"""
        report = salavessa_check(hyperboloid, R, q=QuadratureSpec(resolution=512))
        assert abs(report.lhs - report.rhs) <= 1e-6


class TestNeverFails:
    """Randomized instances with verified hypotheses never fail"""

    def test_heinz_and_salavessa(self):
        rng = np.random.default_rng(2718)
        for i in range(100):
            R = float(rng.uniform(0.5, 1.0))
            if i % 2:
                H, c = float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.02, 0.08))
                s = surface(f"sqrt(u1^2 + u2^2 + {1 / H**2!r}) + {c!r}*(u1^2 - u2^2)", 2)
                k = 0.5
            else:
                b = [float(x) for x in rng.uniform(-0.2, 0.2, 4)]
                s = surface(f"{b[0]!r}*u1 + {b[1]!r}*u1^2 + {b[2]!r}*u1*u2 + {b[3]!r}*cos(u2)", 2)
                k = 0.0
            fit = fit_gradient_bound(s, R, k)
            assert heinz_check(s, R, fit.M, k).passed, s.psi.text
            assert salavessa_check(s, R).passed, s.psi.text


class TestBoundedness:
    def test_slope_plane(self, slope_plane):
        """Test C = s / sqrt(1 + s^2) recovers |a| = 0.6"""
        report = boundedness_equivalence(slope_plane, 2.0)
        assert report.passed
        assert report.lhs == pytest.approx(0.6, rel=1e-12)

    def test_hyperboloid(self, hyperboloid):
        """Test sup tilt 2 and sup |grad psi| = 2 / sqrt(5) on B^2(2)"""
        report = boundedness_equivalence(hyperboloid, 2.0)
        assert report.passed
        assert report.metadata["sup_sinh_theta"] == pytest.approx(2.0, rel=1e-12)
        assert report.rhs == pytest.approx(2 / math.sqrt(5), rel=1e-12)

    def test_needs_space_like(self):
        """Test time-like graphs are rejected"""
        with pytest.raises(CausalTypeError):
            boundedness_equivalence(surface("u1 + u2", 2), 1.0)


class TestBernsteinProbe:
    def test_slope_plane(self, slope_plane):
        """Test constant M_R = 0.75 with a decaying ceiling"""
        report = bernstein_probe(slope_plane, 0.5, [1.0, 10.0, 100.0])
        assert report.verdict == "consistent-with-vanishing"
        assert report.outcome == PASSED
        for R, M_R, alpha, ceiling in report.rows:
            assert M_R == pytest.approx(0.75, rel=1e-12)
            assert alpha == 0.0
            assert ceiling == pytest.approx(0.75 / R, rel=1e-12)
        assert report.metadata["ceiling_decreasing"]
        assert report.metadata["sharpness_claimed"] is False

    def test_hyperboloid_fails_the_hypothesis(self, hyperboloid):
        """Test tilt / r^(1/2) = r^(1/2) is unbounded"""
        report = bernstein_probe(hyperboloid, 0.25, [1.0, 10.0, 100.0])
        assert report.verdict == "hypothesis-fails"
        assert report.outcome == HYPOTHESIS_FAILURE
        assert report.metadata["hypothesis_holds"] is False

    def test_time_like_plane(self):
        """Test psi = u1 + u2 with eps = 1/2"""
        report = bernstein_probe(surface("u1 + u2", 2), 0.5, [1.0, 10.0, 100.0])
        assert report.verdict == "consistent-with-vanishing"
        assert all(row[1] == pytest.approx(math.sqrt(2), rel=1e-12) for row in report.rows)
        assert report.metadata["causal"] == "TimeLike"

    def test_nonzero_tilt_at_origin_is_a_hypothesis_failure(self, slope_plane):
        """Test an unbounded fit is reported, not raised"""
        report = bernstein_probe(slope_plane, 0.25, [1.0, 2.0])
        assert report.verdict == "hypothesis-fails"
        assert "no finite M" in report.metadata["hypothesis_failure"]

    def test_flat_ceiling_fails_the_hypothesis(self, hyperboloid):
        """Test closely spaced radii cannot pass off M_R = R^(1/2) as bounded"""
        report = bernstein_probe(hyperboloid, 0.25, [1.0, 1.005])
        assert report.verdict == "hypothesis-fails"
        assert report.metadata["ceiling_decay"] == pytest.approx(0.0, abs=1e-9)
        assert report.metadata["ceiling_decreasing"] is False
        assert "does not decay" in report.metadata["hypothesis_failure"]

    @pytest.mark.parametrize("radii", [[1.0], [5.0]])
    def test_needs_two_radii(self, hyperboloid, radii):
        """Test a single radius is a usage error"""
        with pytest.raises(UsageError, match="two radii"):
            bernstein_probe(hyperboloid, 0.25, radii)

    @pytest.mark.parametrize("eps,radii", [(0.0, [1.0, 2.0]), (0.5, [2.0, 1.0]), (0.5, [])])
    def test_invalid_arguments(self, slope_plane, eps, radii):
        """Test epsilon and radii validation"""
        with pytest.raises(UsageError):
            bernstein_probe(slope_plane, eps, radii)


class TestDongProbe:
    RADII = [10.0, 100.0, 1000.0]

    def test_slope_plane(self, slope_plane):
        """Test ratio 1.25 / R with H = 0"""
        report = dong_condition_probe(slope_plane, self.RADII)
        assert report.verdict == "consistent-with-hyperplane"
        for R, ratio, factor, sup_H in report.rows:
            assert ratio == pytest.approx(1.25 / R, rel=1e-12)
            assert sup_H == 0.0

    def test_hyperboloid_ratio_tends_to_one(self, hyperboloid):
        """Test sqrt(1 + R^2) / R -> 1 fails the o(r) condition"""
        report = dong_condition_probe(hyperboloid, self.RADII)
        assert report.verdict == "hypothesis-fails"
        assert report.rows[-1][1] == pytest.approx(1.0, rel=1e-5)

    def test_constant(self):
        """Test psi = c gives ratio 1 / R"""
        report = dong_condition_probe(catalog("constant", n=3, c=-1.0), [1.0, 2.0, 4.0])
        assert report.verdict == "consistent-with-hyperplane"
        assert [row[1] for row in report.rows] == pytest.approx([1.0, 0.5, 0.25])

    def test_needs_two_radii(self, slope_plane):
        """Test a single radius is a usage error"""
        with pytest.raises(UsageError):
            dong_condition_probe(slope_plane, [1.0])

    def test_needs_space_like(self):
        """Test non-space-like samples are rejected"""
        with pytest.raises(CausalTypeError):
            dong_condition_probe(surface("u1 + u2", 2), [1.0, 2.0])


class TestDeterminism:
    def test_byte_identical_reports(self, hyperboloid):
        """Test repeated runs serialize identically"""
        runs = [
            (stokes_check(hyperboloid, 1.0, QuadratureSpec("monte-carlo", 4096, 5)).to_dict(),
             heinz_check(hyperboloid, 2.0, 1.0, 0.5).to_dict(),
             salavessa_check(hyperboloid, 2.0).to_dict())
            for _ in range(2)
        ]
        assert to_json({"runs": runs[0]}) == to_json({"runs": runs[1]})
