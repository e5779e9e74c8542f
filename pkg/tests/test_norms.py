"""Tests for norm estimates, Hofer bounds, displacement energy and the inequality check."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hofer_lab.core.errors import DomainError
from hofer_lab.core.hamiltonians import (
    ActionHamiltonian,
    SchedulePiece,
    ScheduledHamiltonian,
)
from hofer_lab.core.maps import (
    IDENTITY,
    Compose,
    Iterate,
    Linear,
    Rotation,
    Twist,
    conjugate,
)
from hofer_lab.core.norms import (
    ball_samples,
    c0_distance,
    c0_estimate_chain,
    c0_sampled,
    check_holder_inequality,
    derivative_norm,
    displacement_energy_bounds,
    gamma_exact_small,
    hofer_bound,
    hofer_rotation_bound,
    hofer_small_rotation,
    hofer_upper,
    nondisplacement_witness,
    rotation_displacement,
)
from hofer_lab.core.models import GridSpec
from hofer_lab.core.phase_space import ANNULUS, PLANE, SPHERE, Point, build_atlas, inequality_constants

GOLDEN = (1 + math.sqrt(5)) / 2
ANNULUS_CONSTANTS = inequality_constants(0.15, 1.0, ANNULUS.diameter)


class TestDerivativeNorm:
    def test_twist_is_analytic(self, small_grid):
        estimate = derivative_norm(Twist(shear=1.0), ANNULUS, small_grid)
        assert estimate.lower == estimate.upper == pytest.approx(GOLDEN)
        assert estimate.method == "analytic-twist"

    def test_linear_is_analytic(self, small_grid):
        estimate = derivative_norm(Linear(matrix=((2.0, 0.0), (0.0, 0.5))), PLANE, small_grid)
        assert estimate.upper == pytest.approx(2.0)
        assert estimate.method == "analytic-linear"

    def test_rotation_is_an_isometry(self, small_grid):
        assert derivative_norm(Rotation(angle="1/5"), SPHERE, small_grid).upper == 1.0

    def test_polynomial_twist_on_the_grid(self, small_grid):
        # ψ(I) = I has constant derivative, so every sample sees the golden ratio
        estimate = derivative_norm(Twist(polynomial=[0.0, 1.0]), ANNULUS, small_grid)
        assert estimate.method == "grid"
        assert estimate.upper == pytest.approx(GOLDEN)

    def test_refinement_extrapolates(self, two_level_grid):
        estimate = derivative_norm(Twist(polynomial=[0.0, 0.0, 1.0]), ANNULUS, two_level_grid)
        assert estimate.method == "grid-refinement"
        assert estimate.lower >= 1.0
        assert estimate.upper >= estimate.lower


class TestC0Distance:
    def test_annulus_rotation_is_exact(self, small_grid):
        estimate = c0_distance(Rotation(angle=0.25), IDENTITY, ANNULUS, small_grid)
        assert estimate.lower == estimate.upper == pytest.approx(0.25)
        assert estimate.method == "exact-rotation"

    def test_sphere_rotation_is_exact(self, small_grid):
        estimate = c0_distance(Rotation(angle=0.1), IDENTITY, SPHERE, small_grid)
        assert estimate.upper == pytest.approx(0.2 * math.pi)

    def test_rotations_against_each_other(self, small_grid):
        estimate = c0_distance(Rotation(angle=0.9), Rotation(angle=0.2), ANNULUS, small_grid)
        assert estimate.upper == pytest.approx(0.3)

    def test_identical_after_normalization(self, small_grid):
        f = Compose(factors=[Rotation(angle="1/4"), Rotation(angle="3/4")])
        estimate = c0_distance(f, IDENTITY, ANNULUS, small_grid)
        assert (estimate.lower, estimate.upper, estimate.method) == (0.0, 0.0, "identical")

    def test_twist_on_the_grid(self, small_grid):
        estimate = c0_distance(Twist(shear=0.2), IDENTITY, ANNULUS, small_grid)
        assert estimate.method == "grid-lipschitz"
        assert estimate.lower == pytest.approx(0.2)
        assert estimate.upper == pytest.approx(0.2 + estimate.lipschitz * estimate.mesh)
        assert c0_sampled(Twist(shear=0.2), IDENTITY, ANNULUS, small_grid) == pytest.approx(0.2)

    @pytest.mark.slow
    def test_conjugated_rotation_certificate(self, conjugator_flow, small_grid):
        estimate = c0_distance(conjugate(conjugator_flow, Rotation(angle="1/3")), IDENTITY, ANNULUS, small_grid)
        assert estimate.method == "grid+conjugation-certificate"
        assert 0.0 < estimate.lower <= estimate.upper

    @pytest.mark.slow
    def test_certificate_replaces_grid_below_noise_floor(self, conjugator_flow, small_grid):
        tiny = Rotation(angle=Fraction(1, 10**13))
        estimate = c0_distance(conjugate(conjugator_flow, tiny), IDENTITY, ANNULUS, small_grid)
        assert estimate.method == "conjugation-certificate"
        assert estimate.upper < 1e-11

    def test_plane_has_no_rotation(self):
        with pytest.raises(DomainError):
            rotation_displacement(PLANE, Fraction(1, 3))


class TestHoferBounds:
    def test_action_flow(self):
        assert hofer_upper(ActionHamiltonian(coefficient=0.3), ANNULUS) == pytest.approx(0.3)
        assert hofer_upper(ActionHamiltonian(coefficient=0.3), ANNULUS, time=-2.0) == pytest.approx(0.6)

    def test_sphere_height_function(self):
        assert hofer_upper(ActionHamiltonian(coefficient=0.1), SPHERE) == pytest.approx(0.4 * math.pi)

    def test_rotation_bound(self):
        bound = hofer_rotation_bound([Fraction(3, 10)], [ActionHamiltonian(coefficient=1.0)], ANNULUS)
        assert (bound.tight, bound.stated, bound.k) == (pytest.approx(0.3), pytest.approx(0.6), 1)

    @given(
        st.lists(
            st.tuples(
                st.fractions(min_value=-2, max_value=2, max_denominator=1000),
                st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
            ),
            min_size=1,
            max_size=4,
        ),
        st.sampled_from([ANNULUS, SPHERE]),
    )
    @settings(max_examples=50, deadline=None)
    def test_tight_bound_never_exceeds_stated(self, components, manifold):
        alpha = [a for a, _ in components]
        action = [ActionHamiltonian(coefficient=c) for _, c in components]
        bound = hofer_rotation_bound(alpha, action, manifold)
        assert bound.tight <= bound.stated * (1 + 1e-12)

    def test_truncated_schedule(self):
        schedule = ScheduledHamiltonian(
            pieces=[
                SchedulePiece(duration=1.0, hamiltonian=ActionHamiltonian(coefficient=0.2)),
                SchedulePiece(duration=3.0, hamiltonian=ActionHamiltonian(coefficient=0.6)),
            ]
        )
        # a quarter of unit time on each piece
        assert hofer_upper(schedule, ANNULUS, time=0.5) == pytest.approx(0.25 * 0.2 + 0.25 * 0.6)
        assert hofer_upper(schedule, ANNULUS, time=-0.5) == pytest.approx(0.2)
        assert hofer_upper(schedule, ANNULUS, time=2.0) == pytest.approx(2 * schedule.oscillation(ANNULUS))

    def test_rotation_bound_uses_circle_norm(self):
        bound = hofer_rotation_bound([0.7], [ActionHamiltonian(coefficient=1.0)], ANNULUS)
        assert bound.tight == pytest.approx(0.3)

    def test_rotation_bound_shape_mismatch(self):
        with pytest.raises(DomainError):
            hofer_rotation_bound([0.1, 0.2], [ActionHamiltonian(coefficient=1.0)], ANNULUS)

    def test_small_action_is_exact(self, small_grid):
        estimate = gamma_exact_small(ActionHamiltonian(coefficient=0.01), ANNULUS, small_grid)
        assert estimate.value == pytest.approx(0.01)
        assert estimate.exact
        assert estimate.method == "c2-small-exact"

    def test_small_sphere_action_is_exact(self, small_grid):
        estimate = gamma_exact_small(ActionHamiltonian(coefficient=0.01), SPHERE, small_grid)
        assert estimate.exact
        assert estimate.value == pytest.approx(0.04 * math.pi)

    def test_large_sphere_action_is_only_an_upper_bound(self, small_grid):
        estimate = gamma_exact_small(ActionHamiltonian(coefficient=0.1), SPHERE, small_grid)
        assert not estimate.exact
        assert estimate.hessian_sup == pytest.approx(0.2 * math.pi)
        assert estimate.method == "hofer-upper(not-c2-small)"

    def test_time_dependent_is_never_exact(self, small_grid):
        schedule = ScheduledHamiltonian(
            pieces=[SchedulePiece(duration=1.0, hamiltonian=ActionHamiltonian(coefficient=0.01))]
        )
        assert gamma_exact_small(schedule, ANNULUS, small_grid).method == "hofer-upper(time-dependent)"

    def test_small_rotation(self, small_grid):
        assert hofer_small_rotation(Fraction(1, 100), ANNULUS, small_grid).value == pytest.approx(0.01)
        assert hofer_small_rotation(Fraction(99, 100), ANNULUS, small_grid).value == pytest.approx(0.01)

    def test_expression_bounds(self, conjugator_flow):
        assert hofer_bound(IDENTITY, ANNULUS) == 0.0
        assert hofer_bound(Rotation(angle=0.3), ANNULUS) == pytest.approx(0.3)
        assert hofer_bound(Twist(shear=2.0), ANNULUS) == pytest.approx(1.0)
        assert hofer_bound(Iterate(child=Twist(shear=1.0), n=3), ANNULUS) == pytest.approx(1.5)
        assert hofer_bound(Compose(factors=[Twist(shear=1.0), Rotation(angle=0.1)]), ANNULUS) == pytest.approx(0.6)
        assert hofer_bound(conjugate(conjugator_flow, Rotation(angle=0.1)), ANNULUS) == pytest.approx(0.1)
        assert hofer_bound(Linear(matrix=((1.0, 1.0), (0.0, 1.0))), PLANE) is None


class TestDisplacement:
    def test_plane_ball(self):
        bounds = displacement_energy_bounds(Point.plane(0.0, 0.0), 0.1, build_atlas(PLANE))
        assert bounds.lower == pytest.approx(0.01 * math.pi)
        assert bounds.upper >= bounds.lower

    def test_annulus_ball(self):
        bounds = displacement_energy_bounds(Point.annulus(0.5, 0.5), 0.1, build_atlas(ANNULUS))
        assert bounds.lower == pytest.approx(0.01 * math.pi)
        assert bounds.upper == pytest.approx(0.15)

    def test_sphere_cap(self):
        bounds = displacement_energy_bounds(Point.sphere(1.0, 0.0, 0.0), 0.1, build_atlas(SPHERE))
        assert bounds.lower == pytest.approx(2 * math.pi * (1 - math.cos(0.1)))
        assert bounds.upper == pytest.approx(0.3 * math.pi)

    def test_degenerate_and_invalid_radii(self):
        atlas = build_atlas(ANNULUS)
        assert displacement_energy_bounds(Point.annulus(0.5, 0.5), 0.0, atlas).method == "degenerate"
        with pytest.raises(DomainError):
            displacement_energy_bounds(Point.annulus(0.5, 0.5), -0.1, atlas)
        with pytest.raises(DomainError):
            displacement_energy_bounds(Point.annulus(0.5, 0.5), 0.3, atlas)

    def test_ball_samples_start_at_center(self):
        samples = ball_samples(Point.plane(0.1, 0.2), 0.05, (5, 8))
        assert samples.shape == (1 + 4 * 8, 2)
        assert samples[0].tolist() == pytest.approx([0.1, 0.2])


class TestWitness:
    def test_identity_keeps_the_center(self):
        result = nondisplacement_witness(IDENTITY, Point.annulus(0.5, 0.5), 0.1, GridSpec(counts=(8, 16)))
        assert result.found
        assert result.witness == pytest.approx((0.5, 0.5))

    def test_small_rotation_overlaps(self):
        result = nondisplacement_witness(Rotation(angle=0.01), Point.annulus(0.5, 0.5), 0.1, GridSpec(counts=(8, 16)))
        assert result.found

    def test_large_rotation_is_not_found(self):
        result = nondisplacement_witness(Rotation(angle=0.4), Point.annulus(0.5, 0.5), 0.05, GridSpec(counts=(8, 16)))
        assert not result.found
        assert result.witness is None
        assert result.preimage_distance > 0.3

    def test_radius_must_be_positive(self):
        with pytest.raises(DomainError):
            nondisplacement_witness(IDENTITY, Point.annulus(0.5, 0.5), 0.0, GridSpec(counts=(8, 16)))


class TestHolderCheck:
    def test_small_rotation_satisfies(self, small_grid):
        check = check_holder_inequality(Rotation(angle=0.01), 0.01, ANNULUS_CONSTANTS.C, ANNULUS, small_grid)
        assert not check.violation
        assert check.lhs_lower == pytest.approx(0.01)
        assert check.rhs == pytest.approx(ANNULUS_CONSTANTS.C * 0.1)
        assert check.slack_ratio == pytest.approx(ANNULUS_CONSTANTS.C * 10)

    def test_identity_with_zero_gamma(self, small_grid):
        check = check_holder_inequality(IDENTITY, 0.0, ANNULUS_CONSTANTS.C, ANNULUS, small_grid)
        assert not check.violation
        assert check.slack_ratio == math.inf

    def test_refined_form(self, small_grid):
        check = check_holder_inequality(Rotation(angle=0.01), 0.01, 5.0, ANNULUS, small_grid, refined=True)
        assert check.constant == 1.0
        assert check.rhs == pytest.approx(0.2)

    def test_understated_gamma_is_flagged(self, small_grid):
        check = check_holder_inequality(Rotation(angle=0.25), 1e-6, 1.0, ANNULUS, small_grid, bound_kind="hofer")
        assert check.violation
        assert check.bound_kind == "hofer"

    def test_chain_in_the_local_regime(self, small_grid):
        check = check_holder_inequality(
            Rotation(angle=0.01),
            0.01,
            ANNULUS_CONSTANTS.C,
            ANNULUS,
            small_grid,
            lipschitz_L=1.0,
            delta=ANNULUS_CONSTANTS.delta,
        )
        assert check.regime == "local"
        assert check.chain_rhs == pytest.approx(8 * math.sqrt(0.01 / math.pi))

    def test_chain_regimes(self):
        assert c0_estimate_chain(1.0, 1.0, 1.0, 10.0, 0.1, 1.0)[1] == "global"
        assert c0_estimate_chain(1.0, 1.0, 1.0, 0.5, 0.1, 1.0)[1] == "unknown"

    def test_negative_gamma(self, small_grid):
        with pytest.raises(DomainError):
            check_holder_inequality(IDENTITY, -0.1, 1.0, ANNULUS, small_grid)
