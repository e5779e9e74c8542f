"""Tests for the closed-form Hamiltonian families."""

import math

import numpy as np
import pytest

from hofer_lab.core.errors import DomainError
from hofer_lab.core.hamiltonians import (
    ActionHamiltonian,
    AmplitudeProfile,
    BandHamiltonian,
    BumpHamiltonian,
    ConjugatorHamiltonian,
    QuadraticHamiltonian,
    SchedulePiece,
    ScheduledHamiltonian,
    SumHamiltonian,
    riemannian_hessian_norm,
    smootherstep,
    smootherstep_integral,
)
from hofer_lab.core.phase_space import ANNULUS, PLANE, SPHERE, Manifold, ManifoldKind

BIG_PLANE = Manifold(kind=ManifoldKind.PLANE, support_radius=2.0)
STEP = 1e-6


def numerical_gradient(hamiltonian, manifold, coords):
    grad = np.empty_like(coords)
    for axis in range(coords.shape[1]):
        shift = np.zeros(coords.shape[1])
        shift[axis] = STEP
        grad[:, axis] = (
            hamiltonian.value(manifold, coords + shift) - hamiltonian.value(manifold, coords - shift)
        ) / (2 * STEP)
    return grad


def numerical_hessian(hamiltonian, manifold, coords):
    d = coords.shape[1]
    hess = np.empty((len(coords), d, d))
    for axis in range(d):
        shift = np.zeros(d)
        shift[axis] = STEP
        hess[:, :, axis] = (
            hamiltonian.gradient(manifold, coords + shift) - hamiltonian.gradient(manifold, coords - shift)
        ) / (2 * STEP)
    return hess


@pytest.fixture
def annulus_points():
    rng = np.random.default_rng(3)
    return np.column_stack([rng.uniform(0.0, 1.0, 40), rng.uniform(0.02, 0.98, 40)])


@pytest.fixture
def plane_points():
    rng = np.random.default_rng(4)
    radius = rng.uniform(0.05, 0.85, 40)
    phi = rng.uniform(0.0, 2.0 * math.pi, 40)
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi)])


class TestProfiles:
    def test_smootherstep_endpoints(self):
        assert smootherstep(np.array([0.0, 1.0])).tolist() == [0.0, 1.0]
        assert float(smootherstep_integral(np.array(1.0))) == pytest.approx(0.5)

    def test_profile_vanishes_near_boundary(self, profile):
        values = profile.value(np.array([0.0, 0.05, 0.1, 0.5, 0.9, 0.95, 1.0]))
        assert values[[0, 1, 2, 4, 5, 6]].tolist() == [0.0] * 6
        assert values[3] == pytest.approx(profile.peak)

    def test_knots_must_fit(self):
        with pytest.raises(ValueError):
            AmplitudeProfile(lo=0.1, hi=0.4, ramp=0.2, peak=1.0)


class TestOscillation:
    def test_action_on_annulus(self):
        assert ActionHamiltonian(coefficient=0.3).oscillation(ANNULUS) == pytest.approx(0.3)

    def test_action_on_sphere(self):
        assert ActionHamiltonian(coefficient=0.1).oscillation(SPHERE) == pytest.approx(0.4 * math.pi)

    def test_action_not_on_plane(self):
        with pytest.raises(DomainError):
            ActionHamiltonian(coefficient=0.1).check_manifold(PLANE)

    def test_zero_hamiltonian(self):
        assert ActionHamiltonian(coefficient=0.0).oscillation(ANNULUS) == 0.0

    def test_conjugator(self, profile):
        conjugator = ConjugatorHamiltonian(frequency=2, profile=profile)
        assert conjugator.oscillation(ANNULUS) == pytest.approx(0.05 / (2 * math.pi))
        assert conjugator.sup_norm(ANNULUS) == pytest.approx(0.05 / (4 * math.pi))

    def test_bump(self):
        assert BumpHamiltonian(radius=1.0, peak=0.02).oscillation(PLANE) == pytest.approx(0.02)

    def test_sum_bounds_by_terms(self, profile):
        total = SumHamiltonian(
            terms=[ActionHamiltonian(coefficient=0.04), ConjugatorHamiltonian(frequency=1, profile=profile)]
        )
        assert total.oscillation(ANNULUS) == pytest.approx(0.04 + 0.05 / math.pi)
        assert not total.oscillation_exact

    def test_band_on_annulus(self):
        band = BandHamiltonian(coefficient=0.5, center=0.5, half_width=0.1, taper=0.1)
        # ∫χ over the line is 2·half_width + taper
        assert band.oscillation(ANNULUS) == pytest.approx(0.5 * 0.3)

    def test_quadratic_box_extremes(self):
        quadratic = QuadraticHamiltonian(a=1.0)
        assert quadratic.oscillation(PLANE) == pytest.approx(0.5 * 0.25)

    def test_schedule_averages(self):
        schedule = ScheduledHamiltonian(
            pieces=[
                SchedulePiece(duration=1.0, hamiltonian=ActionHamiltonian(coefficient=0.2)),
                SchedulePiece(duration=3.0, hamiltonian=ActionHamiltonian(coefficient=0.6)),
            ]
        )
        assert schedule.oscillation(ANNULUS) == pytest.approx((0.2 + 3 * 0.6) / 4)
        assert not schedule.autonomous
        with pytest.raises(DomainError):
            schedule.value(ANNULUS, np.zeros((1, 2)))


class TestDerivatives:
    def test_conjugator_gradient_and_hessian(self, profile, annulus_points):
        conjugator = ConjugatorHamiltonian(frequency=3, phase=0.4, profile=profile)
        np.testing.assert_allclose(
            conjugator.gradient(ANNULUS, annulus_points),
            numerical_gradient(conjugator, ANNULUS, annulus_points),
            atol=1e-6,
        )
        np.testing.assert_allclose(
            conjugator.hessian(ANNULUS, annulus_points),
            numerical_hessian(conjugator, ANNULUS, annulus_points),
            atol=1e-5,
        )

    def test_bump_gradient_and_hessian(self, plane_points):
        bump = BumpHamiltonian(radius=1.0, peak=0.3)
        np.testing.assert_allclose(
            bump.gradient(BIG_PLANE, plane_points), numerical_gradient(bump, BIG_PLANE, plane_points), atol=1e-6
        )
        np.testing.assert_allclose(
            bump.hessian(BIG_PLANE, plane_points), numerical_hessian(bump, BIG_PLANE, plane_points), atol=1e-5
        )

    def test_band_gradient(self, annulus_points):
        band = BandHamiltonian(coefficient=0.5, center=0.5, half_width=0.1, taper=0.2)
        np.testing.assert_allclose(
            band.gradient(ANNULUS, annulus_points), numerical_gradient(band, ANNULUS, annulus_points), atol=1e-6
        )

    def test_conjugator_invariant_under_rotation_by_one_over_q(self, profile, annulus_points):
        conjugator = ConjugatorHamiltonian(frequency=3, profile=profile)
        shifted = annulus_points.copy()
        shifted[:, 0] += 1.0 / 3.0
        np.testing.assert_allclose(
            conjugator.value(ANNULUS, shifted), conjugator.value(ANNULUS, annulus_points), atol=1e-15
        )

    def test_sphere_action_riemannian_hessian(self):
        action = ActionHamiltonian(coefficient=0.1)
        points = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        norms = riemannian_hessian_norm(action, SPHERE, points)
        assert norms[0] == pytest.approx(0.0, abs=1e-15)
        assert norms[1] == pytest.approx(2 * math.pi * 0.1)


class TestExactFlows:
    def test_action_flow_is_rotation(self):
        moved, jac = ActionHamiltonian(coefficient=0.3).exact_flow(ANNULUS, np.array([[0.2, 0.7]]), 1.0)
        assert moved[0].tolist() == pytest.approx([0.5, 0.7])
        np.testing.assert_array_equal(jac[0], np.eye(2))

    def test_quadratic_hyperbolic_flow(self):
        quadratic = QuadraticHamiltonian(b=math.log(2.0))
        _, jac = quadratic.exact_flow(PLANE, np.zeros((1, 2)), 1.0)
        np.testing.assert_allclose(jac[0], np.diag([2.0, 0.5]), atol=1e-12)
