"""Tests for surfaces, distances, Darboux atlases and the inequality constants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hofer_lab.core.errors import ConfigurationError, DomainError
from hofer_lab.core.models import GridSpec
from hofer_lab.core.phase_space import (
    ANNULUS,
    PLANE,
    SPHERE,
    AtlasSpec,
    Manifold,
    ManifoldKind,
    Point,
    atlas_constants,
    build_atlas,
    grid_mesh,
    inequality_constants,
    level_counts,
    riemannian_distance,
    sample_grid,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
angle = st.floats(min_value=0.0, max_value=0.999999, allow_nan=False)


class TestDistance:
    def test_annulus_wraps_around(self):
        assert riemannian_distance(Point.annulus(0.9, 0.5), Point.annulus(0.1, 0.5)) == pytest.approx(0.2)

    def test_sphere_antipodes(self):
        assert riemannian_distance(Point.sphere(0, 0, 1), Point.sphere(0, 0, -1)) == pytest.approx(math.pi)

    def test_plane_pythagoras(self):
        assert riemannian_distance(Point.plane(0, 0, 5.0), Point.plane(3, 4, 5.0)) == pytest.approx(5.0)

    def test_mismatched_manifolds(self):
        with pytest.raises(DomainError):
            riemannian_distance(Point.annulus(0.1, 0.1), Point.plane(0.1, 0.1))

    @given(angle, unit, angle, unit, angle, unit)
    @settings(max_examples=200, deadline=None)
    def test_annulus_metric_axioms(self, t1, i1, t2, i2, t3, i3):
        p, q, r = Point.annulus(t1, i1), Point.annulus(t2, i2), Point.annulus(t3, i3)
        assert riemannian_distance(p, q) == pytest.approx(riemannian_distance(q, p), abs=1e-12)
        assert riemannian_distance(p, r) <= riemannian_distance(p, q) + riemannian_distance(q, r) + 1e-12

    @given(st.floats(-math.pi, math.pi), st.floats(-1.0, 1.0), st.floats(-math.pi, math.pi), st.floats(-1.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_sphere_distance_symmetric(self, phi1, z1, phi2, z2):
        def on_sphere(phi, z):
            rho = math.sqrt(max(0.0, 1.0 - z * z))
            return Point.sphere(rho * math.cos(phi), rho * math.sin(phi), z)

        p, q = on_sphere(phi1, z1), on_sphere(phi2, z2)
        assert riemannian_distance(p, q) == pytest.approx(riemannian_distance(q, p), abs=1e-12)
        assert 0.0 <= riemannian_distance(p, q) <= math.pi + 1e-12


class TestPoints:
    def test_angle_is_reduced(self):
        assert Point.annulus(1.25, 0.5).coords == (0.25, 0.5)

    def test_action_out_of_range(self):
        with pytest.raises(ValueError):
            Point.annulus(0.2, 1.5)

    def test_sphere_point_needs_unit_norm(self):
        with pytest.raises(DomainError):
            Point.sphere(1.0, 1.0, 0.0)

    def test_wrong_dimension(self):
        with pytest.raises(DomainError):
            Point.on(ANNULUS, (0.1, 0.2, 0.3))


class TestGrids:
    def test_sample_counts(self):
        assert sample_grid(ANNULUS, (8, 5)).shape == (40, 2)
        assert sample_grid(PLANE, (5, 5)).shape == (25, 2)
        # poles appear once each
        assert sample_grid(SPHERE, (5, 8)).shape == (2 + 3 * 8, 3)

    def test_levels_refine(self):
        grid = GridSpec(counts=(8, 5), levels=3)
        assert level_counts(ANNULUS, grid) == [(8, 5), (16, 9), (32, 17)]
        meshes = [grid_mesh(ANNULUS, counts) for counts in level_counts(ANNULUS, grid)]
        assert meshes == sorted(meshes, reverse=True)

    def test_grid_counts_at_least_two(self):
        with pytest.raises(ValueError):
            GridSpec(counts=(1, 4))

    def test_parse(self):
        assert GridSpec.parse("12x7", levels=2) == GridSpec(counts=(12, 7), levels=2)
        with pytest.raises(ValueError):
            GridSpec.parse("12by7")


class TestAtlas:
    @pytest.mark.parametrize("manifold", [ANNULUS, SPHERE, PLANE])
    def test_charts_round_trip_and_preserve_area(self, manifold):
        for chart in build_atlas(manifold).charts:
            assert chart.round_trip_error(32) <= 1e-10
            assert chart.symplecticity_defect(32) <= 1e-8

    @pytest.mark.parametrize("manifold", [ANNULUS, SPHERE, PLANE])
    def test_cover(self, manifold):
        build_atlas(manifold).check_cover((24, 17))

    def test_plane_identity_chart_constants(self):
        sampled = atlas_constants(build_atlas(PLANE), GridSpec(counts=(9, 9)))
        # boundary samples of K and K′ interleave, so the sampled gap sits just above 1
        assert sampled.epsilon == pytest.approx(1.0, rel=1e-3)
        assert sampled.lipschitz_L == pytest.approx(1.0)

    def test_annulus_constants(self):
        sampled = atlas_constants(build_atlas(ANNULUS), GridSpec(counts=(16, 9)))
        assert sampled.epsilon == pytest.approx(0.15)
        assert sampled.lipschitz_L == pytest.approx(1.0)

    def test_sphere_lipschitz_exceeds_one(self):
        sampled = atlas_constants(build_atlas(SPHERE), GridSpec(counts=(9, 16)))
        assert sampled.epsilon > 0.0
        assert sampled.lipschitz_L > 1.0

    def test_bad_annulus_widths(self):
        with pytest.raises(ConfigurationError):
            build_atlas(ANNULUS, AtlasSpec(inner=0.2, outer=0.45))

    def test_cover_failure_reports_sample(self):
        plane = Manifold(kind=ManifoldKind.PLANE, support_radius=3.0)
        atlas = build_atlas(plane, AtlasSpec(inner=1.0, outer=2.0))
        with pytest.raises(ConfigurationError) as info:
            atlas.check_cover((5, 5))
        assert "first_uncovered" in info.value.details

    def test_chart_for_picks_nearest_center(self):
        atlas = build_atlas(SPHERE)
        assert atlas.chart_for(Point.sphere(0, 0, 1)).name == "sphere-north"
        assert atlas.chart_for(Point.sphere(0, 0, -1)).name == "sphere-south"


class TestInequalityConstants:
    def test_unit_inputs(self):
        constants = inequality_constants(1.0, 1.0)
        assert constants.delta == pytest.approx(math.pi / 4)
        assert constants.C == pytest.approx(8 / math.sqrt(math.pi))
        assert not constants.raised

    def test_scaled_inputs(self):
        constants = inequality_constants(0.2, 2.0)
        assert constants.delta == pytest.approx(math.pi * 0.04 / 16)
        assert constants.C == pytest.approx(16 / math.sqrt(math.pi))

    def test_diameter_raises_constant(self):
        constants = inequality_constants(0.15, 1.0, ANNULUS.diameter)
        assert constants.raised
        assert constants.C == pytest.approx(ANNULUS.diameter / math.sqrt(constants.delta))
        assert constants.C == pytest.approx(8.41, abs=0.01)

    @given(st.floats(0.01, 2.0), st.floats(1.0, 5.0), st.floats(0.01, 2.0))
    def test_monotone_in_lipschitz(self, epsilon, lipschitz, extra):
        low, high = inequality_constants(epsilon, lipschitz), inequality_constants(epsilon, lipschitz + extra)
        assert high.delta < low.delta
        assert high.C > low.C

    @pytest.mark.parametrize("epsilon,lipschitz", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.5)])
    def test_invalid_inputs(self, epsilon, lipschitz):
        with pytest.raises(DomainError):
            inequality_constants(epsilon, lipschitz)

    def test_reduce_wraps_negative_zero(self):
        reduced = ANNULUS.reduce(np.array([[-1e-18, 0.5]]))
        assert 0.0 <= reduced[0, 0] < 1.0
