"""Tests for Anosov-Katok schedules and builds."""

from fractions import Fraction

import pytest

from hofer_lab.core.ak_forge import (
    COMMUTATION_LIMIT,
    CONSISTENCY_FACTOR,
    AKSchedule,
    AKStage,
    ConjugatorSpec,
    ak_build,
    ak_next_alpha,
    commutation_check,
    conjugated_rotation,
    plan_schedule,
    stage_conjugacy,
)
from hofer_lab.core.diophantine import QuadraticIrrational, TorusVector, cf_expand
from hofer_lab.core.errors import DomainError, ScheduleError
from hofer_lab.core.maps import IDENTITY, Compose, HamFlow, Rotation


def conjugator(stage: int, frequency: int, profile) -> ConjugatorSpec:
    return ConjugatorSpec(stage=stage, frequency=frequency, profile=profile)


class TestNextAlpha:
    def test_infinite_tolerance_takes_one_step(self):
        assert ak_next_alpha(Fraction(1, 2), 6, 1.0, float("inf")) == Fraction(2, 3)

    def test_smallest_ell_meeting_tolerance(self):
        # ℓ = ceil(2 / (0.1·4)) = 5
        assert ak_next_alpha(Fraction(1, 2), 4, 2.0, 0.1) == Fraction(1, 2) + Fraction(1, 20)

    @pytest.mark.parametrize(
        "alpha,q_next,lip,tol",
        [
            (Fraction(1, 3), 4, 1.0, 0.1),
            (Fraction(1, 2), 4, 0.5, 0.1),
            (Fraction(1, 2), 4, 1.0, 0.0),
            (Fraction(1, 2), 2, 1.0, 1e-30),
        ],
    )
    def test_rejected_inputs(self, alpha, q_next, lip, tol):
        with pytest.raises(ScheduleError):
            ak_next_alpha(alpha, q_next, lip, tol)


class TestSchedule:
    def test_denominators_and_budgets(self, profile):
        schedule = AKSchedule(
            stages=[
                AKStage(alpha=Fraction(1, 2), tol=0.5),
                AKStage(alpha=Fraction(3, 4), conjugator=conjugator(2, 2, profile), tol=0.25),
            ]
        )
        schedule.check()
        assert schedule.denominators == [2, 4]
        assert schedule.partial_tolerance_sums == [0.5, 0.75]

    def test_denominators_must_nest(self):
        schedule = AKSchedule(stages=[AKStage(alpha="1/2", tol=0.5), AKStage(alpha="1/3", tol=0.25)])
        with pytest.raises(ScheduleError) as info:
            schedule.check()
        assert info.value.details["denominators"] == [2, 3]

    def test_conjugator_must_commute_with_previous_rotation(self, profile):
        schedule = AKSchedule(
            stages=[
                AKStage(alpha="1/2", tol=0.5),
                AKStage(alpha="3/4", conjugator=conjugator(2, 3, profile), tol=0.25),
            ]
        )
        with pytest.raises(ScheduleError):
            schedule.check()

    def test_conjugator_stage_label(self, profile):
        schedule = AKSchedule(
            stages=[
                AKStage(alpha="1/2", tol=0.5),
                AKStage(alpha="3/4", conjugator=conjugator(3, 2, profile), tol=0.25),
            ]
        )
        with pytest.raises(ScheduleError):
            schedule.check()

    def test_stage_conjugacy_order(self, profile):
        schedule = AKSchedule(
            stages=[
                AKStage(alpha="1/2", tol=0.5),
                AKStage(alpha="3/4", conjugator=conjugator(2, 2, profile), tol=0.25),
                AKStage(alpha="7/8", conjugator=conjugator(3, 4, profile), tol=0.125),
            ]
        )
        assert stage_conjugacy(schedule, 1) == IDENTITY
        assert isinstance(stage_conjugacy(schedule, 2), HamFlow)
        h3 = stage_conjugacy(schedule, 3)
        assert isinstance(h3, Compose)
        # g_2 acts first, so it is the last factor
        assert [f.hamiltonian.frequency for f in h3.factors] == [4, 2]

    def test_conjugated_rotation_without_conjugacy(self):
        assert conjugated_rotation(IDENTITY, Fraction(1, 2)) == Rotation(angle="1/2")

    def test_plan_needs_a_stage(self):
        with pytest.raises(ScheduleError):
            plan_schedule(0)

    def test_plan_single_stage(self):
        schedule = plan_schedule(1)
        assert schedule.denominators == [2]
        assert schedule.stages[0].tol == 0.5
        assert schedule.stages[0].conjugator is None


class TestCommutation:
    def test_frequency_matches_rotation(self, conjugator_flow, small_grid):
        assert commutation_check(conjugator_flow, Fraction(1, 3), small_grid) <= COMMUTATION_LIMIT

    def test_frequency_mismatch(self, conjugator_flow, small_grid):
        assert commutation_check(conjugator_flow, Fraction(1, 2), small_grid) > 1e-4

    def test_torus_vector_input(self, conjugator_flow, small_grid):
        assert commutation_check(conjugator_flow, TorusVector.of("1/3"), small_grid) <= COMMUTATION_LIMIT

    def test_irrational_rotation_is_rejected(self, conjugator_flow, small_grid):
        golden = TorusVector.of(cf_expand(QuadraticIrrational.golden()))
        with pytest.raises(DomainError):
            commutation_check(conjugator_flow, golden, small_grid)


class TestBuild:
    def test_single_stage(self, small_grid):
        result = ak_build(AKSchedule(stages=[AKStage(alpha="1/2", tol=0.5)]), small_grid)
        assert result.complete
        diagnostics = result.approximants[0].diagnostics
        assert diagnostics.c0_gap.lower == pytest.approx(0.5)
        assert diagnostics.c1_gap == 0.0
        assert diagnostics.accepted
        assert result.approximants[0].phi == Rotation(angle="1/2")

    @pytest.mark.slow
    def test_planned_schedule_builds(self, small_grid):
        schedule = plan_schedule(2, grid=small_grid)
        assert schedule.denominators[0] == 2
        assert schedule.denominators[1] % 2 == 0 and schedule.denominators[1] > 2
        result = ak_build(schedule, small_grid)
        assert result.complete, result.failure
        second = result.approximants[1].diagnostics
        assert second.commutation_residual <= COMMUTATION_LIMIT
        assert second.c0_gap.lower <= schedule.stages[1].tol + second.c0_gap.margin
        assert second.collar_residual <= 1e-12

    @pytest.mark.slow
    def test_three_stage_plan_nests(self, small_grid):
        schedule = plan_schedule(3, grid=small_grid)
        q1, q2, q3 = schedule.denominators
        assert q2 % q1 == 0 and q3 % q2 == 0
        assert q1 < q2 < q3
        assert schedule.stages[2].conjugator.frequency == q2

    @pytest.mark.slow
    def test_four_stage_build_stays_within_budgets(self, small_grid):
        schedule = plan_schedule(4, grid=small_grid)
        assert [stage.tol for stage in schedule.stages] == [0.5, 0.25, 0.125, 0.0625]
        result = ak_build(schedule, small_grid)
        assert result.complete, result.failure
        gaps = [approximant.diagnostics.c0_gap for approximant in result.approximants]
        for gap, stage in zip(gaps, schedule.stages):
            assert gap.lower <= stage.tol + gap.margin
        assert sum(gap.lower for gap in gaps[1:]) < 0.5
        limit = CONSISTENCY_FACTOR * schedule.integrator.tolerance
        for approximant in result.approximants[1:]:
            assert approximant.diagnostics.commutation_residual <= COMMUTATION_LIMIT
            assert approximant.diagnostics.consistency_residual <= limit

    @pytest.mark.slow
    def test_over_budget_stage_stops_the_build(self, profile, small_grid):
        schedule = AKSchedule(
            stages=[
                AKStage(alpha="1/2", tol=0.5),
                AKStage(alpha="3/4", conjugator=conjugator(2, 2, profile), tol=1e-3),
            ]
        )
        result = ak_build(schedule, small_grid)
        assert result.failed_stage == 2
        assert "exceeds budget" in result.failure
        assert len(result.approximants) == 2
        assert not result.approximants[1].diagnostics.accepted
