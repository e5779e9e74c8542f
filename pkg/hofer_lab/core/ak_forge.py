"""Anosov-Katok conjugation scheme on the annulus with nested rational rotation schedules."""

import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import Field

from .diophantine import TorusVector
from .errors import DomainError, LabError, ScheduleError
from .hamiltonians import AmplitudeProfile, ConjugatorHamiltonian
from .maps import IDENTITY, Compose, HamFlow, Inverse, MapExpr, Rotation, evaluate_array, evaluate_with_jacobian
from .models import AKStageDiagnostics, ExactRational, GridSpec, IntegratorParams, LabModel, to_fraction
from .norms import c0_distance, c0_sampled, derivative_norm
from .phase_space import ANNULUS, distance_array, level_counts, sample_grid
from .sweep import sweep_max

logger = logging.getLogger(__name__)

COMMUTATION_LIMIT = 1e-9
CONSISTENCY_FACTOR = 10.0
MAX_ELL = 1 << 62


# ============================================================================
# Schedule Models
# ============================================================================


class ConjugatorSpec(LabModel):
    """Stage-m conjugator g_m: the time-1 flow of A(I)·sin(2πqθ + phase)/(2πq)."""

    stage: int = Field(..., ge=1)
    frequency: int = Field(..., ge=1)
    profile: AmplitudeProfile
    phase: float = 0.0

    def hamiltonian(self) -> ConjugatorHamiltonian:
        return ConjugatorHamiltonian(frequency=self.frequency, phase=self.phase, profile=self.profile)

    def as_map(self, integrator: IntegratorParams) -> HamFlow:
        return HamFlow(hamiltonian=self.hamiltonian(), time=1.0, integrator=integrator)


class AKStage(LabModel):
    alpha: ExactRational
    conjugator: Optional[ConjugatorSpec] = None
    tol: float = Field(..., gt=0.0, description="C⁰ closeness budget against the previous stage")


class AKSchedule(LabModel):
    """Rational rotations α_m with frequency-nested conjugators."""

    stages: List[AKStage] = Field(..., min_length=1)
    integrator: IntegratorParams = Field(default_factory=IntegratorParams)

    @property
    def denominators(self) -> List[int]:
        return [stage.alpha.denominator for stage in self.stages]

    @property
    def partial_tolerance_sums(self) -> List[float]:
        sums, total = [], 0.0
        for stage in self.stages:
            total += stage.tol
            sums.append(total)
        return sums

    def check(self) -> None:
        """Raise ScheduleError unless denominators nest and strictly increase, later α_m are
        non-zero, and every conjugator is invariant under the previous stage's rotation."""
        qs = self.denominators
        for m in range(1, len(self.stages)):
            prev, cur = self.stages[m - 1], self.stages[m]
            if qs[m] <= qs[m - 1] or qs[m] % qs[m - 1]:
                raise ScheduleError(
                    f"stage {m + 1} denominator {qs[m]} must be a strictly larger multiple of {qs[m - 1]}",
                    {"denominators": qs},
                )
            if cur.alpha == 0:
                raise ScheduleError(f"stage {m + 1} rotation is 0 mod 1")
            if cur.conjugator is not None and cur.conjugator.frequency % prev.alpha.denominator:
                raise ScheduleError(
                    f"stage {m + 1} conjugator frequency {cur.conjugator.frequency} is not a multiple of "
                    f"{prev.alpha.denominator}, so it does not commute with the previous rotation"
                )
        for m, stage in enumerate(self.stages, start=1):
            if stage.conjugator is not None and stage.conjugator.stage != m:
                raise ScheduleError(f"conjugator labelled stage {stage.conjugator.stage} sits at stage {m}")


class AKApproximant(LabModel):
    """φ_m = h_m⁻¹ ∘ R_{α_m} ∘ h_m with its stage diagnostics."""

    stage: int
    alpha: ExactRational
    h: MapExpr
    phi: MapExpr
    diagnostics: AKStageDiagnostics


class AKBuildResult(LabModel):
    approximants: List[AKApproximant] = Field(default_factory=list)
    failed_stage: Optional[int] = None
    failure: Optional[str] = None
    derivative_ledger_ok: bool = True

    @property
    def complete(self) -> bool:
        return self.failed_stage is None


# ============================================================================
# Stage Algebra
# ============================================================================


def conjugators(schedule: AKSchedule, upto: int) -> List[MapExpr]:
    """[g_1, ..., g_upto] as maps."""
    return [
        stage.conjugator.as_map(schedule.integrator)
        for stage in schedule.stages[:upto]
        if stage.conjugator is not None
    ]


def stage_conjugacy(schedule: AKSchedule, m: int) -> MapExpr:
    """h_m = g_m ∘ ... ∘ g_1 (g_1 acts first)."""
    factors = list(reversed(conjugators(schedule, m)))
    if not factors:
        return IDENTITY
    return factors[0] if len(factors) == 1 else Compose(factors=factors)


def conjugated_rotation(h: MapExpr, alpha: Fraction) -> MapExpr:
    if h == IDENTITY:
        return Rotation(angle=alpha)
    return Compose(factors=[Inverse(child=h), Rotation(angle=alpha), h])


def commutation_check(g: MapExpr, alpha: Union[Fraction, TorusVector], grid: GridSpec) -> float:
    """Sampled d_C⁰(g ∘ R_α, R_α ∘ g) on the annulus.

    Raises:
        DomainError: If α is not rational
    """
    if isinstance(alpha, TorusVector):
        if not alpha.is_rational or alpha.k != 1:
            raise DomainError("commutation_check needs a single rational rotation")
        alpha = alpha.representative()[0]
    rotation = Rotation(angle=alpha)
    return c0_sampled(Compose(factors=[g, rotation]), Compose(factors=[rotation, g]), ANNULUS, grid)


def ak_next_alpha(
    alpha_m: Fraction,
    q_next: int,
    lip_bound: float,
    tol: float,
    diameter_factor: float = 1.0,
) -> Fraction:
    """α_m + 1/(ℓ·q_next) with the smallest ℓ >= 1 such that lip_bound·diameter_factor/(ℓ·q_next) <= tol.

    Raises:
        ScheduleError: If q_next is not a multiple of the denominator of α_m, lip_bound < 1,
            or no ℓ in integer range meets tol
    """
    alpha_m = Fraction(alpha_m)
    if q_next < 1 or q_next % alpha_m.denominator:
        raise ScheduleError(f"q_next={q_next} must be a positive multiple of {alpha_m.denominator}")
    if lip_bound < 1.0:
        raise ScheduleError(f"lip_bound must be >= 1, got {lip_bound}")
    if not tol > 0.0:
        raise ScheduleError(f"no ℓ meets tolerance {tol}")
    if math.isinf(tol):
        ell = 1
    else:
        needed = to_fraction(lip_bound) * to_fraction(diameter_factor) / (to_fraction(tol) * q_next)
        ell = max(1, math.ceil(needed))
    if ell > MAX_ELL:
        raise ScheduleError(f"ℓ = {ell} exceeds the integer range for tolerance {tol}", {"ell": ell})
    return alpha_m + Fraction(1, ell * q_next)


def plan_schedule(
    stages: int,
    base_peak: float = 0.05,
    profile_knots: Tuple[float, float, float] = (0.1, 0.9, 0.2),
    integrator: Optional[IntegratorParams] = None,
    grid: Optional[GridSpec] = None,
) -> AKSchedule:
    """Build a nested schedule stage by stage.

    Stage 1 is R_{1/2} without a conjugator. Stage m+1 adds a conjugator of frequency q_m
    and peak base_peak/q_m, measures the derivative bound of h_{m+1}⁻¹, and picks α_{m+1}
    with `ak_next_alpha` against tol_{m+1} = 2^-(m+1), raising ℓ until the denominator is a
    strictly larger multiple of q_m.
    """
    if stages < 1:
        raise ScheduleError(f"a schedule needs at least one stage, got {stages}")
    integrator = integrator or IntegratorParams()
    grid = grid or GridSpec(counts=(48, 33))
    lo, hi, ramp = profile_knots
    plan = [AKStage(alpha=Fraction(1, 2), tol=0.5)]
    for m in range(1, stages):
        q_m = plan[-1].alpha.denominator
        profile = AmplitudeProfile(lo=lo, hi=hi, ramp=ramp, peak=base_peak / q_m)
        conjugator = ConjugatorSpec(stage=m + 1, frequency=q_m, profile=profile)
        tol = 2.0 ** -(m + 1)
        draft = AKSchedule(stages=plan + [AKStage(alpha=plan[-1].alpha, conjugator=conjugator, tol=tol)], integrator=integrator)
        h_inverse = Inverse(child=stage_conjugacy(draft, m + 1))
        lip = max(1.0, derivative_norm(h_inverse, ANNULUS, grid).upper)
        q_next = 2 * q_m
        alpha = ak_next_alpha(plan[-1].alpha, q_next, lip, tol)
        ell = (alpha - plan[-1].alpha).denominator // q_next
        while alpha.denominator % q_m or alpha.denominator <= q_m:
            ell += 1
            if ell > MAX_ELL:
                raise ScheduleError("no ℓ gives a nested denominator", {"stage": m + 1})
            alpha = plan[-1].alpha + Fraction(1, ell * q_next)
        logger.info("planned stage %d: α=%s (ℓ=%d, Lip(h⁻¹)≈%.4g)", m + 1, alpha, ell, lip)
        plan.append(AKStage(alpha=alpha, conjugator=conjugator, tol=tol))
    schedule = AKSchedule(stages=plan, integrator=integrator)
    schedule.check()
    return schedule


# ============================================================================
# Build
# ============================================================================


def _c1_gap(f: MapExpr, g: MapExpr, grid: GridSpec) -> float:
    points = sample_grid(ANNULUS, level_counts(ANNULUS, grid)[-1])

    def frobenius(chunk: np.ndarray) -> np.ndarray:
        _, jf = evaluate_with_jacobian(f, ANNULUS, chunk)
        _, jg = evaluate_with_jacobian(g, ANNULUS, chunk)
        return np.linalg.norm(jf - jg, ord="fro", axis=(1, 2))

    return sweep_max(frobenius, points)


def _collar_residual(h: MapExpr, schedule: AKSchedule, samples: int = 64) -> float:
    """Largest displacement of h on I ∈ {0, 1} and just inside the profiles' support."""
    profiles = [s.conjugator.profile for s in schedule.stages if s.conjugator is not None]
    if not profiles or h == IDENTITY:
        return 0.0
    edge_lo = min(p.lo for p in profiles)
    edge_hi = max(p.hi for p in profiles)
    theta = np.arange(samples) / samples
    rows = [np.column_stack([theta, np.full(samples, level)]) for level in (0.0, 0.5 * edge_lo, 0.5 * (1.0 + edge_hi), 1.0)]
    points = np.vstack(rows)
    return float(np.max(distance_array(ANNULUS, evaluate_array(h, ANNULUS, points), points)))


def ak_build(schedule: AKSchedule, grid: GridSpec) -> AKBuildResult:
    """Form φ_1, ..., φ_M on the annulus and measure each stage against the previous one.

    A stage whose sampled C⁰ gap exceeds its budget by more than the grid slack, whose
    conjugator fails to commute with the previous rotation, or whose consistency check
    fails ends the build; earlier stages are returned with the failure.

    Raises:
        ScheduleError: If the schedule itself is invalid
    """
    schedule.check()
    tolerance = schedule.integrator.tolerance
    approximants: List[AKApproximant] = []
    previous_phi: MapExpr = IDENTITY
    previous_alpha = Fraction(0)
    previous_deriv = 1.0
    ledger_ok = True
    for m, stage in enumerate(schedule.stages, start=1):
        h = stage_conjugacy(schedule, m)
        phi = conjugated_rotation(h, stage.alpha)
        try:
            c0_gap = c0_distance(phi, previous_phi, ANNULUS, grid).named("c0_gap")
            c1_gap = _c1_gap(phi, previous_phi, grid)
            deriv_h = derivative_norm(h, ANNULUS, grid).named("deriv_h")
            commutation = 0.0
            consistency = None
            if m > 1 and stage.conjugator is not None:
                commutation = commutation_check(stage.conjugator.as_map(schedule.integrator), previous_alpha, grid)
                consistency = c0_sampled(conjugated_rotation(h, previous_alpha), previous_phi, ANNULUS, grid)
            collar = _collar_residual(h, schedule)
        except LabError as e:
            logger.warning("stage %d measurement failed: %s", m, e)
            return AKBuildResult(approximants=approximants, failed_stage=m, failure=str(e), derivative_ledger_ok=ledger_ok)

        notes = []
        if c0_gap.lower > stage.tol + c0_gap.margin:
            notes.append(f"c0 gap {c0_gap.lower:.6g} exceeds budget {stage.tol:.6g}")
        if commutation > COMMUTATION_LIMIT:
            notes.append(f"commutation residual {commutation:.3g} > {COMMUTATION_LIMIT:g}")
        if consistency is not None and consistency > CONSISTENCY_FACTOR * tolerance:
            notes.append(f"stage consistency {consistency:.3g} > {CONSISTENCY_FACTOR:g}× integrator tolerance")
        if deriv_h.upper < previous_deriv - deriv_h.margin - 1e-9:
            ledger_ok = False
        previous_deriv = max(previous_deriv, deriv_h.lower)

        diagnostics = AKStageDiagnostics(
            stage=m,
            q=stage.alpha.denominator,
            alpha=stage.alpha,
            c0_gap=c0_gap,
            c1_gap=c1_gap,
            commutation_residual=commutation,
            consistency_residual=consistency,
            collar_residual=collar,
            deriv_h=deriv_h,
            tolerance=stage.tol,
            accepted=not notes,
            note="; ".join(notes),
        )
        approximants.append(AKApproximant(stage=m, alpha=stage.alpha, h=h, phi=phi, diagnostics=diagnostics))
        logger.info("stage %d: q=%d c0_gap=%.6g c1_gap=%.6g accepted=%s", m, diagnostics.q, c0_gap.lower, c1_gap, not notes)
        if notes:
            return AKBuildResult(
                approximants=approximants, failed_stage=m, failure="; ".join(notes), derivative_ledger_ok=ledger_ok
            )
        previous_phi, previous_alpha = phi, stage.alpha
    return AKBuildResult(approximants=approximants, derivative_ledger_ok=ledger_ok)
