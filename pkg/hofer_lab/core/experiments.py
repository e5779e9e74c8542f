"""Reproduction harnesses: inequality sweeps, rigidity scans, recurrence densities,
entropy slopes and Hofer convergence diagnostics."""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field, model_validator

from .ak_forge import AKApproximant, conjugated_rotation
from .diophantine import (
    ContinuedFraction,
    GrowthSchedule,
    Interval,
    TorusVector,
    cf_expand,
    circle_norm,
    circle_norm_interval,
    compare_with_exp_neg,
    discrepancy_bound,
    equidistribution_density,
    is_rational_within,
    random_quadratic,
)
from .errors import DomainError, LabError, PrecisionError
from .hamiltonians import (
    ActionHamiltonian,
    AmplitudeProfile,
    BumpHamiltonian,
    ConjugatorHamiltonian,
    HamiltonianSpec,
    SumHamiltonian,
)
from .maps import (
    IDENTITY,
    Compose,
    HamFlow,
    Inverse,
    MapExpr,
    Rotation,
    Twist,
    conjugation_parts,
    evaluate_array,
    evaluate_with_jacobian,
    inverse,
    normalize,
)
from .models import (
    AtlasConstants,
    DichotomyReport,
    EntropyFit,
    FastConvergenceReport,
    FastConvergenceRow,
    GridSpec,
    HarnessReport,
    HarnessSample,
    HoferConvergenceRow,
    InequalityConstants,
    IntegratorParams,
    LabModel,
    NormEstimate,
    RecurrenceReport,
    RigidityReport,
    RigidityRow,
    fraction_to_str,
    to_fraction,
)
from .norms import (
    c0_distance,
    check_holder_inequality,
    default_action,
    derivative_norm,
    displacement_energy_bounds,
    gamma_exact_small,
    hofer_bound,
    hofer_rotation_bound,
    hofer_upper,
    nondisplacement_witness,
    rotation_displacement,
)
from .phase_space import (
    ANNULUS,
    AtlasSpec,
    Manifold,
    ManifoldKind,
    Point,
    atlas_constants,
    build_atlas,
    distance_array,
    inequality_constants,
    level_counts,
    sample_grid,
)

logger = logging.getLogger(__name__)

ITERATE_CAP = 1 << 64
WITNESS_BUDGET = GridSpec(counts=(8, 16))
ENTROPY_MIN_STEPS = 8
DISCREPANCY_SLACK_FACTOR = 3.0

RationalLike = Union[Fraction, float, int, str]


def lab_constants(
    manifold: Manifold, grid: GridSpec, atlas_spec: Optional[AtlasSpec] = None
) -> Tuple[AtlasConstants, InequalityConstants]:
    """Atlas constants (ε, L) and the inequality constants (δ, C) with the diameter adjustment."""
    atlas = build_atlas(manifold, atlas_spec)
    sampled = atlas_constants(atlas, grid)
    return sampled, inequality_constants(sampled.epsilon, sampled.lipschitz_L, manifold.diameter)


def _torus(alpha: Union[TorusVector, ContinuedFraction, RationalLike]) -> TorusVector:
    if isinstance(alpha, TorusVector):
        return alpha
    if isinstance(alpha, ContinuedFraction):
        return TorusVector.of(alpha)
    return TorusVector.of(to_fraction(alpha))


def _describe(alpha: Union[TorusVector, ContinuedFraction, RationalLike, Interval]) -> str:
    if isinstance(alpha, tuple):
        return f"[{fraction_to_str(to_fraction(alpha[0]))}, {fraction_to_str(to_fraction(alpha[1]))}]"
    if isinstance(alpha, ContinuedFraction):
        return repr(alpha)
    if isinstance(alpha, TorusVector):
        return "(" + ", ".join(_describe(c) for c in alpha.components) + ")"
    return fraction_to_str(to_fraction(alpha))


# ============================================================================
# Inequality Harness
# ============================================================================


class MapFamily(LabModel):
    """Random generator of maps with certified γ upper bounds.

    annulus: flow of c·I plus one conjugator Hamiltonian, optionally conjugated by a twist
    (conjugation leaves the Hofer bound unchanged). plane: flow of one raised-cosine bump,
    whose oscillation is the exact γ value when the bump is C²-small.
    """

    kind: Literal["annulus", "plane"] = "annulus"
    action_max: float = Field(default=0.05, gt=0.0)
    conjugator_peak_max: float = Field(default=0.02, ge=0.0)
    frequencies: List[int] = Field(default_factory=lambda: [1, 2, 3], min_length=1)
    twist_max: float = Field(default=0.0, ge=0.0, description="Largest |shear| of a conjugating twist; 0 disables")
    peak_range: Tuple[float, float] = (1e-3, 1e-1)
    radius_range: Tuple[float, float] = (3.0, 4.0)
    center_offset: float = Field(default=0.5, ge=0.0)
    support_radius: float = Field(default=4.5, gt=0.0)
    integrator: IntegratorParams = Field(default_factory=IntegratorParams)

    @model_validator(mode="after")
    def _plane_bumps_fit(self) -> "MapFamily":
        if self.kind == "plane" and self.radius_range[1] + self.center_offset > self.support_radius:
            raise ValueError("plane bumps must fit inside the support box")
        if not 0.0 < self.peak_range[0] <= self.peak_range[1]:
            raise ValueError(f"peak_range must be positive and ordered, got {self.peak_range}")
        return self

    @property
    def manifold(self) -> Manifold:
        if self.kind == "plane":
            return Manifold(kind=ManifoldKind.PLANE, support_radius=self.support_radius)
        return ANNULUS

    def draw(self, rng: np.random.Generator, grid: GridSpec) -> Tuple[MapExpr, float, str]:
        """One (map, certified bound, bound kind) triple."""
        if self.kind == "plane":
            low, high = np.log(self.peak_range)
            hamiltonian: HamiltonianSpec = BumpHamiltonian(
                center=tuple(float(v) for v in rng.uniform(-self.center_offset, self.center_offset, 2)),
                radius=float(rng.uniform(*self.radius_range)),
                peak=float(np.exp(rng.uniform(low, high))),
            )
            spectral = gamma_exact_small(hamiltonian, self.manifold, grid)
            flow = HamFlow(hamiltonian=hamiltonian, time=1.0, integrator=self.integrator)
            return flow, spectral.value, "gamma" if spectral.exact else "hofer"

        conjugator = ConjugatorHamiltonian(
            frequency=int(rng.choice(self.frequencies)),
            phase=float(rng.uniform(0.0, 2.0 * math.pi)),
            profile=AmplitudeProfile(
                lo=0.1, hi=0.9, ramp=0.2, peak=float(rng.uniform(-self.conjugator_peak_max, self.conjugator_peak_max))
            ),
        )
        hamiltonian = SumHamiltonian(
            terms=[ActionHamiltonian(coefficient=float(rng.uniform(-self.action_max, self.action_max))), conjugator]
        )
        expr: MapExpr = HamFlow(hamiltonian=hamiltonian, time=1.0, integrator=self.integrator)
        if self.twist_max > 0.0:
            twist = Twist(shear=float(rng.uniform(-self.twist_max, self.twist_max)))
            expr = Compose(factors=[Inverse(child=twist), expr, twist])
        return expr, hofer_upper(hamiltonian, self.manifold), "hofer"


def _max_displacement_point(f: MapExpr, manifold: Manifold, grid: GridSpec) -> Point:
    samples = sample_grid(manifold, level_counts(manifold, grid)[0])
    moved = evaluate_array(f, manifold, samples)
    index = int(np.argmax(distance_array(manifold, moved, samples)))
    return Point.on(manifold, samples[index])


def inequality_harness(
    family: MapFamily,
    count: int,
    seed: int,
    constants: InequalityConstants,
    lipschitz_L: float,
    grid: GridSpec,
) -> HarnessReport:
    """Check the Hölder-type inequality on `count` seeded samples.

    Samples with a bound below δ also run the non-displacement search on the ball of
    radius 2L·sqrt(γ/π) around the most displaced grid sample. The plane family tests
    the refined form sqrt(γ)·(1 + ‖Dφ‖). A sample that fails to integrate ends the run
    with a partial report.
    """
    if count < 0:
        raise DomainError(f"count must be non-negative, got {count}")
    manifold = family.manifold
    refined = family.kind == "plane"
    rng = np.random.default_rng(seed)
    samples: List[HarnessSample] = []
    partial = False
    for index in range(count):
        try:
            expr, gamma_ub, bound_kind = family.draw(rng, grid)
            check = check_holder_inequality(
                expr,
                gamma_ub,
                constants.C,
                manifold,
                grid,
                bound_kind=bound_kind,
                refined=refined,
                lipschitz_L=lipschitz_L,
                delta=constants.delta,
            )
            radius = found = None
            if gamma_ub < constants.delta and gamma_ub > 0.0:
                radius = 2.0 * lipschitz_L * math.sqrt(gamma_ub / math.pi)
                center = _max_displacement_point(expr, manifold, grid)
                found = nondisplacement_witness(expr, center, radius, WITNESS_BUDGET).found
        except LabError as e:
            logger.warning("harness stopped at sample %d: %s", index, e)
            partial = True
            break
        samples.append(
            HarnessSample(index=index, gamma_ub=gamma_ub, check=check, witness_radius=radius, witness_found=found)
        )
        logger.debug("sample %d: gamma_ub=%.4g slack=%.4g", index, gamma_ub, check.slack_ratio)

    attempts = [s for s in samples if s.witness_found is not None]
    return HarnessReport(
        family=family.kind,
        count=len(samples),
        seed=seed,
        delta=constants.delta,
        C=constants.C,
        violations=sum(1 for s in samples if s.check.violation),
        min_slack_ratio=min((s.check.slack_ratio for s in samples), default=math.inf),
        witness_attempts=len(attempts),
        witness_successes=sum(1 for s in attempts if s.witness_found),
        samples=samples,
        partial=partial,
    )


# ============================================================================
# Rigidity Scan
# ============================================================================


def _split_base(base: Union[MapExpr, AKApproximant]) -> Tuple[MapExpr, Optional[Fraction]]:
    """(h, exact α) for h⁻¹∘R_α∘h, or (h, None) when α must come from the caller."""
    if isinstance(base, AKApproximant):
        return base.h, base.alpha
    expr = normalize(base)
    if isinstance(expr, Rotation):
        return IDENTITY, expr.angle
    parts = conjugation_parts(expr)
    if parts is None:
        raise DomainError("rigidity_scan needs a rotation, a conjugated rotation or an approximant")
    left, rotation, right = parts
    h = right[0] if len(right) == 1 else Compose(factors=list(right))
    return h, rotation.angle


def _default_iterates(alpha: Union[ContinuedFraction, Fraction], q_limit: Optional[int]) -> List[int]:
    if isinstance(alpha, Fraction):
        alpha = cf_expand(alpha)
    if q_limit is not None:
        alpha.ensure_denominator(q_limit + 1)
    qs = alpha.denominators()[:-1]
    return sorted({q for q in qs if q_limit is None or q <= q_limit})


def _representative_drift(vector: TorusVector, representative: Fraction) -> Fraction:
    """Largest circle distance between the representative and any value in the enclosure."""
    lo, hi = vector.intervals()[0]
    return max(circle_norm(lo - representative), circle_norm(hi - representative))


def _widen(c0: NormEstimate, slack: float) -> NormEstimate:
    """c0 of the true iterate, given c0 of the rational stand-in and their sup distance."""
    if slack <= 0.0:
        return c0
    slack += 4.0 * math.ulp(max(c0.upper, slack))
    return c0.model_copy(
        update={
            "lower": max(0.0, c0.lower - slack),
            "upper": c0.upper + slack,
            "method": f"{c0.method}+approximant",
        }
    )


def _exp_chain(
    schedule: GrowthSchedule, index: int, n: int, dist_hi: Fraction, action: Sequence[HamiltonianSpec], manifold: Manifold
) -> Optional[bool]:
    """hofer_ub(φⁿ) <= 2k·‖μ‖_∞·e^{-c_i·n} decided in exact arithmetic."""
    osc = to_fraction(action[0].oscillation(manifold))
    sup = to_fraction(max(h.sup_norm(manifold) for h in action))
    ratio = dist_hi * osc / (2 * len(action) * sup)
    return compare_with_exp_neg(ratio, ratio, schedule.c(index) * n)


def rigidity_scan(
    base: Union[MapExpr, AKApproximant],
    alpha: Optional[Union[ContinuedFraction, Fraction]],
    constant: float,
    grid: GridSpec,
    manifold: Manifold = ANNULUS,
    iterates: Optional[Sequence[int]] = None,
    q_limit: Optional[int] = None,
    c: Optional[RationalLike] = None,
    schedule: Optional[GrowthSchedule] = None,
    action: Optional[Sequence[HamiltonianSpec]] = None,
) -> RigidityReport:
    """Rows (n, ‖nα‖, Hofer bound, C⁰ distance, ‖Dφⁿ‖) for φ = h⁻¹∘R_α∘h along iterates.

    φⁿ is evaluated as h⁻¹∘R_{nα}∘h with the exact rational representative of α, so the
    map depth does not grow with n. When α is irrational each C⁰ interval is widened by
    Lip(h⁻¹)·sup d(R_{nα}, R_{n p_N/q_N}) over the enclosure of α, and its method carries
    an `+approximant` suffix. For an approximant the scan studies its final rational
    rotation, not the limit. The envelope C·e^{n(log‖Dφ‖ - c)} is only filled when
    c > log‖Dφ‖.

    Raises:
        DomainError: If the base is not a conjugated rotation
        PrecisionError: If an iterate exceeds the exact-arithmetic cap
    """
    h, base_alpha = _split_base(base)
    studies_approximant = isinstance(base, AKApproximant)
    if alpha is None or studies_approximant:
        if base_alpha is None:
            raise DomainError("no rotation number given")
        alpha = base_alpha
    vector = _torus(alpha)
    representative = vector.representative()[0]
    action = list(action) if action is not None else default_action(manifold)
    c_value = to_fraction(c) if c is not None else None

    ns = sorted(set(iterates)) if iterates is not None else _default_iterates(alpha, q_limit)
    if any(n >= ITERATE_CAP for n in ns):
        raise PrecisionError(f"iterates beyond {ITERATE_CAP} are not evaluated", {"max": max(ns)})
    denominators = alpha.denominators() if isinstance(alpha, ContinuedFraction) else []

    drift = _representative_drift(vector, representative)
    lip_h_inv = 1.0 if h == IDENTITY or drift == 0 else derivative_norm(inverse(h), manifold, grid).upper

    phi = conjugated_rotation(h, representative)
    deriv_base = derivative_norm(phi, manifold, grid)
    log_d1 = math.log(deriv_base.upper)
    premise = c_value is not None and c_value > to_fraction(log_d1)
    if c_value is not None and not premise:
        logger.info("envelope skipped: c=%s does not exceed log‖Dφ‖=%.6g", c_value, log_d1)

    rows: List[RigidityRow] = []
    for n in ns:
        dist_lo, dist_hi = vector.scaled_norm(n)
        hofer_ub = hofer_rotation_bound([dist_hi], action, manifold).tight
        phi_n = conjugated_rotation(h, n * representative)
        c0 = c0_distance(phi_n, IDENTITY, manifold, grid)
        if drift:
            c0 = _widen(c0, lip_h_inv * rotation_displacement(manifold, min(n * drift, Fraction(1, 2))))
        deriv = derivative_norm(phi_n, manifold, grid)
        envelope = None
        if premise:
            assert c_value is not None
            envelope = constant * math.exp(n * (log_d1 - float(c_value)))
        chain = None
        if schedule is not None and n in denominators:
            chain = _exp_chain(schedule, denominators.index(n), n, dist_hi, action, manifold)
        rows.append(
            RigidityRow(
                n=n,
                torus_dist_lo=dist_lo,
                torus_dist_hi=dist_hi,
                hofer_ub=hofer_ub,
                c0=c0,
                deriv=deriv,
                holder_rhs=constant * math.sqrt(hofer_ub) * deriv.upper,
                exp_envelope=envelope,
                exp_chain_ok=chain,
            )
        )
        logger.debug("rigidity n=%d c0=[%.3g, %.3g] hofer_ub=%.3g", n, c0.lower, c0.upper, hofer_ub)

    envelopes = [row for row in rows if row.exp_envelope is not None]
    chains = [row.exp_chain_ok for row in rows if row.n in denominators] if schedule is not None else []
    return RigidityReport(
        rows=rows,
        alpha_representative=fraction_to_str(representative),
        studies_approximant=studies_approximant or vector.is_rational,
        c=c_value,
        hofer_decreasing=all(a.hofer_ub > b.hofer_ub for a, b in zip(rows, rows[1:])),
        c0_decreasing=all(b.c0.upper < a.c0.upper for a, b in zip(rows, rows[1:])),
        holder_ok=all(row.holder_ok for row in rows),
        envelope_ok=all(row.c0.upper <= row.exp_envelope for row in envelopes) if envelopes else None,
        chain_ok=all(chain is True for chain in chains) if chains else None,
    )


# ============================================================================
# Recurrence
# ============================================================================


class RecurrenceSet(LabModel):
    """A set with a positive displacement-energy lower bound.

    ball: embedded ball (energy-capacity); circle: round contractible circle (enclosed
    area, the smaller side on the sphere); essential-circle: {I = level} on the annulus,
    which no map displaces, so the smaller collar area serves as a finite lower bound.
    """

    kind: Literal["ball", "circle", "essential-circle"] = "ball"
    center: Tuple[float, ...] = (0.5, 0.5)
    radius: float = Field(default=0.1, ge=0.0)
    level: float = Field(default=0.5, ge=0.0, le=1.0)

    def descriptor(self) -> str:
        if self.kind == "essential-circle":
            return f"essential-circle(I={self.level!r})"
        return f"{self.kind}(center={list(self.center)}, r={self.radius!r})"

    def energy_lower(self, manifold: Manifold) -> float:
        if self.kind == "essential-circle":
            if manifold.kind != ManifoldKind.ANNULUS:
                raise DomainError("essential circles live on the annulus")
            return min(self.level, 1.0 - self.level)
        if self.kind == "ball":
            center = Point.on(manifold, self.center)
            return displacement_energy_bounds(center, self.radius, build_atlas(manifold)).lower
        if manifold.kind == ManifoldKind.SPHERE:
            cap = 2.0 * math.pi * (1.0 - math.cos(self.radius))
            return min(cap, 4.0 * math.pi - cap)
        return math.pi * self.radius**2


def _recurrence_policy(vector: TorusVector) -> Tuple[int, float, str]:
    """(d, C′, policy) for the subgroup generated by α."""
    if vector.is_rational:
        return 0, 1.0, "rational: cyclic subgroup of order q, d=0, bound 1/q"
    if vector.k == 1:
        return 1, 2.0, "k=1: full circle, C'=2 (max-metric ball)"
    return vector.k, float(2**vector.k), f"k={vector.k}: subgroup assumed to be the full torus, C'=2^k"


def recurrence_experiment(
    alpha: Union[TorusVector, ContinuedFraction, RationalLike],
    region: RecurrenceSet,
    N: int,
    action: Optional[Sequence[HamiltonianSpec]] = None,
    manifold: Manifold = ANNULUS,
) -> RecurrenceReport:
    """Density of j <= N with ‖jα‖ < C″·e_lower(A), against min{1, C′·(C″·e_lower(A))^d}.

    Raises:
        DomainError: If the displacement-energy lower bound of A is 0
    """
    vector = _torus(alpha)
    action = list(action) if action is not None else default_action(manifold) * vector.k
    if len(action) != vector.k:
        raise DomainError(f"{vector.k} rotation components for {len(action)} action Hamiltonians")
    e_lower = region.energy_lower(manifold)
    if e_lower <= 0.0:
        raise DomainError(f"{region.descriptor()} has no positive displacement-energy lower bound")
    sup = max(h.sup_norm(manifold) for h in action)
    c_double_prime = 1.0 / (2.0 * vector.k * sup)
    threshold = c_double_prime * e_lower
    d, c_prime, policy = _recurrence_policy(vector)

    density = equidistribution_density(vector, min(to_fraction(threshold), Fraction(1, 2)), N)
    if vector.is_rational:
        q = math.lcm(*(r.denominator for r in vector.representative()))
        bound = 1.0 / q
        slack = DISCREPANCY_SLACK_FACTOR * q / N
    else:
        bound = min(1.0, c_prime * threshold**d)
        slack = DISCREPANCY_SLACK_FACTOR * sum(
            discrepancy_bound(comp, N) for comp in vector.components
        )
    passed = density >= bound - slack
    if not passed:
        logger.warning("recurrence density %.6g below bound %.6g - slack %.6g", density, bound, slack)
    return RecurrenceReport(
        alpha=_describe(vector),
        set_descriptor=region.descriptor(),
        N=N,
        density=density,
        threshold=threshold,
        e_lower=e_lower,
        bound=bound,
        C_double_prime=c_double_prime,
        C_prime=c_prime,
        d=d,
        slack=slack,
        policy=policy,
        passed=passed,
    )


def recurrence_pairs(count: int, seed: int, N: int, radius_range: Tuple[float, float] = (0.02, 0.2)) -> List[RecurrenceReport]:
    """Recurrence reports for seeded (α = frac(√d), annulus ball radius r) pairs."""
    rng = np.random.default_rng(seed)
    reports = []
    while len(reports) < count:
        d = int(rng.integers(2, 200))
        if math.isqrt(d) ** 2 == d:
            continue
        region = RecurrenceSet(kind="ball", center=(0.5, 0.5), radius=float(rng.uniform(*radius_range)))
        reports.append(recurrence_experiment(random_quadratic(d), region, N))
    return reports


# ============================================================================
# Entropy Slope
# ============================================================================


def _power(f: MapExpr, n: int) -> Optional[MapExpr]:
    """fⁿ with O(1) depth when f is a rotation or a conjugated rotation."""
    expr = normalize(f)
    if isinstance(expr, Rotation):
        return Rotation(angle=n * expr.angle)
    parts = conjugation_parts(expr)
    if parts is None:
        return None
    left, rotation, right = parts
    return Compose(factors=[*left, Rotation(angle=n * rotation.angle), *right])


def _iterated_log_norms(f: MapExpr, manifold: Manifold, points: np.ndarray, n_max: int) -> Tuple[List[float], bool]:
    """sup_x log‖Dfⁿ(x)‖ for n = 1..n_max from renormalised tangent products."""
    jac = np.broadcast_to(np.eye(2), (len(points), 2, 2)).copy()
    log_scale = np.zeros(len(points))
    logs: List[float] = []
    for n in range(1, n_max + 1):
        points, step = evaluate_with_jacobian(f, manifold, points)
        jac = np.einsum("nij,njk->nik", step, jac)
        norms = np.linalg.norm(jac, ord=2, axis=(1, 2))
        if not np.all(np.isfinite(norms)) or np.any(norms <= 0.0):
            logger.info("tangent products overflowed at n=%d", n)
            return logs, True
        log_scale += np.log(norms)
        jac /= norms[:, None, None]
        logs.append(max(0.0, float(np.max(log_scale))))
    return logs, False


def entropy_slope(f: MapExpr, n_max: int, grid: GridSpec, manifold: Manifold = ANNULUS) -> EntropyFit:
    """Least-squares slope of log‖Dfⁿ‖ over the upper half of 1..n_max; bound = dim·max(slope, 0).

    Raises:
        DomainError: If n_max < 8
    """
    if n_max < ENTROPY_MIN_STEPS:
        raise DomainError(f"n_max must be at least {ENTROPY_MIN_STEPS}, got {n_max}")
    partial = False
    powers = [_power(f, n) for n in range(1, n_max + 1)]
    if all(p is not None for p in powers):
        logs = [math.log(derivative_norm(p, manifold, grid).lower) for p in powers if p is not None]
    else:
        points = sample_grid(manifold, level_counts(manifold, grid)[-1])
        logs, partial = _iterated_log_norms(f, manifold, points, n_max)
    start = max(1, len(logs) // 2)
    if len(logs) - start + 1 < 2:
        raise DomainError(f"only {len(logs)} finite derivative norms before overflow")
    ns = np.arange(start, len(logs) + 1, dtype=float)
    slope = float(np.polyfit(ns, np.asarray(logs[start - 1 :]), 1)[0])
    return EntropyFit(
        slope=slope,
        bound=2.0 * max(slope, 0.0),
        n_used=(start, len(logs)),
        log_norms=logs,
        partial=partial,
    )


# ============================================================================
# Convergence Diagnostics
# ============================================================================


def hofer_convergence_diagnostic(
    alpha_sequence: Sequence[Union[TorusVector, ContinuedFraction, RationalLike]],
    alpha_limit: Union[TorusVector, ContinuedFraction, RationalLike],
    j_list: Sequence[int],
    action: Optional[Sequence[HamiltonianSpec]] = None,
    manifold: Manifold = ANNULUS,
) -> List[HoferConvergenceRow]:
    """|bound(jα_m) - bound(jα)| next to its Lipschitz estimate Σ osc_i·‖j(α_m,i - α_i)‖."""
    limit = _torus(alpha_limit)
    action = list(action) if action is not None else default_action(manifold) * limit.k
    if len(action) != limit.k:
        raise DomainError(f"{limit.k} rotation components for {len(action)} action Hamiltonians")
    osc = [h.oscillation(manifold) for h in action]
    rows = []
    for m, raw in enumerate(alpha_sequence, start=1):
        vector = _torus(raw)
        if vector.k != limit.k:
            raise DomainError(f"sequence entry {m} has {vector.k} components, the limit has {limit.k}")
        for j in j_list:
            difference = lipschitz = 0.0
            pairs = zip(vector.intervals(), limit.intervals(), osc)
            for (m_lo, m_hi), (lo, hi), weight in pairs:
                a_lo, a_hi = circle_norm_interval(j * m_lo, j * m_hi)
                b_lo, b_hi = circle_norm_interval(j * lo, j * hi)
                difference += weight * float(max(abs(a_hi - b_lo), abs(a_lo - b_hi)))
                lipschitz += weight * float(circle_norm_interval(j * (m_lo - hi), j * (m_hi - lo))[1])
            rows.append(
                HoferConvergenceRow(
                    m=m,
                    j=j,
                    difference=difference,
                    lipschitz_bound=lipschitz,
                    within_bound=difference <= lipschitz * (1.0 + 1e-12) + 1e-15,
                )
            )
    return rows


def columns_converge(rows: Sequence[HoferConvergenceRow]) -> Dict[int, bool]:
    """Per j: whether the last difference is no larger than the first and all rows respect the estimate."""
    columns: Dict[int, List[HoferConvergenceRow]] = {}
    for row in rows:
        columns.setdefault(row.j, []).append(row)
    return {
        j: column[-1].difference <= column[0].difference and all(r.within_bound for r in column)
        for j, column in columns.items()
    }


def fast_convergence_check(
    maps: Sequence[MapExpr],
    manifold: Manifold,
    grid: GridSpec,
    constant: float,
    bounds: Optional[Sequence[Optional[float]]] = None,
) -> FastConvergenceReport:
    """sqrt(bound_i)·‖Dφ_i‖ next to d_C⁰(φ_i, Id) along a sequence.

    Missing bounds come from `hofer_bound`.

    Raises:
        DomainError: If a map has neither a supplied nor a structural bound
    """
    rows = []
    for index, expr in enumerate(maps):
        bound = bounds[index] if bounds is not None and index < len(bounds) else None
        if bound is None:
            bound = hofer_bound(expr, manifold)
        if bound is None:
            raise DomainError(f"map {index} carries no certified Hofer or γ bound")
        deriv = derivative_norm(expr, manifold, grid)
        rows.append(
            FastConvergenceRow(
                index=index,
                bound=bound,
                derivative=deriv,
                product=math.sqrt(bound) * deriv.upper,
                c0=c0_distance(expr, IDENTITY, manifold, grid),
            )
        )
    products = [row.product for row in rows]
    decays = all(b <= a for a, b in zip(products, products[1:])) and (len(rows) < 2 or products[-1] < products[0])
    follows = all(row.c0.lower <= constant * row.product for row in rows) and (
        len(rows) < 2 or rows[-1].c0.upper <= rows[0].c0.upper
    )
    return FastConvergenceReport(rows=rows, product_decays=decays, c0_follows=follows)


def _interval(x: Union[ContinuedFraction, Interval, RationalLike]) -> Interval:
    if isinstance(x, ContinuedFraction):
        return x.enclosure()
    if isinstance(x, tuple):
        return to_fraction(x[0]), to_fraction(x[1])
    value = to_fraction(x)
    return value, value


def rotation_dichotomy(
    alpha: Union[ContinuedFraction, Interval, RationalLike],
    alpha_prime: Union[ContinuedFraction, Interval, RationalLike],
    q_max: int,
    tol: float,
) -> DichotomyReport:
    """Whether α - α′ or α + α′ is rational within (q_max, tol), and whether each candidate is."""
    lo, hi = _interval(alpha)
    lo2, hi2 = _interval(alpha_prime)

    def found(interval: Interval) -> Optional[str]:
        value = is_rational_within(interval, q_max, tol)
        return None if value is None else fraction_to_str(value)

    return DichotomyReport(
        alpha=_describe(alpha),
        alpha_prime=_describe(alpha_prime),
        difference_rational=found((lo - hi2, hi - lo2)),
        sum_rational=found((lo + lo2, hi + hi2)),
        alpha_rational=found((lo, hi)),
        alpha_prime_rational=found((lo2, hi2)),
        q_max=q_max,
        tol=tol,
    )
