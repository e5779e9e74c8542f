"""Certified norm estimates, the Hölder-type inequality check and the non-displacement search."""

import logging
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError
from .hamiltonians import (
    ActionHamiltonian,
    BandHamiltonian,
    HamiltonianSpec,
    ScheduledHamiltonian,
    riemannian_hessian_norm,
)
from .maps import (
    IDENTITY,
    Compose,
    HamFlow,
    Inverse,
    Iterate,
    Linear,
    MapExpr,
    Rotation,
    Twist,
    conjugation_parts,
    evaluate_array,
    evaluate_with_jacobian,
    flow_tolerance,
    inverse,
    normalize,
)
from .models import (
    DisplacementBounds,
    GridSpec,
    HolderCheck,
    HoferRotationBound,
    NormEstimate,
    SpectralEstimate,
    WitnessResult,
    to_fraction,
)
from .phase_space import (
    Atlas,
    Manifold,
    ManifoldKind,
    Point,
    distance_array,
    level_counts,
    sample_grid,
    tangent_frames,
)
from .sweep import level_samples, sweep_max

logger = logging.getLogger(__name__)

DEFAULT_SMALLNESS_THRESHOLD = 0.1
NOISE_FLOOR_FACTOR = 100.0


def _circle_norm(angle: Fraction) -> Fraction:
    angle = angle - math.floor(angle)
    return min(angle, 1 - angle)


def rotation_displacement(manifold: Manifold, angle: Fraction) -> float:
    """sup_x d(R_α x, x): ‖α‖ on the annulus, 2π‖α‖ on the sphere (attained on the equator)."""
    if manifold.kind == ManifoldKind.ANNULUS:
        return float(_circle_norm(angle))
    if manifold.kind == ManifoldKind.SPHERE:
        return 2.0 * math.pi * float(_circle_norm(angle))
    raise DomainError("the plane carries no circle action")


# ============================================================================
# Derivative and C⁰ Estimates
# ============================================================================


def _analytic_derivative(expr: MapExpr) -> Optional[Tuple[float, str]]:
    if isinstance(expr, Rotation) or expr == IDENTITY:
        return 1.0, "analytic-isometry"
    if isinstance(expr, Linear):
        return float(np.linalg.svd(expr.array, compute_uv=False)[0]), "analytic-linear"
    if isinstance(expr, Twist) and not any(expr.polynomial):
        matrix = np.array([[1.0, expr.shear], [0.0, 1.0]])
        return float(np.linalg.svd(matrix, compute_uv=False)[0]), "analytic-twist"
    return None


def derivative_norm(f: MapExpr, manifold: Manifold, grid: GridSpec) -> NormEstimate:
    """Sup over the grid of the largest singular value of Df.

    The upper value extrapolates the trend of the last two refinement levels
    (fine + |fine - coarse|). Symplectic maps have ‖Df‖ >= 1, so lower is at least 1.
    """
    f = normalize(f)
    analytic = _analytic_derivative(f)
    if analytic is not None:
        value, method = analytic
        return NormEstimate(quantity="derivative", lower=value, upper=value, method=method, mesh=0.0)

    def largest_singular_value(chunk: np.ndarray) -> np.ndarray:
        _, jac = evaluate_with_jacobian(f, manifold, chunk)
        return np.linalg.svd(jac, compute_uv=False)[:, 0]

    values: List[float] = []
    mesh = 0.0
    for counts, points, mesh in level_samples(manifold, grid):
        values.append(sweep_max(largest_singular_value, points))
    lower = max(1.0, max(values))
    if len(values) >= 2:
        upper = values[-1] + abs(values[-1] - values[-2])
        method = "grid-refinement"
    else:
        upper = values[-1]
        method = "grid"
    return NormEstimate(quantity="derivative", lower=lower, upper=max(upper, lower), method=method, mesh=mesh)


def _certificate(f: MapExpr, g: MapExpr, manifold: Manifold, grid: GridSpec) -> Optional[Tuple[float, float, str]]:
    """Exact or two-sided bounds on d_C⁰(f, g) from the structure of f and g."""
    if manifold.kind == ManifoldKind.PLANE:
        return None
    if g == IDENTITY and f == IDENTITY:
        return 0.0, 0.0, "identical"
    angle_f = f.angle if isinstance(f, Rotation) else (Fraction(0) if f == IDENTITY else None)
    angle_g = g.angle if isinstance(g, Rotation) else (Fraction(0) if g == IDENTITY else None)
    if angle_f is not None and angle_g is not None:
        rho = rotation_displacement(manifold, angle_f - angle_g)
        return rho, rho, "exact-rotation"
    if g != IDENTITY:
        return None
    parts = conjugation_parts(f)
    if parts is None:
        return None
    left, rotation, right = parts
    h = Compose(factors=right) if len(right) != 1 else right[0]
    rho = rotation_displacement(manifold, rotation.angle)
    lip_h = derivative_norm(h, manifold, grid).upper
    lip_h_inv = derivative_norm(inverse(h), manifold, grid).upper
    return rho / lip_h, lip_h_inv * rho, "conjugation-certificate"


def _sampled_gap(f: MapExpr, g: MapExpr, manifold: Manifold, grid: GridSpec) -> Tuple[float, float, float]:
    """(max over all levels, max on the finest level, finest mesh) of d(f(x), g(x))."""

    def gap(chunk: np.ndarray) -> np.ndarray:
        return distance_array(manifold, evaluate_array(f, manifold, chunk), evaluate_array(g, manifold, chunk))

    lower = fine = mesh = 0.0
    for _, points, mesh in level_samples(manifold, grid):
        fine = sweep_max(gap, points)
        lower = max(lower, fine)
    return lower, fine, mesh


def c0_sampled(f: MapExpr, g: MapExpr, manifold: Manifold, grid: GridSpec) -> float:
    """Grid lower estimate of d_C⁰(f, g) without any certificate."""
    f, g = normalize(f), normalize(g)
    if f == g:
        return 0.0
    return _sampled_gap(f, g, manifold, grid)[0]


def c0_distance(
    f: MapExpr,
    g: MapExpr,
    manifold: Manifold,
    grid: GridSpec,
    lipschitz: Optional[Tuple[float, float]] = None,
) -> NormEstimate:
    """max_x d(f(x), g(x)) over the grid, with a Lipschitz upper certificate.

    upper = lower + (Λ_f + Λ_g)·mesh, where Λ are derivative upper estimates unless
    `lipschitz` supplies them. Rotations and conjugated rotations also carry structural
    certificates; below the integration noise floor the certificate replaces the grid.
    """
    f, g = normalize(f), normalize(g)
    if f == g:
        return NormEstimate(quantity="c0", lower=0.0, upper=0.0, method="identical", mesh=0.0)
    cert = _certificate(f, g, manifold, grid)
    if cert is not None and cert[2] in ("exact-rotation", "identical"):
        return NormEstimate(quantity="c0", lower=cert[0], upper=cert[1], method=cert[2], mesh=0.0)

    noise_floor = NOISE_FLOOR_FACTOR * max(flow_tolerance(f), flow_tolerance(g), 1e-13)
    if cert is not None and cert[1] < noise_floor:
        logger.debug("rotation displacement %r below noise floor %r, using certificate", cert[1], noise_floor)
        return NormEstimate(quantity="c0", lower=cert[0], upper=cert[1], method=cert[2], mesh=0.0)

    lower, fine, mesh = _sampled_gap(f, g, manifold, grid)
    if lipschitz is None:
        lipschitz = (derivative_norm(f, manifold, grid).upper, derivative_norm(g, manifold, grid).upper)
    lip_total = lipschitz[0] + lipschitz[1]
    upper = fine + lip_total * mesh
    method = "grid-lipschitz"
    if cert is not None:
        lower = max(lower, cert[0])
        upper = max(min(upper, cert[1]), lower)
        method = f"grid+{cert[2]}"
    return NormEstimate(quantity="c0", lower=lower, upper=upper, method=method, mesh=mesh, lipschitz=lip_total)


# ============================================================================
# Hofer and Spectral Bounds
# ============================================================================


def hofer_upper(hamiltonian: HamiltonianSpec, manifold: Manifold, time: float = 1.0) -> float:
    """∫ osc(H_t) dt, an upper bound for the Hofer norm of the time-`time` map."""
    hamiltonian.check_manifold(manifold)
    if isinstance(hamiltonian, ScheduledHamiltonian):
        return hamiltonian.oscillation_over(manifold, time)
    return abs(time) * hamiltonian.oscillation(manifold)


def default_action(manifold: Manifold) -> List[HamiltonianSpec]:
    """Generator of the standard circle action (period 1)."""
    if manifold.kind == ManifoldKind.PLANE:
        raise DomainError("the plane carries no circle action")
    return [ActionHamiltonian(coefficient=1.0)]


def hofer_rotation_bound(
    alpha: Sequence[Union[Fraction, float]],
    action: Sequence[HamiltonianSpec],
    manifold: Manifold,
) -> HoferRotationBound:
    """Tight bound Σ|α_i|·osc(H_i) and the coarser 2k‖α‖·‖μ‖_∞ for R_α.

    Components are taken in (-1/2, 1/2] so |α_i| is the circle norm.
    """
    if not action:
        raise DomainError("hofer_rotation_bound needs at least one action Hamiltonian")
    if len(alpha) != len(action):
        raise DomainError(f"{len(alpha)} rotation components for {len(action)} action Hamiltonians")
    norms = [float(_circle_norm(to_fraction(a))) for a in alpha]
    tight = sum(n * hamiltonian.oscillation(manifold) for n, hamiltonian in zip(norms, action))
    sup = max(hamiltonian.sup_norm(manifold) for hamiltonian in action)
    stated = 2.0 * len(action) * max(norms) * sup
    return HoferRotationBound(tight=tight, stated=stated, k=len(action))


def gamma_exact_small(
    hamiltonian: HamiltonianSpec,
    manifold: Manifold,
    grid: GridSpec,
    threshold: float = DEFAULT_SMALLNESS_THRESHOLD,
) -> SpectralEstimate:
    """osc(H) as the exact spectral and Hofer norm of φ¹_H when H is C²-small.

    When the sampled Hessian sup exceeds the threshold (or H is time-dependent) the
    result is only the Hofer upper bound, flagged exact=False.
    """
    hamiltonian.check_manifold(manifold)
    osc = hamiltonian.oscillation(manifold)
    if not hamiltonian.autonomous:
        return SpectralEstimate(
            value=osc, exact=False, hessian_sup=0.0, threshold=threshold, method="hofer-upper(time-dependent)"
        )
    points = sample_grid(manifold, level_counts(manifold, grid)[-1])
    hessian_sup = sweep_max(lambda chunk: riemannian_hessian_norm(hamiltonian, manifold, chunk), points)
    small = hessian_sup <= threshold
    exact = small and hamiltonian.oscillation_exact
    if not small:
        logger.info("Hessian sup %.4g exceeds smallness threshold %.4g; returning Hofer upper bound", hessian_sup, threshold)
    method = "c2-small-exact" if exact else ("hofer-upper(not-c2-small)" if not small else "hofer-upper(sum)")
    return SpectralEstimate(value=osc, exact=exact, hessian_sup=hessian_sup, threshold=threshold, method=method)


def hofer_small_rotation(
    eta: Fraction,
    manifold: Manifold,
    grid: GridSpec,
    threshold: float = DEFAULT_SMALLNESS_THRESHOLD,
) -> SpectralEstimate:
    """Exact Hofer norm |η|·osc(H) of a small rotation when η·H passes the smallness policy."""
    eta = Fraction(eta)
    scaled = ActionHamiltonian(coefficient=float(eta - round(eta)))
    return gamma_exact_small(scaled, manifold, grid, threshold)


def _twist_generator_oscillation(twist: Twist) -> float:
    # generated by ∫ψ(I) dI, which vanishes at I = 0
    bound = abs(twist.shear) / 2.0
    bound += sum(abs(c) / (k + 1) for k, c in enumerate(twist.polynomial))
    return bound


def hofer_bound(expr: MapExpr, manifold: Manifold) -> Optional[float]:
    """Certified Hofer upper bound of a map expression, or None when no certificate applies."""
    expr = normalize(expr)
    if expr == IDENTITY:
        return 0.0
    if isinstance(expr, Rotation):
        return hofer_rotation_bound([expr.angle], default_action(manifold), manifold).tight
    if isinstance(expr, HamFlow):
        return hofer_upper(expr.hamiltonian, manifold, expr.time)
    if isinstance(expr, Twist):
        return _twist_generator_oscillation(expr) if manifold.kind == ManifoldKind.ANNULUS else None
    if isinstance(expr, Linear):
        return None
    if isinstance(expr, Iterate):
        inner = hofer_bound(expr.child, manifold)
        return None if inner is None else abs(expr.n) * inner
    if isinstance(expr, Inverse):
        return hofer_bound(expr.child, manifold)
    parts = conjugation_parts(expr)
    if parts is not None:
        return hofer_bound(parts[1], manifold)
    total = 0.0
    for factor in expr.factors:
        bound = hofer_bound(factor, manifold)
        if bound is None:
            return None
        total += bound
    return total


# ============================================================================
# Displacement Energy and Non-Displacement
# ============================================================================


def _ball_fits(atlas: Atlas, center: Point, radius: float) -> None:
    chart = atlas.chart_for(center)
    outer = chart.inverse(chart.outer.boundary(256))
    reach = float(np.min(distance_array(atlas.manifold, np.broadcast_to(center.array, outer.shape), outer)))
    if reach <= radius:
        raise DomainError(
            f"ball of radius {radius} does not fit chart {chart.name} (distance to its boundary {reach:.4g})",
            {"center": list(center.coords), "radius": radius},
        )


def displacing_hamiltonian(center: Point, radius: float) -> BandHamiltonian:
    """A cut-off Hamiltonian whose time-1 map moves the ball off itself.

    plane: strip translation in x by 2.5r over |y - y₀| <= 2.5r; annulus: half turn of the
    band |I - I₀| <= r; sphere: half turn of the band |z - z₀| <= r.
    """
    kind = center.manifold.kind
    if kind == ManifoldKind.PLANE:
        return BandHamiltonian(coefficient=2.5 * radius, center=center.coords[1], half_width=2.5 * radius, taper=radius)
    if kind == ManifoldKind.ANNULUS:
        if radius >= 0.25:
            raise DomainError(f"a half turn cannot displace an annulus ball of radius {radius}")
        return BandHamiltonian(coefficient=0.5, center=center.coords[1], half_width=radius, taper=radius)
    z0 = center.coords[2]
    if math.acos(min(1.0, abs(z0))) <= radius:
        raise DomainError("a half turn about the z-axis cannot displace a ball containing a pole")
    return BandHamiltonian(coefficient=math.pi, center=z0, half_width=radius, taper=radius)


def displacement_energy_bounds(center: Point, radius: float, atlas: Atlas) -> DisplacementBounds:
    """Energy-capacity lower bound and the Hofer norm of an explicit displacing Hamiltonian.

    Raises:
        DomainError: If the ball does not fit a chart or cannot be displaced by the standard generator
    """
    if radius < 0.0:
        raise DomainError(f"radius must be non-negative, got {radius}")
    if radius == 0.0:
        return DisplacementBounds(lower=0.0, upper=0.0, radius=0.0, method="degenerate")
    _ball_fits(atlas, center, radius)
    manifold = center.manifold
    if manifold.kind == ManifoldKind.SPHERE:
        lower = 2.0 * math.pi * (1.0 - math.cos(radius))
    else:
        lower = math.pi * radius**2
    hamiltonian = displacing_hamiltonian(center, radius)
    return DisplacementBounds(
        lower=lower,
        upper=hofer_upper(hamiltonian, manifold),
        radius=radius,
        hamiltonian=hamiltonian.model_dump(mode="json"),
        method=f"energy-capacity/{manifold.kind.value}-band",
    )


def ball_samples(center: Point, radius: float, counts: Tuple[int, int]) -> np.ndarray:
    """Geodesic polar samples of the open ball, center first."""
    manifold = center.manifold
    radii = np.linspace(0.0, radius, counts[0], endpoint=False)[1:]
    angles = 2.0 * np.pi * np.arange(counts[1]) / counts[1]
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    rr, aa = rr.ravel(), aa.ravel()
    c = center.array
    if manifold.kind == ManifoldKind.SPHERE:
        frame = tangent_frames(c[None, :])[0]
        direction = np.outer(np.cos(aa), frame[:, 0]) + np.outer(np.sin(aa), frame[:, 1])
        ring = np.cos(rr)[:, None] * c + np.sin(rr)[:, None] * direction
    else:
        ring = c + np.column_stack([rr * np.cos(aa), rr * np.sin(aa)])
        if manifold.kind == ManifoldKind.ANNULUS:
            ring = ring[(ring[:, 1] >= 0.0) & (ring[:, 1] <= 1.0)]
    return manifold.reduce(np.vstack([c[None, :], ring]))


def nondisplacement_witness(f: MapExpr, x: Point, r: float, budget: GridSpec) -> WitnessResult:
    """Search B(x, r) for y with f⁻¹(y) ∈ B(x, r), i.e. a point of f(B) ∩ B.

    NotFound (found=False) is a search failure, not a proof of displacement.
    """
    if r <= 0.0:
        raise DomainError(f"ball radius must be positive, got {r}")
    manifold = x.manifold
    samples = ball_samples(x, r, budget.counts)
    preimages = evaluate_array(Inverse(child=f), manifold, samples)
    dist = distance_array(manifold, preimages, np.broadcast_to(x.array, preimages.shape))
    mesh = r / max(1, budget.counts[0] - 1)
    hits = np.flatnonzero(dist < r)
    if len(hits):
        first = int(hits[0])
        return WitnessResult(
            found=True,
            witness=tuple(float(c) for c in samples[first]),
            preimage_distance=float(dist[first]),
            radius=r,
            samples=len(samples),
            mesh=mesh,
        )
    return WitnessResult(
        found=False, preimage_distance=float(np.min(dist)), radius=r, samples=len(samples), mesh=mesh
    )


# ============================================================================
# Inequality Check
# ============================================================================


def c0_estimate_chain(
    gamma_ub: float, lipschitz_L: float, derivative: float, constant: float, delta: float, diameter: float
) -> Tuple[float, str]:
    """The intermediate bound 4L·sqrt(γ/π)·(1+‖Dφ‖) and the regime that yields the final estimate."""
    chain = 4.0 * lipschitz_L * math.sqrt(gamma_ub / math.pi) * (1.0 + derivative)
    if gamma_ub < delta:
        return chain, "local"
    if constant * math.sqrt(gamma_ub) * derivative >= diameter:
        return chain, "global"
    return chain, "unknown"


def check_holder_inequality(
    f: MapExpr,
    gamma_ub: float,
    C: float,
    manifold: Manifold,
    grid: GridSpec,
    bound_kind: str = "gamma",
    refined: bool = False,
    lipschitz_L: Optional[float] = None,
    delta: Optional[float] = None,
) -> HolderCheck:
    """Test d_C⁰(f, Id) <= C·sqrt(γ)·‖Df‖ against a certified upper bound for γ(f).

    A Hofer upper bound is also a γ upper bound. `refined` tests the plane form
    sqrt(γ)·(1 + ‖Df‖) instead. The right-hand side uses the derivative's upper
    estimate, so a reported violation is never grid noise.

    Raises:
        DomainError: If gamma_ub is negative
    """
    if gamma_ub < 0.0:
        raise DomainError(f"gamma_ub must be non-negative, got {gamma_ub}")
    derivative = derivative_norm(f, manifold, grid)
    c0 = c0_distance(f, IDENTITY, manifold, grid, lipschitz=(derivative.upper, 1.0))
    root = math.sqrt(gamma_ub)
    rhs = root * (1.0 + derivative.upper) if refined else C * root * derivative.upper
    chain_rhs = None
    regime = "unknown"
    if lipschitz_L is not None and delta is not None:
        chain_rhs, regime = c0_estimate_chain(gamma_ub, lipschitz_L, derivative.upper, C, delta, manifold.diameter)
    violation = c0.lower > rhs
    slack = rhs / c0.lower if c0.lower > 0.0 else math.inf
    if violation:
        logger.warning("inequality violation candidate: lhs %.6g > rhs %.6g", c0.lower, rhs)
    return HolderCheck(
        lhs_lower=c0.lower,
        rhs=rhs,
        gamma_ub=gamma_ub,
        bound_kind="hofer" if bound_kind == "hofer" else "gamma",
        constant=1.0 if refined else C,
        refined=refined,
        c0=c0.named("c0"),
        derivative=derivative.named("derivative"),
        chain_rhs=chain_rhs,
        regime=regime,
        violation=violation,
        slack_ratio=slack,
    )
