"""Composable symplectic map expressions and their evaluation.

``Compose([f1, ..., fk])`` is f1 ∘ ... ∘ fk: the last factor acts first.
"""

import logging
import math
from fractions import Fraction
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import Field, field_validator
from typing_extensions import Annotated

from .errors import DomainError
from .hamiltonians import HamiltonianSpec
from .integrator import integrate
from .models import ExactRational, GridSpec, IntegratorParams, LabModel
from .phase_space import Manifold, ManifoldKind, Point, level_counts, sample_grid, tangent_frames
from .sweep import sweep_max

logger = logging.getLogger(__name__)


# ============================================================================
# Expression Tree
# ============================================================================


class Rotation(LabModel):
    """The circle action by the fraction `angle` of a full turn (exact rational)."""

    op: Literal["rotation"] = "rotation"
    angle: ExactRational

    @field_validator("angle")
    @classmethod
    def _reduce(cls, angle: Fraction) -> Fraction:
        return angle - math.floor(angle)


class HamFlow(LabModel):
    """Time-t flow of a Hamiltonian."""

    op: Literal["flow"] = "flow"
    hamiltonian: HamiltonianSpec
    time: float = 1.0
    integrator: IntegratorParams = Field(default_factory=IntegratorParams)


class Twist(LabModel):
    """(θ, I) ↦ (θ + ψ(I), I) with ψ(I) = shear·I + Σ polynomial[k]·I^k."""

    op: Literal["twist"] = "twist"
    shear: float = 0.0
    polynomial: List[float] = Field(default_factory=list)

    def profile(self, action: np.ndarray) -> np.ndarray:
        return self.shear * action + np.polynomial.polynomial.polyval(action, self.polynomial or [0.0])

    def profile_derivative(self, action: np.ndarray) -> np.ndarray:
        coeffs = np.polynomial.polynomial.polyder(self.polynomial) if len(self.polynomial) > 1 else [0.0]
        return self.shear + np.polynomial.polynomial.polyval(action, coeffs)


class Linear(LabModel):
    """Linear symplectic map of the plane."""

    op: Literal["linear"] = "linear"
    matrix: Tuple[Tuple[float, float], Tuple[float, float]]

    @field_validator("matrix")
    @classmethod
    def _unit_determinant(cls, matrix: Tuple[Tuple[float, float], Tuple[float, float]]):
        det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
        if abs(det - 1.0) > 1e-12:
            raise ValueError(f"linear symplectic maps need determinant 1, got {det!r}")
        return matrix

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)


class Compose(LabModel):
    op: Literal["compose"] = "compose"
    factors: List["MapExpr"] = Field(default_factory=list)


class Inverse(LabModel):
    op: Literal["inverse"] = "inverse"
    child: "MapExpr"


class Iterate(LabModel):
    op: Literal["iterate"] = "iterate"
    child: "MapExpr"
    n: int


MapExpr = Annotated[
    Union[Rotation, HamFlow, Twist, Linear, Compose, Inverse, Iterate],
    Field(discriminator="op"),
]

Compose.model_rebuild()
Inverse.model_rebuild()
Iterate.model_rebuild()

IDENTITY = Compose()


def conjugate(h: MapExpr, inner: MapExpr) -> Compose:
    """h⁻¹ ∘ inner ∘ h."""
    return Compose(factors=[Inverse(child=h), inner, h])


# ============================================================================
# Structural Operations
# ============================================================================


def check_manifold(expr: MapExpr, manifold: Manifold) -> None:
    """Raise DomainError when a leaf does not live on the manifold."""
    if isinstance(expr, Rotation):
        if manifold.kind == ManifoldKind.PLANE:
            raise DomainError("the plane carries no circle action for Rotation")
    elif isinstance(expr, HamFlow):
        expr.hamiltonian.check_manifold(manifold)
    elif isinstance(expr, Twist):
        if manifold.kind != ManifoldKind.ANNULUS:
            raise DomainError("Twist maps live on the annulus")
    elif isinstance(expr, Linear):
        if manifold.kind != ManifoldKind.PLANE:
            raise DomainError("Linear maps live on the plane")
    elif isinstance(expr, Compose):
        for factor in expr.factors:
            check_manifold(factor, manifold)
    else:
        check_manifold(expr.child, manifold)


def inverse(expr: MapExpr) -> MapExpr:
    """Structural inverse: flows run backwards, rotations and twists negate."""
    if isinstance(expr, Rotation):
        return Rotation(angle=-expr.angle)
    if isinstance(expr, HamFlow):
        return expr.model_copy(update={"time": -expr.time})
    if isinstance(expr, Twist):
        return Twist(shear=-expr.shear, polynomial=[-c for c in expr.polynomial])
    if isinstance(expr, Linear):
        (a, b), (c, d) = expr.matrix
        return Linear(matrix=((d, -b), (-c, a)))
    if isinstance(expr, Compose):
        return Compose(factors=[inverse(f) for f in reversed(expr.factors)])
    if isinstance(expr, Inverse):
        return expr.child
    return Iterate(child=expr.child, n=-expr.n)


def _is_identity(expr: MapExpr) -> bool:
    if isinstance(expr, Compose):
        return not expr.factors
    if isinstance(expr, Rotation):
        return expr.angle == 0
    if isinstance(expr, HamFlow):
        return expr.time == 0.0
    if isinstance(expr, Twist):
        return expr.shear == 0.0 and not any(expr.polynomial)
    return False


def conjugation_parts(expr: MapExpr) -> Optional[Tuple[List[MapExpr], Rotation, List[MapExpr]]]:
    """Split a normalized Compose of the form h⁻¹ ∘ R_β ∘ h into (h⁻¹ factors, R_β, h factors)."""
    if not isinstance(expr, Compose):
        return None
    rotations = [i for i, f in enumerate(expr.factors) if isinstance(f, Rotation)]
    if len(rotations) != 1:
        return None
    i = rotations[0]
    left, right = expr.factors[:i], expr.factors[i + 1 :]
    if left != [inverse(f) for f in reversed(right)]:
        return None
    return left, expr.factors[i], right


def normalize(expr: MapExpr) -> MapExpr:
    """Flatten compositions, drop identities, merge adjacent rotations, and take exact
    fast paths for iterates of rotations and of conjugated rotations."""
    if isinstance(expr, Inverse):
        return normalize(inverse(expr.child))
    if isinstance(expr, Compose):
        flat: List[MapExpr] = []
        for factor in expr.factors:
            factor = normalize(factor)
            parts = factor.factors if isinstance(factor, Compose) else [factor]
            for part in parts:
                if _is_identity(part):
                    continue
                if flat and isinstance(part, Rotation) and isinstance(flat[-1], Rotation):
                    flat[-1] = Rotation(angle=flat[-1].angle + part.angle)
                    if _is_identity(flat[-1]):
                        flat.pop()
                    continue
                flat.append(part)
        # cancel adjacent inverse pairs left by the merge
        stack: List[MapExpr] = []
        for part in flat:
            if stack and stack[-1] == inverse(part) and not isinstance(part, Rotation):
                stack.pop()
            else:
                stack.append(part)
        return stack[0] if len(stack) == 1 else Compose(factors=stack)
    if isinstance(expr, Iterate):
        child = normalize(expr.child)
        n = expr.n
        if n < 0:
            child, n = normalize(inverse(child)), -n
        if n == 0 or _is_identity(child):
            return IDENTITY
        if n == 1:
            return child
        if isinstance(child, Rotation):
            return Rotation(angle=n * child.angle)
        parts = conjugation_parts(child)
        if parts is not None:
            left, rotation, right = parts
            return Compose(factors=[*left, Rotation(angle=n * rotation.angle), *right])
        return Iterate(child=child, n=n)
    if _is_identity(expr):
        return IDENTITY
    return expr


# ============================================================================
# Evaluation
# ============================================================================


def _rotate(manifold: Manifold, coords: np.ndarray, angle: Fraction) -> Tuple[np.ndarray, np.ndarray]:
    if manifold.kind == ManifoldKind.ANNULUS:
        out = coords.copy()
        out[:, 0] = out[:, 0] + float(angle)
        return out, np.broadcast_to(np.eye(2), (len(coords), 2, 2))
    turn = 2.0 * math.pi * float(angle)
    c, s = math.cos(turn), math.sin(turn)
    matrix = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return coords @ matrix.T, np.broadcast_to(matrix, (len(coords), 3, 3))


def _apply(
    expr: MapExpr, manifold: Manifold, coords: np.ndarray, with_jacobian: bool
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if isinstance(expr, Compose):
        dim = coords.shape[1]
        jac = np.broadcast_to(np.eye(dim), (len(coords), dim, dim)).copy() if with_jacobian else None
        for factor in reversed(expr.factors):
            coords, step = _apply(factor, manifold, coords, with_jacobian)
            if jac is not None:
                jac = np.einsum("nij,njk->nik", step, jac)
        return coords, jac
    if isinstance(expr, Iterate):
        inner = expr.child if expr.n >= 0 else inverse(expr.child)
        return _apply(Compose(factors=[inner] * abs(expr.n)), manifold, coords, with_jacobian)
    if isinstance(expr, Inverse):
        return _apply(inverse(expr.child), manifold, coords, with_jacobian)

    if isinstance(expr, Rotation):
        moved, jac = _rotate(manifold, coords, expr.angle)
    elif isinstance(expr, Twist):
        moved = coords.copy()
        moved[:, 0] = moved[:, 0] + expr.profile(coords[:, 1])
        jac = np.zeros((len(coords), 2, 2))
        jac[:, 0, 0] = jac[:, 1, 1] = 1.0
        jac[:, 0, 1] = expr.profile_derivative(coords[:, 1])
    elif isinstance(expr, Linear):
        moved = coords @ expr.array.T
        jac = np.broadcast_to(expr.array, (len(coords), 2, 2))
    else:
        moved, jac = integrate(expr.hamiltonian, manifold, coords, expr.time, expr.integrator, with_jacobian)
    if manifold.kind == ManifoldKind.ANNULUS:
        moved[:, 0] = np.mod(moved[:, 0], 1.0)
    return moved, jac


def evaluate_array(expr: MapExpr, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
    """Images of a coordinate array (N, ambient_dim)."""
    expr = normalize(expr)
    check_manifold(expr, manifold)
    moved, _ = _apply(expr, manifold, np.atleast_2d(np.asarray(coords, dtype=float)), False)
    return manifold.reduce(moved)


def evaluate_with_jacobian(expr: MapExpr, manifold: Manifold, coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Images and 2×2 Jacobians in orthonormal tangent frames (coordinate frames off the sphere)."""
    expr = normalize(expr)
    check_manifold(expr, manifold)
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    moved, jac = _apply(expr, manifold, coords, True)
    moved = manifold.reduce(moved)
    assert jac is not None
    if manifold.kind == ManifoldKind.SPHERE:
        jac = np.einsum("nia,nij,njb->nab", tangent_frames(moved), jac, tangent_frames(coords))
    return moved, np.array(jac)


def evaluate(expr: MapExpr, p: Point) -> Point:
    """Image of a point.

    Raises:
        DomainError: If the map does not live on the point's manifold
        IntegrationError: If a flow fails to integrate
    """
    moved = evaluate_array(expr, p.manifold, p.array[None, :])[0]
    return Point(manifold=p.manifold, coords=tuple(float(c) for c in moved))


def jacobian(expr: MapExpr, p: Point) -> np.ndarray:
    """2×2 Jacobian at a point in an orthonormal frame."""
    _, jac = evaluate_with_jacobian(expr, p.manifold, p.array[None, :])
    return jac[0]


def symplecticity_defect(expr: MapExpr, manifold: Manifold, grid: GridSpec) -> float:
    """max |det Df - 1| over the grid samples (finest level)."""
    points = sample_grid(manifold, level_counts(manifold, grid)[-1])

    def defect(chunk: np.ndarray) -> np.ndarray:
        _, jac = evaluate_with_jacobian(expr, manifold, chunk)
        return np.abs(np.linalg.det(jac) - 1.0)

    return sweep_max(defect, points)


def flow_tolerance(expr: MapExpr) -> float:
    """Largest fixed-point tolerance among the flows of an expression (0 without flows)."""
    if isinstance(expr, HamFlow):
        return expr.integrator.tolerance
    if isinstance(expr, Compose):
        return max((flow_tolerance(f) for f in expr.factors), default=0.0)
    if isinstance(expr, (Inverse, Iterate)):
        return flow_tolerance(expr.child)
    return 0.0
