"""Closed-form Hamiltonian families with values, derivatives and oscillations.

Coordinates follow the surfaces: annulus (θ, I), plane (x, y), sphere ambient (x, y, z).
Sphere Hamiltonians are functions of height only, so their ambient gradient is
along e_z and their flows preserve z.
"""

import math
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import Field, model_validator
from scipy.linalg import expm
from typing_extensions import Annotated

from .errors import DomainError
from .models import LabModel
from .phase_space import Manifold, ManifoldKind, tangent_frames

TWO_PI = 2.0 * math.pi


# ============================================================================
# Profiles
# ============================================================================


def smootherstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (x * (6.0 * x - 15.0) + 10.0)


def smootherstep_d1(x: np.ndarray) -> np.ndarray:
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 30.0 * x**2 * (1.0 - x) ** 2, 0.0)


def smootherstep_d2(x: np.ndarray) -> np.ndarray:
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x), 0.0)


def smootherstep_integral(x: np.ndarray) -> np.ndarray:
    """∫₀ˣ smootherstep, equal to 1/2 at x = 1."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (x * (x - 3.0) + 2.5)


class AmplitudeProfile(LabModel):
    """Piecewise-polynomial bump A(I): smootherstep ramps on [lo, lo+ramp] and [hi-ramp, hi], plateau between."""

    lo: float = Field(..., gt=0.0, lt=1.0)
    hi: float = Field(..., gt=0.0, lt=1.0)
    ramp: float = Field(..., gt=0.0)
    peak: float

    @model_validator(mode="after")
    def _knots_ordered(self) -> "AmplitudeProfile":
        if self.lo + 2.0 * self.ramp > self.hi:
            raise ValueError(f"profile knots need lo + 2·ramp <= hi, got {self.lo}, {self.ramp}, {self.hi}")
        return self

    def value(self, s: np.ndarray) -> np.ndarray:
        up = smootherstep((s - self.lo) / self.ramp)
        down = smootherstep((self.hi - s) / self.ramp)
        return self.peak * np.minimum(up, down)

    def d1(self, s: np.ndarray) -> np.ndarray:
        up = smootherstep_d1((s - self.lo) / self.ramp) / self.ramp
        down = -smootherstep_d1((self.hi - s) / self.ramp) / self.ramp
        return self.peak * np.where(s < 0.5 * (self.lo + self.hi), up, down)

    def d2(self, s: np.ndarray) -> np.ndarray:
        up = smootherstep_d2((s - self.lo) / self.ramp)
        down = smootherstep_d2((self.hi - s) / self.ramp)
        return self.peak * np.where(s < 0.5 * (self.lo + self.hi), up, down) / self.ramp**2


def _plateau(u: np.ndarray, half_width: float, taper: float) -> np.ndarray:
    """χ: 1 on |u| <= half_width, smootherstep taper to 0 over the next `taper`."""
    return 1.0 - smootherstep((np.abs(u) - half_width) / taper)


def _plateau_d1(u: np.ndarray, half_width: float, taper: float) -> np.ndarray:
    return -np.sign(u) * smootherstep_d1((np.abs(u) - half_width) / taper) / taper


def _plateau_integral(u: np.ndarray, half_width: float, taper: float) -> np.ndarray:
    """∫ χ from -infinity to u."""
    u = np.asarray(u, dtype=float)
    rising = taper * smootherstep_integral((u + half_width + taper) / taper)
    middle = 0.5 * taper + np.clip(u + half_width, 0.0, 2.0 * half_width)
    x = np.clip((u - half_width) / taper, 0.0, 1.0)
    falling = taper * (x - smootherstep_integral(x))
    return np.where(u < -half_width, rising, middle + falling)


# ============================================================================
# Families
# ============================================================================


class _HamiltonianBase(LabModel):
    """Shared interface; subclasses implement the closed forms."""

    def supports(self, kind: ManifoldKind) -> bool:
        raise NotImplementedError

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def oscillation(self, manifold: Manifold) -> float:
        """max H - min H (an upper bound for sums)."""
        raise NotImplementedError

    def sup_norm(self, manifold: Manifold) -> float:
        raise NotImplementedError

    @property
    def oscillation_exact(self) -> bool:
        return True

    @property
    def autonomous(self) -> bool:
        return True

    def exact_flow(
        self, manifold: Manifold, coords: np.ndarray, t: float
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Closed-form time-t flow with ambient Jacobians, or None."""
        return None

    def check_manifold(self, manifold: Manifold) -> None:
        if not self.supports(manifold.kind):
            raise DomainError(
                f"{type(self).__name__} is not defined on the {manifold.kind.value}",
                {"hamiltonian": self.model_dump(mode="json")},
            )


def _rotation_about_z(angle: np.ndarray) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.zeros((len(angle), 3, 3))
    rot[:, 0, 0], rot[:, 0, 1] = c, -s
    rot[:, 1, 0], rot[:, 1, 1] = s, c
    rot[:, 2, 2] = 1.0
    return rot


class ActionHamiltonian(_HamiltonianBase):
    """Generator of the circle action: c·I on the annulus, 2π·c·z on the sphere.

    The time-t flow is the rotation by the fraction c·t of a full turn.
    """

    family: Literal["action"] = "action"
    coefficient: float

    def supports(self, kind: ManifoldKind) -> bool:
        return kind in (ManifoldKind.ANNULUS, ManifoldKind.SPHERE)

    def _scale(self, manifold: Manifold) -> float:
        return self.coefficient if manifold.kind == ManifoldKind.ANNULUS else TWO_PI * self.coefficient

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        column = 1 if manifold.kind == ManifoldKind.ANNULUS else 2
        return self._scale(manifold) * coords[:, column]

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(coords, dtype=float)
        grad[:, 1 if manifold.kind == ManifoldKind.ANNULUS else 2] = self._scale(manifold)
        return grad

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        d = coords.shape[1]
        return np.zeros((len(coords), d, d))

    def oscillation(self, manifold: Manifold) -> float:
        return 2.0 * abs(self._scale(manifold)) if manifold.kind == ManifoldKind.SPHERE else abs(self.coefficient)

    def sup_norm(self, manifold: Manifold) -> float:
        return abs(self._scale(manifold))

    def exact_flow(
        self, manifold: Manifold, coords: np.ndarray, t: float
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        shift = self.coefficient * t
        if manifold.kind == ManifoldKind.ANNULUS:
            out = coords.astype(float, copy=True)
            out[:, 0] = out[:, 0] + shift
            return out, np.broadcast_to(np.eye(2), (len(coords), 2, 2)).copy()
        rot = _rotation_about_z(np.full(len(coords), TWO_PI * shift))
        return np.einsum("nij,nj->ni", rot, coords), rot


class ConjugatorHamiltonian(_HamiltonianBase):
    """A(I)·sin(2πqθ + φ₀)/(2πq) on the annulus.

    Invariant under θ ↦ θ + 1/q, so its flow commutes with rotations by multiples of 1/q,
    and identically zero where A vanishes near I ∈ {0, 1}.
    """

    family: Literal["conjugator"] = "conjugator"
    frequency: int = Field(..., ge=1)
    phase: float = 0.0
    profile: AmplitudeProfile

    def supports(self, kind: ManifoldKind) -> bool:
        return kind == ManifoldKind.ANNULUS

    def _angle(self, theta: np.ndarray) -> np.ndarray:
        return TWO_PI * np.mod(self.frequency * theta, 1.0) + self.phase

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        q = self.frequency
        return self.profile.value(coords[:, 1]) * np.sin(self._angle(coords[:, 0])) / (TWO_PI * q)

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        angle = self._angle(coords[:, 0])
        action = coords[:, 1]
        grad = np.empty((len(coords), 2))
        grad[:, 0] = self.profile.value(action) * np.cos(angle)
        grad[:, 1] = self.profile.d1(action) * np.sin(angle) / (TWO_PI * self.frequency)
        return grad

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        angle = self._angle(coords[:, 0])
        action = coords[:, 1]
        q = self.frequency
        hess = np.empty((len(coords), 2, 2))
        hess[:, 0, 0] = -self.profile.value(action) * TWO_PI * q * np.sin(angle)
        hess[:, 0, 1] = hess[:, 1, 0] = self.profile.d1(action) * np.cos(angle)
        hess[:, 1, 1] = self.profile.d2(action) * np.sin(angle) / (TWO_PI * q)
        return hess

    def oscillation(self, manifold: Manifold) -> float:
        return abs(self.profile.peak) / (math.pi * self.frequency)

    def sup_norm(self, manifold: Manifold) -> float:
        return abs(self.profile.peak) / (TWO_PI * self.frequency)


class BumpHamiltonian(_HamiltonianBase):
    """Raised-cosine radial bump peak·(1 + cos(π|x-c|/R))/2 on the plane, zero outside radius R."""

    family: Literal["bump"] = "bump"
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = Field(..., gt=0.0)
    peak: float

    def supports(self, kind: ManifoldKind) -> bool:
        return kind == ManifoldKind.PLANE

    def _offsets(self, coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        offset = coords - np.asarray(self.center)
        return offset, np.hypot(offset[:, 0], offset[:, 1])

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        _, r = self._offsets(coords)
        inside = r < self.radius
        return np.where(inside, 0.5 * self.peak * (1.0 + np.cos(np.pi * np.minimum(r, self.radius) / self.radius)), 0.0)

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        offset, r = self._offsets(coords)
        # g'(r)/r = -peak·π²/(2R²)·sinc(r/R)
        g1_over_r = -self.peak * math.pi**2 / (2.0 * self.radius**2) * np.sinc(r / self.radius)
        g1_over_r = np.where(r < self.radius, g1_over_r, 0.0)
        return offset * g1_over_r[:, None]

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        offset, r = self._offsets(coords)
        inside = r < self.radius
        scale = self.peak * math.pi**2 / (2.0 * self.radius**2)
        g1_over_r = np.where(inside, -scale * np.sinc(r / self.radius), 0.0)
        g2 = np.where(inside, -scale * np.cos(np.pi * np.minimum(r, self.radius) / self.radius), 0.0)
        safe_r = np.where(r > 0.0, r, 1.0)
        unit = np.where((r > 0.0)[:, None], offset / safe_r[:, None], 0.0)
        radial = np.einsum("ni,nj->nij", unit, unit)
        eye = np.broadcast_to(np.eye(2), radial.shape)
        return g2[:, None, None] * radial + g1_over_r[:, None, None] * (eye - radial)

    def oscillation(self, manifold: Manifold) -> float:
        return abs(self.peak)

    def sup_norm(self, manifold: Manifold) -> float:
        return abs(self.peak)


class BandHamiltonian(_HamiltonianBase):
    """coefficient·Ĩ(s) where Ĩ' is a plateau around `center` (half_width, smootherstep taper).

    s is I on the annulus, z on the sphere and y on the plane, so the flow rotates a band
    (annulus, sphere) or translates a strip in x (plane).
    """

    family: Literal["band"] = "band"
    coefficient: float
    center: float
    half_width: float = Field(..., ge=0.0)
    taper: float = Field(..., gt=0.0)

    def supports(self, kind: ManifoldKind) -> bool:
        return True

    @staticmethod
    def _axis(manifold: Manifold) -> int:
        return 2 if manifold.kind == ManifoldKind.SPHERE else 1

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        s = coords[:, self._axis(manifold)]
        return self.coefficient * _plateau_integral(s - self.center, self.half_width, self.taper)

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        axis = self._axis(manifold)
        grad = np.zeros_like(coords, dtype=float)
        grad[:, axis] = self.coefficient * _plateau(coords[:, axis] - self.center, self.half_width, self.taper)
        return grad

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        axis = self._axis(manifold)
        d = coords.shape[1]
        hess = np.zeros((len(coords), d, d))
        hess[:, axis, axis] = self.coefficient * _plateau_d1(
            coords[:, axis] - self.center, self.half_width, self.taper
        )
        return hess

    def _range(self, manifold: Manifold) -> Tuple[float, float]:
        if manifold.kind == ManifoldKind.ANNULUS:
            return 0.0, 1.0
        if manifold.kind == ManifoldKind.SPHERE:
            return -1.0, 1.0
        reach = self.half_width + self.taper
        return self.center - reach, self.center + reach

    def oscillation(self, manifold: Manifold) -> float:
        lo, hi = self._range(manifold)
        ends = _plateau_integral(np.array([lo, hi]) - self.center, self.half_width, self.taper)
        return abs(self.coefficient) * float(ends[1] - ends[0])

    def sup_norm(self, manifold: Manifold) -> float:
        lo, hi = self._range(manifold)
        ends = _plateau_integral(np.array([lo, hi]) - self.center, self.half_width, self.taper)
        return abs(self.coefficient) * float(max(abs(ends[0]), abs(ends[1])))


class QuadraticHamiltonian(_HamiltonianBase):
    """(a·x² + 2b·xy + c·y²)/2 on the plane; its flows are linear symplectic maps."""

    family: Literal["quadratic"] = "quadratic"
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def supports(self, kind: ManifoldKind) -> bool:
        return kind == ManifoldKind.PLANE

    def _matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b, self.c]])

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        return 0.5 * np.einsum("ni,ij,nj->n", coords, self._matrix(), coords)

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        return coords @ self._matrix()

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._matrix(), (len(coords), 2, 2)).copy()

    def _box_values(self, manifold: Manifold) -> List[float]:
        r = manifold.support_radius
        candidates = [np.array([0.0, 0.0])]
        candidates += [np.array([sx * r, sy * r]) for sx in (-1, 1) for sy in (-1, 1)]
        for fixed in (-r, r):
            if self.c != 0.0 and abs(self.b * fixed / self.c) <= r:
                candidates.append(np.array([fixed, -self.b * fixed / self.c]))
            if self.a != 0.0 and abs(self.b * fixed / self.a) <= r:
                candidates.append(np.array([-self.b * fixed / self.a, fixed]))
        return [float(self.value(manifold, p[None, :])[0]) for p in candidates]

    def oscillation(self, manifold: Manifold) -> float:
        values = self._box_values(manifold)
        return max(values) - min(values)

    def sup_norm(self, manifold: Manifold) -> float:
        return max(abs(v) for v in self._box_values(manifold))

    def exact_flow(
        self, manifold: Manifold, coords: np.ndarray, t: float
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        # ż = J·S·z with J = [[0, 1], [-1, 0]] for ẋ = H_y, ẏ = -H_x
        generator = np.array([[0.0, 1.0], [-1.0, 0.0]]) @ self._matrix()
        propagator = expm(t * generator)
        return coords @ propagator.T, np.broadcast_to(propagator, (len(coords), 2, 2)).copy()


class SumHamiltonian(_HamiltonianBase):
    """Sum of terms; its oscillation is bounded by the sum of the terms' oscillations."""

    family: Literal["sum"] = "sum"
    terms: List["HamiltonianSpec"] = Field(..., min_length=1)

    def supports(self, kind: ManifoldKind) -> bool:
        return all(term.supports(kind) for term in self.terms)

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        return sum(term.value(manifold, coords) for term in self.terms)

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        return sum(term.gradient(manifold, coords) for term in self.terms)

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        return sum(term.hessian(manifold, coords) for term in self.terms)

    def oscillation(self, manifold: Manifold) -> float:
        return sum(term.oscillation(manifold) for term in self.terms)

    def sup_norm(self, manifold: Manifold) -> float:
        return sum(term.sup_norm(manifold) for term in self.terms)

    @property
    def oscillation_exact(self) -> bool:
        return len(self.terms) == 1 and self.terms[0].oscillation_exact


class SchedulePiece(LabModel):
    duration: float = Field(..., gt=0.0)
    hamiltonian: "HamiltonianSpec"


class ScheduledHamiltonian(_HamiltonianBase):
    """Piecewise-constant time dependence.

    The pieces fill one unit of time in order, each for its share of the total duration,
    and repeat with period 1. The time-t map runs the schedule up to |t| and is undone by
    the time -t map.
    """

    family: Literal["schedule"] = "schedule"
    pieces: List[SchedulePiece] = Field(..., min_length=1)

    def segments(self, t: float) -> List[Tuple["HamiltonianSpec", float]]:
        """(Hamiltonian, signed duration) pairs whose successive flows give the time-t map."""
        total = sum(piece.duration for piece in self.pieces)
        remaining = abs(t)
        floor = 1e-12 * max(1.0, remaining)
        out: List[Tuple["HamiltonianSpec", float]] = []
        while remaining > floor:
            for piece in self.pieces:
                dt = min(piece.duration / total, remaining)
                out.append((piece.hamiltonian, dt))
                remaining -= dt
                if remaining <= floor:
                    break
        if t < 0:
            return [(hamiltonian, -dt) for hamiltonian, dt in reversed(out)]
        return out

    def oscillation_over(self, manifold: Manifold, t: float) -> float:
        """∫ osc(H_s) ds over the segments of the time-t map."""
        return sum(abs(dt) * hamiltonian.oscillation(manifold) for hamiltonian, dt in self.segments(t))

    def supports(self, kind: ManifoldKind) -> bool:
        return all(piece.hamiltonian.supports(kind) for piece in self.pieces)

    @property
    def autonomous(self) -> bool:
        return False

    @property
    def oscillation_exact(self) -> bool:
        return False

    def oscillation(self, manifold: Manifold) -> float:
        """∫ osc(H_t) dt over one unit of schedule time."""
        total = sum(piece.duration for piece in self.pieces)
        return sum(piece.duration * piece.hamiltonian.oscillation(manifold) for piece in self.pieces) / total

    def sup_norm(self, manifold: Manifold) -> float:
        return max(piece.hamiltonian.sup_norm(manifold) for piece in self.pieces)

    def value(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        raise DomainError("a scheduled Hamiltonian has no single value; evaluate its pieces")

    def gradient(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        raise DomainError("a scheduled Hamiltonian has no single gradient; evaluate its pieces")

    def hessian(self, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
        raise DomainError("a scheduled Hamiltonian has no single Hessian; evaluate its pieces")


HamiltonianSpec = Annotated[
    Union[
        ActionHamiltonian,
        ConjugatorHamiltonian,
        BumpHamiltonian,
        BandHamiltonian,
        QuadraticHamiltonian,
        SumHamiltonian,
        ScheduledHamiltonian,
    ],
    Field(discriminator="family"),
]

SumHamiltonian.model_rebuild()
SchedulePiece.model_rebuild()
ScheduledHamiltonian.model_rebuild()


def riemannian_hessian_norm(hamiltonian: HamiltonianSpec, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
    """Operator norm of the Riemannian Hessian at each sample."""
    hess = hamiltonian.hessian(manifold, coords)
    if manifold.kind == ManifoldKind.SPHERE:
        frames = tangent_frames(coords)
        radial = np.sum(hamiltonian.gradient(manifold, coords) * coords, axis=1)
        hess = np.einsum("nia,nij,njb->nab", frames, hess, frames) - radial[:, None, None] * np.eye(2)
    return np.linalg.norm(hess, ord=2, axis=(1, 2))
