"""Model symplectic surfaces, their distances, sample grids and Darboux atlases."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import Field, model_validator

from .errors import ConfigurationError, DomainError
from .models import AtlasConstants, GridSpec, InequalityConstants, LabModel

logger = logging.getLogger(__name__)

SPHERE_NORM_TOLERANCE = 1e-12


# ============================================================================
# Manifolds and Points
# ============================================================================


class ManifoldKind(str, Enum):
    """The three model surfaces."""

    ANNULUS = "annulus"
    SPHERE = "sphere"
    PLANE = "plane"


class Manifold(LabModel):
    """A model surface.

    The annulus is S¹×[0,1] with coordinates (θ, I) and form dI∧dθ; the sphere is the
    unit sphere in ℝ³ (total area 4π); the plane is ℝ² with maps supported in the box
    [-support_radius, support_radius]².
    """

    kind: ManifoldKind
    support_radius: float = Field(default=0.5, gt=0.0, description="Plane only: half-width of the support box")

    @property
    def ambient_dim(self) -> int:
        return 3 if self.kind == ManifoldKind.SPHERE else 2

    @property
    def diameter(self) -> float:
        if self.kind == ManifoldKind.ANNULUS:
            return math.sqrt(0.25 + 1.0)
        if self.kind == ManifoldKind.SPHERE:
            return math.pi
        return 2.0 * math.sqrt(2.0) * self.support_radius

    def reduce(self, coords: np.ndarray) -> np.ndarray:
        """Bring coordinates back to canonical form (θ mod 1, unit sphere vectors)."""
        out = np.array(coords, dtype=float, copy=True)
        if self.kind == ManifoldKind.ANNULUS:
            out[..., 0] = np.mod(out[..., 0], 1.0)
            # np.mod can return 1.0 for tiny negative inputs
            out[..., 0] = np.where(out[..., 0] >= 1.0, 0.0, out[..., 0])
        elif self.kind == ManifoldKind.SPHERE:
            out = out / np.linalg.norm(out, axis=-1, keepdims=True)
        return out


ANNULUS = Manifold(kind=ManifoldKind.ANNULUS)
SPHERE = Manifold(kind=ManifoldKind.SPHERE)
PLANE = Manifold(kind=ManifoldKind.PLANE)


class Point(LabModel):
    """A point on one of the model surfaces."""

    manifold: Manifold
    coords: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_constraint(self) -> "Point":
        if len(self.coords) != self.manifold.ambient_dim:
            raise ValueError(f"{self.manifold.kind.value} points need {self.manifold.ambient_dim} coordinates")
        if self.manifold.kind == ManifoldKind.ANNULUS:
            theta, action = self.coords
            if not 0.0 <= theta < 1.0:
                raise ValueError(f"annulus angle must be reduced to [0,1), got {theta}")
            if not -1e-12 <= action <= 1.0 + 1e-12:
                raise ValueError(f"annulus action must lie in [0,1], got {action}")
        elif self.manifold.kind == ManifoldKind.SPHERE:
            norm = math.sqrt(sum(c * c for c in self.coords))
            if abs(norm - 1.0) > SPHERE_NORM_TOLERANCE:
                raise ValueError(f"sphere points must have unit norm, got {norm!r}")
        return self

    @classmethod
    def on(cls, manifold: Manifold, coords: Union[Tuple[float, ...], np.ndarray]) -> "Point":
        """Build a point, reducing θ on the annulus and normalising on the sphere."""
        arr = np.asarray(coords, dtype=float)
        if arr.shape != (manifold.ambient_dim,):
            raise DomainError(
                f"expected {manifold.ambient_dim} coordinates for {manifold.kind.value}, got shape {arr.shape}"
            )
        if manifold.kind == ManifoldKind.SPHERE:
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > 1e-9:
                raise DomainError(f"not a point of the unit sphere (norm {norm})")
        return cls(manifold=manifold, coords=tuple(float(c) for c in manifold.reduce(arr)))

    @classmethod
    def annulus(cls, theta: float, action: float) -> "Point":
        return cls.on(ANNULUS, (theta, action))

    @classmethod
    def sphere(cls, x: float, y: float, z: float) -> "Point":
        return cls.on(SPHERE, (x, y, z))

    @classmethod
    def plane(cls, x: float, y: float, support_radius: float = 0.5) -> "Point":
        return cls.on(Manifold(kind=ManifoldKind.PLANE, support_radius=support_radius), (x, y))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


# ============================================================================
# Distances
# ============================================================================


def circle_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance on the circle of circumference 1."""
    d = np.mod(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), 1.0)
    return np.minimum(d, 1.0 - d)


def distance_array(manifold: Manifold, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Row-wise Riemannian distance between two coordinate arrays."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if manifold.kind == ManifoldKind.ANNULUS:
        return np.hypot(circle_distance(xs[..., 0], ys[..., 0]), xs[..., 1] - ys[..., 1])
    if manifold.kind == ManifoldKind.SPHERE:
        # atan2 form of arccos(p·q), accurate for nearby points
        cross = np.linalg.norm(np.cross(xs, ys), axis=-1)
        dot = np.sum(xs * ys, axis=-1)
        return np.arctan2(cross, dot)
    return np.linalg.norm(xs - ys, axis=-1)


def riemannian_distance(p: Point, q: Point) -> float:
    """Riemannian distance between two points of the same surface."""
    if p.manifold != q.manifold:
        raise DomainError(
            f"points live on different manifolds: {p.manifold.kind.value} vs {q.manifold.kind.value}"
        )
    return float(distance_array(p.manifold, p.array, q.array))


# ============================================================================
# Sample Grids
# ============================================================================


def sample_grid(manifold: Manifold, counts: Tuple[int, int]) -> np.ndarray:
    """Sample points of the surface (annulus θ×I, sphere z×φ, plane x×y)."""
    n0, n1 = counts
    if manifold.kind == ManifoldKind.ANNULUS:
        theta = np.arange(n0) / n0
        action = np.linspace(0.0, 1.0, n1)
        tt, aa = np.meshgrid(theta, action, indexing="ij")
        return np.column_stack([tt.ravel(), aa.ravel()])
    if manifold.kind == ManifoldKind.SPHERE:
        z = np.linspace(-1.0, 1.0, n0)
        phi = 2.0 * np.pi * np.arange(n1) / n1
        rows = [np.array([[0.0, 0.0, -1.0]])]
        for zi in z[1:-1]:
            rho = math.sqrt(max(0.0, 1.0 - zi * zi))
            rows.append(np.column_stack([rho * np.cos(phi), rho * np.sin(phi), np.full(n1, zi)]))
        rows.append(np.array([[0.0, 0.0, 1.0]]))
        return np.vstack(rows)
    r = manifold.support_radius
    xs = np.linspace(-r, r, n0)
    ys = np.linspace(-r, r, n1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def grid_mesh(manifold: Manifold, counts: Tuple[int, int]) -> float:
    """Covering radius of sample_grid: every point of the surface is this close to a sample."""
    n0, n1 = counts
    if manifold.kind == ManifoldKind.ANNULUS:
        return 0.5 * math.hypot(1.0 / n0, 1.0 / (n1 - 1))
    if manifold.kind == ManifoldKind.SPHERE:
        colatitudes = np.arccos(np.linspace(-1.0, 1.0, n0))
        gap = float(np.max(np.abs(np.diff(colatitudes))))
        return 0.5 * math.hypot(gap, 2.0 * math.pi / n1)
    width = 2.0 * manifold.support_radius
    return 0.5 * math.hypot(width / (n0 - 1), width / (n1 - 1))


def refine_counts(manifold: Manifold, counts: Tuple[int, int]) -> Tuple[int, int]:
    """Counts of the next nested grid: periodic axes double, closed axes go to 2n-1."""
    n0, n1 = counts
    if manifold.kind == ManifoldKind.ANNULUS:
        return (2 * n0, 2 * n1 - 1)
    if manifold.kind == ManifoldKind.SPHERE:
        return (2 * n0 - 1, 2 * n1)
    return (2 * n0 - 1, 2 * n1 - 1)


def level_counts(manifold: Manifold, grid: GridSpec) -> List[Tuple[int, int]]:
    counts = [grid.counts]
    for _ in range(grid.levels - 1):
        counts.append(refine_counts(manifold, counts[-1]))
    return counts


def tangent_frames(points: np.ndarray) -> np.ndarray:
    """Orthonormal tangent frames (N,3,2) on the sphere, oriented so that (e1, e2, p) is right-handed.

    e1 follows e_z × p away from the poles and e_x × p near them.
    """
    points = np.atleast_2d(points)
    axis = np.zeros_like(points)
    near_pole = np.abs(points[:, 2]) > 0.9
    axis[~near_pole, 2] = 1.0
    axis[near_pole, 0] = 1.0
    e1 = np.cross(axis, points)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(points, e1)
    return np.stack([e1, e2], axis=2)


# ============================================================================
# Darboux Charts
# ============================================================================


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box in chart coordinates.

    Axes flagged in ``boundary_axes`` run into the manifold boundary; their end sides
    are not part of the relative boundary.
    """

    lo: Tuple[float, float]
    hi: Tuple[float, float]
    boundary_axes: Tuple[bool, bool] = (False, False)

    def contains(self, uv: np.ndarray) -> np.ndarray:
        inside = np.ones(len(uv), dtype=bool)
        for axis in range(2):
            if self.boundary_axes[axis]:
                inside &= (uv[:, axis] >= self.lo[axis]) & (uv[:, axis] <= self.hi[axis])
            else:
                inside &= (uv[:, axis] > self.lo[axis]) & (uv[:, axis] < self.hi[axis])
        return inside

    def boundary(self, n: int) -> np.ndarray:
        sides = []
        for axis in range(2):
            if self.boundary_axes[axis]:
                continue
            other = 1 - axis
            run = np.linspace(self.lo[other], self.hi[other], n)
            for value in (self.lo[axis], self.hi[axis]):
                side = np.empty((n, 2))
                side[:, axis] = value
                side[:, other] = run
                sides.append(side)
        return np.vstack(sides)

    def fill(self, n: int) -> np.ndarray:
        uu, vv = np.meshgrid(
            np.linspace(self.lo[0], self.hi[0], n), np.linspace(self.lo[1], self.hi[1], n), indexing="ij"
        )
        return np.column_stack([uu.ravel(), vv.ravel()])

    def spacing(self, n: int) -> float:
        return max(self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]) / (n - 1)


@dataclass(frozen=True)
class DiscRegion:
    """Closed disc of the given radius about the chart origin."""

    radius: float

    def contains(self, uv: np.ndarray) -> np.ndarray:
        return np.hypot(uv[:, 0], uv[:, 1]) < self.radius

    def boundary(self, n: int) -> np.ndarray:
        phi = 2.0 * np.pi * np.arange(4 * n) / (4 * n)
        return self.radius * np.column_stack([np.cos(phi), np.sin(phi)])

    def fill(self, n: int) -> np.ndarray:
        rho = np.linspace(0.0, self.radius, n)
        phi = 2.0 * np.pi * np.arange(4 * n) / (4 * n)
        rr, pp = np.meshgrid(rho, phi, indexing="ij")
        return np.column_stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel()])

    def spacing(self, n: int) -> float:
        return self.radius / (n - 1)


Region = Union[BoxRegion, DiscRegion]
ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DarbouxChart:
    """A symplectic chart ψ with nested compact sets K ⊂ K′ inside its domain."""

    name: str
    manifold: Manifold
    center: Tuple[float, ...]
    forward: ArrayMap
    inverse: ArrayMap
    inverse_jacobian: ArrayMap
    in_domain: ArrayMap
    inner: Region
    outer: Region

    def covers(self, points: np.ndarray) -> np.ndarray:
        """Mask of points lying in the interior of K."""
        mask = np.asarray(self.in_domain(points), dtype=bool)
        result = np.zeros(len(points), dtype=bool)
        if mask.any():
            result[mask] = self.inner.contains(self.forward(points[mask]))
        return result

    def inverse_lipschitz(self, n: int) -> float:
        """Sampled sup of ‖Dψ⁻¹‖ over ψ(K′), boundary included."""
        samples = np.vstack([self.outer.fill(n), self.outer.boundary(n)])
        jac = self.inverse_jacobian(samples)
        return float(np.max(np.linalg.svd(jac, compute_uv=False)[:, 0]))

    def boundary_gap(self, n: int) -> float:
        """Sampled distance between ∂K and ∂K′ measured on the manifold."""
        inner = self.inverse(self.inner.boundary(n))
        outer = self.inverse(self.outer.boundary(n))
        best = math.inf
        for row in inner:
            best = min(best, float(np.min(distance_array(self.manifold, np.broadcast_to(row, outer.shape), outer))))
        return best

    def round_trip_error(self, n: int) -> float:
        samples = self.inverse(self.outer.fill(n))
        back = self.inverse(self.forward(samples))
        return float(np.max(distance_array(self.manifold, samples, back)))

    def symplecticity_defect(self, n: int) -> float:
        """max |det Dψ⁻¹ - 1| over K′ in frames adapted to the surface orientation."""
        uv = self.outer.fill(n)
        jac = self.inverse_jacobian(uv)
        if self.manifold.kind == ManifoldKind.SPHERE:
            frames = tangent_frames(self.inverse(uv))
            jac = np.einsum("nij,nik->njk", frames, jac)
        return float(np.max(np.abs(np.linalg.det(jac) - 1.0)))


@dataclass(frozen=True)
class Atlas:
    """A finite Darboux atlas."""

    manifold: Manifold
    charts: Tuple[DarbouxChart, ...]

    def check_cover(self, counts: Tuple[int, int]) -> None:
        """Raise ConfigurationError unless every grid sample lies in some interior(K_i)."""
        points = sample_grid(self.manifold, counts)
        covered = np.zeros(len(points), dtype=bool)
        for chart in self.charts:
            covered |= chart.covers(points)
        if not covered.all():
            missing = points[~covered]
            raise ConfigurationError(
                f"atlas does not cover the {self.manifold.kind.value}: {len(missing)} uncovered samples",
                {"first_uncovered": missing[0].tolist(), "uncovered": int(len(missing))},
            )

    def chart_for(self, point: Point) -> DarbouxChart:
        """The chart whose K-interior contains the point and whose center is nearest."""
        arr = point.array[None, :]
        best: Optional[DarbouxChart] = None
        best_dist = math.inf
        for chart in self.charts:
            if not chart.covers(arr)[0]:
                continue
            dist = float(distance_array(self.manifold, arr, np.asarray(chart.center)[None, :])[0])
            if dist < best_dist:
                best, best_dist = chart, dist
        if best is None:
            raise DomainError(f"no chart of the atlas contains {point.coords}")
        return best


class AtlasSpec(LabModel):
    """Atlas parameters as written in experiment configs.

    annulus: half-widths in θ of K and K′ about each chart center (defaults 0.3, 0.45);
    sphere: lowest height z reached by K and K′ in the northern chart (defaults -0.2, -0.5);
    plane: half-widths of K and K′ (defaults support_radius + 0.5 and + 1.5).
    """

    inner: Optional[float] = None
    outer: Optional[float] = None


def _annulus_chart(center: float, inner: float, outer: float) -> DarbouxChart:
    def forward(points: np.ndarray) -> np.ndarray:
        u = np.mod(points[:, 0] - center + 0.5, 1.0) - 0.5
        return np.column_stack([u, points[:, 1]])

    def inverse(uv: np.ndarray) -> np.ndarray:
        return np.column_stack([np.mod(center + uv[:, 0], 1.0), uv[:, 1]])

    def inverse_jacobian(uv: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(2), (len(uv), 2, 2)).copy()

    def in_domain(points: np.ndarray) -> np.ndarray:
        return circle_distance(points[:, 0], center + 0.5) > 0.0

    return DarbouxChart(
        name=f"annulus@{center}",
        manifold=ANNULUS,
        center=(center, 0.5),
        forward=forward,
        inverse=inverse,
        inverse_jacobian=inverse_jacobian,
        in_domain=in_domain,
        inner=BoxRegion((-inner, 0.0), (inner, 1.0), (False, True)),
        outer=BoxRegion((-outer, 0.0), (outer, 1.0), (False, True)),
    )


def _sphere_chart(sign: float, inner_z: float, outer_z: float) -> DarbouxChart:
    """Symplectic polar coordinates about the pole sign·e_z.

    North: (u, v) = sqrt(2(1-z))·(cos φ, sin φ). The southern chart mirrors z and v so
    that both charts carry the orientation of X_H = ∇H × p.
    """

    def forward(points: np.ndarray) -> np.ndarray:
        x, y, z = points[:, 0], sign * points[:, 1], sign * points[:, 2]
        scale = np.sqrt(2.0 / (1.0 + z))
        return np.column_stack([scale * x, scale * y])

    def inverse(uv: np.ndarray) -> np.ndarray:
        rho2 = uv[:, 0] ** 2 + uv[:, 1] ** 2
        s = np.sqrt(np.clip(1.0 - rho2 / 4.0, 0.0, None))
        return np.column_stack([uv[:, 0] * s, sign * uv[:, 1] * s, sign * (1.0 - rho2 / 2.0)])

    def inverse_jacobian(uv: np.ndarray) -> np.ndarray:
        u, v = uv[:, 0], uv[:, 1]
        s = np.sqrt(np.clip(1.0 - (u * u + v * v) / 4.0, 1e-300, None))
        jac = np.empty((len(uv), 3, 2))
        jac[:, 0, 0] = s - u * u / (4.0 * s)
        jac[:, 0, 1] = -u * v / (4.0 * s)
        jac[:, 1, 0] = sign * (-u * v / (4.0 * s))
        jac[:, 1, 1] = sign * (s - v * v / (4.0 * s))
        jac[:, 2, 0] = sign * (-u)
        jac[:, 2, 1] = sign * (-v)
        return jac

    def in_domain(points: np.ndarray) -> np.ndarray:
        return sign * points[:, 2] > -1.0

    return DarbouxChart(
        name="sphere-north" if sign > 0 else "sphere-south",
        manifold=SPHERE,
        center=(0.0, 0.0, sign),
        forward=forward,
        inverse=inverse,
        inverse_jacobian=inverse_jacobian,
        in_domain=in_domain,
        inner=DiscRegion(math.sqrt(2.0 * (1.0 - inner_z))),
        outer=DiscRegion(math.sqrt(2.0 * (1.0 - outer_z))),
    )


def _plane_chart(manifold: Manifold, inner: float, outer: float) -> DarbouxChart:
    def identity(points: np.ndarray) -> np.ndarray:
        return np.array(points, dtype=float, copy=True)

    def inverse_jacobian(uv: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(2), (len(uv), 2, 2)).copy()

    def in_domain(points: np.ndarray) -> np.ndarray:
        return np.ones(len(points), dtype=bool)

    return DarbouxChart(
        name="plane-identity",
        manifold=manifold,
        center=(0.0, 0.0),
        forward=identity,
        inverse=identity,
        inverse_jacobian=inverse_jacobian,
        in_domain=in_domain,
        inner=BoxRegion((-inner, -inner), (inner, inner)),
        outer=BoxRegion((-outer, -outer), (outer, outer)),
    )


def build_atlas(manifold: Manifold, spec: Optional[AtlasSpec] = None) -> Atlas:
    """Standard atlas of a model surface."""
    spec = spec or AtlasSpec()
    if manifold.kind == ManifoldKind.ANNULUS:
        inner = 0.3 if spec.inner is None else spec.inner
        outer = 0.45 if spec.outer is None else spec.outer
        if not 0.25 < inner < outer < 0.5:
            raise ConfigurationError(f"annulus chart widths need 0.25 < inner < outer < 0.5, got {inner}, {outer}")
        charts: Tuple[DarbouxChart, ...] = (
            _annulus_chart(0.5, inner, outer),
            _annulus_chart(0.0, inner, outer),
        )
    elif manifold.kind == ManifoldKind.SPHERE:
        inner = -0.2 if spec.inner is None else spec.inner
        outer = -0.5 if spec.outer is None else spec.outer
        if not -1.0 < outer < inner < 0.0:
            raise ConfigurationError(f"sphere chart heights need -1 < outer < inner < 0, got {inner}, {outer}")
        charts = (_sphere_chart(1.0, inner, outer), _sphere_chart(-1.0, inner, outer))
    else:
        inner = manifold.support_radius + 0.5 if spec.inner is None else spec.inner
        outer = manifold.support_radius + 1.5 if spec.outer is None else spec.outer
        if not 0.0 < inner < outer:
            raise ConfigurationError(f"plane chart half-widths need 0 < inner < outer, got {inner}, {outer}")
        charts = (_plane_chart(manifold, inner, outer),)
    return Atlas(manifold=manifold, charts=charts)


# ============================================================================
# Constants
# ============================================================================


def atlas_constants(atlas: Atlas, sample_density: GridSpec) -> AtlasConstants:
    """Sampled ε (smallest ∂K to ∂K′ gap) and L (largest ‖Dψ⁻¹‖ on ψ(K′)).

    Raises:
        ConfigurationError: If the interiors of the K_i miss a grid sample
    """
    atlas.check_cover(sample_density.counts)
    n = 4 * max(sample_density.counts)
    epsilon = min(chart.boundary_gap(n) for chart in atlas.charts)
    lipschitz = max(chart.inverse_lipschitz(n) for chart in atlas.charts)
    mesh = max(chart.outer.spacing(n) for chart in atlas.charts)
    logger.debug("atlas constants: epsilon=%r L=%r mesh=%r", epsilon, lipschitz, mesh)
    if epsilon <= 0.0:
        raise ConfigurationError("atlas has K touching the boundary of K′", {"epsilon": epsilon})
    # sampled singular values of an isometric chart can land a rounding error below 1
    return AtlasConstants(
        epsilon=epsilon, lipschitz_L=max(1.0, lipschitz), mesh=mesh, boundary_samples=n
    )


def inequality_constants(
    epsilon: float, lipschitz_L: float, diameter: Optional[float] = None
) -> InequalityConstants:
    """δ = πε²/(4L²) and C = 8L/√π, raised to diam/√δ when a diameter is given."""
    if epsilon <= 0.0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if lipschitz_L < 1.0:
        raise DomainError(f"lipschitz_L must be at least 1, got {lipschitz_L}")
    delta = math.pi * epsilon**2 / (4.0 * lipschitz_L**2)
    c_local = 8.0 * lipschitz_L / math.sqrt(math.pi)
    constant = c_local
    raised = False
    if diameter is not None and diameter / math.sqrt(delta) > c_local:
        constant = diameter / math.sqrt(delta)
        raised = True
    return InequalityConstants(delta=delta, C=constant, C_local=c_local, diameter=diameter, raised=raised)
