"""Implicit midpoint integration of Hamiltonian flows with the discrete variational equation."""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .errors import IntegrationError
from .hamiltonians import HamiltonianSpec, ScheduledHamiltonian
from .models import IntegratorParams
from .phase_space import Manifold, ManifoldKind

logger = logging.getLogger(__name__)


def _cross_matrix(vectors: np.ndarray) -> np.ndarray:
    """[v]× for each row, so that [v]× w = v × w."""
    m = np.zeros((len(vectors), 3, 3))
    m[:, 0, 1], m[:, 0, 2] = -vectors[:, 2], vectors[:, 1]
    m[:, 1, 0], m[:, 1, 2] = vectors[:, 2], -vectors[:, 0]
    m[:, 2, 0], m[:, 2, 1] = -vectors[:, 1], vectors[:, 0]
    return m


def vector_field(hamiltonian: HamiltonianSpec, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
    """X_H: (H_I, -H_θ) on the annulus, (H_y, -H_x) on the plane, ∇H × p on the sphere."""
    grad = hamiltonian.gradient(manifold, coords)
    if manifold.kind == ManifoldKind.SPHERE:
        return np.cross(grad, coords)
    return np.column_stack([grad[:, 1], -grad[:, 0]])


def vector_field_jacobian(hamiltonian: HamiltonianSpec, manifold: Manifold, coords: np.ndarray) -> np.ndarray:
    hess = hamiltonian.hessian(manifold, coords)
    if manifold.kind == ManifoldKind.SPHERE:
        grad = hamiltonian.gradient(manifold, coords)
        # d(g × p) = -[p]×·D²H·dp + [g]×·dp
        return -np.einsum("nij,njk->nik", _cross_matrix(coords), hess) + _cross_matrix(grad)
    jac = np.empty_like(hess)
    jac[:, 0, :] = hess[:, 1, :]
    jac[:, 1, :] = -hess[:, 0, :]
    return jac


def _midpoint_step(
    hamiltonian: HamiltonianSpec,
    manifold: Manifold,
    x0: np.ndarray,
    h: float,
    params: IntegratorParams,
    elapsed: float,
) -> np.ndarray:
    x1 = x0 + h * vector_field(hamiltonian, manifold, x0)
    residual = math.inf
    for _ in range(params.max_iterations):
        x_next = x0 + h * vector_field(hamiltonian, manifold, 0.5 * (x0 + x1))
        change = np.max(np.abs(x_next - x1), axis=1)
        x1 = x_next
        residual = float(np.max(change)) if len(change) else 0.0
        if residual <= params.tolerance:
            return x1
    worst = int(np.argmax(np.max(np.abs(x0 + h * vector_field(hamiltonian, manifold, 0.5 * (x0 + x1)) - x1), axis=1)))
    raise IntegrationError(
        f"implicit midpoint fixed-point iteration did not converge in {params.max_iterations} iterations",
        step=h,
        time=elapsed,
        location=x0[worst].tolist(),
        residual=residual,
    )


def _integrate_autonomous(
    hamiltonian: HamiltonianSpec,
    manifold: Manifold,
    coords: np.ndarray,
    t: float,
    params: IntegratorParams,
    with_jacobian: bool,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    dim = coords.shape[1]
    jac = np.broadcast_to(np.eye(dim), (len(coords), dim, dim)).copy() if with_jacobian else None
    if t == 0.0 or len(coords) == 0:
        return coords.astype(float, copy=True), jac

    exact = hamiltonian.exact_flow(manifold, coords, t)
    if exact is not None:
        moved, step_jac = exact
        return moved, (np.einsum("nij,njk->nik", step_jac, jac) if jac is not None else None)

    steps = max(1, math.ceil(abs(t) / params.step - 1e-9))
    h = t / steps
    x = coords.astype(float, copy=True)
    eye = np.eye(dim)
    for k in range(steps):
        x1 = _midpoint_step(hamiltonian, manifold, x, h, params, k * h)
        if jac is not None:
            # exact derivative of the discrete step: (I - h/2 A) dx1 = (I + h/2 A) dx0
            a = vector_field_jacobian(hamiltonian, manifold, 0.5 * (x + x1))
            jac = np.linalg.solve(eye - 0.5 * h * a, np.einsum("nij,njk->nik", eye + 0.5 * h * a, jac))
        if manifold.kind == ManifoldKind.SPHERE:
            norms = np.linalg.norm(x1, axis=1)
            if jac is not None:
                unit = x1 / norms[:, None]
                projector = (eye - np.einsum("ni,nj->nij", unit, unit)) / norms[:, None, None]
                jac = np.einsum("nij,njk->nik", projector, jac)
            x1 = x1 / norms[:, None]
        x = x1
    return x, jac


def integrate(
    hamiltonian: HamiltonianSpec,
    manifold: Manifold,
    coords: np.ndarray,
    t: float,
    params: IntegratorParams,
    with_jacobian: bool = False,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Time-t flow of H by the implicit midpoint rule.

    Returns the moved coordinates (annulus θ unreduced) and, when requested, the ambient
    Jacobians of the discrete map. Negative t runs the flow backwards, which inverts the
    forward map up to the fixed-point tolerance since the scheme is symmetric.

    Raises:
        IntegrationError: If a fixed-point iteration fails to converge
    """
    hamiltonian.check_manifold(manifold)
    if not isinstance(hamiltonian, ScheduledHamiltonian):
        return _integrate_autonomous(hamiltonian, manifold, coords, t, params, with_jacobian)

    x = coords.astype(float, copy=True)
    dim = coords.shape[1]
    jac = np.broadcast_to(np.eye(dim), (len(coords), dim, dim)).copy() if with_jacobian else None
    for piece, dt in hamiltonian.segments(t):
        x, piece_jac = integrate(piece, manifold, x, dt, params, with_jacobian)
        if jac is not None and piece_jac is not None:
            jac = np.einsum("nij,njk->nik", piece_jac, jac)
    return x, jac
