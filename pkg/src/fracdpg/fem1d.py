"""Continuous Lagrange finite elements on a uniform partition of (0, 1).

Nodal basis at Gauss-Lobatto points inside each element, homogeneous
Dirichlet conditions eliminated from the system (boundary nodes are simply
dropped), exact Gauss assembly of the banded mass and stiffness matrices,
Ritz projection through a banded Cholesky solve, and the composite Gauss
L2-error measure used by the convergence studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as _legendre
from numpy.polynomial import polynomial as _poly
from scipy.linalg import solveh_banded

from .kernel import _gauss01

MAX_SPACE_DEGREE = 4


def _lobatto01(r: int) -> np.ndarray:
    """Gauss-Lobatto points of a degree-r element, mapped to [0, 1]."""
    if r == 1:
        return np.array([0.0, 1.0])
    c = np.zeros(r + 1)
    c[r] = 1.0
    interior = _legendre.legroots(_legendre.legder(c))
    return np.concatenate(([0.0], 0.5 * (np.sort(interior) + 1.0), [1.0]))


class FESpace:
    """Degree-r Lagrange space on Nx uniform elements with zero boundary values."""

    def __init__(self, Nx: int, r: int):
        if Nx < 2:
            raise ValueError(f"need at least 2 elements, got Nx={Nx}")
        if not 1 <= r <= MAX_SPACE_DEGREE:
            raise ValueError(f"element degree must lie in [1, {MAX_SPACE_DEGREE}], got {r}")
        self.Nx = Nx
        self.r = r
        self.h = 1.0 / Nx
        self.node_count = Nx * r + 1
        self.dof_count = Nx * r - 1
        self.nodes = np.linspace(0.0, 1.0, Nx + 1)
        self.local_nodes = _lobatto01(r)
        # monomial coefficients of the local Lagrange basis (row = basis fn)
        vander = np.vander(self.local_nodes, r + 1, increasing=True)
        self.basis_coeffs = np.linalg.inv(vander).T
        self.basis_deriv_coeffs = np.array(
            [np.pad(_poly.polyder(c), (0, 1)) for c in self.basis_coeffs]
        )[:, :r]

    def basis_values(self, tau) -> np.ndarray:
        """Local basis values; shape (r+1,) + shape(tau)."""
        return _poly.polyval(tau, self.basis_coeffs.T)

    def basis_derivs(self, tau) -> np.ndarray:
        """Local basis derivatives with respect to the reference coordinate."""
        return _poly.polyval(tau, self.basis_deriv_coeffs.T)

    def padded(self, coeffs: np.ndarray) -> np.ndarray:
        """Interior dof vector extended by the zero boundary values."""
        if coeffs.shape[-1] != self.dof_count:
            raise ValueError(
                f"expected {self.dof_count} coefficients, got {coeffs.shape[-1]}"
            )
        pad = np.zeros(coeffs.shape[:-1] + (self.node_count,))
        pad[..., 1:-1] = coeffs
        return pad

    def element_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Per-element local coefficient view, shape (..., Nx, r+1)."""
        pad = self.padded(coeffs)
        idx = np.arange(self.Nx)[:, None] * self.r + np.arange(self.r + 1)[None, :]
        return pad[..., idx]

    def evaluate(self, coeffs: np.ndarray, x) -> np.ndarray:
        """Point evaluation of the FE function with the given interior coefficients."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
            raise ValueError("evaluation points must lie in [0, 1]")
        elem = np.minimum((x_arr * self.Nx).astype(int), self.Nx - 1)
        tau = x_arr * self.Nx - elem
        local = self.element_coeffs(coeffs)  # (Nx, r+1)
        vals = self.basis_values(tau)  # (r+1,) + shape(x)
        if x_arr.ndim:
            return np.einsum("...l,l...->...", local[elem], vals)
        return float(local[elem] @ vals)

    def evaluate_deriv(self, coeffs: np.ndarray, x) -> np.ndarray:
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
            raise ValueError("evaluation points must lie in [0, 1]")
        elem = np.minimum((x_arr * self.Nx).astype(int), self.Nx - 1)
        tau = x_arr * self.Nx - elem
        local = self.element_coeffs(coeffs)
        ders = self.basis_derivs(tau) / self.h
        if x_arr.ndim:
            return np.einsum("...l,l...->...", local[elem], ders)
        return float(local[elem] @ ders)


def build_space(Nx: int, r: int) -> FESpace:
    """Construct the FE space; Nx*r - 1 interior degrees of freedom."""
    return FESpace(Nx, r)


@dataclass(frozen=True)
class SpatialOperators:
    """Assembled interior mass and stiffness matrices (dense storage, banded structure)."""

    mass: np.ndarray
    stiffness: np.ndarray
    bandwidth: int  # number of nonzero bands: 2r + 1


def _assemble_full(space: FESpace) -> tuple[np.ndarray, np.ndarray]:
    """Mass and stiffness including the two boundary nodes."""
    r = space.r
    x, w = _gauss01(r + 1)  # exact for the degree-2r integrands
    vals = space.basis_values(x)  # (r+1, nq)
    ders = space.basis_derivs(x)
    m_loc = space.h * np.einsum("iq,jq,q->ij", vals, vals, w)
    a_loc = np.einsum("iq,jq,q->ij", ders, ders, w) / space.h
    n = space.node_count
    mass = np.zeros((n, n))
    stiff = np.zeros((n, n))
    for e in range(space.Nx):
        sl = slice(e * r, e * r + r + 1)
        mass[sl, sl] += m_loc
        stiff[sl, sl] += a_loc
    return mass, stiff


def assemble_mass(space: FESpace) -> np.ndarray:
    """Interior mass matrix, symmetric positive definite."""
    return _assemble_full(space)[0][1:-1, 1:-1]


def assemble_stiffness(space: FESpace) -> np.ndarray:
    """Interior stiffness matrix, symmetric positive definite."""
    return _assemble_full(space)[1][1:-1, 1:-1]


def assemble_operators(space: FESpace) -> SpatialOperators:
    mass, stiff = _assemble_full(space)
    return SpatialOperators(
        mass=mass[1:-1, 1:-1],
        stiffness=stiff[1:-1, 1:-1],
        bandwidth=2 * space.r + 1,
    )


def load_vector(space: FESpace, v: Callable, n_points: int | None = None) -> np.ndarray:
    """Interior load vector with entries <v, basis_i>, by composite Gauss quadrature."""
    nq = n_points if n_points is not None else space.r + 2
    x, w = _gauss01(nq)
    vals = space.basis_values(x) * w  # (r+1, nq)
    xs = space.nodes[:-1, None] + space.h * x[None, :]  # (Nx, nq)
    fx = v(xs)
    full = np.zeros(space.node_count)
    contrib = space.h * np.einsum("eq,lq->el", fx, vals)
    for e in range(space.Nx):
        full[e * space.r : e * space.r + space.r + 1] += contrib[e]
    return full[1:-1]


def _upper_band(matrix: np.ndarray, bandwidth: int) -> np.ndarray:
    n = matrix.shape[0]
    ab = np.zeros((bandwidth + 1, n))
    for d in range(bandwidth + 1):
        ab[bandwidth - d, d:] = np.diagonal(matrix, d)
    return ab


def ritz_project(
    space: FESpace,
    v: Callable,
    deriv: Callable,
    n_points: int | None = None,
) -> np.ndarray:
    """Stiffness-orthogonal projection of a function vanishing at the boundary.

    Solves A c = b with b_i = <v', basis_i'> (the integration-by-parts form
    of the defining orthogonality), through a banded Cholesky factorization.
    Functions already in the space are reproduced exactly up to roundoff.
    """
    nq = n_points if n_points is not None else space.r + 4
    x, w = _gauss01(nq)
    ders = space.basis_derivs(x) * w
    xs = space.nodes[:-1, None] + space.h * x[None, :]
    dv = deriv(xs)
    full = np.zeros(space.node_count)
    contrib = np.einsum("eq,lq->el", dv, ders)  # h and 1/h cancel
    for e in range(space.Nx):
        full[e * space.r : e * space.r + space.r + 1] += contrib[e]
    b = full[1:-1]
    stiff = assemble_stiffness(space)
    ab = _upper_band(stiff, space.r)
    return solveh_banded(ab, b)


def l2_norm_error(space: FESpace, coeffs: np.ndarray, exact: Callable) -> float:
    """Composite Gauss L2 distance between the FE function and ``exact``.

    Uses the (r+1)-point rule on every element, matching the error measure
    of the convergence studies.
    """
    x, w = _gauss01(space.r + 1)
    vals = space.basis_values(x)  # (r+1, nq)
    local = space.element_coeffs(coeffs)  # (Nx, r+1)
    uh = local @ vals  # (Nx, nq)
    xs = space.nodes[:-1, None] + space.h * x[None, :]
    diff = uh - exact(xs)
    return math.sqrt(float(space.h * np.einsum("eq,eq,q->", diff, diff, w)))


def evaluate(space: FESpace, coeffs: np.ndarray, x):
    """Point values of the FE function; zero at the boundary by construction."""
    return space.evaluate(coeffs, x)
