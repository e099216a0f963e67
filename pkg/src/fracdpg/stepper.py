"""Slab-by-slab solution of the Petrov-Galerkin time-stepping scheme.

Trial functions are continuous piecewise polynomials of degree m in time
with finite element coefficients; test functions are discontinuous of
degree m-1, so each slab yields a square block system.  Continuity fixes
the constant trial coefficient from the previous slab's end value, and the
memory term couples every slab to all earlier ones, which makes the total
cost O(m N^2 dof).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import roots_jacobi

from . import kernel
from .fem1d import (
    FESpace,
    assemble_mass,
    assemble_stiffness,
    load_vector,
    ritz_project,
)
from .kernel import FractionalParams, Interval, TemporalBasis, _gauss01
from .time_mesh import TimeMesh


class SingularSlabSystemError(RuntimeError):
    """A slab system came out singular.

    The discrete problem has a unique solution for any valid data, so this
    can only mean an assembly bug; it is never swallowed.
    """


@dataclass(frozen=True)
class ForcingTerm:
    """One separable forcing contribution coef * t**exponent * profile(x).

    ``profile`` may be a callable spatial factor or a ready-made interior
    load vector (used when the spatial part only exists in weak form).
    """

    coef: float
    exponent: float
    profile: Callable | np.ndarray

    def __post_init__(self) -> None:
        if self.exponent <= -1.0:
            raise ValueError(f"forcing exponent must exceed -1, got {self.exponent}")


@dataclass(frozen=True)
class PowerForcing:
    """Forcing given as a sum of power-in-time separable terms.

    Time moments of such a forcing are computed exactly, so no quadrature
    error enters the right-hand side.
    """

    terms: tuple[ForcingTerm, ...]

    def __call__(self, x, t):
        vals = 0.0
        for term in self.terms:
            if not callable(term.profile):
                raise TypeError("forcing term with a vector profile has no point values")
            vals = vals + term.coef * t**term.exponent * term.profile(x)
        return vals


@dataclass(frozen=True)
class QuadratureConfig:
    """Right-hand-side quadrature choices.

    ``n_time`` Gauss-Legendre points per slab for callable forcings
    (default 2(m+2)); ``first_slab_jacobi`` switches the first slab to a
    Gauss-Jacobi rule with the given endpoint exponent, for forcings with a
    leading fractional power at t=0; ``exact_power_moments`` uses closed
    forms whenever the forcing is a :class:`PowerForcing`; ``n_space``
    overrides the per-element points of spatial load assembly.
    """

    n_time: int | None = None
    first_slab_jacobi: float | None = None
    exact_power_moments: bool = True
    n_space: int | None = None


@dataclass(frozen=True)
class ProblemSpec:
    """Data of one initial-boundary value problem on Omega = (0, 1)."""

    params: FractionalParams
    T: float
    forcing: PowerForcing | Callable
    u0: Callable | None = None
    u0_deriv: Callable | None = None
    exact: Callable | None = None
    # Riemann-Liouville derivative of order alpha of the forcing, needed
    # only by the stability functional.
    forcing_rl_derivative: Callable | None = None
    # optional closed form of t -> int_0^t <f, RL-derivative of f> ds
    forcing_rl_product_integral: Callable | None = None


@dataclass(frozen=True)
class SlabSolution:
    """Temporal-basis coefficients of the spatial dof vectors on one slab."""

    slab: Interval
    coeffs: np.ndarray  # (m+1, dof)


@dataclass(frozen=True)
class Trajectory:
    """The discrete solution: per-slab temporal polynomials of dof vectors."""

    mesh: TimeMesh
    space: FESpace
    m: int
    basis: TemporalBasis
    coeffs: np.ndarray  # (N, m+1, dof)
    params: FractionalParams

    def slab(self, n: int) -> SlabSolution:
        left, right = self.mesh.slab(n)
        return SlabSolution(Interval(left, right), self.coeffs[n - 1])

    @property
    def initial_value(self) -> np.ndarray:
        return self.coeffs[0, 0]

    def end_value(self, n: int) -> np.ndarray:
        """Value at knot t_n (n = 0 returns the initial value)."""
        if n == 0:
            return self.initial_value
        return self.basis.trial_end_values @ self.coeffs[n - 1]

    def _locate(self, t: float) -> int:
        points = self.mesh.points
        if t < points[0] or t > points[-1]:
            raise ValueError(f"t={t} outside [0, {points[-1]}]")
        if t == points[0]:
            return 0
        return int(np.searchsorted(points, t, side="left")) - 1

    def evaluate_at(self, t: float) -> np.ndarray:
        """Spatial coefficient vector at time t.

        Interior knots are resolved to the left slab; by construction both
        neighbouring slabs give the same value there.
        """
        idx = self._locate(t)
        k = self.mesh.points[idx + 1] - self.mesh.points[idx]
        tau = (t - self.mesh.points[idx]) / k
        return self.basis.trial_values(tau) @ self.coeffs[idx]

    def caputo_at(self, t: float) -> np.ndarray:
        """Fractional time derivative of the trajectory at t (diagnostic)."""
        return kernel.caputo_apply(self.params, self.mesh.points, self.coeffs, self.basis, t)


def evaluate_at(trajectory: Trajectory, t: float) -> np.ndarray:
    return trajectory.evaluate_at(t)


def _exact_power_moments(basis: TemporalBasis, left: float, k: float, exps: np.ndarray) -> np.ndarray:
    """Moments int over the slab of psi_b(tau(t)) t**p dt, shape (m, n_terms).

    Exact on the first slab; on later slabs the integrand is analytic and a
    Gauss rule with order picked from the distance to t=0 is exact to
    machine precision.
    """
    m = basis.m
    if left == 0.0:
        q = np.arange(m)
        mom = np.empty((m, exps.size))
        for i, p in enumerate(exps):
            mom[:, i] = basis.test_coeffs @ (k ** (p + 1.0) / (q + p + 1.0))
        return mom
    nq = kernel._auto_gauss_points(left / k, 1.0, m)
    x, w = _gauss01(nq)
    t = left + k * x
    psi = basis.test_values(x) * w
    powers = t[None, :] ** exps[:, None]  # (n_terms, nq)
    return k * np.einsum("bq,pq->bp", psi, powers)


def _callable_slab_load(
    space: FESpace,
    basis: TemporalBasis,
    f: Callable,
    left: float,
    k: float,
    n_time: int,
    jacobi_exponent: float | None,
    n_space: int | None,
) -> np.ndarray:
    """Load block F[b] = int over slab of psi_b(tau) <f(.,t), basis> dt."""
    m = basis.m
    dof = space.dof_count
    out = np.zeros((m, dof))
    if jacobi_exponent is not None and left == 0.0 and jacobi_exponent != 0.0:
        # Gauss-Jacobi with weight (1+x)**beta absorbs the leading t**beta
        # behaviour of the forcing at t=0.
        beta = jacobi_exponent
        x, w = roots_jacobi(n_time, 0.0, beta)
        tau = 0.5 * (x + 1.0)
        t = k * tau
        psi = basis.test_values(tau)
        for l in range(n_time):
            g = load_vector(space, lambda xs: f(xs, t[l]), n_points=n_space)
            out += 0.5 * k * w[l] / (2.0 * tau[l]) ** beta * np.outer(psi[:, l], g)
        return out
    x, w = _gauss01(n_time)
    t = left + k * x
    psi = basis.test_values(x)
    for l in range(n_time):
        g = load_vector(space, lambda xs: f(xs, t[l]), n_points=n_space)
        out += k * w[l] * np.outer(psi[:, l], g)
    return out


class DpgStepper:
    """Stateful slab marcher; ``run()`` solves all slabs and returns the trajectory.

    Slabs must be advanced in order (the memory term needs every earlier
    slab); within one slab the history contributions over earlier slabs are
    accumulated by a deterministic ordered reduction.
    """

    def __init__(
        self,
        problem: ProblemSpec,
        mesh: TimeMesh,
        space: FESpace,
        m: int,
        quad: QuadratureConfig | None = None,
    ):
        if abs(mesh.T - problem.T) > 1e-12 * max(1.0, problem.T):
            raise ValueError(f"mesh horizon {mesh.T} does not match problem horizon {problem.T}")
        self.problem = problem
        self.mesh = mesh
        self.space = space
        self.m = m
        self.quad = quad or QuadratureConfig()
        self.basis = TemporalBasis(m)
        self.mass = assemble_mass(space)
        self.stiffness = assemble_stiffness(space)
        self.gram_ref = self.basis.gram()
        self.local_ref = kernel._local_reference_entries_cached(problem.params.alpha, m)
        self._lu_cache: dict[float, tuple] = {}
        self.coeffs = np.zeros((mesh.N, m + 1, space.dof_count))
        self._mass_coeffs = np.zeros_like(self.coeffs)  # mass @ trial coefficients
        self.solved = 0
        self._prepare_forcing()
        self._carry = self._initial_coefficients()

    def _initial_coefficients(self) -> np.ndarray:
        u0 = self.problem.u0
        if u0 is None:
            return np.zeros(self.space.dof_count)
        for x_bdry in (0.0, 1.0):
            if abs(float(np.asarray(u0(np.array(x_bdry))))) > 1e-12:
                raise ValueError("initial data must vanish at the spatial boundary")
        if self.problem.u0_deriv is None:
            raise ValueError("projecting a callable initial value needs its derivative")
        return ritz_project(self.space, u0, self.problem.u0_deriv)

    def _prepare_forcing(self) -> None:
        f = self.problem.forcing
        self._power_path = isinstance(f, PowerForcing) and self.quad.exact_power_moments
        if self._power_path:
            self._term_exps = np.array([term.exponent for term in f.terms])
            loads = []
            for term in f.terms:
                if callable(term.profile):
                    vec = load_vector(self.space, term.profile, n_points=self.quad.n_space)
                else:
                    vec = np.asarray(term.profile, dtype=float)
                    if vec.shape != (self.space.dof_count,):
                        raise ValueError("forcing load vector has the wrong length")
                loads.append(term.coef * vec)
            self._term_loads = np.array(loads) if loads else np.zeros((0, self.space.dof_count))

    def _forcing_block(self, n: int) -> np.ndarray:
        left, right = self.mesh.slab(n)
        k = right - left
        if self._power_path:
            if self._term_loads.shape[0] == 0:
                return np.zeros((self.m, self.space.dof_count))
            mom = _exact_power_moments(self.basis, left, k, self._term_exps)
            return mom @ self._term_loads
        n_time = self.quad.n_time or 2 * (self.m + 2)
        return _callable_slab_load(
            self.space,
            self.basis,
            self.problem.forcing,
            left,
            k,
            n_time,
            self.quad.first_slab_jacobi if n == 1 else None,
            self.quad.n_space,
        )

    def _slab_system(self, k: float) -> tuple:
        if k not in self._lu_cache:
            alpha = self.problem.params.alpha
            h_loc = k**alpha * self.local_ref
            g = k * self.gram_ref
            system = np.kron(h_loc[:, 1:], self.mass) + np.kron(g[:, 1:], self.stiffness)
            self._lu_cache[k] = lu_factor(system)
        return self._lu_cache[k]

    def advance_slab(self, n: int) -> SlabSolution:
        """Solve slab n (1-based); all earlier slabs must be solved already."""
        if n != self.solved + 1:
            raise ValueError(f"slab {n} cannot be advanced before slab {self.solved + 1}")
        left, right = self.mesh.slab(n)
        k = right - left
        alpha = self.problem.params.alpha
        m = self.m
        c0 = self._carry
        rhs = self._forcing_block(n)  # (m, dof)
        if n > 1:
            blocks = kernel.history_blocks_for_slab(
                self.problem.params, self.mesh.points, n, self.basis
            )
            rhs -= np.einsum("jba,jad->bd", blocks, self._mass_coeffs[: n - 1])
        g = k * self.gram_ref
        rhs -= np.outer(g[:, 0], self.stiffness @ c0)
        lu = self._slab_system(k)
        sol = lu_solve(lu, rhs.reshape(m * self.space.dof_count))
        if not np.all(np.isfinite(sol)):
            raise SingularSlabSystemError(
                "slab solve produced non-finite values; the discrete problem is "
                "uniquely solvable for valid inputs, so this indicates an assembly bug"
            )
        self.coeffs[n - 1, 0] = c0
        self.coeffs[n - 1, 1:] = sol.reshape(m, self.space.dof_count)
        self._mass_coeffs[n - 1] = self.coeffs[n - 1] @ self.mass
        self._carry = self.basis.trial_end_values @ self.coeffs[n - 1]
        self.solved = n
        return SlabSolution(Interval(left, right), self.coeffs[n - 1])

    def run(self) -> Trajectory:
        for n in range(self.solved + 1, self.mesh.N + 1):
            self.advance_slab(n)
        return Trajectory(
            mesh=self.mesh,
            space=self.space,
            m=self.m,
            basis=self.basis,
            coeffs=self.coeffs,
            params=self.problem.params,
        )


def solve(
    problem: ProblemSpec,
    mesh: TimeMesh,
    space: FESpace,
    m: int,
    quad: QuadratureConfig | None = None,
) -> Trajectory:
    """Solve the full time range and return the trajectory."""
    return DpgStepper(problem, mesh, space, m, quad).run()


@dataclass(frozen=True)
class StabilityResult:
    """Both sides of the energy stability inequality.

    ``lhs = int_0^T <memory derivative of U, U'> + |grad U(T)|^2`` and
    ``rhs = |grad u0|^2 + c_alpha**(-2) int_0^T <f, RL-derivative of f>``.
    ``rhs`` is None when the problem supplies no fractional derivative of
    the forcing; no guess is substituted.
    """

    lhs: float
    rhs: float | None
    memory_term: float
    gradient_term: float
    note: str = ""

    @property
    def available(self) -> bool:
        return self.rhs is not None

    def satisfied(self, tol: float = 1e-8) -> bool:
        if self.rhs is None:
            raise ValueError("right-hand side unavailable: " + self.note)
        return self.lhs <= self.rhs * (1.0 + tol) + tol


def stability_functional(trajectory: Trajectory, problem: ProblemSpec) -> StabilityResult:
    """Evaluate the discrete energy inequality for a solved trajectory."""
    mesh, space, basis = trajectory.mesh, trajectory.space, trajectory.basis
    m = basis.m
    mass = assemble_mass(space)
    stiff = assemble_stiffness(space)
    coeffs = trajectory.coeffs  # (N, m+1, dof)
    steps = mesh.steps
    beta = basis.deriv_in_test_basis()  # (m+1, m)
    # test-basis coefficients of U' on each slab
    w = np.einsum("ab,nad->nbd", beta, coeffs) / steps[:, None, None]
    mc = np.einsum("nad,de->nae", coeffs, mass)
    memory = 0.0
    for i in range(1, mesh.N + 1):
        local = kernel.history_block_local(
            problem.params, Interval(*mesh.slab(i)), m, basis
        ).entries
        memory += float(np.einsum("ba,bd,ad->", local, w[i - 1], mc[i - 1]))
        if i > 1:
            blocks = kernel.history_blocks_for_slab(problem.params, mesh.points, i, basis)
            memory += float(np.einsum("jba,bd,jad->", blocks, w[i - 1], mc[: i - 1]))
    end = trajectory.end_value(mesh.N)
    gradient = float(end @ stiff @ end)
    lhs = memory + gradient
    grad0 = 0.0
    if problem.u0 is not None and problem.u0_deriv is not None:
        x, wq = _gauss01(12)
        xs = space.nodes[:-1, None] + space.h * x[None, :]
        dv = problem.u0_deriv(xs)
        grad0 = float(space.h * np.einsum("eq,eq,q->", dv, dv, wq))
    c2 = problem.params.c_alpha**2
    if problem.forcing_rl_product_integral is not None:
        rhs = grad0 + problem.forcing_rl_product_integral(mesh.T) / c2
        return StabilityResult(lhs, rhs, memory, gradient)
    if problem.forcing_rl_derivative is not None:
        rhs = grad0 + _forcing_product_quadrature(problem, mesh, space) / c2
        return StabilityResult(lhs, rhs, memory, gradient, note="rhs by quadrature")
    return StabilityResult(
        lhs, None, memory, gradient,
        note="no fractional derivative of the forcing was supplied",
    )


def _forcing_product_quadrature(problem: ProblemSpec, mesh: TimeMesh, space: FESpace) -> float:
    """Fallback quadrature of int_0^T <f, RL-derivative of f> dt.

    The integrand may carry an integrable power singularity at t=0, so the
    first slab is subdivided geometrically.
    """
    f = problem.forcing
    rdf = problem.forcing_rl_derivative
    xq, wq = _gauss01(8)
    xs = space.nodes[:-1, None] + space.h * xq[None, :]

    def inner(t: float) -> float:
        return float(space.h * np.einsum("eq,eq,q->", f(xs, t), rdf(xs, t), wq))

    tq, tw = _gauss01(16)
    total = 0.0
    panels: list[tuple[float, float]] = []
    t1 = float(mesh.points[1])
    lo = 0.0
    for j in range(24, 0, -1):
        hi = t1 * 2.0 ** (1 - j)
        panels.append((lo, hi))
        lo = hi
    for n in range(2, mesh.N + 1):
        panels.append((float(mesh.points[n - 1]), float(mesh.points[n])))
    for lo, hi in panels:
        k = hi - lo
        total += k * sum(tw[l] * inner(lo + k * tq[l]) for l in range(tq.size))
    return total
