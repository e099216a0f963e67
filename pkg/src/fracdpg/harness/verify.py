"""Invariant verification suite behind the ``verify`` CLI command.

Each check returns a named pass/fail result with a short detail string;
random sampling is driven by one seeded generator so runs reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernel
from ..fem1d import build_space, evaluate, l2_norm_error, ritz_project
from ..kernel import FractionalParams, TemporalBasis, frac_integral_monomial
from ..stepper import (
    ForcingTerm,
    PowerForcing,
    ProblemSpec,
    solve,
    stability_functional,
)
from ..time_mesh import build_graded, check_mesh_bounds
from .cases import example1, example2

DEFAULT_SEED = 20260809
DEFAULT_TRIALS = 1000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_kernel_semigroup() -> CheckResult:
    """Composition of fractional integrals adds the orders, on monomials."""
    worst = 0.0
    for alpha in (0.3, 0.5, 0.7):
        for beta in (0.3, 0.5, 0.7):
            for p in (0.0, 1.0, 2.0, 3.0):
                for t in (0.25, 1.0, 1.75):
                    # inner integral turns t**p into a single power again
                    gain = math.gamma(p + 1.0) / math.gamma(p + 1.0 + beta)
                    once = gain * frac_integral_monomial(alpha, p + beta, t)
                    direct = frac_integral_monomial(alpha + beta, p, t)
                    worst = max(worst, abs(once - direct) / abs(direct))
    return CheckResult(
        "kernel-semigroup",
        worst <= 1e-12,
        f"max relative defect {worst:.2e} (tolerance 1e-12)",
    )


def _random_scalar_trajectory(rng, basis, n_slabs):
    """Continuous random piecewise polynomial with value 0 at t=0."""
    coeffs = np.zeros((n_slabs, basis.m + 1))
    carry = 0.0
    for n in range(n_slabs):
        coeffs[n, 0] = carry
        coeffs[n, 1:] = rng.standard_normal(basis.m)
        carry = float(basis.trial_end_values @ coeffs[n])
    return coeffs


def check_coercivity(seed: int = DEFAULT_SEED, trials: int = DEFAULT_TRIALS) -> CheckResult:
    """Nonnegativity of the memory quadratic form on random trial functions."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    count = 0
    while count < trials:
        m = int(rng.integers(1, 4))
        n_slabs = int(rng.integers(1, 9))
        gamma = float(rng.uniform(1.0, 4.0))
        alpha = float(rng.uniform(0.05, 0.95))
        T = float(rng.uniform(0.5, 2.0))
        basis = TemporalBasis(m)
        mesh = build_graded(gamma, n_slabs, T)
        B = kernel.memory_bilinear_matrix(FractionalParams(alpha), mesh.points, basis)
        beta = basis.deriv_in_test_basis()
        for _ in range(min(25, trials - count)):
            c = _random_scalar_trajectory(rng, basis, n_slabs)
            w = (beta.T @ c.T).T / mesh.steps[:, None]  # (n, m) test coefficients of v'
            q = float(w.reshape(-1) @ B @ c.reshape(-1))
            worst = min(worst, q)
            count += 1
    return CheckResult(
        "memory-coercivity",
        worst >= -1e-10,
        f"min quadratic form {worst:.2e} over {count} draws (tolerance -1e-10)",
    )


def check_mesh_grading() -> CheckResult:
    """Two-sided step bounds on the full grid of grading exponents and sizes."""
    failures = []
    for gamma in (1.0, 1.4, 1.8, 2.0, 2.5, 3.0, 3.5, 4.2):
        for N in (10, 40, 160):
            report = check_mesh_bounds(build_graded(gamma, N, T=1.0))
            if not report.passed:
                failures.append((gamma, N, report.failures))
    return CheckResult(
        "mesh-grading-bounds",
        not failures,
        "all bounds hold" if not failures else f"failures: {failures}",
    )


def check_ritz_idempotence(seed: int = DEFAULT_SEED) -> CheckResult:
    """Projection reproduces members of the FE space exactly."""
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for Nx, r in ((7, 1), (6, 2), (5, 3), (4, 4)):
        space = build_space(Nx, r)
        coeffs = rng.standard_normal(space.dof_count)
        proj = ritz_project(
            space,
            lambda x: evaluate(space, coeffs, x),
            lambda x: space.evaluate_deriv(coeffs, x),
        )
        worst = max(worst, float(np.max(np.abs(proj - coeffs))))
    return CheckResult(
        "ritz-idempotence",
        worst <= 1e-12,
        f"max coefficient defect {worst:.2e} (tolerance 1e-12)",
    )


def check_polynomial_exactness(seed: int = DEFAULT_SEED) -> CheckResult:
    """Solutions lying in the trial space are reproduced to 1e-10."""
    from ..fem1d import assemble_mass, assemble_stiffness
    from ..time_mesh import build_graded as _graded

    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for m in (1, 2, 3):
        for gamma in (1.0, 2.0):
            alpha = 0.4
            params = FractionalParams(alpha)
            N, Nx, r = 6, 5, 2
            mesh = _graded(gamma, N, T=1.0)
            space = build_space(Nx, r)
            mass = assemble_mass(space)
            stiff = assemble_stiffness(space)
            phi = rng.standard_normal(space.dof_count)
            # u(x, t) = (sum_j t**j, j=1..m) * phi_h(x); forcing in weak form
            terms = []
            for j in range(1, m + 1):
                caputo_coef = math.gamma(j + 1.0) / math.gamma(j + alpha)
                terms.append(ForcingTerm(caputo_coef, j - 1.0 + alpha, mass @ phi))
                terms.append(ForcingTerm(1.0, float(j), stiff @ phi))
            problem = ProblemSpec(params=params, T=1.0, forcing=PowerForcing(tuple(terms)))
            traj = solve(problem, mesh, space, m)
            for t in np.linspace(0.0, 1.0, 13):
                expected = sum(t**j for j in range(1, m + 1)) * phi
                defect = np.max(np.abs(traj.evaluate_at(float(t)) - expected))
                worst = max(worst, float(defect))
    return CheckResult(
        "polynomial-exactness",
        worst <= 1e-10,
        f"max nodal defect {worst:.2e} (tolerance 1e-10)",
    )


def check_zero_data() -> CheckResult:
    """Zero forcing and zero initial data produce the zero trajectory."""
    params = FractionalParams(0.35)
    problem = ProblemSpec(params=params, T=1.0, forcing=PowerForcing(()))
    mesh = build_graded(2.0, 6, T=1.0)
    space = build_space(6, 2)
    traj = solve(problem, mesh, space, 2)
    worst = float(np.max(np.abs(traj.coeffs)))
    return CheckResult(
        "zero-data",
        worst <= 1e-13,
        f"max coefficient {worst:.2e} (tolerance 1e-13)",
    )


def check_stability() -> CheckResult:
    """Energy inequality on both manufactured cases at (N, Nx) = (16, 20)."""
    details = []
    ok = True
    for case in (example1(0.3), example2(0.4)):
        for m in (1, 2):
            traj = solve(case.problem(), build_graded(2.0, 16, 1.0), build_space(20, 2), m)
            res = stability_functional(traj, case.problem())
            good = res.satisfied(1e-8) and res.memory_term >= -1e-10
            ok = ok and good
            details.append(
                f"{case.label} m={m}: lhs={res.lhs:.4e} rhs={res.rhs:.4e}"
                + ("" if good else " VIOLATED")
            )
    return CheckResult("stability-inequality", ok, "; ".join(details))


def run_verification(seed: int = DEFAULT_SEED, trials: int = DEFAULT_TRIALS) -> list[CheckResult]:
    """Run all invariant checks and return their results."""
    return [
        check_kernel_semigroup(),
        check_coercivity(seed, trials),
        check_mesh_grading(),
        check_ritz_idempotence(seed),
        check_polynomial_exactness(seed),
        check_zero_data(),
        check_stability(),
    ]
