"""Graded time partitions concentrating steps near t = 0.

The knots follow the power law t_n = (n*k)**gamma with k = T**(1/gamma)/N,
so a grading exponent gamma = 1 gives the uniform mesh and larger exponents
cluster the early steps.  Step sizes are nondecreasing and satisfy two-sided
comparability bounds that downstream error analysis relies on; those bounds
are machine-checkable through :func:`check_mesh_bounds`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeMesh:
    """Power-law graded partition of [0, T]; immutable after construction."""

    points: np.ndarray
    gamma: float
    T: float
    N: int

    @property
    def k(self) -> float:
        """Base step of the generating law, T**(1/gamma) / N."""
        return self.T ** (1.0 / self.gamma) / self.N

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.points)

    def slab(self, n: int) -> tuple[float, float]:
        """Endpoints of slab n, 1-based."""
        if not 1 <= n <= self.N:
            raise ValueError(f"slab index must lie in [1, {self.N}], got {n}")
        return float(self.points[n - 1]), float(self.points[n])


def build_graded(gamma: float, N: int, T: float = 1.0) -> TimeMesh:
    """Build the graded mesh with points (n*k)**gamma, k = T**(1/gamma)/N.

    The final point is pinned to T exactly so that evaluation at the end
    time never falls outside the mesh.
    """
    if gamma < 1.0:
        raise ValueError(f"grading exponent must satisfy gamma >= 1, got {gamma}")
    if N < 1:
        raise ValueError(f"slab count must be positive, got {N}")
    if T <= 0.0:
        raise ValueError(f"final time must be positive, got {T}")
    k = T ** (1.0 / gamma) / N
    points = (np.arange(N + 1) * k) ** gamma
    points[0] = 0.0
    points[N] = T
    if np.any(np.diff(points) <= 0.0):
        raise ValueError("mesh points are not strictly increasing")
    points.setflags(write=False)
    return TimeMesh(points=points, gamma=gamma, T=T, N=N)


@dataclass(frozen=True)
class MeshBoundsReport:
    """Per-slab outcome of the graded-mesh inequalities, for n = 2..N."""

    indices: np.ndarray
    growth_ok: np.ndarray  # t_n <= 2**gamma * t_{n-1}
    lower_ok: np.ndarray  # gamma/2**(gamma-1) * k * t_n**(1-1/gamma) <= k_n
    upper_ok: np.ndarray  # k_n <= gamma * k * t_n**(1-1/gamma)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.growth_ok.all() and self.lower_ok.all() and self.upper_ok.all())


def check_mesh_bounds(mesh: TimeMesh, slack: float = 1e-12) -> MeshBoundsReport:
    """Validate the two-sided step bounds and the knot growth bound.

    The inequalities are exact statements for power-law meshes; ``slack``
    absorbs roundoff (relative, applied to each comparison).
    """
    g = mesh.gamma
    k = mesh.k
    t = mesh.points
    n = np.arange(2, mesh.N + 1)
    if n.size == 0:
        empty = np.empty(0, dtype=bool)
        return MeshBoundsReport(n, empty, empty, empty)
    kn = t[n] - t[n - 1]
    ref = k * t[n] ** (1.0 - 1.0 / g)
    growth_ok = t[n] <= (2.0**g) * t[n - 1] * (1.0 + slack)
    lower_ok = (g / 2.0 ** (g - 1.0)) * ref <= kn * (1.0 + slack)
    upper_ok = kn <= g * ref * (1.0 + slack)
    failures = [
        int(idx)
        for idx, gok, lok, uok in zip(n, growth_ok, lower_ok, upper_ok)
        if not (gok and lok and uok)
    ]
    return MeshBoundsReport(n, growth_ok, lower_ok, upper_ok, failures)
