"""Built-in manufactured solutions with closed-form forcing.

Both benchmark cases share the spatial profile sin(pi x) and a power-law
time profile, so the forcing, its fractional derivative, and the energy
integrals of the stability check are all available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..kernel import FractionalParams
from ..stepper import ForcingTerm, PowerForcing, ProblemSpec

PI_SQUARED = math.pi**2


def sine_mode(x):
    """The single spatial mode sin(pi x) used by the manufactured cases."""
    return np.sin(math.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PowerSum:
    """A finite sum of real powers, sum_i coefs[i] * t**exponents[i]."""

    coefs: tuple[float, ...]
    exponents: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coefs) != len(self.exponents):
            raise ValueError("coefficient and exponent lists differ in length")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for c, p in zip(self.coefs, self.exponents):
            total = total + c * t**p
        return total

    def derivative(self) -> "PowerSum":
        coefs = tuple(c * p for c, p in zip(self.coefs, self.exponents) if p != 0.0)
        exps = tuple(p - 1.0 for p in self.exponents if p != 0.0)
        return PowerSum(coefs, exps)

    def antiderivative(self) -> "PowerSum":
        for p in self.exponents:
            if p <= -1.0:
                raise ValueError(f"exponent {p} is not integrable at 0")
        return PowerSum(
            tuple(c / (p + 1.0) for c, p in zip(self.coefs, self.exponents)),
            tuple(p + 1.0 for p in self.exponents),
        )

    def product(self, other: "PowerSum") -> "PowerSum":
        coefs = []
        exps = []
        for c1, p1 in zip(self.coefs, self.exponents):
            for c2, p2 in zip(other.coefs, other.exponents):
                coefs.append(c1 * c2)
                exps.append(p1 + p2)
        return PowerSum(tuple(coefs), tuple(exps))

    def fractional_integral(self, alpha: float) -> "PowerSum":
        """Termwise monomial rule Gamma(p+1)/Gamma(p+1+alpha) t**(p+alpha)."""
        coefs = tuple(
            c * math.gamma(p + 1.0) / math.gamma(p + 1.0 + alpha)
            for c, p in zip(self.coefs, self.exponents)
        )
        return PowerSum(coefs, tuple(p + alpha for p in self.exponents))

    def rl_derivative(self, alpha: float) -> "PowerSum":
        """Termwise Riemann-Liouville derivative of order alpha in (0, 1)."""
        for p in self.exponents:
            if p - alpha <= -1.0:
                raise ValueError(f"exponent {p} leaves the valid range under the derivative")
        coefs = tuple(
            c * math.gamma(p + 1.0) / math.gamma(p + 1.0 - alpha)
            for c, p in zip(self.coefs, self.exponents)
        )
        return PowerSum(coefs, tuple(p - alpha for p in self.exponents))


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution time_profile(t) * sin(pi x) with closed-form forcing.

    ``time_smoothness`` is the exponent sigma with |d^q u/dt^q| of order
    t**(sigma - q) near t = 0, and ``laplacian_smoothness`` the analogous
    exponent for the spatial Laplacian of u; together they set the mesh
    grading thresholds of the convergence studies.
    """

    label: str
    params: FractionalParams
    time_profile: PowerSum
    forcing_time: PowerSum
    time_smoothness: float
    laplacian_smoothness: float

    def exact(self, x, t):
        return self.time_profile(t) * sine_mode(x)

    def u0(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def forcing(self) -> PowerForcing:
        terms = tuple(
            ForcingTerm(coef=c, exponent=p, profile=sine_mode)
            for c, p in zip(self.forcing_time.coefs, self.forcing_time.exponents)
        )
        return PowerForcing(terms)

    def forcing_rl_time(self) -> PowerSum:
        return self.forcing_time.rl_derivative(self.params.alpha)

    def problem(self) -> ProblemSpec:
        rl = self.forcing_rl_time()
        # <f, RL f> integrates the sin^2 profile to 1/2
        product_primitive = self.forcing_time.product(rl).antiderivative()

        def rl_forcing(x, t):
            return rl(t) * sine_mode(x)

        def product_integral(t: float) -> float:
            return 0.5 * float(product_primitive(t))

        return ProblemSpec(
            params=self.params,
            T=1.0,
            forcing=self.forcing(),
            u0=None,
            exact=self.exact,
            forcing_rl_derivative=rl_forcing,
            forcing_rl_product_integral=product_integral,
        )

    def optimal_grading(self, m: int) -> float:
        """Grading exponent beyond which the observed temporal rate saturates at m+1."""
        return (m + 1.0) / self.time_smoothness

    def guaranteed_grading(self, m: int) -> float:
        """Grading exponent required by the a priori bound of rate m + alpha/2."""
        alpha = self.params.alpha
        sigma = self.time_smoothness
        delta = self.laplacian_smoothness
        return max(
            (m + 1.0) / (delta - 1.0),
            (2.0 * m + 1.0 + alpha) / (2.0 * sigma + alpha - 1.0),
        )


def example1(alpha: float) -> ManufacturedCase:
    """Smoother benchmark: exact solution t**(alpha+1) sin(pi x)."""
    params = FractionalParams(alpha)
    caputo_coef = math.gamma(alpha + 2.0) / math.gamma(2.0 * alpha + 1.0)
    return ManufacturedCase(
        label="example1",
        params=params,
        time_profile=PowerSum((1.0,), (alpha + 1.0,)),
        forcing_time=PowerSum((caputo_coef, PI_SQUARED), (2.0 * alpha, alpha + 1.0)),
        time_smoothness=alpha + 1.0,
        laplacian_smoothness=alpha + 2.0,
    )


def example2(alpha: float) -> ManufacturedCase:
    """Rougher benchmark: exact solution t**(1-alpha) sin(pi x).

    The memory term of the exact solution is constant in time, by the
    monomial rule with exponent -alpha.
    """
    params = FractionalParams(alpha)
    return ManufacturedCase(
        label="example2",
        params=params,
        time_profile=PowerSum((1.0,), (1.0 - alpha,)),
        forcing_time=PowerSum((math.gamma(2.0 - alpha), PI_SQUARED), (0.0, 1.0 - alpha)),
        time_smoothness=1.0 - alpha,
        laplacian_smoothness=2.0 - alpha,
    )


def get_example(number: int, alpha: float) -> ManufacturedCase:
    if number == 1:
        return example1(alpha)
    if number == 2:
        return example2(alpha)
    raise ValueError(f"unknown example {number}; available: 1, 2")
