"""Exact evaluation of the weakly singular memory kernel and its couplings.

The fractional time operator applied to a piecewise-polynomial-in-time
function splits, slab by slab, into coupling blocks between a source slab
(carrying the trial derivative) and a target slab (carrying the test
function).  On the diagonal the inner integral is weakly singular and is
reduced in closed form through the monomial rule, so no quadrature error
enters the self-coupling.  Between separated slabs the kernel is analytic
and a tensor Gauss-Legendre rule of geometry-adapted order is exact to
machine precision; for adjacent slabs, where the kernel blows up at the
shared knot, the closed-form antiderivative route is used instead.

All functions are pure; the returned blocks and basis objects are treated
as immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre as _legendre
from numpy.polynomial import polynomial as _poly

# Monomial expansions of shifted Legendre polynomials lose accuracy beyond
# this degree; experiments use temporal degrees up to 3.
MAX_TEMPORAL_DEGREE = 6


@dataclass(frozen=True)
class FractionalParams:
    """Fractional order of the memory integral, restricted to (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha}")

    @property
    def c_alpha(self) -> float:
        """cos(alpha*pi/2), the coercivity constant of the memory operator."""
        return math.cos(0.5 * math.pi * self.alpha)


@dataclass(frozen=True)
class Interval:
    """A time slab (left, right) with positive length."""

    left: float
    right: float

    def __post_init__(self) -> None:
        if not self.left < self.right:
            raise ValueError(f"degenerate interval ({self.left}, {self.right})")

    @property
    def length(self) -> float:
        return self.right - self.left


def weight(mu: float, t: float) -> float:
    """Power-law convolution weight t**(mu-1) / Gamma(mu)."""
    if mu <= 0.0:
        raise ValueError(f"weight index must be positive, got mu={mu}")
    if t <= 0.0:
        raise ValueError(f"weight is undefined for t <= 0, got t={t}")
    return t ** (mu - 1.0) / math.gamma(mu)


def _weight0(mu: float, t: float) -> float:
    # weight extended by its limit 0 at t=0; only valid for mu > 1
    if t == 0.0:
        return 0.0
    return t ** (mu - 1.0) / math.gamma(mu)


def frac_integral_monomial(alpha: float, p: float, t: float) -> float:
    """Fractional integral of order ``alpha`` of s**p, evaluated at t.

    Closed form Gamma(p+1)/Gamma(p+1+alpha) * t**(p+alpha).  Orders up to 2
    are accepted so that semigroup compositions of two orders in (0, 1]
    stay in range.
    """
    if p <= -1.0:
        raise ValueError(f"monomial exponent must exceed -1, got p={p}")
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"integration order must lie in (0, 2], got {alpha}")
    if t <= 0.0:
        raise ValueError(f"evaluation point must be positive, got t={t}")
    return math.gamma(p + 1.0) / math.gamma(p + 1.0 + alpha) * t ** (p + alpha)


@lru_cache(maxsize=None)
def _shifted_legendre(n: int) -> tuple[float, ...]:
    # coefficients of the shifted Legendre polynomial on [0, 1], low to high
    return tuple(
        (-1.0) ** (n + k) * math.comb(n, k) * math.comb(n + k, k)
        for k in range(n + 1)
    )


def shifted_legendre_coeffs(n: int) -> np.ndarray:
    """Monomial coefficients (low to high) of the degree-n shifted Legendre polynomial."""
    return np.array(_shifted_legendre(n))


class TemporalBasis:
    """Trial and test polynomials of one time slab on the reference interval [0, 1].

    Trial functions: index 0 is the constant 1; index a >= 1 is the shifted
    Legendre polynomial of degree a minus its value at 0, so every
    non-constant trial function vanishes at the left endpoint and the
    constant coefficient alone carries the value handed over from the
    previous slab.  Test functions are the shifted Legendre polynomials of
    degree < m.  Since the memory blocks only see trial *derivatives*, they
    coincide with the blocks of a plain shifted-Legendre trial basis.
    """

    def __init__(self, m: int):
        if not 1 <= m <= MAX_TEMPORAL_DEGREE:
            raise ValueError(
                f"temporal degree must lie in [1, {MAX_TEMPORAL_DEGREE}], got {m}"
            )
        self.m = m
        trial = np.zeros((m + 1, m + 1))
        trial[0, 0] = 1.0
        for a in range(1, m + 1):
            trial[a, : a + 1] = _shifted_legendre(a)
            trial[a, 0] = 0.0  # subtract the value at 0, which is (-1)**a
        self.trial_coeffs = trial
        deriv = np.zeros((m + 1, m))
        for a in range(1, m + 1):
            der = _poly.polyder(trial[a])
            deriv[a, : der.size] = der
        self.trial_deriv_coeffs = deriv
        test = np.zeros((m, m))
        for b in range(m):
            test[b, : b + 1] = _shifted_legendre(b)
        self.test_coeffs = test
        self.trial_end_values = self.trial_values(1.0)

    def trial_values(self, tau):
        """Values of all m+1 trial functions; shape (m+1,) + shape(tau)."""
        return _poly.polyval(tau, self.trial_coeffs.T)

    def trial_derivs(self, tau):
        """Reference derivatives of the trial functions; shape (m+1,) + shape(tau)."""
        return _poly.polyval(tau, self.trial_deriv_coeffs.T)

    def test_values(self, tau):
        """Values of all m test functions; shape (m,) + shape(tau)."""
        return _poly.polyval(tau, self.test_coeffs.T)

    def gram(self) -> np.ndarray:
        """Reference Gram block g[b][a] = int_0^1 phi_a psi_b dtau."""
        g = np.empty((self.m, self.m + 1))
        for b in range(self.m):
            for a in range(self.m + 1):
                g[b, a] = _poly_inner_01(self.test_coeffs[b], self.trial_coeffs[a])
        return g

    def deriv_in_test_basis(self) -> np.ndarray:
        """Expansion beta[a][b] of each trial derivative in the test basis."""
        beta = np.empty((self.m + 1, self.m))
        for a in range(self.m + 1):
            for b in range(self.m):
                norm = 2.0 * b + 1.0
                beta[a, b] = norm * _poly_inner_01(
                    self.trial_deriv_coeffs[a], self.test_coeffs[b]
                )
        return beta


def _poly_inner_01(c1: np.ndarray, c2: np.ndarray) -> float:
    """Exact integral over [0, 1] of the product of two coefficient polynomials."""
    total = 0.0
    for i, a in enumerate(c1):
        if a == 0.0:
            continue
        for j, b in enumerate(c2):
            if b == 0.0:
                continue
            total += a * b / (i + j + 1.0)
    return total


@dataclass(frozen=True)
class HistoryBlock:
    """Memory coupling block between a source and a target slab.

    ``entries[b][a]`` is the double integral over the target slab (test
    function b) and the source slab (physical derivative of trial function
    a) against the singular convolution weight.  The column of the constant
    trial function is identically zero.
    """

    source: Interval
    target: Interval
    entries: np.ndarray

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if n not in _GAUSS_CACHE:
        x, w = _legendre.leggauss(n)
        _GAUSS_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GAUSS_CACHE[n]


@lru_cache(maxsize=None)
def _local_reference_entries_cached(alpha: float, m: int) -> np.ndarray:
    basis = TemporalBasis(m)
    d = basis.trial_deriv_coeffs  # (m+1, m)
    e = basis.test_coeffs  # (m, m)
    p = np.arange(m, dtype=float)
    gam = np.array([math.gamma(k + 1.0) / math.gamma(k + 1.0 + alpha) for k in range(m)])
    denom = 1.0 / (p[:, None] + np.arange(m)[None, :] + alpha + 1.0)  # (p, q)
    entries = np.einsum("bq,ap,p,pq->ba", e, d, gam, denom)
    entries.setflags(write=False)
    return entries


def history_block_local(
    params: FractionalParams,
    slab: Interval,
    m: int,
    basis: TemporalBasis | None = None,
) -> HistoryBlock:
    """Self-coupling block of one slab, with the weak singularity integrated exactly.

    Every entry reduces through the monomial rule to ``k**alpha`` times a
    rational expression in alpha and the polynomial degrees, so the block
    scales exactly like ``k**alpha`` under slab dilation.
    """
    if basis is not None and basis.m != m:
        raise ValueError("basis degree does not match m")
    entries = slab.length**params.alpha * _local_reference_entries_cached(params.alpha, m)
    return HistoryBlock(source=slab, target=slab, entries=entries)


def _power_difference(c: float, delta: float, k: float) -> float:
    """(delta+k)**c - delta**c without subtractive cancellation (c > 0)."""
    if delta == 0.0:
        return k**c
    return (delta + k) ** c * -math.expm1(c * math.log1p(-k / (delta + k)))


def _test_moments(basis: TemporalBasis, mu: float, delta: float, k: float) -> np.ndarray:
    """Exact integral over the target slab of each test function times
    weight(mu, t - c), where delta = target.left - c >= 0."""
    qmax = basis.m - 1
    J = np.empty(qmax + 1)
    for q in range(qmax + 1):
        total = 0.0
        for l in range(q + 1):
            c = math.comb(q, l) * (-delta) ** (q - l)
            if c == 0.0:
                continue
            g = math.gamma(mu + l) / math.gamma(mu)
            total += c * g * _power_difference(mu + l, delta, k) / math.gamma(mu + l + 1.0)
        J[q] = total / k**q
    return basis.test_coeffs @ J


def _disjoint_closed(alpha: float, source: Interval, target: Interval, basis: TemporalBasis) -> np.ndarray:
    """Closed-form disjoint block via antiderivatives of the weight.

    Exact in real arithmetic for any disjoint pair; numerically intended
    for adjacent or nearly adjacent pairs, where the binomial reductions
    stay well conditioned.
    """
    m = basis.m
    kj = source.length
    kn = target.length
    moment_cache: dict[tuple[float, float], np.ndarray] = {}

    def moments(mu: float, delta: float) -> np.ndarray:
        key = (mu, delta)
        if key not in moment_cache:
            moment_cache[key] = _test_moments(basis, mu, delta, kn)
        return moment_cache[key]

    gap_right = target.left - source.right
    gap_left = target.left - source.left
    inner = np.zeros((m, m))  # [monomial degree p, test index b]
    for p in range(m):
        fact = float(math.factorial(p))
        v = fact * (moments(alpha + p + 1.0, gap_left) - moments(alpha + p + 1.0, gap_right))
        for i in range(p):
            v = v - (fact / math.factorial(p - i)) * kj ** (p - i) * moments(
                alpha + 1.0 + i, gap_right
            )
        inner[p] = v
    scale = kj ** -(np.arange(m) + 1.0)
    return np.einsum("ap,p,pb->ba", basis.trial_deriv_coeffs, scale, inner)


def _disjoint_series(alpha: float, source: Interval, target: Interval, basis: TemporalBasis) -> np.ndarray:
    """Closed-form disjoint block as a convergent binomial double series.

    Expanding the kernel around the far ends of both slabs gives series with
    positive coefficient recurrences, so there is no subtractive
    cancellation; the truncation level follows the geometric rates
    kj/(gap+kj) and kn/(gap+kj+kn).  Complements the antiderivative route,
    which is exact but ill-conditioned for well separated pairs.
    """
    m = basis.m
    kj = source.length
    kn = target.length
    big = target.right - source.left  # gap + kj + kn
    z_outer = kn / big
    # joint truncation: the bivariate terms are bounded by C(i+j, j) x**i y**j
    # with x + y = (kj + kn)/big < 1, so the diagonal rate governs the tail
    rate = (kj + kn) / big
    if rate >= 0.999:
        raise ValueError("slabs too close for the series form of the block")
    ni = nj = min(900, int(math.ceil(44.0 / -math.log(rate))) + 8)
    i_idx = np.arange(ni)
    j_idx = np.arange(nj)
    # inner expansion coefficients of (1 - z*sigma)**(alpha-1), all positive
    ci = np.empty(ni)
    ci[0] = 1.0
    for i in range(1, ni):
        ci[i] = ci[i - 1] * (i - alpha) / i
    # trial-derivative moments against sigma**i
    P = np.zeros((m + 1, ni))
    for a in range(m + 1):
        for p, d in enumerate(basis.trial_deriv_coeffs[a]):
            if d != 0.0:
                P[a] += d / (i_idx + p + 1.0)
    # outer expansion of (1 - z'*rho)**(alpha-1-i), coefficients G[i, j] >= 0
    G = np.empty((ni, nj))
    G[:, 0] = 1.0
    for j in range(1, nj):
        G[:, j] = G[:, j - 1] * (j - alpha + i_idx) / j
    # test moments against (1-rho)**q rho**j via Beta-function recurrences
    R = np.zeros((m, nj))
    for b in range(m):
        for q, e in enumerate(basis.test_coeffs[b]):
            if e == 0.0:
                continue
            beta_qj = np.empty(nj)
            beta_qj[0] = 1.0 / (q + 1.0)
            for j in range(1, nj):
                beta_qj[j] = beta_qj[j - 1] * j / (q + j + 1.0)
            R[b] += e * beta_qj
    weights_i = ci * (kj / big) ** i_idx
    weights_j = z_outer**j_idx
    core = np.einsum("i,j,ij,ai,bj->ba", weights_i, weights_j, G, P, R)
    return kn * big ** (alpha - 1.0) / math.gamma(alpha) * core


def _disjoint_gauss(
    alpha: float,
    source: Interval,
    target: Interval,
    basis: TemporalBasis,
    n: int,
) -> np.ndarray:
    """Tensor Gauss-Legendre evaluation of a disjoint block."""
    x, w = _gauss01(n)
    t = target.left + target.length * x
    s = source.left + source.length * x
    kernel = (t[:, None] - s[None, :]) ** (alpha - 1.0) / math.gamma(alpha)
    psi = basis.test_values(x) * w
    phi = basis.trial_derivs(x) * w
    return target.length * np.einsum("bl,li,ai->ba", psi, kernel, phi)


def _auto_gauss_points(gap: float, scale: float, m: int) -> int:
    """Points needed for the tensor rule to be exact to machine precision,
    from the distance of the kernel singularity to the integration domain."""
    x0 = 1.0 + 2.0 * gap / scale
    rho = x0 + math.sqrt(x0 * x0 - 1.0)
    n = int(math.ceil(23.0 / math.log(rho))) + 2 + m // 2
    return int(min(max(n, 12), 64))


def history_block_disjoint(
    params: FractionalParams,
    source: Interval,
    target: Interval,
    m: int,
    basis: TemporalBasis | None = None,
    method: str = "auto",
    n_quad: int | None = None,
) -> HistoryBlock:
    """Coupling block between a strictly earlier source slab and a target slab.

    Parameters
    ----------
    method:
        ``"auto"`` picks the closed form when the slabs touch or nearly
        touch (where Gauss rules converge slowly) and the tensor
        Gauss-Legendre rule otherwise; ``"closed"`` and ``"gauss"`` force
        one route.  Both routes agree to near machine precision on
        separated pairs; the rule of thumb assumes nondecreasing slab
        lengths, as produced by graded meshes.
    """
    if source.right > target.left:
        raise ValueError(
            f"source slab must end before the target slab starts "
            f"(source.right={source.right} > target.left={target.left})"
        )
    if basis is None:
        basis = TemporalBasis(m)
    elif basis.m != m:
        raise ValueError("basis degree does not match m")
    gap = target.left - source.right
    scale = max(source.length, target.length)
    if method == "auto":
        method = "closed" if gap < scale else "gauss"
    if method == "closed":
        # antiderivative reduction near adjacency, its convergent series
        # form once the separation makes the reduction ill-conditioned
        if gap >= 0.3 * scale:
            entries = _disjoint_series(params.alpha, source, target, basis)
        else:
            entries = _disjoint_closed(params.alpha, source, target, basis)
    elif method == "gauss":
        n = n_quad
        if n is None:
            n = _auto_gauss_points(gap, scale, m) if gap > 0.0 else 48
        entries = _disjoint_gauss(params.alpha, source, target, basis, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    return HistoryBlock(source=source, target=target, entries=entries)


def history_blocks_for_slab(
    params: FractionalParams,
    points: np.ndarray,
    n: int,
    basis: TemporalBasis,
) -> np.ndarray:
    """All blocks coupling target slab ``n`` (1-based) to slabs 1..n-1.

    Returns an array of shape (n-1, m, m+1).  The adjacent pair uses the
    closed form; the remaining pairs are evaluated with one vectorized
    tensor Gauss rule whose order is adapted to the worst separation.
    """
    m = basis.m
    alpha = params.alpha
    kn = float(points[n] - points[n - 1])
    out = np.zeros((n - 1, m, m + 1))
    if n >= 2:
        src = Interval(float(points[n - 2]), float(points[n - 1]))
        tgt = Interval(float(points[n - 1]), float(points[n]))
        out[n - 2] = _disjoint_closed(alpha, src, tgt, basis)
    if n >= 3:
        j0 = np.arange(n - 2)
        kj = points[j0 + 1] - points[j0]
        gaps = points[n - 1] - points[j0 + 1]
        ratios = gaps / np.maximum(kj, kn)
        nq = _auto_gauss_points(float(ratios.min()), 1.0, m)
        x, w = _gauss01(nq)
        t = points[n - 1] + kn * x
        s = points[j0][:, None] + kj[:, None] * x[None, :]
        kernel = (t[None, :, None] - s[:, None, :]) ** (alpha - 1.0) / math.gamma(alpha)
        psi = basis.test_values(x) * w
        phi = basis.trial_derivs(x) * w
        out[: n - 2] = kn * np.einsum("bl,jli,ai->jba", psi, kernel, phi)
    return out


def _full_slab_caputo_weights(
    alpha: float, t: float, left: float, right: float, basis: TemporalBasis
) -> np.ndarray:
    """Weights w_a with int over the slab of weight(alpha, t-s) phi_a'(s) ds
    = sum_a w_a, for an evaluation time t at or beyond the slab end."""
    kj = right - left
    w = t - left
    if t - right >= kj:
        x, wq = _gauss01(24)
        kern = (w - kj * x) ** (alpha - 1.0) / math.gamma(alpha)
        return basis.trial_derivs(x) @ (wq * kern)
    m = basis.m
    ip = np.empty(m)
    for p in range(m):
        fact = float(math.factorial(p))
        val = fact * (_weight0(alpha + p + 1.0, w) - _weight0(alpha + p + 1.0, w - kj))
        for i in range(p):
            val -= (fact / math.factorial(p - i)) * kj ** (p - i) * _weight0(
                alpha + 1.0 + i, w - kj
            )
        ip[p] = val
    scale = kj ** -(np.arange(m) + 1.0)
    return basis.trial_deriv_coeffs @ (scale * ip)


def caputo_apply(
    params: FractionalParams,
    points: Sequence[float] | np.ndarray,
    coeffs: np.ndarray,
    basis: TemporalBasis,
    t: float,
) -> np.ndarray:
    """Fractional time derivative of a slab-polynomial function at time t.

    ``coeffs`` holds per-slab trial coefficients, shape (n_slabs, m+1) for a
    scalar function or (n_slabs, m+1, dof) for coefficient vectors.  The sum
    of closed-form fractional integrals of each slab's derivative polynomial
    is evaluated; intended for diagnostics and verification, not stepping.
    """
    points = np.asarray(points, dtype=float)
    if t < points[0] or t > points[-1]:
        raise ValueError(f"t={t} outside the solved range [{points[0]}, {points[-1]}]")
    out_shape = coeffs.shape[2:]
    if t == points[0]:
        return np.zeros(out_shape)
    idx = int(np.searchsorted(points, t, side="left")) - 1
    weights = np.zeros((idx + 1, basis.m + 1))
    for j in range(idx):
        weights[j] = _full_slab_caputo_weights(
            params.alpha, t, float(points[j]), float(points[j + 1]), basis
        )
    # partial (current) slab: monomial rule on [left, t]
    kn = float(points[idx + 1] - points[idx])
    u = t - float(points[idx])
    m = basis.m
    p = np.arange(m, dtype=float)
    gam = np.array([math.gamma(k + 1.0) / math.gamma(k + 1.0 + params.alpha) for k in range(m)])
    partial = gam * u ** (p + params.alpha) / kn ** (p + 1.0)
    weights[idx] = basis.trial_deriv_coeffs @ partial
    return np.tensordot(weights, coeffs[: idx + 1], axes=([0, 1], [0, 1]))


def memory_bilinear_matrix(
    params: FractionalParams,
    points: Sequence[float] | np.ndarray,
    basis: TemporalBasis,
) -> np.ndarray:
    """Assembled block-lower-triangular matrix of all memory couplings.

    Rows are (target slab, test index), columns (source slab, trial index).
    Contracting with test-basis coefficients of v' on the left and trial
    coefficients of v on the right gives the quadratic form of the memory
    operator, which is nonnegative for any v with v(0) = 0.
    """
    points = np.asarray(points, dtype=float)
    n_slabs = points.size - 1
    m = basis.m
    out = np.zeros((n_slabs * m, n_slabs * (m + 1)))
    for i in range(1, n_slabs + 1):
        tgt = Interval(float(points[i - 1]), float(points[i]))
        blocks = history_blocks_for_slab(params, points, i, basis) if i > 1 else None
        for j in range(1, i + 1):
            if j == i:
                entries = history_block_local(params, tgt, m, basis).entries
            else:
                entries = blocks[j - 1]
            out[(i - 1) * m : i * m, (j - 1) * (m + 1) : j * (m + 1)] = entries
    return out
