"""Kernel-level tests: fractional weight, monomial rule, memory blocks.

Expected values are frozen from independent oracles: mpmath for gamma
values, scipy adaptive quadrature with algebraic endpoint weights for the
singular integrals, and tensor quadrature for the smooth double integrals.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from fracdpg import (
    FractionalParams,
    Interval,
    TemporalBasis,
    caputo_apply,
    frac_integral_monomial,
    history_block_disjoint,
    history_block_local,
    history_blocks_for_slab,
    memory_bilinear_matrix,
    weight,
)
from fracdpg.kernel import shifted_legendre_coeffs

INV_SQRT_PI = 0.5641895835477563  # 1/sqrt(pi)


class TestFractionalParams:
    def test_c_alpha_matches_cosine(self):
        for alpha in (0.1, 0.2, 0.5, 0.7, 0.99):
            params = FractionalParams(alpha)
            assert params.c_alpha == pytest.approx(math.cos(alpha * math.pi / 2), rel=1e-15)
            assert 0.0 < params.c_alpha < 1.0

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 1.5])
    def test_rejects_out_of_range_orders(self, bad):
        with pytest.raises(ValueError):
            FractionalParams(bad)

    def test_interval_rejects_degenerate(self):
        with pytest.raises(ValueError):
            Interval(1.0, 1.0)
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)


class TestGammaBackend:
    """The gamma function behind the weight must be accurate to 1e-13
    relative on (0, 35)."""

    def test_known_values(self):
        assert math.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
        for n in range(1, 15):
            assert math.gamma(n) == pytest.approx(math.factorial(n - 1), rel=1e-14)

    def test_against_mpmath_on_range(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 30
        for x in np.linspace(0.05, 34.95, 197):
            ref = float(mpmath.gamma(x))
            assert math.gamma(x) == pytest.approx(ref, rel=1e-13)


class TestWeight:
    def test_index_one_is_constant(self):
        for t in (0.1, 1.0, 7.5):
            assert weight(1.0, t) == pytest.approx(1.0, rel=1e-15)

    def test_half_index_at_one(self):
        assert weight(0.5, 1.0) == pytest.approx(INV_SQRT_PI, rel=1e-14)

    def test_index_two_is_identity(self):
        assert weight(2.0, 3.0) == pytest.approx(3.0, rel=1e-15)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            weight(0.5, 0.0)
        with pytest.raises(ValueError):
            weight(0.5, -1.0)
        with pytest.raises(ValueError):
            weight(-0.2, 1.0)
        with pytest.raises(ValueError):
            weight(0.0, 1.0)


def quad_fractional_integral(alpha, p, t):
    """Adaptive-quadrature oracle for the fractional integral of s**p."""
    val, err = integrate.quad(
        lambda s: 1.0 / math.gamma(alpha),
        0.0,
        t,
        weight="alg",
        wvar=(p, alpha - 1.0),
        epsabs=1e-14,
        epsrel=1e-13,
    )
    assert err < 1e-10
    return val


class TestFracIntegralMonomial:
    def test_constant_half_order(self):
        # Gamma(3/2) = sqrt(pi)/2
        expect = 2.0 / math.sqrt(math.pi)
        assert frac_integral_monomial(0.5, 0.0, 1.0) == pytest.approx(expect, rel=1e-14)
        assert frac_integral_monomial(0.5, 0.0, 1.0) == pytest.approx(
            quad_fractional_integral(0.5, 0.0, 1.0), rel=1e-12
        )

    def test_order_one_of_constant_is_t(self):
        for t in (0.2, 1.0, 3.5):
            assert frac_integral_monomial(1.0, 0.0, t) == pytest.approx(t, rel=1e-15)

    def test_singular_exponent_pair(self):
        # exponent -0.3 against order 0.3 collapses to a plain gamma value
        expect = math.gamma(0.7)
        got = frac_integral_monomial(0.3, -0.3, 0.7)
        assert got == pytest.approx(expect, rel=1e-14)
        assert got == pytest.approx(quad_fractional_integral(0.3, -0.3, 0.7), rel=1e-11)

    def test_against_quadrature_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            alpha = float(rng.uniform(0.1, 1.0))
            p = float(rng.uniform(-0.6, 3.0))
            t = float(rng.uniform(0.1, 2.0))
            assert frac_integral_monomial(alpha, p, t) == pytest.approx(
                quad_fractional_integral(alpha, p, t), rel=1e-10
            )

    def test_semigroup_property(self):
        worst = 0.0
        for alpha in (0.3, 0.5, 0.7):
            for beta in (0.3, 0.5, 0.7):
                for p in (0.0, 1.0, 2.0, 3.0):
                    for t in (0.3, 1.0, 1.6):
                        inner_gain = math.gamma(p + 1.0) / math.gamma(p + 1.0 + beta)
                        composed = inner_gain * frac_integral_monomial(alpha, p + beta, t)
                        direct = frac_integral_monomial(alpha + beta, p, t)
                        worst = max(worst, abs(composed - direct) / abs(direct))
        assert worst <= 1e-12

    def test_classical_limit_is_exact_integration(self):
        # order 1 reproduces the antiderivative of polynomials
        for p in (0.0, 1.0, 2.0, 3.0):
            for t in (0.5, 1.0, 2.0):
                assert frac_integral_monomial(1.0, p, t) == pytest.approx(
                    t ** (p + 1.0) / (p + 1.0), rel=1e-12
                )

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            frac_integral_monomial(0.5, -1.0, 1.0)
        with pytest.raises(ValueError):
            frac_integral_monomial(2.5, 0.0, 1.0)
        with pytest.raises(ValueError):
            frac_integral_monomial(0.5, 0.0, 0.0)


class TestTemporalBasis:
    def test_shifted_legendre_low_orders(self):
        np.testing.assert_allclose(shifted_legendre_coeffs(0), [1.0])
        np.testing.assert_allclose(shifted_legendre_coeffs(1), [-1.0, 2.0])
        np.testing.assert_allclose(shifted_legendre_coeffs(2), [1.0, -6.0, 6.0])

    def test_trial_functions_pin_left_value(self):
        for m in (1, 2, 3, 6):
            basis = TemporalBasis(m)
            vals0 = basis.trial_values(0.0)
            assert vals0[0] == 1.0
            np.testing.assert_array_equal(vals0[1:], np.zeros(m))

    def test_test_functions_are_orthogonal(self):
        basis = TemporalBasis(4)
        x = np.linspace(0, 1, 2001)
        vals = basis.test_values(x)
        overlap = np.trapezoid(vals[1] * vals[2], x)
        assert abs(overlap) < 1e-6

    def test_gram_block_structure(self):
        basis = TemporalBasis(3)
        g = basis.gram()
        # constant trial against constant test integrates to 1
        assert g[0, 0] == pytest.approx(1.0)
        # orthogonality kills the constant-trial rows below b=0
        np.testing.assert_allclose(g[1:, 0], 0.0, atol=1e-15)

    def test_derivative_expansion_in_test_basis(self):
        basis = TemporalBasis(3)
        beta = basis.deriv_in_test_basis()
        x = np.linspace(0, 1, 11)
        ders = basis.trial_derivs(x)
        recon = np.einsum("ab,bx->ax", beta, basis.test_values(x))
        np.testing.assert_allclose(recon, ders, atol=1e-12)

    def test_degree_bounds(self):
        with pytest.raises(ValueError):
            TemporalBasis(0)
        with pytest.raises(ValueError):
            TemporalBasis(7)


class TestHistoryBlockLocal:
    def test_reference_slab_linear_trial(self):
        # m=1: trial derivative is 2 on [0,1], test is 1, so the entry is
        # twice k**alpha / Gamma(alpha+2)
        alpha = 0.5
        k = 0.25
        block = history_block_local(FractionalParams(alpha), Interval(0.0, k), 1)
        expect = 2.0 * k**alpha / math.gamma(alpha + 2.0)
        assert block.entries.shape == (1, 2)
        assert block.entries[0, 0] == 0.0
        assert block.entries[0, 1] == pytest.approx(expect, rel=1e-14)
        assert block.entries[0, 1] == pytest.approx(2.0 * 0.37612638903183754, rel=1e-11)

    def test_scaling_law(self):
        params = FractionalParams(0.35)
        for m in (1, 2, 3):
            ref = history_block_local(params, Interval(0.0, 1.0), m).entries
            for c in (0.1, 0.5, 2.0):
                scaled = history_block_local(params, Interval(3.0, 3.0 + c), m).entries
                np.testing.assert_allclose(scaled, c**params.alpha * ref, rtol=1e-13)

    def test_constant_trial_column_zero(self):
        for m in (1, 2, 3):
            block = history_block_local(FractionalParams(0.6), Interval(0.0, 0.7), m)
            np.testing.assert_array_equal(block.entries[:, 0], np.zeros(m))

    def test_self_block_positivity(self):
        # quadratic form of the self coupling on polynomials vanishing at
        # the left endpoint is nonnegative
        rng = np.random.default_rng(11)
        for _ in range(300):
            m = int(rng.integers(1, 4))
            alpha = float(rng.uniform(0.05, 0.95))
            k = float(rng.uniform(0.01, 2.0))
            basis = TemporalBasis(m)
            block = history_block_local(FractionalParams(alpha), Interval(0.0, k), m, basis)
            c = np.zeros(m + 1)
            c[1:] = rng.standard_normal(m)
            w = basis.deriv_in_test_basis().T @ c / k
            q = float(w @ block.entries @ c)
            assert q >= -1e-10

    def test_against_quadrature_oracle(self):
        # outer integral by Gauss, inner singular integral by weighted quad
        alpha = 0.4
        m = 2
        basis = TemporalBasis(m)
        slab = Interval(0.2, 0.9)
        k = slab.length
        block = history_block_local(FractionalParams(alpha), slab, m, basis)

        for b in range(m):
            for a in range(1, m + 1):
                def outer(t):
                    tau = (t - slab.left) / k
                    inner, _ = integrate.quad(
                        lambda s: float(
                            basis.trial_derivs((s - slab.left) / k)[a] / k
                        ) / math.gamma(alpha),
                        slab.left,
                        t,
                        weight="alg",
                        wvar=(0.0, alpha - 1.0),
                        epsabs=1e-13,
                        epsrel=1e-12,
                    )
                    return float(basis.test_values(tau)[b]) * inner

                oracle, err = integrate.quad(outer, slab.left, slab.right, limit=200)
                assert block.entries[b, a] == pytest.approx(oracle, rel=1e-9, abs=1e-12)


class TestHistoryBlockDisjoint:
    def test_adjacent_unit_example(self):
        # trial ramp on the first slab tested against 1 on the second slab
        # of a uniform mesh: closed form in terms of the next weight index
        alpha = 0.5
        k = 0.25
        params = FractionalParams(alpha)
        block = history_block_disjoint(params, Interval(0.0, k), Interval(k, 2 * k), 1)
        # our degree-1 trial has reference derivative 2, twice the unit ramp
        expect = (2.0 / (k * math.gamma(alpha + 2.0))) * (
            (2 * k) ** (alpha + 1.0) - 2.0 * k ** (alpha + 1.0)
        )
        assert block.entries[0, 1] == pytest.approx(expect, rel=1e-13)
        assert block.entries[0, 1] / 2.0 == pytest.approx(0.311593, rel=1e-5)

    def test_against_dblquad_oracle(self):
        alpha = 0.7
        params = FractionalParams(alpha)
        src, tgt = Interval(0.1, 0.4), Interval(0.6, 1.1)
        m = 2
        basis = TemporalBasis(m)
        block = history_block_disjoint(params, src, tgt, m, basis)
        for b in range(m):
            for a in range(1, m + 1):
                oracle, err = integrate.dblquad(
                    lambda s, t: float(basis.test_values((t - tgt.left) / tgt.length)[b])
                    * (t - s) ** (alpha - 1.0)
                    / math.gamma(alpha)
                    * float(basis.trial_derivs((s - src.left) / src.length)[a])
                    / src.length,
                    tgt.left,
                    tgt.right,
                    src.left,
                    src.right,
                    epsabs=1e-13,
                )
                assert block.entries[b, a] == pytest.approx(oracle, rel=1e-9, abs=1e-13)

    def test_constant_trial_column_zero(self):
        params = FractionalParams(0.3)
        block = history_block_disjoint(params, Interval(0.0, 0.5), Interval(0.75, 1.5), 3)
        np.testing.assert_array_equal(block.entries[:, 0], np.zeros(3))

    def test_closed_and_gauss_routes_agree(self):
        # both evaluation routes agree to 1e-12 relative on random pairs
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(100):
            start = float(rng.uniform(0.0, 1.0))
            k1 = float(rng.uniform(0.05, 0.5))
            k2 = float(rng.uniform(0.05, 0.5))
            gap = float(rng.uniform(0.3, 3.0)) * max(k1, k2)
            m = int(rng.integers(1, 4))
            params = FractionalParams(float(rng.uniform(0.1, 0.9)))
            src = Interval(start, start + k1)
            tgt = Interval(start + k1 + gap, start + k1 + gap + k2)
            closed = history_block_disjoint(params, src, tgt, m, method="closed").entries
            gauss = history_block_disjoint(params, src, tgt, m, method="gauss").entries
            scale = float(np.max(np.abs(closed)))
            worst = max(worst, float(np.max(np.abs(closed - gauss))) / scale)
        assert worst <= 1e-12

    def test_classical_limit_matches_polynomial_integration(self):
        # alpha -> 1: the kernel degenerates to 1 and the block becomes the
        # product of the test integral and the trial increment
        params = FractionalParams(1.0 - 1e-12)
        m = 2
        basis = TemporalBasis(m)
        src, tgt = Interval(0.1, 0.3), Interval(0.5, 0.9)
        block = history_block_disjoint(params, src, tgt, m, basis)
        test_integrals = np.array([tgt.length, 0.0])  # shifted Legendre means
        trial_increment = basis.trial_values(1.0) - basis.trial_values(0.0)
        expect = np.outer(test_integrals, trial_increment)
        np.testing.assert_allclose(block.entries, expect, atol=1e-6)

    def test_rejects_overlap(self):
        params = FractionalParams(0.5)
        with pytest.raises(ValueError):
            history_block_disjoint(params, Interval(0.0, 0.6), Interval(0.5, 1.0), 1)

    def test_bulk_blocks_match_pairwise(self):
        params = FractionalParams(0.45)
        points = np.array([0.0, 0.05, 0.2, 0.45, 0.8, 1.25])
        m = 3
        basis = TemporalBasis(m)
        for n in range(2, 6):
            bulk = history_blocks_for_slab(params, points, n, basis)
            tgt = Interval(points[n - 1], points[n])
            for j in range(1, n):
                src = Interval(points[j - 1], points[j])
                single = history_block_disjoint(params, src, tgt, m, basis).entries
                np.testing.assert_allclose(
                    bulk[j - 1], single, rtol=1e-11, atol=1e-14 * np.max(np.abs(single))
                )


class TestCaputoApply:
    def test_constant_in_time_gives_zero(self):
        params = FractionalParams(0.5)
        basis = TemporalBasis(2)
        points = np.array([0.0, 0.4, 1.0])
        coeffs = np.zeros((2, 3, 4))
        coeffs[:, 0, :] = 3.14  # constant in time
        out = caputo_apply(params, points, coeffs, basis, 0.9)
        np.testing.assert_allclose(out, np.zeros(4), atol=1e-14)

    def test_single_mode_linear_growth(self):
        # u(t) = t * phi has fractional derivative t**alpha/Gamma(1+alpha) phi
        alpha = 0.6
        params = FractionalParams(alpha)
        basis = TemporalBasis(2)
        points = np.array([0.0, 0.3, 1.0])
        phi = np.array([2.0, -1.0, 0.5])
        coeffs = np.zeros((2, 3, 3))
        for j in range(2):
            k = points[j + 1] - points[j]
            coeffs[j, 0] = points[j] * phi
            coeffs[j, 1] = 0.5 * k * phi
        for t in (0.15, 0.3, 0.77, 1.0):
            out = caputo_apply(params, points, coeffs, basis, t)
            expect = t**alpha / math.gamma(1.0 + alpha) * phi
            np.testing.assert_allclose(out, expect, rtol=1e-13)

    def test_piecewise_linear_against_quadrature(self):
        # two slabs with different slopes, evaluated mid-second-slab
        alpha = 0.35
        params = FractionalParams(alpha)
        basis = TemporalBasis(1)
        points = np.array([0.0, 0.4, 1.0])
        slopes = (1.7, -0.9)
        coeffs = np.zeros((2, 2, 1))
        coeffs[0, 0, 0] = 0.0
        coeffs[0, 1, 0] = 0.5 * 0.4 * slopes[0]
        left_val = coeffs[0, 0, 0] + 2.0 * coeffs[0, 1, 0]
        coeffs[1, 0, 0] = left_val
        coeffs[1, 1, 0] = 0.5 * 0.6 * slopes[1]
        t = 0.7
        got = float(caputo_apply(params, points, coeffs, basis, t))
        smooth, _ = integrate.quad(
            lambda s: (t - s) ** (alpha - 1.0) / math.gamma(alpha) * slopes[0], 0.0, 0.4
        )
        singular, _ = integrate.quad(
            lambda s: slopes[1] / math.gamma(alpha),
            0.4,
            t,
            weight="alg",
            wvar=(0.0, alpha - 1.0),
            epsabs=1e-14,
        )
        assert got == pytest.approx(smooth + singular, abs=1e-10)

    def test_rejects_out_of_range(self):
        params = FractionalParams(0.5)
        basis = TemporalBasis(1)
        points = np.array([0.0, 1.0])
        coeffs = np.zeros((1, 2, 1))
        with pytest.raises(ValueError):
            caputo_apply(params, points, coeffs, basis, 1.5)


class TestMemoryCoercivity:
    def test_quadratic_form_nonnegative(self):
        from fracdpg.time_mesh import build_graded

        rng = np.random.default_rng(5)
        worst = np.inf
        for _ in range(40):
            m = int(rng.integers(1, 4))
            n_slabs = int(rng.integers(1, 9))
            gamma = float(rng.uniform(1.0, 4.0))
            alpha = float(rng.uniform(0.05, 0.95))
            mesh = build_graded(gamma, n_slabs, float(rng.uniform(0.5, 2.0)))
            basis = TemporalBasis(m)
            B = memory_bilinear_matrix(FractionalParams(alpha), mesh.points, basis)
            beta = basis.deriv_in_test_basis()
            for _ in range(10):
                c = np.zeros((n_slabs, m + 1))
                carry = 0.0
                for n in range(n_slabs):
                    c[n, 0] = carry
                    c[n, 1:] = rng.standard_normal(m)
                    carry = float(basis.trial_end_values @ c[n])
                w = (beta.T @ c.T).T / mesh.steps[:, None]
                worst = min(worst, float(w.reshape(-1) @ B @ c.reshape(-1)))
        assert worst >= -1e-10
