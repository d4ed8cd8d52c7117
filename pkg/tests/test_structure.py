"""Analytic structures against brute-force quadrature oracles."""

from math import cosh, factorial, pi, sinh, sqrt

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from hilbertcube.config import ConvergenceConfig
from hilbertcube.errors import SeriesDivergence
from hilbertcube.rectangle import unit_cube, wallis_rectangle
from hilbertcube.structure import (AffineSum, COSH_SERIES, CoeffRule,
                                   GEOMETRIC_HALF_SERIES,
                                   GeometricExponents, IDENTITY_SERIES,
                                   INVERSE_SQUARE_COEFF,
                                   InverseSquareExponents, LadderEvaluator,
                                   PowerSeriesRule, ProductSeries,
                                   StructSum, add_structures,
                                   apply_power_series, constant_structure,
                                   product_series_limit, scale_structure,
                                   square_structure, truncated_integral)


def quad_oracle(fn, bounds, order=24):
    """Tensor Gauss-Legendre reference for low-dimensional integrals."""
    x, w = leggauss(order)
    pts, wts = [], []
    for b in bounds:
        pts.append(0.5 * b * (x + 1.0))
        wts.append(0.5 * b * w)
    grids = np.meshgrid(*pts, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for d, wv in enumerate(wts):
        shape = [1] * len(bounds)
        shape[d] = -1
        wgrid = wgrid * wv.reshape(shape)
    coords = np.stack([g.ravel() for g in grids], axis=1)
    return float(np.dot(wgrid.ravel(), fn(coords)))


class TestTruncatedIntegrals:
    def test_affine_sum_matches_quadrature(self):
        w = wallis_rectangle()
        s = AffineSum(0.0, INVERSE_SQUARE_COEFF)
        bounds = [w.upper(i) for i in (1, 2, 3)]
        want = quad_oracle(
            lambda c: c[:, 0] + c[:, 1] / 4 + c[:, 2] / 9, bounds)
        assert truncated_integral(s, w, 3) == pytest.approx(want, rel=1e-13)

    def test_affine_with_constant(self):
        u = unit_cube()
        s = AffineSum(2.0, INVERSE_SQUARE_COEFF)
        want = 2.0 + sum(1.0 / (2 * i * i) for i in (1, 2, 3, 4))
        assert truncated_integral(s, u, 4) == pytest.approx(want, rel=1e-14)

    def test_product_series_matches_quadrature(self):
        u = unit_cube()
        s = ProductSeries(GEOMETRIC_HALF_SERIES, InverseSquareExponents())
        bounds = [1.0, 1.0, 1.0]

        def fn(c):
            prod = c[:, 0] * c[:, 1]**0.25 * c[:, 2]**(1.0 / 9.0)
            return 1.0 / (2.0 - prod)

        want = quad_oracle(fn, bounds, order=48)
        got = truncated_integral(s, u, 3)
        # quadrature converges slowly on the root singularity, hence the
        # loose comparison; the closed form is the trustworthy side
        assert got == pytest.approx(want, rel=2e-4)

    def test_product_series_moments_formula(self):
        # I_n = sum_k c_k prod_{j<=n} j^2/(k + j^2) for the 1/i^2 shape
        u = unit_cube()
        s = ProductSeries(GEOMETRIC_HALF_SERIES, InverseSquareExponents())
        n = 5
        want = sum(
            0.5**(k + 1) * np.prod([j * j / (k + j * j)
                                    for j in range(1, n + 1)])
            for k in range(200))
        assert truncated_integral(s, u, n) == pytest.approx(want, rel=1e-12)

    def test_struct_sum_adds(self):
        u = unit_cube()
        a = AffineSum(0.0, INVERSE_SQUARE_COEFF)
        b = constant_structure(3.0)
        s = add_structures(a, b)
        assert truncated_integral(s, u, 4) == pytest.approx(
            truncated_integral(a, u, 4) + 3.0, rel=1e-14)

    def test_scale(self):
        u = unit_cube()
        a = AffineSum(1.0, INVERSE_SQUARE_COEFF)
        assert truncated_integral(scale_structure(a, -2.0), u, 6) == \
            pytest.approx(-2.0 * truncated_integral(a, u, 6), rel=1e-14)

    def test_series_divergence_guard(self):
        u = unit_cube()
        bad = ProductSeries(PowerSeriesRule(lambda k: 4.0**k, "4^k"),
                            InverseSquareExponents())
        with pytest.raises(SeriesDivergence):
            truncated_integral(bad, u, 2)


class TestLadderEvaluator:
    def test_matches_scratch_values(self):
        w = wallis_rectangle()
        s = StructSum((AffineSum(0.5, INVERSE_SQUARE_COEFF),
                       constant_structure(1.0)))
        lad = LadderEvaluator(s, w)
        for n in (1, 2, 4, 8, 64, 256):
            assert lad.value_at(n) == pytest.approx(
                truncated_integral(s, w, n), rel=1e-12)

    def test_product_series_incremental(self):
        u = unit_cube()
        s = ProductSeries(COSH_SERIES, GeometricExponents())
        lad = LadderEvaluator(s, u)
        for n in (1, 2, 4, 32, 64):
            assert lad.value_at(n) == pytest.approx(
                truncated_integral(s, u, n), rel=1e-12)


class TestLimits:
    def test_reciprocal_gap_limit(self):
        u = unit_cube()
        s = ProductSeries(GEOMETRIC_HALF_SERIES, InverseSquareExponents())
        value, rem, _ = product_series_limit(s, u, ConvergenceConfig(
            tol=1e-12))
        want = 0.5 + sum(pi / 2**(k + 1) * sqrt(k) / sinh(pi * sqrt(k))
                         for k in range(1, 60))
        assert value == pytest.approx(want, abs=1e-11)
        assert rem < 1e-10

    def test_cosh_limit(self):
        u = unit_cube()
        s = ProductSeries(COSH_SERIES, GeometricExponents())
        value, rem, _ = product_series_limit(s, u, ConvergenceConfig(
            tol=1e-12))
        want = sum(
            (1.0 / factorial(2 * k))
            * np.exp(-np.sum(np.log1p(2 * k / 2.0**np.arange(1, 80))))
            for k in range(0, 20))
        assert value == pytest.approx(want, abs=1e-12)

    def test_identity_series_bare_product(self):
        u = unit_cube()
        s = ProductSeries(IDENTITY_SERIES, InverseSquareExponents())
        value, _, _ = product_series_limit(s, u, ConvergenceConfig(tol=1e-12))
        assert value == pytest.approx(pi / sinh(pi), abs=1e-12)

    def test_generic_exponent_budgeted_fallback(self):
        u = unit_cube()
        from hilbertcube.structure import CallableExponents
        exps = CallableExponents(lambda i: 1.0 / i**3, "1/i^3")
        s = ProductSeries(GEOMETRIC_HALF_SERIES, exps)
        v1, rem, _ = product_series_limit(s, u, ConvergenceConfig(tol=1e-8))
        # independent check: direct high-depth product accumulation
        i = np.arange(1.0, 2e6)
        want = sum(0.5**(k + 1) * np.exp(-np.sum(np.log1p(k / i**3)))
                   for k in range(0, 60))
        assert v1 == pytest.approx(want, rel=1e-7)


class TestSeriesAlgebra:
    def test_square_of_geometric_series(self):
        # (sum 2^-(k+1) t^k)^2 = sum (m+1) 2^-(m+2) t^m
        sq = GEOMETRIC_HALF_SERIES.convolved(GEOMETRIC_HALF_SERIES)
        for m in range(8):
            assert sq.coeff(m) == pytest.approx((m + 1) * 0.5**(m + 2))

    def test_square_structure_matches_pointwise_square(self):
        u = unit_cube()
        s = ProductSeries(GEOMETRIC_HALF_SERIES, InverseSquareExponents())
        s2 = square_structure(s)
        # integral of f^2 at truncation 3 vs quadrature of the square
        def fn(c):
            prod = c[:, 0] * c[:, 1]**0.25 * c[:, 2]**(1.0 / 9.0)
            return (1.0 / (2.0 - prod))**2

        want = quad_oracle(fn, [1.0, 1.0, 1.0], order=48)
        assert truncated_integral(s2, u, 3) == pytest.approx(want, rel=5e-4)

    def test_apply_power_series(self):
        t = np.array([0.0, 0.3, 0.9])
        got = apply_power_series(GEOMETRIC_HALF_SERIES, t)
        np.testing.assert_allclose(got, 1.0 / (2.0 - t), rtol=1e-12)
        got2 = apply_power_series(COSH_SERIES, t)
        np.testing.assert_allclose(got2, np.cosh(t), rtol=1e-12)

    def test_coeff_rule_shift_scale(self):
        c = CoeffRule(lambda i: 1.0 / i, "1/i")
        np.testing.assert_allclose(c.shifted(2).block(1, 4),
                                   [1 / 3, 1 / 4, 1 / 5])
        np.testing.assert_allclose(c.scaled(2.0).block(1, 3), [2.0, 1.0])
