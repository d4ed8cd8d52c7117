from math import pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hilbertcube.config import ConvergenceConfig
from hilbertcube.errors import DegenerateRectangle, NonPositiveBound
from hilbertcube.rectangle import (DEGENERATE, DIVERGENT, NONDEGENERATE,
                                   UNKNOWN, ConvergentRectangle, TailRule,
                                   builtin_catalog, degenerate_half,
                                   from_selector, tail_product_bound,
                                   unit_cube, volume, wallis_rectangle)
from hilbertcube.reference import wallis_partial


class TestVolume:
    def test_unit_cube_exact(self):
        rep = volume(unit_cube())
        assert rep.classification == NONDEGENERATE
        assert rep.value == 1.0

    def test_wallis_analytic(self):
        rep = volume(wallis_rectangle())
        assert rep.classification == NONDEGENERATE
        assert rep.value == pytest.approx(pi / 2, abs=1e-12)

    def test_wallis_numeric_accumulation(self):
        w = wallis_rectangle()
        numeric = ConvergentRectangle(tail=TailRule(formula=w.tail.formula))
        cfg = ConvergenceConfig(tol=1e-6)
        rep = volume(numeric, cfg)
        assert rep.classification == NONDEGENERATE
        # within 10x the requested tolerance of the analytic value
        assert abs(rep.value - pi / 2) <= 10 * cfg.tol * (pi / 2)

    def test_degenerate_constant_half(self):
        rep = volume(ConvergentRectangle(tail=TailRule(constant=0.5)))
        assert rep.classification == DEGENERATE
        assert rep.value == 0.0

    def test_divergent_constant_two(self):
        rep = volume(ConvergentRectangle(tail=TailRule(constant=2.0)))
        assert rep.classification == DIVERGENT
        assert rep.value is None

    def test_harmonic_type_degeneracy_via_trend(self):
        rep = volume(from_selector("tail: 1 - 1/(i+1)"))
        assert rep.classification == DEGENERATE

    def test_prefix_included(self):
        rect = ConvergentRectangle(prefix=(2.0, 3.0),
                                   tail=TailRule(constant=1.0,
                                                 analytic_product=1.0))
        assert volume(rect).value == 6.0

    def test_nonpositive_bound_rejected(self):
        with pytest.raises(NonPositiveBound):
            ConvergentRectangle(prefix=(1.0, -2.0))
        with pytest.raises(NonPositiveBound):
            TailRule(constant=0.0)
        with pytest.raises(NonPositiveBound):
            volume(from_selector("tail: 1 - i"))  # hits zero at i = 1

    def test_budget_exhaustion_reports_unknown(self):
        numeric = ConvergentRectangle(
            tail=TailRule(formula=wallis_rectangle().tail.formula))
        rep = volume(numeric, ConvergenceConfig(tol=1e-14, max_terms=4096))
        assert rep.classification == UNKNOWN
        assert rep.value is None


class TestTailProductBound:
    def test_unit_cube_always_zero(self):
        u = unit_cube()
        for n, m in ((1, 1), (3, 17), (64, 4096)):
            assert tail_product_bound(u, n, m) == 0.0

    def test_wallis_window_value(self):
        w = wallis_rectangle()
        got = tail_product_bound(w, 10, 20)
        want = abs(np.prod([4 * k * k / (4 * k * k - 1)
                            for k in range(10, 21)]) - 1.0)
        assert got == pytest.approx(want, rel=1e-12)
        assert 0 < got < 0.03

    def test_wallis_shrinks_with_n(self):
        w = wallis_rectangle()
        vals = [tail_product_bound(w, n, 2 * n) for n in (5, 10, 20, 40, 80)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_single_factor(self):
        w = wallis_rectangle()
        for n in (1, 7, 100):
            assert tail_product_bound(w, n, n) == pytest.approx(
                1.0 / (4 * n * n - 1), rel=1e-12)

    def test_rejects_non_nondegenerate(self):
        with pytest.raises(DegenerateRectangle):
            tail_product_bound(degenerate_half(), 2, 5)

    def test_epsilon_threshold_scan(self):
        # executable form of the tail-product lemma: for every eps some
        # cutoff works for all sampled m > n beyond it
        w = wallis_rectangle()
        for eps in (1e-1, 1e-2, 1e-3):
            found = None
            for npow in range(15):
                n = 2**npow
                if all(tail_product_bound(w, n, m) < eps
                       for m in (n, 2 * n, 4 * n, 16 * n)):
                    found = n
                    break
            assert found is not None, eps


class TestCatalogAndSelectors:
    def test_builtin_names(self):
        cat = builtin_catalog()
        assert set(cat) == {"unit", "wallis", "degenerate_half"}
        assert volume(cat["unit"]).value == 1.0
        assert volume(cat["wallis"]).value == pytest.approx(pi / 2)
        assert volume(cat["degenerate_half"]).classification == DEGENERATE

    def test_selector_constant(self):
        rep = volume(from_selector("tail: 2"))
        assert rep.classification == DIVERGENT

    def test_selector_with_prefix(self):
        rect = from_selector("prefix: 0.5, 2; tail: 1")
        assert rect.upper(1) == 0.5
        assert rect.upper(2) == 2.0
        assert rect.upper(3) == 1.0

    def test_selector_unknown_name(self):
        with pytest.raises(ValueError):
            from_selector("nope")

    def test_uppers_block(self):
        w = wallis_rectangle()
        got = w.uppers(5)
        want = [4 * i * i / (4 * i * i - 1) for i in range(1, 6)]
        np.testing.assert_allclose(got, want, rtol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=200),
       st.integers(min_value=0, max_value=200))
def test_tail_product_bound_matches_direct_product(n, extra):
    w = wallis_rectangle()
    m = n + extra
    got = tail_product_bound(w, n, m)
    want = abs(wallis_partial(m) / wallis_partial(n - 1) - 1.0)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-15)
