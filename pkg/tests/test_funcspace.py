from math import sinh

import numpy as np
import pytest

from hilbertcube import catalog
from hilbertcube.errors import DomainMismatch, ModulusViolated
from hilbertcube.funcspace import (CoordinateFunction, SampleBudget,
                                   TruncationSequence, as_sequence,
                                   check_truncation_cauchy,
                                   check_truncation_uniform, combine_abs,
                                   combine_scale, combine_sum,
                                   compose_lipschitz, restricted,
                                   sample_points, truncated)
from hilbertcube.rectangle import builtin_catalog
from hilbertcube.structure import COSH_SERIES, IDENTITY_SERIES, ProductSeries

RECTS = builtin_catalog()
SMALL = SampleBudget(points=512, dim_cap=32, ladder_max=512)


def wallis_sum():
    return catalog.integrand("wallis-sum", RECTS["wallis"])


class TestTruncationViews:
    def test_padded_sum_value(self):
        seq = TruncationSequence(wallis_sum())
        f2 = truncated(seq, 2)
        # evaluated at a finitely supported point (1,1,1,...) -> (1,1)
        assert f2.eval_point((1.0, 1.0, 1.0, 1.0)) == 1.25

    def test_constant_sequence_fixed_by_truncation(self):
        c = catalog.integrand("const:2.5", RECTS["wallis"])
        seq = TruncationSequence(c)
        assert truncated(seq, 1).eval_point((0.3,)) == 2.5
        assert truncated(seq, 7).eval_point((0.3,)) == 2.5

    def test_reciprocal_gap_capped(self):
        f = catalog.integrand("sec9-ex1", RECTS["unit"])
        seq = TruncationSequence(f)
        assert truncated(seq, 1).eval_point((1.0,)) == 1.0

    def test_box_view_agrees_with_padded_view(self):
        for name, rect in (("wallis-sum", "wallis"), ("sec9-ex1", "unit")):
            f = catalog.integrand(name, RECTS[rect])
            seq = TruncationSequence(f)
            pts = sample_points(f.domain, 128, 16)
            for n in (1, 4, 16):
                full = truncated(seq, n).eval_batch(pts)
                box = restricted(seq, n).eval_batch(pts[:, :n])
                assert np.array_equal(full, box)

    def test_box_view_checks_width(self):
        f = wallis_sum()
        with pytest.raises(ValueError):
            restricted(TruncationSequence(f), 3).eval_batch(
                np.zeros((4, 2)))


class TestSequences:
    def test_regular_flag(self):
        seq = TruncationSequence(wallis_sum())
        assert seq.regular
        assert seq.term(5) is seq.limit

    def test_shift_perturbation(self):
        seq = TruncationSequence(wallis_sum(), shift_fn=lambda n: 2.0**-n)
        f3 = seq.term(3)
        base = seq.limit
        pts = sample_points(RECTS["wallis"], 32, 8)
        np.testing.assert_allclose(f3.eval_batch(pts),
                                   base.eval_batch(pts) + 0.125,
                                   rtol=1e-15)
        assert not seq.regular

    def test_scale_perturbation_structure(self):
        seq = TruncationSequence(wallis_sum(),
                                 scale_fn=lambda n: 1.0 + 1.0 / n)
        f2 = seq.term(2)
        assert f2.structure is not None
        pts = sample_points(RECTS["wallis"], 16, 4)
        np.testing.assert_allclose(f2.eval_batch(pts),
                                   1.5 * seq.limit.eval_batch(pts),
                                   rtol=1e-15)


class TestConvergenceChecks:
    def test_catalog_passes_and_verdicts_agree(self):
        for name, rect in (("wallis-sum", "wallis"), ("sec9-ex1", "unit")):
            f = catalog.integrand(name, RECTS[rect])
            seq = TruncationSequence(f)
            rc = check_truncation_cauchy(seq, SMALL)
            ru = check_truncation_uniform(seq, SMALL)
            assert rc.verdict != "fail"
            assert rc.verdict == ru.verdict

    def test_zero_function_trivially_passes(self):
        z = catalog.integrand("const:0", RECTS["wallis"])
        rep = check_truncation_cauchy(TruncationSequence(z), SMALL)
        assert rep.verdict == "pass"
        assert all(e.n_found == 1 and e.max_gap == 0.0 for e in rep.entries)

    def test_alternating_sequence_fails_with_witness(self):
        f = wallis_sum()
        bad = TruncationSequence(f,
                                 shift_fn=lambda n: float(n.bit_length() % 2))
        rep = check_truncation_cauchy(bad, SMALL)
        assert rep.verdict == "fail"
        wit = next(e.witness for e in rep.entries if e.verdict == "fail")
        assert wit["gap"] >= 0.9
        assert {"n", "m", "point", "sheet"} <= set(wit)

    def test_gap_bound_from_interval_tops(self):
        # gaps of the wallis sum are below (4/3) * sum_{m<i<=n} 1/i^2
        f = wallis_sum()
        seq = TruncationSequence(f)
        pts = sample_points(f.domain, 256, 32)
        tail = f.domain.tail_provider()
        for m, n in ((2, 8), (8, 64), (4, 256)):
            vm = truncated(seq, m).eval_batch(pts, tail=tail)
            vn = truncated(seq, n).eval_batch(pts, tail=tail)
            bound = (4.0 / 3.0) * sum(1.0 / i**2 for i in range(m + 1,
                                                                n + 1))
            assert float(np.max(np.abs(vn - vm))) <= bound * (1 + 1e-12)


class TestCombinators:
    def test_sum_and_scale_values(self):
        f = wallis_sum()
        zero = combine_sum(f, combine_scale(-1.0, f).limit)
        pts = sample_points(f.domain, 64, 16)
        np.testing.assert_array_equal(zero.limit.eval_batch(pts),
                                      np.zeros(64))
        doubled = combine_scale(2.0, f)
        np.testing.assert_allclose(doubled.limit.eval_batch(pts),
                                   2.0 * f.eval_batch(pts), rtol=1e-15)

    def test_identity_scale_and_zero_scale(self):
        f = wallis_sum()
        pts = sample_points(f.domain, 32, 8)
        one = combine_scale(1.0, f)
        np.testing.assert_array_equal(one.limit.eval_batch(pts),
                                      f.eval_batch(pts))
        zero = combine_scale(0.0, f)
        np.testing.assert_array_equal(zero.limit.eval_batch(pts),
                                      np.zeros(32))

    def test_domain_mismatch(self):
        a = catalog.integrand("wallis-sum", RECTS["wallis"])
        b = catalog.integrand("wallis-sum", RECTS["unit"])
        with pytest.raises(DomainMismatch):
            combine_sum(a, b)

    def test_abs_of_nonnegative_unchanged(self):
        f = wallis_sum()
        av = combine_abs(f)
        assert av.limit is f

    def test_abs_of_negated_restores_structure(self):
        f = wallis_sum()
        neg = combine_scale(-1.0, f)
        assert neg.limit.nonpositive
        back = combine_abs(neg)
        assert back.limit.structure is not None
        pts = sample_points(f.domain, 32, 8)
        np.testing.assert_allclose(back.limit.eval_batch(pts),
                                   f.eval_batch(pts), rtol=1e-15)

    def test_compose_lipschitz_cosh_keeps_structure(self):
        u = RECTS["unit"]
        from hilbertcube import expr
        bare = CoordinateFunction(
            expr.parse("prod(n,1,inf, x[n]^(1/2^n))"), u, 1.0, True,
            ProductSeries(IDENTITY_SERIES,
                          catalog.integrand("sec9-ex2", u)
                          .structure.exponents),
            None, "bare-product")
        seq = compose_lipschitz(np.cosh, sinh(1.0),
                                TruncationSequence(bare),
                                dsl_name="cosh", series=COSH_SERIES)
        assert isinstance(seq.limit.structure, ProductSeries)
        assert seq.limit.structure.series.key == COSH_SERIES.key
        ref = catalog.integrand("sec9-ex2", u)
        pts = sample_points(u, 64, 16)
        np.testing.assert_allclose(seq.limit.eval_batch(pts),
                                   ref.eval_batch(pts), rtol=1e-14)

    def test_compose_modulus_violation(self):
        f = wallis_sum()
        with pytest.raises(ModulusViolated):
            compose_lipschitz(lambda t: t * t, 0.1, TruncationSequence(f))

    def test_compose_identity_modulus_one(self):
        f = wallis_sum()
        seq = compose_lipschitz(lambda t: t, 1.0, TruncationSequence(f))
        pts = sample_points(f.domain, 32, 8)
        np.testing.assert_allclose(seq.limit.eval_batch(pts),
                                   f.eval_batch(pts), rtol=1e-15)

    def test_lipschitz_contraction_on_samples(self):
        f = wallis_sum()
        seq = TruncationSequence(f)
        comp = compose_lipschitz(lambda t: 2.0 * t, 2.0, seq)
        pts = sample_points(f.domain, 128, 32)
        for m, n in ((2, 16), (16, 128)):
            g0 = np.abs(truncated(seq, n).eval_batch(pts)
                        - truncated(seq, m).eval_batch(pts))
            g1 = np.abs(truncated(comp, n).eval_batch(pts)
                        - truncated(comp, m).eval_batch(pts))
            assert np.all(g1 <= 2.0 * g0 + 1e-12)

    def test_abs_contraction_on_samples(self):
        f = wallis_sum()
        base = combine_sum(
            TruncationSequence(catalog.integrand("const:-0.5",
                                                 RECTS["wallis"])),
            TruncationSequence(f, shift_fn=lambda n: (-0.5)**n))
        pts = sample_points(f.domain, 128, 32)
        for m, n in ((2, 8), (8, 64)):
            vm = truncated(base, m).eval_batch(pts)
            vn = truncated(base, n).eval_batch(pts)
            assert np.all(np.abs(np.abs(vn) - np.abs(vm))
                          <= np.abs(vn - vm) + 1e-15)


class TestSamplePoints:
    def test_deterministic(self):
        a = sample_points(RECTS["wallis"], 256, 16)
        b = sample_points(RECTS["wallis"], 256, 16)
        assert np.array_equal(a, b)

    def test_within_bounds(self):
        rect = RECTS["wallis"]
        pts = sample_points(rect, 512, 24)
        uppers = rect.uppers(24)
        assert np.all(pts >= 0.0)
        assert np.all(pts <= uppers[np.newaxis, :])
