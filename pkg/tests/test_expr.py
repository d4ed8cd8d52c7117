import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hilbertcube import expr
from hilbertcube.errors import DomainError, OutOfRange, ParseError, UnboundIndex
from hilbertcube.expr import (Agg, Bin, Call, Coord, INF, IndexVar, Num,
                              Unary, parse, pretty, truncate)


class TestParse:
    def test_sum_example(self):
        ast = parse("sum(i,1,inf, x[i]/i^2)")
        assert ast == Agg("sum", "i", Num(1.0), INF,
                          Bin("/", Coord(IndexVar("i")),
                              Bin("^", IndexVar("i"), Num(2.0))))

    def test_product_reciprocal_example(self):
        ast = parse("1/(2 - prod(n,1,inf, x[n]^(1/n^2)))")
        assert isinstance(ast, Bin) and ast.op == "/"
        inner = ast.rhs
        assert inner == Bin("-", Num(2.0),
                            Agg("prod", "n", Num(1.0), INF,
                                Bin("^", Coord(IndexVar("n")),
                                    Bin("/", Num(1.0),
                                        Bin("^", IndexVar("n"), Num(2.0))))))

    def test_malformed_input_position(self):
        with pytest.raises(ParseError) as ei:
            parse("sum(i,1,")
        assert ei.value.position == 8
        assert "expression" in str(ei.value)

    def test_unbound_index(self):
        with pytest.raises(UnboundIndex):
            parse("x[i]")
        with pytest.raises(UnboundIndex):
            parse("sum(i,1,10,x[i]) + i")

    def test_literal_coordinate_is_fine(self):
        assert parse("x[3]") == Coord(Num(3.0))

    def test_precedence_and_associativity(self):
        assert parse("1-2-3") == Bin("-", Bin("-", Num(1.0), Num(2.0)),
                                     Num(3.0))
        assert parse("2^3^2") == Bin("^", Num(2.0),
                                     Bin("^", Num(3.0), Num(2.0)))
        assert parse("1+2*3") == Bin("+", Num(1.0),
                                     Bin("*", Num(2.0), Num(3.0)))
        assert parse("-2^2") == Unary("-", Bin("^", Num(2.0), Num(2.0)))

    def test_no_implicit_multiplication(self):
        with pytest.raises(ParseError):
            parse("2 x[1]")

    def test_inf_only_in_aggregator_bound(self):
        with pytest.raises(ParseError):
            parse("1 + inf")

    def test_scientific_notation(self):
        assert parse("1e-5") == Num(1e-5)
        assert parse("2.5E3") == Num(2500.0)

    def test_duplicate_index_variable_rejected(self):
        with pytest.raises(ParseError):
            parse("sum(i,1,4, sum(i,1,4, x[i]))")

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as ei:
            parse("1 + $")
        assert ei.value.position == 4


class TestTruncate:
    def test_sum_cap_and_substitution(self):
        ast = parse("sum(i,1,inf, x[i]/i^2)")
        t = truncate(ast, 2)
        assert pretty(t) == "sum(i,1,2,x[i]/i^2)"
        assert expr.eval_point(t, (1.0, 1.0)) == pytest.approx(1.25)

    def test_prod_cap_matches_restriction(self):
        ast = parse("prod(n,1,inf, x[n]^(1/n^2))")
        t = truncate(ast, 3)
        x = (0.7, 0.6, 0.5)
        want = 0.7 * 0.6**0.25 * 0.5**(1.0 / 9.0)
        assert expr.eval_point(t, x) == pytest.approx(want, rel=1e-14)

    def test_constant_fixed(self):
        assert truncate(Num(5.0), 7) == Num(5.0)

    def test_free_coordinates_beyond_cut_zeroed(self):
        ast = parse("x[1] + x[5]")
        t = truncate(ast, 3)
        assert t == Bin("+", Coord(Num(1.0)), Num(0.0))

    def test_idempotent(self):
        for src in ("sum(i,1,inf, x[i]/i^2)",
                    "1/(2 - prod(n,1,inf, x[n]^(1/n^2)))",
                    "x[1] + x[9]*cosh(x[2])"):
            a = truncate(parse(src), 4)
            assert truncate(a, 4) == a


class TestEval:
    def test_linear_sum(self):
        t = truncate(parse("sum(i,1,inf, x[i]/i^2)"), 2)
        assert expr.eval_point(t, (1.0, 1.0)) == 1.25

    def test_reciprocal_at_unit_point(self):
        t = truncate(parse("1/(2 - prod(n,1,inf, x[n]^(1/n^2)))"), 1)
        assert expr.eval_point(t, (1.0,)) == 1.0

    def test_reciprocal_two_coords(self):
        t = truncate(parse("1/(2 - prod(n,1,inf, x[n]^(1/n^2)))"), 2)
        want = 1.0 / (2.0 - 0.5**0.25)
        assert expr.eval_point(t, (1.0, 0.5)) == pytest.approx(want,
                                                               rel=1e-12)

    def test_batch_evaluation(self):
        t = truncate(parse("sum(i,1,inf, x[i]/i^2)"), 3)
        pts = np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 9.0]])
        got = expr.eval_batch(t, pts)
        np.testing.assert_allclose(got, [1.0 + 0.25 + 1 / 9.0, 0.0, 2.0])

    def test_tail_provider_supplies_far_coordinates(self):
        ast = truncate(parse("sum(i,1,inf, x[i]/i^2)"), 4)
        pts = np.array([[1.0, 1.0]])  # only two explicit coordinates
        got = expr.eval_batch(ast, pts, tail=expr.ConstantTail(1.0))
        assert got[0] == pytest.approx(1.0 + 0.25 + 1 / 9.0 + 1 / 16.0)

    def test_infinite_sum_limit_with_zero_tail(self):
        ast = parse("sum(i,1,inf, x[i]/i^2)")
        assert expr.eval_point(ast, (1.0, 2.0)) == pytest.approx(1.5)

    def test_infinite_prod_limit_constant_tail(self):
        ast = parse("prod(n,1,inf, x[n]^(1/n^2))")
        # all-ones tail: partial products stabilize at the explicit part
        got = expr.eval_batch(ast, np.array([[0.5, 0.5]]),
                              tail=expr.ConstantTail(1.0))
        assert got[0] == pytest.approx(0.5 * 0.5**0.25, rel=1e-12)

    def test_infinite_prod_zero_tail_kills_product(self):
        ast = parse("prod(n,1,inf, x[n]^(1/n^2))")
        got = expr.eval_batch(ast, np.array([[0.9, 0.9]]))
        assert got[0] == 0.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            expr.eval_point(parse("log(x[1])"), (0.0,))
        with pytest.raises(DomainError):
            expr.eval_point(parse("x[1]^(-1)"), (0.0,))
        with pytest.raises(DomainError):
            expr.eval_point(parse("1/x[1]"), (0.0,))
        with pytest.raises(DomainError):
            expr.eval_point(parse("sqrt(0 - x[1])"), (2.0,))

    def test_out_of_range_without_tail(self):
        with pytest.raises(OutOfRange):
            expr.eval_batch(parse("x[5]"), np.array([[1.0, 1.0]]), tail=None)

    def test_functions(self):
        assert expr.eval_point(parse("exp(0)"), (0.0,)) == 1.0
        assert expr.eval_point(parse("cosh(0)"), (0.0,)) == 1.0
        assert expr.eval_point(parse("abs(0 - 3)"), (0.0,)) == 3.0
        assert expr.eval_point(parse("sqrt(x[1])"), (4.0,)) == 2.0


# ---------------------------------------------------------------------------
# Property tests
# ---------------------------------------------------------------------------

_numbers = st.one_of(
    st.integers(min_value=0, max_value=9).map(float),
    st.floats(min_value=0.001, max_value=100.0, allow_nan=False,
              allow_infinity=False),
)


def _asts(depth, bound_vars):
    leaf = [st.builds(Num, _numbers)]
    if bound_vars:
        leaf.append(st.sampled_from(bound_vars).map(IndexVar))
        leaf.append(st.sampled_from(bound_vars).map(
            lambda v: Coord(IndexVar(v))))
    leaf.append(st.integers(min_value=1, max_value=6).map(
        lambda j: Coord(Num(float(j)))))
    base = st.one_of(*leaf)
    if depth == 0:
        return base
    sub = _asts(depth - 1, bound_vars)
    fresh = [v for v in ("i", "j", "k") if v not in bound_vars]
    options = [
        base,
        st.builds(Bin, st.sampled_from("+-*/^"), sub, sub),
        st.builds(Unary, st.just("-"), sub),
        st.builds(Call, st.sampled_from(("exp", "log", "cosh", "sqrt",
                                         "abs")), sub),
    ]
    if fresh:
        v = fresh[0]
        body = _asts(depth - 1, bound_vars + [v])
        options.append(st.builds(
            lambda kind, lo, hi, b: Agg(kind, v, Num(float(lo)),
                                        INF if hi is None else Num(float(hi)),
                                        b),
            st.sampled_from(("sum", "prod")),
            st.integers(min_value=1, max_value=3),
            st.one_of(st.none(), st.integers(min_value=1, max_value=6)),
            body))
    return st.one_of(*options)


@settings(max_examples=150, deadline=None)
@given(_asts(3, []))
def test_pretty_parse_round_trip(ast):
    assert parse(pretty(ast)) == ast


@settings(max_examples=80, deadline=None)
@given(_asts(3, []), st.integers(min_value=1, max_value=12))
def test_truncate_idempotent(ast, n):
    once = truncate(ast, n)
    assert truncate(once, n) == once


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1,
                                                          max_value=6),
       st.lists(st.floats(min_value=0.0, max_value=2.0), min_size=6,
                max_size=6))
def test_sum_truncation_tail_zero_consistency(n, extra, xs):
    # evaluating the deeper truncation on zero-padded points matches the
    # shallower truncation on the prefix
    ast = parse("sum(i,1,inf, x[i]/i^2)")
    m = n + extra
    shallow = truncate(ast, n)
    deep = truncate(ast, m)
    pt = np.array(xs[:n])
    padded = np.concatenate([pt, np.zeros(m - n)])
    a = expr.eval_point(shallow, pt)
    b = expr.eval_point(deep, padded)
    assert a == pytest.approx(b, abs=1e-15)
