"""Built-in integrands keyed by the names the CLI accepts.

Each entry binds a DSL source to a rectangle, attaching the analytic
structure and a declared sup bound for that rectangle.  The names are
part of the stable CLI contract.
"""

from math import cosh, pi

import numpy as np

from . import expr, structure as struct_mod
from ._tails import sum_limit
from .config import ConvergenceConfig
from .funcspace import CoordinateFunction
from .rectangle import ConvergentRectangle, builtin_catalog as rectangles

__all__ = ["integrand", "integrand_names", "rectangles", "describe"]

_BOUND_CFG = ConvergenceConfig(tol=1e-9, max_terms=2**22)


def _tail_exponent_sum(rect, exponents):
    """sum_i p_i log a_i, the log of sup prod x_i^{p_i} over rect."""
    def block(i0, i1):
        return exponents.block(i0, i1) * np.log(rect.bounds_block(i0, i1))
    rep = sum_limit(block, 1, _BOUND_CFG, signed_trend=False)
    return rep.value


def _coeff_bound(rect, coeff):
    """Upper estimate of sum_i |c_i| a_i (slight safety margin added)."""
    def block(i0, i1):
        return np.abs(coeff.block(i0, i1)) * rect.bounds_block(i0, i1)
    rep = sum_limit(block, 1, _BOUND_CFG, signed_trend=False)
    return rep.value + 10.0 * rep.residual + 1e-9


def _wallis_sum(rect):
    src = "sum(i,1,inf, x[i]/i^2)"
    st = struct_mod.AffineSum(0.0, struct_mod.INVERSE_SQUARE_COEFF)
    if rect.name == "wallis":
        bound = 2.0 * pi**2 / 9.0      # (4/3) * sum 1/i^2
    elif rect.name == "unit":
        bound = pi**2 / 6.0
    elif rect.name == "degenerate_half":
        bound = pi**2 / 12.0
    else:
        bound = _coeff_bound(rect, st.coeff)
    return CoordinateFunction(expr.parse(src), rect, bound, True, st,
                              None, "wallis-sum")


def _reciprocal_gap_product(rect):
    src = "1/(2 - prod(n,1,inf, x[n]^(1/n^2)))"
    st = struct_mod.ProductSeries(struct_mod.GEOMETRIC_HALF_SERIES,
                                  struct_mod.InverseSquareExponents())
    t_max = float(np.exp(_tail_exponent_sum(rect, st.exponents)))
    if t_max >= 2.0:
        raise ValueError("integrand undefined: product can reach 2")
    bound = 1.0 / (2.0 - t_max)
    return CoordinateFunction(expr.parse(src), rect, bound, True, st,
                              None, "sec9-ex1")


def _nested_cosh_product(rect):
    src = "cosh(prod(n,1,inf, x[n]^(1/2^n)))"
    st = struct_mod.ProductSeries(struct_mod.COSH_SERIES,
                                  struct_mod.GeometricExponents())
    t_max = float(np.exp(_tail_exponent_sum(rect, st.exponents)))
    return CoordinateFunction(expr.parse(src), rect, cosh(t_max), True, st,
                              None, "sec9-ex2")


_MAKERS = {
    "wallis-sum": _wallis_sum,
    "sec9-ex1": _reciprocal_gap_product,
    "sec9-ex2": _nested_cosh_product,
}
_ALIASES = {
    "reciprocal-gap": "sec9-ex1",
    "nested-cosh": "sec9-ex2",
}

_DOCS = {
    "wallis-sum": "sum(i,1,inf, x[i]/i^2)",
    "sec9-ex1": "1/(2 - prod(n,1,inf, x[n]^(1/n^2)))",
    "sec9-ex2": "cosh(prod(n,1,inf, x[n]^(1/2^n)))",
}


def integrand_names():
    return sorted(_MAKERS) + ["const:<c>"]


def integrand(name, rect: ConvergentRectangle) -> CoordinateFunction:
    """Catalog integrand bound to a rectangle; 'const:<c>' is parsed."""
    key = _ALIASES.get(name, name)
    if key.startswith("const:"):
        c = float(key[len("const:"):])
        return CoordinateFunction(expr.Num(c), rect, abs(c), c >= 0,
                                  struct_mod.constant_structure(c),
                                  None, key, c <= 0)
    try:
        maker = _MAKERS[key]
    except KeyError:
        raise KeyError(
            f"unknown catalog integrand {name!r}; have "
            f"{', '.join(integrand_names())}") from None
    return maker(rect)


def describe(name):
    key = _ALIASES.get(name, name)
    if key.startswith("const:"):
        return f"constant {key[len('const:'):]}"
    return _DOCS.get(key, "")
