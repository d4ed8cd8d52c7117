"""Integral norms on the unit cube and the zero-distance relation.

norm(f, p) = (integral of |f|^p)^(1/p).  p = 1 on a nonnegative
structured integrand stays analytic; p = 2 on a product-series
integrand squares the series; everything else falls back to the
numeric engines.
"""

from dataclasses import dataclass

import numpy as np

from . import expr, structure as struct_mod
from .config import INTEGRATE_DEFAULTS, ConvergenceConfig
from .errors import UnsupportedCase
from .funcspace import CoordinateFunction, as_sequence, combine_scale, combine_sum
from .integrator import IntegralResult, integrate

__all__ = ["NormResult", "norm", "equivalent", "check_norm_axioms",
           "abs_power"]


@dataclass(frozen=True)
class NormResult:
    p: float
    value: float
    integral: IntegralResult

    def as_dict(self):
        return {"p": self.p, "value": self.value,
                "integral": self.integral.as_dict()}


def abs_power(f: CoordinateFunction, p: float) -> CoordinateFunction:
    """|f|^p as a CoordinateFunction, keeping structure when possible."""
    if p == 1.0:
        if f.nonnegative:
            return f
        body = (expr.Call("abs", f.body) if f.is_ast
                else (lambda pts, _b=f.body: np.abs(_b(pts))))
        st = (struct_mod.scale_structure(f.structure, -1.0)
              if f.nonpositive and f.structure is not None else None)
        return CoordinateFunction(body, f.domain, f.bound, True, st,
                                  None, f"|{f.label}|")
    st = None
    if p == 2.0 and f.structure is not None:
        st = struct_mod.square_structure(f.structure)
    if f.is_ast:
        inner = f.body if f.nonnegative else expr.Call("abs", f.body)
        body = expr.Bin("^", inner, expr.Num(float(p)))
    else:
        inner = f.body
        body = lambda pts: np.abs(inner(pts)) ** p
    bound = None if f.bound is None else f.bound**p
    return CoordinateFunction(body, f.domain, bound, True, st, None,
                              f"|{f.label}|^{p}")


def norm(f, p: float = 1.0,
         cfg: ConvergenceConfig = INTEGRATE_DEFAULTS,
         engine="auto") -> NormResult:
    """p-norm on the unit cube (p >= 1)."""
    seq = as_sequence(f)
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if not seq.limit.domain.is_unit_cube():
        raise UnsupportedCase("norms are defined on the unit cube")
    if not seq.regular:
        raise UnsupportedCase("norms apply to regular (constant) sequences")
    g = abs_power(seq.limit, float(p))
    res = integrate(g, g.domain, cfg, engine=engine)
    return NormResult(float(p), float(res.value) ** (1.0 / p), res)


def equivalent(f, g, cfg: ConvergenceConfig = INTEGRATE_DEFAULTS):
    """Zero-distance relation: distance = norm(f - g, 1), equivalent
    when it is within cfg.tol."""
    fa, fb = as_sequence(f).limit, as_sequence(g).limit
    diff = combine_sum(fa, combine_scale(-1.0, fb)).limit
    d = norm(diff, 1.0, cfg)
    return {"equivalent": bool(d.value <= cfg.tol), "distance": d.value}


_SCALARS = (-2.0, -1.0, 0.0, 0.5, 3.0)


def check_norm_axioms(functions, cfg: ConvergenceConfig = INTEGRATE_DEFAULTS):
    """Executable norm-axiom checks over a list of CoordinateFunctions.

    Verifies nonnegativity, absolute homogeneity over a fixed scalar
    set, and the triangle inequality on all pairs, each within
    10 * cfg.tol.  Returns a report dict with any violations.
    """
    slack = 10.0 * cfg.tol
    violations = []
    norms = {}
    for f in functions:
        n = norm(f, 1.0, cfg).value
        norms[f.label] = n
        if n < -slack:
            violations.append({"axiom": "nonnegativity", "f": f.label,
                               "norm": n})
        for k in _SCALARS:
            kn = norm(combine_scale(k, f).limit, 1.0, cfg).value
            if abs(kn - abs(k) * n) > slack * max(1.0, abs(k) * n):
                violations.append({"axiom": "homogeneity", "f": f.label,
                                   "k": k, "lhs": kn, "rhs": abs(k) * n})
    for i, f in enumerate(functions):
        for g in functions[i + 1:]:
            both = combine_sum(f, g).limit
            lhs = norm(both, 1.0, cfg).value
            rhs = norms[f.label] + norms[g.label]
            if lhs > rhs + slack * max(1.0, rhs):
                violations.append({"axiom": "triangle", "f": f.label,
                                   "g": g.label, "lhs": lhs, "rhs": rhs})
    return {"checked": [f.label for f in functions],
            "scalars": list(_SCALARS),
            "violations": violations,
            "passed": not violations}
