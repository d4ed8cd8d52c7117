"""Functions on rectangles, truncation sequences, and the empirical
Cauchy/uniform-convergence checks.

A CoordinateFunction is evaluable at any point given as a finite
coordinate block (plus an optional tail rule for structured points). A
TruncationSequence pairs a limit function with the per-n approximants
f_n; the constant sequence f_n = f is the regular case, and the
perturbation hooks cover f_n = s(n)*f + c(n) which is enough for every
sequence the verification suites construct.

Sup norms over an infinite-dimensional rectangle are not computable, so
the convergence checks are falsification-oriented: gaps are scanned
over a fixed low-discrepancy point set (coordinates beyond a cap frozen
at 0 and at the interval bounds, the two extreme sheets) along a
doubling truncation ladder.  A pass means no violation was found under
the budget, never a proof.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import expr, structure as struct_mod
from .errors import (DomainMismatch, EvaluationError, ModulusViolated,
                     UnsupportedCase)
from .rectangle import ConvergentRectangle

__all__ = [
    "CoordinateFunction", "TruncationSequence", "FiniteFunction",
    "SampleBudget", "EpsVerdict", "CauchyReport",
    "truncated", "restricted", "check_truncation_cauchy",
    "check_truncation_uniform",
    "combine_sum", "combine_scale", "combine_abs", "compose_lipschitz",
    "sample_points",
]


@dataclass(frozen=True)
class CoordinateFunction:
    """Integrand over the infinite rectangle.

    body is either an expression AST (preferred: evaluable at structured
    points, truncatable symbolically) or a vectorized callable taking an
    (npts, d) coordinate block with zero tail.  bound, when set, is a
    declared sup of |f| over the domain (spot-checked, not proven).
    structure carries the analytic-engine metadata when the integrand
    has one of the separable shapes.
    """

    body: object
    domain: ConvergentRectangle
    bound: float | None = None
    nonnegative: bool = False
    structure: object = None
    lipschitz_outer: tuple | None = None
    label: str = ""
    nonpositive: bool = False

    @property
    def is_ast(self):
        return not callable(self.body)

    def eval_batch(self, coords, tail=None):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        try:
            if self.is_ast:
                use_tail = expr.ZeroTail() if tail is None else tail
                return expr.eval_batch(self.body, coords, tail=use_tail)
            if tail is not None and not isinstance(tail, expr.ZeroTail):
                raise UnsupportedCase(
                    "callable-bodied functions evaluate at finitely "
                    "supported points only")
            return np.asarray(self.body(coords), dtype=float)
        except (ZeroDivisionError, FloatingPointError) as e:
            raise EvaluationError(str(e), point=coords[:1]) from e

    def eval_point(self, point, tail=None):
        arr = np.atleast_1d(np.asarray(point, dtype=float))
        return float(self.eval_batch(arr[np.newaxis, :], tail=tail)[0])

    def with_label(self, label):
        return CoordinateFunction(self.body, self.domain, self.bound,
                                  self.nonnegative, self.structure,
                                  self.lipschitz_outer, label)


def _require_same_domain(a, b):
    if a.domain != b.domain:
        raise DomainMismatch(
            f"cannot combine functions on different rectangles "
            f"({a.domain.name or 'anonymous'} vs {b.domain.name or 'anonymous'})")


@dataclass(frozen=True)
class TruncationSequence:
    """Approximating sequence f_n -> f with truncation semantics.

    f_n = scale(n) * f + shift(n); the regular sequence has both trivial.
    """

    limit: CoordinateFunction
    scale_fn: object = None   # n -> float, default 1
    shift_fn: object = None   # n -> float, default 0

    @property
    def regular(self):
        return self.scale_fn is None and self.shift_fn is None

    def term_coeffs(self, n):
        s = 1.0 if self.scale_fn is None else float(self.scale_fn(n))
        c = 0.0 if self.shift_fn is None else float(self.shift_fn(n))
        return s, c

    def term(self, n) -> CoordinateFunction:
        """The n-th member f_n (on the full rectangle, untruncated)."""
        s, c = self.term_coeffs(n)
        if s == 1.0 and c == 0.0:
            return self.limit
        f = self.limit
        if f.is_ast:
            body = f.body
            if s != 1.0:
                body = expr.Bin("*", expr.Num(s), body)
            if c != 0.0:
                body = expr.Bin("+", body, expr.Num(c))
        else:
            base = f.body
            body = lambda pts: s * np.asarray(base(pts)) + c
        st = f.structure
        if st is not None:
            st = struct_mod.scale_structure(st, s)
            if c != 0.0:
                st = struct_mod.add_structures(
                    st, struct_mod.constant_structure(c))
        bound = None if f.bound is None else abs(s) * f.bound + abs(c)
        return CoordinateFunction(body, f.domain, bound,
                                  f.nonnegative and s >= 0 and c >= 0,
                                  st, f.lipschitz_outer,
                                  f.label and f"{f.label}[n-term]")

    @classmethod
    def regular_of(cls, f):
        return cls(f)


def as_sequence(obj) -> TruncationSequence:
    if isinstance(obj, TruncationSequence):
        return obj
    if isinstance(obj, CoordinateFunction):
        return TruncationSequence(obj)
    raise TypeError(f"expected a function or sequence, got {type(obj)!r}")


# --------------------------------------------------------------------------
# Truncation views
# --------------------------------------------------------------------------

def truncated(seq, n) -> CoordinateFunction:
    """The n-th approximant as a function on the whole rectangle,
    depending only on the first n coordinates (infinite aggregators
    capped at n, later free coordinates zeroed)."""
    seq = as_sequence(seq)
    if n < 1:
        raise ValueError("truncation dimension must be >= 1")
    f_n = seq.term(n)
    if f_n.is_ast:
        body = expr.truncate(f_n.body, n)
    else:
        inner = f_n.body

        def body(pts, _inner=inner, _n=n):
            pts = np.atleast_2d(pts)
            d = pts.shape[1]
            if d >= _n:
                return _inner(pts[:, :_n])
            pad = np.zeros((pts.shape[0], _n - d))
            return _inner(np.hstack([pts, pad]))

    return CoordinateFunction(body, f_n.domain, f_n.bound,
                              f_n.nonnegative, None, None,
                              f_n.label and f"{f_n.label}@{n}")


@dataclass(frozen=True)
class FiniteFunction:
    """Restriction of an approximant to the first n coordinates."""

    inner: CoordinateFunction
    ndim: int

    def eval_batch(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[1] != self.ndim:
            raise ValueError(
                f"expected {self.ndim} coordinates, got {coords.shape[1]}")
        return self.inner.eval_batch(coords)


def restricted(seq, n) -> FiniteFunction:
    """The n-th approximant as a function of exactly n coordinates on
    the finite box; agrees with truncated(seq, n) on padded points."""
    return FiniteFunction(truncated(seq, n), n)


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def sample_points(rect: ConvergentRectangle, npts: int, dims: int):
    """Fixed low-discrepancy points in the first dims coordinates of the
    rectangle (no RNG: unscrambled Sobol)."""
    m = int(np.log2(npts))
    eng = qmc.Sobol(d=dims, scramble=False)
    if 2**m == npts:
        unit = eng.random_base2(m)
    else:
        unit = eng.random(npts)
    return unit * rect.uppers(dims)[np.newaxis, :]


@dataclass(frozen=True)
class SampleBudget:
    """Budget of the empirical convergence checks."""

    points: int = 4096
    dim_cap: int = 64
    eps_grid: tuple = (1e-1, 1e-2, 1e-3)
    ladder_max: int = 2048

    def ladder(self):
        out = []
        n = 1
        while n < self.ladder_max:
            out.append(n)
            n *= 2
        out.append(self.ladder_max)
        return out


@dataclass(frozen=True)
class EpsVerdict:
    eps: float
    verdict: str              # 'pass' | 'fail' | 'inconclusive'
    n_found: int | None       # smallest ladder N witnessing the pass
    max_gap: float            # gap at the top of the ladder
    witness: dict | None      # concrete (n, m, point, gap) for failures


@dataclass(frozen=True)
class CauchyReport:
    mode: str                 # 'cauchy' | 'uniform'
    entries: tuple
    points: int
    ladder: tuple
    label: str = ""

    @property
    def verdict(self):
        if any(e.verdict == "fail" for e in self.entries):
            return "fail"
        if all(e.verdict == "pass" for e in self.entries):
            return "pass"
        return "inconclusive"

    def as_dict(self):
        return {
            "mode": self.mode,
            "verdict": self.verdict,
            "points": self.points,
            "ladder": list(self.ladder),
            "entries": [
                {"eps": e.eps, "verdict": e.verdict, "n_found": e.n_found,
                 "max_gap": e.max_gap, "witness": e.witness}
                for e in self.entries],
        }


def _sheet_tails(rect, which):
    if which == "zero":
        return expr.ZeroTail()
    return rect.tail_provider()


def _ladder_values(seq, rect, budget, include_limit):
    """Evaluate every ladder approximant (and optionally the limit) on
    the sample points, per frozen-tail sheet.

    Returns (values, limits, points) where values[sheet][j] is the
    (npts,) array of the j-th ladder approximant.
    """
    ladder = budget.ladder()
    pts = sample_points(rect, budget.points, budget.dim_cap)
    values = {}
    limits = {}
    for sheet in ("zero", "upper"):
        tail = _sheet_tails(rect, sheet)
        vals = []
        for n in ladder:
            f_n = truncated(seq, n)
            vals.append(f_n.eval_batch(pts, tail=tail))
        values[sheet] = vals
        if include_limit:
            limits[sheet] = seq.limit.eval_batch(pts, tail=tail)
    return values, limits, pts


def _verdict_from_levels(eps, level_gaps, level_witness, ladder):
    """Decide one epsilon row from per-level worst gaps.

    level_gaps[j] is the largest observed gap among pairs at or above
    ladder[j].  Pass needs some level fully below eps; otherwise a
    clearly improving trend at the top is inconclusive (budget ran out
    while shrinking), anything else is a failure with witness.
    """
    for j, g in enumerate(level_gaps):
        if g < eps:
            return EpsVerdict(eps, "pass", ladder[j], level_gaps[-1], None)
    top = level_gaps[-1]
    improving = len(level_gaps) >= 2 and top <= 0.5 * max(level_gaps[0],
                                                          1e-300)
    if improving and top < 2.0 * eps:
        return EpsVerdict(eps, "inconclusive", None, top, None)
    return EpsVerdict(eps, "fail", None, top, level_witness)


def check_truncation_cauchy(seq, budget: SampleBudget = SampleBudget(),
                            label="") -> CauchyReport:
    """Scan sup |f_n-trunc - f_m-trunc| over the sample budget.

    For each epsilon in the grid, passes when some ladder level N has
    every sampled pair n, m >= N below epsilon.  Failures carry a
    concrete witness (n, m, x, gap).
    """
    seq = as_sequence(seq)
    rect = seq.limit.domain
    values, _, pts = _ladder_values(seq, rect, budget, include_limit=False)
    ladder = budget.ladder()
    J = len(ladder)

    # worst gap over pairs with min level >= j, plus witness bookkeeping
    level_gaps = []
    level_witness = None
    per_level = []
    for j in range(J - 1):
        worst = 0.0
        witness = None
        for a in range(j, J - 1):
            for b in range(a + 1, J):
                for sheet in ("zero", "upper"):
                    d = np.abs(values[sheet][a] - values[sheet][b])
                    k = int(np.argmax(d))
                    if d[k] > worst:
                        worst = float(d[k])
                        witness = {"n": ladder[b], "m": ladder[a],
                                   "sheet": sheet, "gap": float(d[k]),
                                   "point": [float(v) for v in pts[k][:8]]}
        per_level.append((worst, witness))
    level_gaps = [w for w, _ in per_level]
    level_witness = per_level[-1][1] if per_level else None

    entries = tuple(_verdict_from_levels(eps, level_gaps, level_witness,
                                         ladder)
                    for eps in budget.eps_grid)
    return CauchyReport("cauchy", entries, budget.points, tuple(ladder),
                        label)


def check_truncation_uniform(seq, budget: SampleBudget = SampleBudget(),
                             label="") -> CauchyReport:
    """Scan sup |f_n-trunc - f_limit| over the sample budget (the
    uniform-convergence side of the Cauchy/uniform equivalence)."""
    seq = as_sequence(seq)
    rect = seq.limit.domain
    values, limits, pts = _ladder_values(seq, rect, budget,
                                         include_limit=True)
    ladder = budget.ladder()
    J = len(ladder)
    gaps = []   # per ladder index: (worst gap vs limit, witness)
    for j in range(J):
        worst, witness = 0.0, None
        for sheet in ("zero", "upper"):
            d = np.abs(values[sheet][j] - limits[sheet])
            k = int(np.argmax(d))
            if d[k] > worst:
                worst = float(d[k])
                witness = {"n": ladder[j], "sheet": sheet,
                           "gap": float(d[k]),
                           "point": [float(v) for v in pts[k][:8]]}
        gaps.append((worst, witness))

    level_gaps = [max(w for w, _ in gaps[j:]) for j in range(J)]
    level_witness = gaps[-1][1]
    entries = tuple(_verdict_from_levels(eps, level_gaps, level_witness,
                                         ladder)
                    for eps in budget.eps_grid)
    return CauchyReport("uniform", entries, budget.points, tuple(ladder),
                        label)


# --------------------------------------------------------------------------
# Closure constructions
# --------------------------------------------------------------------------

def combine_sum(a, b) -> TruncationSequence:
    """Sequence of sums: (f_n + g_n) approximates f + g."""
    a, b = as_sequence(a), as_sequence(b)
    _require_same_domain(a.limit, b.limit)
    fa, fb = a.limit, b.limit
    if fa.is_ast and fb.is_ast:
        body = expr.Bin("+", fa.body, fb.body)
    else:
        ba = fa.body if callable(fa.body) else (
            lambda p, _x=fa: _x.eval_batch(p))
        bb = fb.body if callable(fb.body) else (
            lambda p, _x=fb: _x.eval_batch(p))
        body = lambda p: np.asarray(ba(p)) + np.asarray(bb(p))
    st = None
    if fa.structure is not None and fb.structure is not None:
        st = struct_mod.add_structures(fa.structure, fb.structure)
    bound = (None if fa.bound is None or fb.bound is None
             else fa.bound + fb.bound)
    limit = CoordinateFunction(body, fa.domain, bound,
                               fa.nonnegative and fb.nonnegative, st,
                               None, f"({fa.label}+{fb.label})")
    if a.regular and b.regular:
        return TruncationSequence(limit)
    if (a.regular or b.regular):
        other = b if a.regular else a
        # an additive perturbation carries over to the sum; a scaling of
        # one member does not scale the whole sum, so that case is out
        if other.scale_fn is None:
            return TruncationSequence(limit, shift_fn=other.shift_fn)
    raise UnsupportedCase(
        "only shift-perturbed sequences can be summed")


def combine_scale(k, a) -> TruncationSequence:
    """Sequence of scalings: (k*f_n) approximates k*f."""
    a = as_sequence(a)
    f = a.limit
    k = float(k)
    if f.is_ast:
        body = expr.Bin("*", expr.Num(k), f.body)
    else:
        inner = f.body
        body = lambda p: k * np.asarray(inner(p))
    st = (None if f.structure is None
          else struct_mod.scale_structure(f.structure, k))
    nonneg = f.nonnegative if k >= 0 else f.nonpositive
    nonpos = f.nonpositive if k >= 0 else f.nonnegative
    limit = CoordinateFunction(body, f.domain,
                               None if f.bound is None else abs(k) * f.bound,
                               nonneg, st, None, f"{k}*{f.label}", nonpos)
    if a.regular:
        return TruncationSequence(limit)
    shift = a.shift_fn
    return TruncationSequence(
        limit,
        scale_fn=a.scale_fn,
        shift_fn=None if shift is None else (lambda n: k * shift(n)))


def combine_abs(a) -> TruncationSequence:
    """Sequence of absolute values: |f_n| approximates |f|."""
    a = as_sequence(a)
    f = a.limit
    if f.nonnegative:
        limit = f
    else:
        if f.is_ast:
            body = expr.Call("abs", f.body)
        else:
            inner = f.body
            body = lambda p: np.abs(inner(p))
        # a nonpositive integrand keeps its analytic structure: |f| = -f
        st = (struct_mod.scale_structure(f.structure, -1.0)
              if f.nonpositive and f.structure is not None else None)
        limit = CoordinateFunction(body, f.domain, f.bound, True, st,
                                   None, f"|{f.label}|")
    if not a.regular:
        # |s f + c| has no affine representation in general; keep the
        # generator semantics only for the nonneg-preserving case.
        s0, c0 = a.term_coeffs(1)
        if f.nonnegative and s0 >= 0 and c0 >= 0:
            return TruncationSequence(limit, a.scale_fn, a.shift_fn)
        raise UnsupportedCase(
            "abs of a sign-changing perturbed sequence is not supported")
    return TruncationSequence(limit)


_MODULUS_PROBES = 257


def compose_lipschitz(g, modulus, a, dsl_name=None, series=None,
                      label="") -> TruncationSequence:
    """Sequence g(f_n) for Lipschitz g with declared modulus.

    The modulus is spot-verified on a deterministic grid of value pairs
    spanning the declared range of f (ModulusViolated on a violation;
    an undeclared bound probes [-1, 1]).  When g is one of the DSL
    functions the composed body stays an AST; when the inner structure
    is a bare product and a power series for g is supplied, the
    composition keeps an analytic structure.
    """
    a = as_sequence(a)
    f = a.limit
    hi = f.bound if f.bound is not None else 1.0
    lo = 0.0 if f.nonnegative else -hi
    s = np.linspace(lo, hi, _MODULUS_PROBES)
    gs = np.asarray([float(g(v)) for v in s])
    diff = np.abs(gs[:, None] - gs[None, :])
    dist = np.abs(s[:, None] - s[None, :])
    mask = dist > 0
    worst = float(np.max(diff[mask] / dist[mask]))
    if worst > modulus * (1 + 1e-9):
        raise ModulusViolated(
            f"sampled slope {worst:.6g} exceeds declared modulus "
            f"{modulus:.6g}")

    if f.is_ast and dsl_name in expr.FUNCTIONS:
        body = expr.Call(dsl_name, f.body)
    else:
        inner = (f.body if callable(f.body)
                 else (lambda p, _x=f: _x.eval_batch(p)))
        g_vec = np.vectorize(g, otypes=[float])
        body = lambda p: g_vec(inner(p))

    st = None
    if (series is not None and isinstance(f.structure,
                                          struct_mod.ProductSeries)
            and f.structure.series.key == struct_mod.IDENTITY_SERIES.key):
        st = struct_mod.ProductSeries(series, f.structure.exponents)
    bound = None
    if f.bound is not None:
        grid = np.linspace(lo, hi, 4 * _MODULUS_PROBES)
        bound = float(np.max(np.abs([g(v) for v in grid])))
    limit = CoordinateFunction(body, f.domain, bound, bool(np.all(gs >= 0)),
                               st, (g, modulus),
                               label or f"{dsl_name or 'g'}({f.label})")
    if not a.regular:
        raise UnsupportedCase(
            "composition is only tracked for regular sequences")
    return TruncationSequence(limit)
