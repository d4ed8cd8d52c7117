"""Rectangles ``X_{i>=1} [0, a_i]`` with infinite-product volumes.

A rectangle is stored as a finite prefix of explicit bounds plus a
closed-form tail rule for every later index.  Volumes are accumulated
in log space on the doubling schedule from :mod:`hilbertcube._tails`
and classified as nondegenerate / degenerate / divergent / unknown.
"""

from dataclasses import dataclass, field

import numpy as np

from . import expr
from ._tails import log_product_limit
from .config import VOLUME_DEFAULTS, ConvergenceConfig
from .errors import DegenerateRectangle, NonPositiveBound

__all__ = [
    "NONDEGENERATE", "DEGENERATE", "DIVERGENT", "UNKNOWN",
    "TailRule", "ConvergentRectangle", "VolumeReport",
    "volume", "tail_product_bound", "builtin_catalog",
    "unit_cube", "wallis_rectangle", "degenerate_half",
]

NONDEGENERATE = "nondegenerate"
DEGENERATE = "degenerate"
DIVERGENT = "divergent"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class TailRule:
    """Closed-form bound rule i -> a_i for indices beyond the prefix.

    Either a constant or an expression AST over the index variable
    ``i``.  analytic_product, when set, is the exact value of
    prod_{i > prefix} a_i together with a provenance note, letting
    golden values bypass iteration budgets.
    """

    constant: float | None = None
    formula: object = None  # expr AST in the free variable name below
    var: str = "i"
    analytic_product: float | None = None
    provenance: str = ""

    def __post_init__(self):
        if (self.constant is None) == (self.formula is None):
            raise ValueError("exactly one of constant/formula required")
        if self.constant is not None and self.constant <= 0:
            raise NonPositiveBound(f"tail constant {self.constant} <= 0")

    @classmethod
    def from_source(cls, src, analytic_product=None, provenance=""):
        ast = _unbound_formula(src) if isinstance(src, str) else src
        return cls(formula=ast, analytic_product=analytic_product,
                   provenance=provenance)

    def block(self, i0, i1):
        """Bounds a_i for i in [i0, i1) as an ndarray; validates > 0."""
        if self.constant is not None:
            return np.full(i1 - i0, self.constant)
        idx = np.arange(i0, i1, dtype=float)
        vals = np.asarray(
            expr._ev_scalar(self.formula, {self.var: idx}), dtype=float)
        vals = np.broadcast_to(vals, idx.shape)
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            bad = int(idx[np.argmax(~((vals > 0) & np.isfinite(vals)))])
            raise NonPositiveBound(f"tail rule gives a_{bad} <= 0")
        return vals


def _unbound_formula(src):
    """Parse a tail formula whose single free variable is 'i'."""
    # The integrand grammar rejects unbound index variables, so tail
    # rules are parsed with 'i' artificially bound and then unwrapped.
    wrapped = expr.parse(f"sum(i,1,1,{src})")
    return wrapped.body


@dataclass(frozen=True)
class ConvergentRectangle:
    """Infinite rectangle with explicit prefix bounds and a tail rule."""

    prefix: tuple = ()
    tail: TailRule = field(default_factory=lambda: TailRule(constant=1.0))
    name: str = ""

    def __post_init__(self):
        pref = tuple(float(a) for a in self.prefix)
        if any(a <= 0 for a in pref):
            raise NonPositiveBound("prefix bounds must be positive")
        object.__setattr__(self, "prefix", pref)

    # -- bounds ------------------------------------------------------------

    def upper(self, i):
        """Bound a_i of the i-th interval (1-based)."""
        if i < 1:
            raise IndexError("interval indices are 1-based")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return float(self.tail.block(i, i + 1)[0])

    def uppers(self, n):
        """Bounds a_1..a_n as an ndarray."""
        m = len(self.prefix)
        head = np.asarray(self.prefix[:n], dtype=float)
        if n <= m:
            return head
        return np.concatenate([head, self.tail.block(m + 1, n + 1)])

    def bounds_block(self, i0, i1):
        """Bounds a_i for i in [i0, i1)."""
        m = len(self.prefix)
        if i1 <= m + 1:
            return np.asarray(self.prefix[i0 - 1:i1 - 1], dtype=float)
        if i0 > m:
            return self.tail.block(i0, i1)
        return np.concatenate([
            np.asarray(self.prefix[i0 - 1:m], dtype=float),
            self.tail.block(m + 1, i1)])

    def tail_provider(self):
        """Tail provider handing rectangle bounds to the evaluator."""
        if self.tail.constant is not None and not self.prefix:
            return expr.ConstantTail(self.tail.constant)
        key = (self.name, self.prefix,
               self.tail.constant, expr.pretty(self.tail.formula)
               if self.tail.formula is not None else None)
        return expr.FunctionTail(
            lambda idx: self.bounds_block(int(idx[0]), int(idx[-1]) + 1),
            key)

    # -- classification ----------------------------------------------------

    def classify(self, cfg: ConvergenceConfig = VOLUME_DEFAULTS):
        """Classify (cached); returns one of the module constants."""
        key = (self, cfg.tol, cfg.max_terms)
        cached = _CLASSIFICATION_CACHE.get(key)
        if cached is None:
            cached = volume(self, cfg).classification
            _CLASSIFICATION_CACHE[key] = cached
        return cached

    def is_unit_cube(self):
        return not self.prefix and self.tail.constant == 1.0


_CLASSIFICATION_CACHE = {}


@dataclass(frozen=True)
class VolumeReport:
    """Volume value (when defined and finite) plus classification."""

    value: float | None
    classification: str
    n_terms: int
    residual: float

    def as_dict(self):
        return {
            "value": self.value,
            "classification": self.classification,
            "n_terms": self.n_terms,
            "residual": self.residual,
        }


def volume(rect: ConvergentRectangle,
           cfg: ConvergenceConfig = VOLUME_DEFAULTS) -> VolumeReport:
    """Volume of the rectangle as the limit of partial bound products.

    An analytic tail product, when present, is used exactly (times the
    prefix product).  Otherwise log partial products are accumulated on
    a doubling schedule: Cauchy in product space means nondegenerate,
    a log-sum sinking below the underflow floor (or a persistent
    downward trend) means degenerate, the mirror upward case divergent,
    and exhausting cfg.max_terms without a verdict reports unknown
    rather than a silent value.
    """
    prefix_prod = float(np.prod(rect.prefix)) if rect.prefix else 1.0
    if rect.tail.analytic_product is not None:
        val = prefix_prod * rect.tail.analytic_product
        cls = NONDEGENERATE if val > 0 else DEGENERATE
        return VolumeReport(val, cls, len(rect.prefix), 0.0)

    def log_block(i0, i1):
        return np.log(rect.bounds_block(i0, i1))

    rep = log_product_limit(log_block, 1, cfg)
    if rep.status == "converged":
        return VolumeReport(float(np.exp(rep.value)), NONDEGENERATE,
                            rep.n_terms, rep.residual)
    if rep.status == "to_zero":
        return VolumeReport(0.0, DEGENERATE, rep.n_terms, rep.residual)
    if rep.status == "diverged":
        return VolumeReport(None, DIVERGENT, rep.n_terms, rep.residual)
    return VolumeReport(None, UNKNOWN, rep.n_terms, rep.residual)


def tail_product_bound(rect: ConvergentRectangle, n: int, m: int,
                       cfg: ConvergenceConfig = VOLUME_DEFAULTS) -> float:
    """|prod_{k=n}^{m} a_k - 1|, computed in log space.

    Only meaningful on nondegenerate rectangles: the underlying limit
    argument divides by the (then nonzero) product limit, so degenerate
    and divergent rectangles are rejected.
    """
    if not (m >= n >= 1):
        raise ValueError("need m >= n >= 1")
    if rect.classify(cfg) != NONDEGENERATE:
        raise DegenerateRectangle(
            "tail products are only controlled on nondegenerate rectangles")
    logs = np.log(rect.bounds_block(n, m + 1))
    return float(abs(np.expm1(np.sum(logs))))


# --------------------------------------------------------------------------
# Built-in rectangles
# --------------------------------------------------------------------------

def unit_cube():
    """All bounds 1; volume exactly 1."""
    return ConvergentRectangle(
        tail=TailRule(constant=1.0, analytic_product=1.0,
                      provenance="constant-1 product"),
        name="unit")


def wallis_rectangle():
    """Bounds 4i^2/(4i^2-1); volume is the Wallis product pi/2."""
    return ConvergentRectangle(
        tail=TailRule(formula=_unbound_formula("4*i^2/(4*i^2 - 1)"),
                      analytic_product=float(np.pi / 2),
                      provenance="Wallis product"),
        name="wallis")


def degenerate_half():
    """All bounds 1/2; partial products 2^-n sink to volume 0."""
    return ConvergentRectangle(
        tail=TailRule(constant=0.5, analytic_product=0.0,
                      provenance="geometric underflow"),
        name="degenerate_half")


def builtin_catalog():
    """Named rectangles used throughout the test and verify suites."""
    return {
        "unit": unit_cube(),
        "wallis": wallis_rectangle(),
        "degenerate_half": degenerate_half(),
    }


def from_selector(text):
    """Build a rectangle from a CLI selector.

    Accepts a catalog name or ``[prefix: a, b, ...;] tail: <expr in i>``
    (e.g. ``"tail: 2"`` or ``"prefix: 0.5, 2; tail: 4*i^2/(4*i^2-1)"``).
    """
    catalog = builtin_catalog()
    key = text.strip()
    if key in catalog:
        return catalog[key]
    prefix = ()
    body = key
    if body.startswith("prefix:"):
        head, _, body = body.partition(";")
        prefix = tuple(float(tok) for tok in
                       head[len("prefix:"):].split(",") if tok.strip())
        body = body.strip()
    if not body.startswith("tail:"):
        raise ValueError(
            f"unknown rectangle {text!r}; use a catalog name "
            f"({', '.join(sorted(catalog))}) or 'tail: <expr in i>'")
    src = body[len("tail:"):].strip()
    return ConvergentRectangle(
        prefix=prefix, tail=TailRule.from_source(_unbound_formula(src)),
        name=text.strip())
