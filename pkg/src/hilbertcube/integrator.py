"""Truncation-dimension integration engines.

The integral over an infinite rectangle is the limit of integrals of
the n-coordinate restrictions over the first n intervals.  integrate()
walks a doubling dimension ladder, computing each finite integral with
the cheapest adequate engine:

* analytic     per-dimension formulas for structured integrands
* tensor_quad  Gauss-Legendre tensor grids in low dimension
* monte_carlo  counter-seeded product-measure sampling beyond that

and stops when two consecutive doublings change the value by less than
the relative tolerance.  Degenerate rectangles short-circuit to 0 with
a numeric trace that exhibits the vanishing.

integrate_product_form() evaluates the limit of a product-series
integrand directly (term-by-term infinite moment products with
closed-form tail corrections); it is the high-precision path used by
the dual-route golden tests.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import structure as struct_mod
from .config import INTEGRATE_DEFAULTS, ConvergenceConfig, dim_ladder
from .errors import (DimensionTooLarge, EngineFailure, UnsupportedCase)
from .funcspace import (CoordinateFunction, TruncationSequence, as_sequence,
                        restricted)
from .rectangle import (DEGENERATE, DIVERGENT, NONDEGENERATE,
                        ConvergentRectangle, volume)

__all__ = [
    "IntegralResult", "integrate", "integrate_product_form",
    "monte_carlo_truncated", "tensor_truncated",
    "partial_integrate", "check_partial_integration",
    "check_bound", "check_uniqueness",
    "BoundReport", "PartialIntegrationReport",
]

ENGINE_ANALYTIC = "analytic"
ENGINE_QUAD = "tensor_quad"
ENGINE_MC = "monte_carlo"

STATUS_CONVERGED = "converged"
STATUS_BUDGET = "budget_exhausted"
STATUS_DEGENERATE = "degenerate_zero"


@dataclass(frozen=True)
class IntegralResult:
    """Value of a truncation-limit integral plus how it was obtained.

    error_estimate combines the last ladder increment (truncation
    component) with the engine's own error (sampling standard error for
    Monte Carlo, series remainder for the analytic limit).  stderr is
    the sampling-only component, zero for deterministic engines.
    """

    value: float
    n_dims_used: int
    engine: str
    error_estimate: float
    status: str
    trace: tuple
    stderr: float = 0.0

    def as_dict(self):
        return {
            "value": self.value,
            "n_dims": self.n_dims_used,
            "engine": self.engine,
            "error_estimate": self.error_estimate,
            "stderr": self.stderr,
            "status": self.status,
            "trace": [[int(n), v] for n, v in self.trace],
        }


# --------------------------------------------------------------------------
# Engines for one fixed truncation dimension
# --------------------------------------------------------------------------

def _effective_order(cfg, n):
    q = min(cfg.quad_order, int(cfg.max_tensor_points ** (1.0 / n)))
    return max(q, 2)


def tensor_truncated(fn, rect: ConvergentRectangle, n: int,
                     cfg: ConvergenceConfig = INTEGRATE_DEFAULTS) -> float:
    """Gauss-Legendre tensor-product integral of an n-variable function
    over the first n intervals.  fn takes an (npts, n) block.

    The grid is never materialized whole: flat indices are decoded in
    chunks (mixed radix), so memory stays bounded while the per-dim
    order adapts to keep order**n under cfg.max_tensor_points.
    """
    if n > cfg.quad_max_dims:
        raise DimensionTooLarge(
            f"tensor quadrature capped at {cfg.quad_max_dims} dims "
            f"(asked for {n})")
    order = _effective_order(cfg, n)
    ref_x, ref_w = leggauss(order)
    a = rect.uppers(n)
    nodes = 0.5 * (ref_x[np.newaxis, :] + 1.0) * a[:, np.newaxis]
    weights = 0.5 * ref_w[np.newaxis, :] * a[:, np.newaxis]
    total_pts = order**n
    chunk = 1 << 16
    acc = []
    for start in range(0, total_pts, chunk):
        idx = np.arange(start, min(total_pts, start + chunk))
        rem = idx.copy()
        coords = np.empty((idx.size, n))
        wts = np.ones(idx.size)
        for d in range(n - 1, -1, -1):
            dig = rem % order
            rem //= order
            coords[:, d] = nodes[d, dig]
            wts *= weights[d, dig]
        acc.append(float(np.dot(wts, np.asarray(fn(coords), dtype=float))))
    return float(np.sum(acc))


_MC_CHUNK = 1 << 16


def monte_carlo_truncated(fn, rect: ConvergentRectangle, n: int,
                          cfg: ConvergenceConfig = INTEGRATE_DEFAULTS,
                          n_samples: int | None = None):
    """Monte Carlo integral of an n-variable function over the first n
    intervals; returns (value, stderr).

    Sampling is uniform per dimension on [0, a_i] (mean times box
    volume).  The generator is counter-based and keyed on (seed, n), and
    accumulation happens in fixed-size chunks reduced in a fixed order,
    so results are bit-for-bit reproducible.
    """
    n_samples = int(n_samples or cfg.mc_samples)
    key = np.array([np.uint64(cfg.seed & (2**64 - 1)), np.uint64(n)],
                   dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    a = rect.uppers(n)
    log_vol = float(np.sum(np.log(a)))
    sums, sqs = [], []
    done = 0
    while done < n_samples:
        m = min(_MC_CHUNK, n_samples - done)
        u = rng.random((m, n)) * a[np.newaxis, :]
        v = np.asarray(fn(u), dtype=float)
        sums.append(float(np.sum(v)))
        sqs.append(float(np.sum(v * v)))
        done += m
    mean = float(np.sum(sums)) / n_samples
    var = max(float(np.sum(sqs)) / n_samples - mean * mean, 0.0)
    vol_n = float(np.exp(log_vol))
    stderr = float(np.sqrt(var / n_samples)) * vol_n
    return mean * vol_n, stderr


# --------------------------------------------------------------------------
# The truncation ladder
# --------------------------------------------------------------------------

_CLI_ENGINES = {"auto": "auto", "analytic": ENGINE_ANALYTIC,
                "quad": ENGINE_QUAD, "mc": ENGINE_MC,
                ENGINE_QUAD: ENGINE_QUAD, ENGINE_MC: ENGINE_MC}


def _pick_engine(requested, has_structure, n, cfg):
    if requested == ENGINE_ANALYTIC:
        if not has_structure:
            raise EngineFailure(
                "analytic engine requires a structured integrand")
        return ENGINE_ANALYTIC
    if requested == ENGINE_QUAD:
        return ENGINE_QUAD
    if requested == ENGINE_MC:
        return ENGINE_MC
    if has_structure:
        return ENGINE_ANALYTIC
    return ENGINE_QUAD if n <= cfg.quad_max_dims else ENGINE_MC


def _ladder_for(requested, has_structure, cfg, mc_cap=32):
    if requested == ENGINE_ANALYTIC or (requested == "auto"
                                        and has_structure):
        return dim_ladder(cfg.max_dims)
    if requested == ENGINE_QUAD:
        return dim_ladder(min(cfg.max_dims, cfg.quad_max_dims))
    return dim_ladder(min(cfg.max_dims, mc_cap))


def _step_value(seq, rect, n, engine, cfg, ladder_eval):
    """One truncated integral I_n; returns (value, stderr)."""
    if engine == ENGINE_ANALYTIC:
        s, c = seq.term_coeffs(n)
        base = ladder_eval.value_at(n)
        if c != 0.0:
            vol_n = float(np.exp(ladder_eval._log_pn))
            return s * base + c * vol_n, 0.0
        return s * base, 0.0
    hat = restricted(seq, n)
    if engine == ENGINE_QUAD:
        return tensor_truncated(hat.eval_batch, rect, n, cfg), 0.0
    return monte_carlo_truncated(hat.eval_batch, rect, n, cfg)


def integrate(f, rect: ConvergentRectangle,
              cfg: ConvergenceConfig = INTEGRATE_DEFAULTS,
              engine: str = "auto", force: bool = False) -> IntegralResult:
    """Integral of f (a function or truncation sequence) over rect.

    Degenerate rectangles return 0 exactly (with a short numeric trace
    exhibiting the decay); divergent or unclassifiable rectangles are
    rejected.  Unbounded integrands (no declared bound) on rectangles
    other than the unit cube are outside the proven scope and require
    force=True.
    """
    seq = as_sequence(f)
    try:
        requested = _CLI_ENGINES[engine]
    except KeyError:
        raise EngineFailure(f"unknown engine {engine!r}")
    vol = volume(rect)
    if vol.classification == DIVERGENT:
        raise UnsupportedCase("rectangle volume diverges")
    if vol.classification not in (NONDEGENERATE, DEGENERATE):
        raise UnsupportedCase("rectangle volume could not be classified")
    if (seq.limit.bound is None and not rect.is_unit_cube() and not force):
        raise UnsupportedCase(
            "no declared bound: integration off the unit cube is only "
            "supported for bounded integrands (pass force=True to override)")

    structure = seq.limit.structure
    has_structure = structure is not None
    if requested == ENGINE_ANALYTIC and not has_structure:
        raise EngineFailure("analytic engine requires a structured integrand")

    if vol.classification == DEGENERATE:
        return _degenerate_result(seq, rect, cfg, requested, has_structure)

    ladder_eval = (struct_mod.LadderEvaluator(structure, rect)
                   if has_structure else None)
    ladder = _ladder_for(requested, has_structure, cfg)
    trace = []
    hits = 0
    prev = None
    last_stderr = 0.0
    eng_used = None
    delta = float("inf")
    for n in ladder:
        eng_used = _pick_engine(requested, has_structure, n, cfg)
        val, stderr = _step_value(seq, rect, n, eng_used, cfg, ladder_eval)
        trace.append((n, val))
        last_stderr = stderr
        if prev is not None:
            delta = abs(val - prev)
            if delta < cfg.tol * max(1.0, abs(val)):
                hits += 1
                if hits >= 2:
                    return IntegralResult(val, n, eng_used,
                                          delta + stderr, STATUS_CONVERGED,
                                          tuple(trace), stderr)
            else:
                hits = 0
        prev = val
    err = (delta if np.isfinite(delta) else abs(prev)) + last_stderr
    return IntegralResult(prev, ladder[-1], eng_used, err, STATUS_BUDGET,
                          tuple(trace), last_stderr)


def _degenerate_result(seq, rect, cfg, requested, has_structure):
    ladder_eval = (struct_mod.LadderEvaluator(seq.limit.structure, rect)
                   if has_structure else None)
    cap = cfg.max_dims if has_structure else min(cfg.max_dims, 16)
    trace = []
    for n in dim_ladder(min(cap, 64)):
        eng = _pick_engine(requested, has_structure, n, cfg)
        small_cfg = cfg.with_(mc_samples=min(cfg.mc_samples, 2**16))
        val, _ = _step_value(seq, rect, n, eng, small_cfg, ladder_eval)
        trace.append((n, val))
        if abs(val) < 1e-300:
            break
    return IntegralResult(0.0, trace[-1][0], ENGINE_ANALYTIC if
                          has_structure else eng, 0.0, STATUS_DEGENERATE,
                          tuple(trace), 0.0)


# --------------------------------------------------------------------------
# Product-form limit (termwise series with tail-corrected products)
# --------------------------------------------------------------------------

def _as_series_rule(psi_coeffs):
    if isinstance(psi_coeffs, struct_mod.PowerSeriesRule):
        return psi_coeffs
    if callable(psi_coeffs):
        return struct_mod.PowerSeriesRule(psi_coeffs, ("user", id(psi_coeffs)))
    seq = [float(c) for c in psi_coeffs]
    return struct_mod.PowerSeriesRule(
        lambda k: seq[k] if k < len(seq) else 0.0, ("seq", tuple(seq)))


def _as_exponent_rule(phi):
    """Exponent rule p_i of a monomial factor x_i^{p_i}.

    Accepts an ExponentRule, a source string / AST in the index variable
    i, or a vectorized callable.  Recognizes 1/i^2 and 2^-i shapes (by
    probing) to enable closed-form tail corrections.
    """
    if isinstance(phi, struct_mod.ExponentRule):
        return phi
    if isinstance(phi, str) or hasattr(phi, "__dataclass_fields__"):
        from .rectangle import _unbound_formula
        from . import expr as _expr
        ast = _unbound_formula(phi) if isinstance(phi, str) else phi
        fn = lambda i: np.broadcast_to(
            np.asarray(_expr._ev_scalar(ast, {"i": i}), dtype=float), i.shape)
        key = ("src", _expr.pretty(ast))
    elif callable(phi):
        fn = lambda i: np.broadcast_to(np.asarray(phi(i), dtype=float),
                                       np.shape(i))
        key = ("callable", id(phi))
    else:
        raise TypeError(f"cannot interpret exponent rule {phi!r}")
    probe = np.arange(1.0, 41.0)
    vals = fn(probe)
    if np.allclose(vals, 1.0 / probe**2, rtol=1e-13, atol=0):
        return struct_mod.InverseSquareExponents()
    if np.allclose(vals, 2.0**-probe, rtol=1e-13, atol=0):
        return struct_mod.GeometricExponents()
    return struct_mod.CallableExponents(fn, key)


def integrate_product_form(psi_coeffs, phi, rect: ConvergentRectangle,
                           cfg: ConvergenceConfig = INTEGRATE_DEFAULTS
                           ) -> IntegralResult:
    """Limit integral of psi(prod_i x_i^{p_i}) by termwise expansion.

    value = sum_k c_k prod_i m_k(i) with m_k(i) the k-th moment of the
    i-th factor; the k-series stops on the relative rule and each
    infinite moment product uses explicit factors plus closed-form tail
    corrections on the unit cube.  Raises SeriesDivergence when terms
    grow five times in a row.
    """
    series = _as_series_rule(psi_coeffs)
    exponents = _as_exponent_rule(phi)
    ps = struct_mod.ProductSeries(series, exponents)
    vol = volume(rect)
    if vol.classification == DIVERGENT:
        raise UnsupportedCase("rectangle volume diverges")
    if vol.classification == DEGENERATE:
        trace = tuple((n, struct_mod.truncated_integral(ps, rect, n))
                      for n in dim_ladder(64))
        return IntegralResult(0.0, trace[-1][0], ENGINE_ANALYTIC, 0.0,
                              STATUS_DEGENERATE, trace)
    value, remainder, kmax = struct_mod.product_series_limit(ps, rect, cfg)
    trace = tuple((n, struct_mod.truncated_integral(ps, rect, n))
                  for n in dim_ladder(64))
    return IntegralResult(value, 0, ENGINE_ANALYTIC, remainder,
                          STATUS_CONVERGED, trace)


# --------------------------------------------------------------------------
# Partial integration over the leading coordinates of the unit cube
# --------------------------------------------------------------------------

def _partial_structure(s, r):
    if isinstance(s, struct_mod.StructSum):
        parts = [_partial_structure(p, r) for p in s.parts]
        if any(p is None for p in parts):
            return None
        return struct_mod.StructSum(tuple(parts))
    if isinstance(s, struct_mod.AffineSum):
        c_head = s.coeff.block(1, r + 1)
        return struct_mod.AffineSum(s.const + float(np.sum(c_head)) / 2.0,
                                    s.coeff.shifted(r))
    if isinstance(s, struct_mod.ProductSeries):
        p_head = s.exponents.block(1, r + 1)
        base = s.series

        def weighted(k, _p=p_head, _base=base):
            if k == 0:
                return _base.coeff(0)
            return _base.coeff(k) * float(np.prod(1.0 / (k * _p + 1.0)))

        return struct_mod.ProductSeries(
            struct_mod.PowerSeriesRule(weighted, (base.key, "partial", r)),
            s.exponents.shifted(r))
    return None


def partial_integrate(f: CoordinateFunction, r: int,
                      cfg: ConvergenceConfig = INTEGRATE_DEFAULTS
                      ) -> CoordinateFunction:
    """Integrate out the first r unit-cube coordinates.

    Returns t -> integral of f(x_1..x_r, t_1, t_2, ...) over [0,1]^r.
    Structured integrands transform exactly (shifted coefficient or
    weighted-series rules); anything else is wrapped in r-dimensional
    tensor quadrature per evaluation, capped at cfg.quad_max_dims.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not f.domain.is_unit_cube():
        raise UnsupportedCase("partial integration is defined on the "
                              "unit cube")
    st = _partial_structure(f.structure, r) if f.structure is not None \
        else None

    if st is not None and isinstance(st, struct_mod.AffineSum):
        # exact affine body: const + sum_j c_{j+r} t_j
        shifted = st

        def body(pts, _st=shifted):
            pts = np.atleast_2d(pts)
            d = pts.shape[1]
            c = _st.coeff.block(1, d + 1)
            return _st.const + pts @ c

    elif st is not None and isinstance(st, struct_mod.ProductSeries):
        def body(pts, _st=st):
            pts = np.atleast_2d(pts)
            d = pts.shape[1]
            p = _st.exponents.block(1, d + 1)
            t = np.prod(pts ** p[np.newaxis, :], axis=1)
            return struct_mod.apply_power_series(_st.series, t)

    else:
        if r > cfg.quad_max_dims:
            raise DimensionTooLarge(
                f"partial integration without structure is capped at "
                f"{cfg.quad_max_dims} dims (asked for {r})")
        order = _effective_order(cfg, r)
        ref_x, ref_w = leggauss(order)
        nodes = 0.5 * (ref_x + 1.0)
        wts1 = 0.5 * ref_w
        grids = np.meshgrid(*([nodes] * r), indexing="ij")
        wgrids = np.meshgrid(*([wts1] * r), indexing="ij")
        qpts = np.stack([g.ravel() for g in grids], axis=1)
        qw = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)

        def body(pts, _f=f, _qpts=qpts, _qw=qw):
            pts = np.atleast_2d(pts)
            npts, d = pts.shape
            nq = _qpts.shape[0]
            block = np.empty((npts * nq, r + d))
            block[:, :r] = np.tile(_qpts, (npts, 1))
            block[:, r:] = np.repeat(pts, nq, axis=0)
            vals = _f.eval_batch(block).reshape(npts, nq)
            return vals @ _qw

    return CoordinateFunction(
        body, f.domain, f.bound, f.nonnegative, st, None,
        f"avg[1..{r}]({f.label})" if f.label else f"avg[1..{r}]")


@dataclass(frozen=True)
class PartialIntegrationReport:
    lhs: IntegralResult
    rhs: IntegralResult
    gap: float

    def as_dict(self):
        return {"lhs": self.lhs.as_dict(), "rhs": self.rhs.as_dict(),
                "gap": self.gap}


def check_partial_integration(f: CoordinateFunction, r: int,
                              cfg: ConvergenceConfig = INTEGRATE_DEFAULTS,
                              engine="auto") -> PartialIntegrationReport:
    """Both sides of 'integrating out leading coordinates preserves the
    integral' on the unit cube."""
    lhs = integrate(f, f.domain, cfg, engine=engine)
    g = partial_integrate(f, r, cfg)
    rhs = integrate(g, f.domain, cfg, engine=engine)
    return PartialIntegrationReport(lhs, rhs, abs(lhs.value - rhs.value))


# --------------------------------------------------------------------------
# Bound and uniqueness checks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    integral: IntegralResult
    bound: float
    bound_times_volume: float
    holds: bool

    def as_dict(self):
        return {"integral": self.integral.as_dict(), "bound": self.bound,
                "bound_times_volume": self.bound_times_volume,
                "holds": self.holds}


def check_bound(f, rect: ConvergentRectangle,
                cfg: ConvergenceConfig = INTEGRATE_DEFAULTS) -> BoundReport:
    """Evaluates integral <= M * vol(rect) for the declared bound M."""
    seq = as_sequence(f)
    m = seq.limit.bound
    if m is None:
        raise UnsupportedCase("check_bound needs a declared bound")
    res = integrate(seq, rect, cfg)
    vol = volume(rect)
    rhs = m * (vol.value if vol.value is not None else float("inf"))
    slack = 10.0 * cfg.tol * max(1.0, abs(rhs))
    return BoundReport(res, m, rhs, bool(res.value <= rhs + slack))


def check_uniqueness(seq_a, seq_b, rect: ConvergentRectangle,
                     cfg: ConvergenceConfig = INTEGRATE_DEFAULTS) -> float:
    """|integral along sequence A - integral along sequence B| for two
    sequences sharing a limit."""
    a, b = as_sequence(seq_a), as_sequence(seq_b)
    if a.limit.body is not b.limit.body and a.limit != b.limit:
        raise UnsupportedCase("sequences must share their limit function")
    ra = integrate(a, rect, cfg)
    rb = integrate(b, rect, cfg)
    return abs(ra.value - rb.value)
