"""Block accumulation of one-dimensional series/product limits.

Everything infinite in this package bottoms out here: partial sums or
log-partial-products are advanced in vectorized blocks and checked on a
doubling schedule with a relative Cauchy rule.  Verdicts are explicit;
running out of budget is reported, never silently truncated.
"""

from dataclasses import dataclass

import numpy as np

from .config import ConvergenceConfig
from .errors import BudgetExhausted

_BLOCK = 2**15

# Half of log(DBL_MIN); a running log-sum below this is an unambiguous
# underflow toward zero.
LOG_UNDERFLOW = np.log(np.finfo(float).tiny) / 2.0
LOG_OVERFLOW = -LOG_UNDERFLOW


@dataclass(frozen=True)
class LimitReport:
    """Outcome of an accumulation run.

    status is one of 'converged', 'to_zero', 'diverged', 'unknown';
    value is the partial aggregate at n_terms (sum-space for sums,
    log-space for products); residual is the last checkpoint increment.
    """

    status: str
    value: float
    n_terms: int
    residual: float


def _checkpoints(lo, max_terms):
    """Doubling checkpoint sizes lo, 2*lo, ... capped at lo+max_terms-1."""
    last = lo + max_terms - 1
    n = max(2 * lo, lo + 1)
    while n < last:
        yield n
        n *= 2
    yield last


def sum_limit(term_block, lo, cfg: ConvergenceConfig, signed_trend=True):
    """Accumulate sum_{i >= lo} term(i) until the doubling Cauchy test holds.

    term_block(i0, i1) must return term values for i in [i0, i1) as an
    ndarray.  Convergence: two consecutive checkpoints with
    |S_chk - S_prev| < tol * max(1, |S_chk|).  With signed_trend set,
    window consecutive checkpoint increments of constant sign that fail
    to shrink (ratio >= 0.95, i.e. harmonic-or-slower decay) report
    divergence.  The trend rule is a heuristic: terms decaying like
    i^-(1+eps) for tiny eps can be misjudged within any finite budget.
    """
    total = 0.0
    prev = None
    hits = 0
    trend = 0
    last_inc = None
    i = lo
    for chk in _checkpoints(lo, cfg.max_terms):
        while i <= chk:
            j = min(chk, i + _BLOCK - 1)
            total += float(np.sum(term_block(i, j + 1)))
            i = j + 1
        if prev is not None:
            inc = total - prev
            if abs(inc) < cfg.tol * max(1.0, abs(total)):
                hits += 1
                if hits >= 2:
                    return LimitReport("converged", total, i - lo, abs(inc))
            else:
                hits = 0
            if signed_trend and last_inc is not None:
                same_sign = inc * last_inc > 0
                not_shrinking = abs(inc) >= 0.95 * abs(last_inc)
                trend = trend + 1 if (same_sign and not_shrinking) else 0
                if trend >= cfg.window:
                    return LimitReport("diverged", total, i - lo, abs(inc))
            last_inc = inc
        prev = total
    res = abs(last_inc) if last_inc is not None else float("inf")
    return LimitReport("unknown", total, i - lo, res)


def log_product_limit(log_block, lo, cfg: ConvergenceConfig):
    """Accumulate log prod_{i >= lo} a_i with degenerate/divergent detection.

    log_block(i0, i1) returns log a_i for i in [i0, i1).  The returned
    value is the log of the partial product.  status 'to_zero' means the
    product underflows to 0, 'diverged' that it grows without bound.
    The Cauchy test runs in product space: |p_chk - p_prev| <
    tol * max(1, |p_chk|), matching the doubling-schedule decision rule.
    """
    logsum = 0.0
    prev_log = None
    hits = 0
    trend = 0
    last_inc = None
    i = lo
    for chk in _checkpoints(lo, cfg.max_terms):
        while i <= chk:
            j = min(chk, i + _BLOCK - 1)
            logsum += float(np.sum(log_block(i, j + 1)))
            i = j + 1
        if logsum < LOG_UNDERFLOW:
            return LimitReport("to_zero", logsum, i - lo, abs(logsum))
        if logsum > LOG_OVERFLOW:
            return LimitReport("diverged", logsum, i - lo, abs(logsum))
        if prev_log is not None:
            inc = logsum - prev_log
            p_now, p_prev = np.exp(logsum), np.exp(prev_log)
            if abs(p_now - p_prev) < cfg.tol * max(1.0, abs(p_now)):
                hits += 1
                if hits >= 2:
                    return LimitReport("converged", logsum, i - lo,
                                       abs(p_now - p_prev))
            else:
                hits = 0
            if last_inc is not None:
                same_sign = inc * last_inc > 0
                not_shrinking = abs(inc) >= 0.95 * abs(last_inc)
                trend = trend + 1 if (same_sign and not_shrinking) else 0
                if trend >= cfg.window:
                    status = "to_zero" if inc < 0 else "diverged"
                    return LimitReport(status, logsum, i - lo, abs(inc))
            last_inc = inc
        prev_log = logsum
    res = abs(last_inc) if last_inc is not None else float("inf")
    return LimitReport("unknown", logsum, i - lo, res)


def sum_limit_or_raise(term_block, lo, cfg):
    rep = sum_limit(term_block, lo, cfg)
    if rep.status == "unknown":
        raise BudgetExhausted(
            f"series did not settle within {cfg.max_terms} terms "
            f"(residual {rep.residual:.3g})")
    return rep
