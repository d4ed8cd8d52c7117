"""Closed-form golden values for the numeric engines.

These series/special-function evaluations are the independent side of
every dual-route check: the integration engines must reproduce them,
they never call the engines.
"""

from dataclasses import dataclass
from math import factorial, pi, sinh, sqrt

import numpy as np

__all__ = [
    "SeriesValue", "csch", "wallis_product", "csch_series",
    "infinite_ratio_product", "cosh_series",
]


@dataclass(frozen=True)
class SeriesValue:
    value: float
    terms_used: int
    remainder_bound: float

    def as_dict(self):
        return {"value": self.value, "terms_used": self.terms_used,
                "remainder_bound": self.remainder_bound}


def csch(z):
    """Hyperbolic cosecant 1/sinh(z); exponential branch for large z so
    huge arguments underflow gracefully instead of overflowing."""
    if z <= 0:
        raise ValueError("csch is evaluated for z > 0 only")
    if z > 30.0:
        e = np.exp(-z)
        return float(2.0 * e / (1.0 - e * e))
    return 1.0 / sinh(z)


def wallis_product(tol=1e-10, max_level=22):
    """pi/2 as the limit of prod 4i^2/(4i^2-1).

    Plain partial products close at O(1/N); two Richardson levels on the
    doubling sequence P_N, P_2N, P_4N remove the 1/N and 1/N^2 terms,
    reaching ~1e-12 by N ~ 2^14.  Flagged: this is an accelerated
    partial-product evaluation, not the closed-form constant.
    """
    def partial(n):
        i = np.arange(1, n + 1, dtype=float)
        return float(np.exp(np.sum(np.log(4 * i * i) - np.log(4 * i * i - 1))))

    prev = None
    n = 64
    while n <= 2**max_level:
        p1, p2, p4 = partial(n), partial(2 * n), partial(4 * n)
        r1 = 2 * p2 - p1
        r2 = 2 * p4 - p2
        acc = (4 * r2 - r1) / 3.0
        if prev is not None and abs(acc - prev) < tol:
            return SeriesValue(acc, 4 * n, abs(acc - prev))
        prev = acc
        n *= 2
    return SeriesValue(prev, 2 * n, float("nan"))


def wallis_partial(n):
    """Plain partial product of the first n factors (exact rationals in
    float arithmetic; used by the tail-product tests)."""
    i = np.arange(1, n + 1, dtype=float)
    return float(np.prod(4 * i * i / (4 * i * i - 1)))


def csch_series(tol=1e-12, kmax=400):
    """1/2 + sum_{k>=1} (pi / 2^(k+1)) sqrt(k) csch(pi sqrt(k)).

    The k=0 term is exactly 1/2; later terms decay faster than 2^-k, so
    the truncation error is below the last term.
    """
    total = 0.5
    k = 1
    term = float("inf")
    while k <= kmax:
        term = pi / 2.0**(k + 1) * sqrt(k) * csch(pi * sqrt(k))
        total += term
        if term < tol:
            return SeriesValue(total, k + 1, term)
        k += 1
    return SeriesValue(total, k, term)


def infinite_ratio_product(k, base="n^2", tol=1e-12, method="auto"):
    """prod_{n>=1} B_n/(k + B_n) for B_n = n^2 or 2^n.

    base n^2 has the closed form pi sqrt(k) csch(pi sqrt(k)) (1 at k=0);
    method='direct' cross-checks it with explicit factors plus a
    power-sum tail correction that never invokes the closed form.  base
    2^n always uses the direct product: the tail is geometrically small.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return SeriesValue(1.0, 0, 0.0)
    if base == "n^2":
        if method in ("auto", "closed"):
            return SeriesValue(pi * sqrt(k) * csch(pi * sqrt(k)), 0, 0.0)
        # direct: log prod = -sum log1p(k/n^2); tail via Hurwitz zeta
        from scipy.special import zeta
        n0 = 4096
        n = np.arange(1, n0 + 1, dtype=float)
        head = -float(np.sum(np.log1p(k / (n * n))))
        tail = 0.0
        last = float("inf")
        for j in range(1, 80):
            t = (-1.0)**(j + 1) * (k**j / j) * float(zeta(2 * j, n0 + 1))
            tail -= t
            last = abs(t)
            if last < 1e-18:
                break
        return SeriesValue(float(np.exp(head + tail)), n0, last)
    if base == "2^n":
        n, logp = 1, 0.0
        while True:
            logp -= np.log1p(k / 2.0**n)
            # remaining factors: sum_{m>n} log1p(k 2^-m) < k 2^-n
            rem = k * 2.0**(-n)
            if rem < tol * 0.5:
                return SeriesValue(float(np.exp(logp)), n, rem)
            n += 1
    raise ValueError(f"unknown base {base!r}")


def cosh_series(tol=1e-12, kmax=200):
    """sum_{k>=0} (1/(2k)!) prod_{n>=0} 2^n/(k + 2^n).

    The inner product over n >= 0 equals
    infinite_ratio_product(k, '2^n') / (k + 1) since the n=0 factor is
    1/(k+1).  Terms die super-geometrically through (2k)!.
    """
    total = 0.0
    k = 0
    term = float("inf")
    while k <= kmax:
        q = infinite_ratio_product(k, "2^n", tol=min(tol, 1e-14)).value
        term = q / ((k + 1) * factorial(2 * k))
        total += term
        if k >= 1 and term < tol:
            return SeriesValue(total, k + 1, term)
        k += 1
    return SeriesValue(total, k, term)
