"""Convergence budgets shared by the volume, tail and integration loops."""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ConvergenceConfig:
    """Tolerances and budgets for limit detection.

    The same record drives infinite products (volumes, moment products),
    series accumulation and the truncation-dimension ladder; each consumer
    reads the fields it needs.

    Attributes
    ----------
    tol : float
        Relative tolerance of the doubling Cauchy test.
    max_terms : int
        Budget for one-dimensional accumulations (products, series tails).
    window : int
        Consecutive doubling checkpoints a trend must persist before a
        divergence/degeneracy verdict.
    max_dims : int
        Cap of the truncation-dimension ladder.
    quad_order : int
        Gauss-Legendre nodes per dimension for the tensor engine.
    max_tensor_points : int
        Hard cap on the tensor grid size; per-dimension order is reduced
        when quad_order**ndim would exceed it.
    quad_max_dims : int
        Largest dimension handled by tensor quadrature.
    mc_samples : int
        Monte Carlo sample count per ladder step.
    seed : int
        64-bit seed for the counter-based Monte Carlo generator.
    """

    tol: float = 1e-6
    max_terms: int = 10**7
    window: int = 3
    max_dims: int = 2**24
    quad_order: int = 16
    max_tensor_points: int = 2**24
    quad_max_dims: int = 8
    mc_samples: int = 2**20
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")

    def with_(self, **kw):
        return replace(self, **kw)


# Volume classification historically wants a tighter tolerance than the
# integration ladder; ship both default instances.
VOLUME_DEFAULTS = ConvergenceConfig(tol=1e-10)
INTEGRATE_DEFAULTS = ConvergenceConfig(tol=1e-6)


def dim_ladder(max_dims, start=1):
    """Doubling schedule 1, 2, 4, ... capped at max_dims (included once)."""
    out = []
    n = start
    while n < max_dims:
        out.append(n)
        n *= 2
    out.append(max_dims)
    return out
