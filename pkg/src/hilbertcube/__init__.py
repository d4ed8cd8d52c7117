"""Integration over infinite-dimensional rectangles by truncation limits.

The pieces:

- rectangle:  rectangles X [0, a_i], infinite-product volumes
- expr:       integrand DSL (parser, vectorized evaluator, truncation)
- funcspace:  coordinate functions, truncation sequences, empirical
              Cauchy/uniform-convergence checks, closure constructions
- integrator: truncation-ladder integration (analytic / tensor
              quadrature / Monte Carlo) and the product-series limit
- reference:  closed-form golden series
- normspace:  p-norms on the unit cube and the zero-distance relation
- catalog:    named built-in integrands
- verify:     executable property suites
- cli:        the `hq` command
"""

from .config import ConvergenceConfig, INTEGRATE_DEFAULTS, VOLUME_DEFAULTS
from .funcspace import (CoordinateFunction, SampleBudget,
                        TruncationSequence, check_truncation_cauchy,
                        check_truncation_uniform, combine_abs,
                        combine_scale, combine_sum, compose_lipschitz,
                        restricted, truncated)
from .integrator import (IntegralResult, check_bound,
                         check_partial_integration, check_uniqueness,
                         integrate, integrate_product_form,
                         monte_carlo_truncated, partial_integrate,
                         tensor_truncated)
from .normspace import NormResult, check_norm_axioms, equivalent, norm
from .rectangle import (ConvergentRectangle, TailRule, VolumeReport,
                        builtin_catalog, degenerate_half,
                        tail_product_bound, unit_cube, volume,
                        wallis_rectangle)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceConfig", "INTEGRATE_DEFAULTS", "VOLUME_DEFAULTS",
    "CoordinateFunction", "SampleBudget", "TruncationSequence",
    "check_truncation_cauchy", "check_truncation_uniform",
    "combine_abs", "combine_scale", "combine_sum", "compose_lipschitz",
    "restricted", "truncated",
    "IntegralResult", "check_bound", "check_partial_integration",
    "check_uniqueness", "integrate", "integrate_product_form",
    "monte_carlo_truncated", "partial_integrate", "tensor_truncated",
    "NormResult", "check_norm_axioms", "equivalent", "norm",
    "ConvergentRectangle", "TailRule", "VolumeReport", "builtin_catalog",
    "degenerate_half", "tail_product_bound", "unit_cube", "volume",
    "wallis_rectangle",
    "__version__",
]
