"""Renewal-recursion and Volterra-equation asymptotics toolkit.

Evaluates renewal-like recursions x_n = sum_j w_{n,j} x_{n-j} + r_n with
weights a_j + b_j/n + c_{n,j}, and the matching integral equation
g(t) = int_0^t w_{t,s} g(t-s) ds + r(t); computes the decay base q, the
polynomial exponent gamma and the limit constant C, and cross-checks the
continuous side through its Laplace transform.
"""

from .constants import (
    NoSpectralPointError,
    SpectralConstants,
    gamma_continuous,
    gamma_discrete,
    normalize,
    solve_q,
    spectral_continuous,
    spectral_discrete,
)
from .config import ConfigError, load_problem
from .corpus import builtin, catalog, cex2_weights, run_entry
from .discrete_engine import (
    AsymptoticEstimate,
    BoundCertificate,
    NumericOverflowError,
    SolutionTrace,
    bound_certificate,
    estimate_C,
    positivity_horizon,
    residual,
    solve,
)
from .laplace_toolkit import (
    TauberianReport,
    TransformSample,
    compute_G,
    compute_L,
    compute_Rstar,
    tauberian_check,
    trace_transform,
    transform,
    transform_samples,
)
from .model import (
    ContinuousProblem,
    DecaySequence,
    DiscreteProblem,
    ExpMixture,
    GeometricTail,
    ModelError,
    NegativeWeightError,
    PiecewiseTable,
    SeparableKernel,
    SeparableKernelC,
    TableKernel,
    ValidationReport,
    ZeroKernel,
    delta1,
    validate_continuous,
    validate_discrete,
    weight_continuous,
    weight_discrete,
)
from .volterra_engine import (
    ContinuousTrace,
    QuadratureGrid,
    check_bounds,
    fit_exponent,
    monotonicity,
    solve_volterra,
    theorem2_verdict,
)

__version__ = "0.1.0"
