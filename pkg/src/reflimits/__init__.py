"""Limit-theorem constants for boundary-weighted additive functionals of
one-dimensional reflecting diffusions.

The package computes the strong-law constant alpha, the CLT variance eta2,
the scaled cumulant generating function psi(theta), and the
large-deviations rate function I(y) for functionals

    A(t) = int_0^t f(X(s)) ds + r0 L(t) + rb U(t)

of a diffusion reflected at 0 (and optionally at b), and verifies every
analytic quantity against an independent Monte Carlo simulator of the
reflected SDE.
"""

from .model import (
    AdditiveFunctional,
    ConstantCost,
    ConstantDrift,
    ConstantSq,
    DiffusionModel,
    InadmissibleModelError,
    OuDrift,
    SampledGrid,
    SingleBarrier,
    SolverConfig,
    TwoBarrier,
    ValidationReport,
    ZeroCost,
    eval_coefficient,
    solver_grid,
    validate,
)
from .montecarlo import (
    BatchMeansEstimate,
    CgfPoint,
    McConfig,
    McEstimate,
    PathRecord,
    estimate_batch_means,
    estimate_lln_clt,
    estimate_scaled_cgf,
    simulate_path,
)
from .poisson import (
    NonErgodicError,
    PoissonSolution,
    closed_form_ou,
    closed_form_rbm,
    compute_alpha_single_barrier,
    compute_alpha_two_barrier,
    compute_eta2,
    compute_u_prime,
    stationary_density,
)
from .poisson import solve as solve_poisson
from .quadrature import CumulativeTable, cumulative_integral, definite_integral
from .rate import (
    LegendreResult,
    RateFunction,
    SlopeRangeError,
    TailExponent,
    legendre,
    rate_curve,
    tail_exponent,
)
from .spectral import (
    NonCompactDomainError,
    PsiCurve,
    RbmRegion,
    SolverError,
    SpectralSolution,
    classify_rbm_region,
    principal_eigenvalue_fd,
    psi_curve,
    rbm_closed_form_psi,
    sl_coefficients,
    solve_principal,
)

__version__ = "0.1.0"
