"""Stationary constants of the reflected diffusion.

Solves the generalized Poisson equation

    mu(x) u'(x) + (sigma2(x)/2) u''(x) = f(x) - alpha,
    u'(0) = r0,   u'(b) = -rb,

by the integrating-factor route: with Lam(x) = int_0^x 2 mu / sigma2,

    alpha = (r0 + rb e^{Lam(b)} + int_0^b (2f/sigma2) e^{Lam})
            / (2 int_0^b e^{Lam} / sigma2),
    u'(x) = e^{-Lam(x)} (r0 + int_0^x (2(f - alpha)/sigma2) e^{Lam}),
    p(x)  = e^{Lam(x)} / sigma2(x), normalized,
    eta2  = int_0^b u'(x)^2 sigma2(x) p(x) dx.

alpha is the a.s. limit of A(t)/t and eta2 the CLT variance of
sqrt(t) (A(t)/t - alpha).  The half-line variant truncates the improper
integrals and detects the non-ergodic (divergent speed measure) case.
Closed forms for reflected Brownian motion and the reflected
Ornstein-Uhlenbeck process serve as oracles for the generic pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf

from .model import (
    AdditiveFunctional,
    DiffusionModel,
    SingleBarrier,
    SolverConfig,
    TwoBarrier,
    eval_coefficient,
    solver_grid,
    validate,
)
from .quadrature import cumulative_integral, definite_integral

__all__ = [
    "PoissonSolution",
    "NonErgodicError",
    "compute_alpha_two_barrier",
    "compute_alpha_single_barrier",
    "compute_u_prime",
    "stationary_density",
    "compute_eta2",
    "solve",
    "closed_form_rbm",
    "closed_form_ou",
    "RbmClosedForm",
    "OuClosedForm",
]

# Number of trailing windows inspected by the divergence heuristic.
_TAIL_WINDOWS = 32


class NonErgodicError(RuntimeError):
    """The half-line diffusion has no stationary distribution (the speed
    measure integral diverges), so no strong-law constant exists."""


@dataclass(frozen=True)
class PoissonSolution:
    """Bundle of Poisson-equation outputs on the solver grid.

    residuals carries 'ode_sup' (interior sup of the ODE defect with u''
    from centered differences of u'), 'bc0' = |u'(0) - r0| and, for a
    compact domain, 'bcb' = |u'(b) + rb|.
    """

    alpha: float
    grid: np.ndarray
    u_prime: np.ndarray
    density: np.ndarray
    eta2: float
    residuals: dict


def _lam_tables(model, functional, grid):
    """Coefficient arrays and the integrating-factor exponent on a grid."""
    mu = np.asarray(eval_coefficient(model.mu, grid), dtype=float)
    s2 = np.asarray(eval_coefficient(model.sigma2, grid), dtype=float)
    f = np.asarray(eval_coefficient(functional.f, grid), dtype=float)
    lam = cumulative_integral(2.0 * mu / s2, grid).values
    return mu, s2, f, lam


def _require_admissible(model, functional):
    validate(model, functional).raise_if_inadmissible()


def compute_alpha_two_barrier(model: DiffusionModel,
                              functional: AdditiveFunctional,
                              config: SolverConfig = SolverConfig()) -> float:
    """Strong-law constant alpha for a compact domain.

    Deterministic for a fixed config; evaluated by quadrature of the
    explicit ratio, which leaves the boundary identity u'(b) = -rb free to
    act as an independent correctness check.
    """
    if not isinstance(model.domain, TwoBarrier):
        raise ValueError("compute_alpha_two_barrier needs a TwoBarrier domain")
    _require_admissible(model, functional)
    grid = solver_grid(model, config)
    _, s2, f, lam = _lam_tables(model, functional, grid)
    shift = lam.max()  # scale out the integrating factor's dynamic range
    e = np.exp(lam - shift)
    num = (functional.r0 * math.exp(-shift) + functional.rb * e[-1]
           + definite_integral(2.0 * f / s2 * e, grid))
    den = 2.0 * definite_integral(e / s2, grid)
    return num / den


def _tail_converged(cum: np.ndarray, quad_tol: float) -> bool:
    """True when the last tail window adds a negligible relative increment."""
    n = cum.size
    w = max(n // _TAIL_WINDOWS, 1)
    total = cum[-1]
    if total <= 0:
        return False
    return (cum[-1] - cum[-1 - w]) <= quad_tol * total


def _tail_growing(integrand: np.ndarray) -> bool:
    """True when the integrand is not decaying over the last windows."""
    n = integrand.size
    w = max(n // _TAIL_WINDOWS, 1)
    return integrand[-w:].mean() >= integrand[-2 * w:-w].mean()


def _single_barrier_grid(model, functional, config, x_max):
    """Truncation grid for the half-line problem, auto-extended until the
    speed-measure integral has converged; raises NonErgodicError otherwise."""
    if x_max is not None:
        candidates = [float(x_max)]
    else:
        candidates = [16.0 * 2.0 ** k for k in range(13)]
    last_exc = None
    for xm in candidates:
        grid = solver_grid(model, config, x_max=xm)
        try:
            _, s2, _, lam = _lam_tables(model, functional, grid)
        except ValueError as exc:  # sampled coefficient range exceeded
            last_exc = exc
            break
        shift = lam.max()
        q = np.exp(lam - shift) / s2
        cum = cumulative_integral(q, grid).values
        if _tail_converged(cum, config.quad_tol):
            return grid
        if _tail_growing(q):
            raise NonErgodicError(
                "speed measure integral diverges: no stationary distribution")
    msg = (f"speed measure integral did not converge by x_max={candidates[-1]:g}; "
           "the diffusion is not detectably ergodic on [0, inf)")
    if last_exc is not None:
        msg += f" ({last_exc})"
    raise NonErgodicError(msg)


def compute_alpha_single_barrier(model: DiffusionModel,
                                 functional: AdditiveFunctional,
                                 config: SolverConfig = SolverConfig(),
                                 x_max: float | None = None) -> float:
    """Strong-law constant on [0, inf), integrals truncated at x_max.

    With no x_max the truncation point is extended automatically until the
    speed-measure tail falls below quad_tol.  Raises NonErgodicError when
    the denominator's partial integrals keep growing instead.
    """
    if not isinstance(model.domain, SingleBarrier):
        raise ValueError("compute_alpha_single_barrier needs a SingleBarrier domain")
    _require_admissible(model, functional)
    grid = _single_barrier_grid(model, functional, config, x_max)
    _, s2, f, lam = _lam_tables(model, functional, grid)
    shift = lam.max()
    e = np.exp(lam - shift)
    num = (functional.r0 * math.exp(-shift)
           + definite_integral(2.0 * f / s2 * e, grid))
    den = 2.0 * definite_integral(e / s2, grid)
    return num / den


def compute_u_prime(model: DiffusionModel, functional: AdditiveFunctional,
                    alpha: float, config: SolverConfig = SolverConfig(),
                    x_max: float | None = None) -> np.ndarray:
    """u' on the solver grid for a previously computed alpha.

    The compact-domain form integrates forward from u'(0) = r0.  On the
    half-line the forward bracket cancels catastrophically in the tail, so
    u' is assembled from the reversed tail integral instead (the two are
    identical by the definition of alpha).  The result is then the exact
    solution of the truncated problem with a free upper end: it develops an
    exponentially thin boundary layer near x_max whose influence on eta2
    and the interior residuals is of the order of the truncation tail.
    """
    _require_admissible(model, functional)
    if isinstance(model.domain, TwoBarrier):
        grid = solver_grid(model, config)
        _, s2, f, lam = _lam_tables(model, functional, grid)
        shift = lam.max()
        e = np.exp(lam - shift)
        inner = cumulative_integral(2.0 * (f - alpha) / s2 * e, grid).values
        return (functional.r0 * math.exp(-shift) + inner) * np.exp(shift - lam)
    grid = _single_barrier_grid(model, functional, config, x_max)
    _, s2, f, lam = _lam_tables(model, functional, grid)
    shift = lam.max()
    e = np.exp(lam - shift)
    # Tail integral T(x) = int_x^{xmax} 2(alpha - f)/sigma2 e^{Lam}, computed
    # right-to-left so small tail values keep full relative accuracy.
    g = 2.0 * (alpha - f) / s2 * e
    rev = cumulative_integral(g[::-1], grid[::-1] * -1.0 + grid[-1]).values[::-1]
    return rev * np.exp(shift - lam)


def stationary_density(model: DiffusionModel,
                       config: SolverConfig = SolverConfig(),
                       x_max: float | None = None) -> np.ndarray:
    """Normalized stationary density p on the solver grid.

    Raises NonErgodicError for a half-line model whose speed measure
    integral diverges.
    """
    if isinstance(model.domain, TwoBarrier):
        grid = solver_grid(model, config)
    else:
        grid = _single_barrier_grid(model, AdditiveFunctional(), config, x_max)
    mu = np.asarray(eval_coefficient(model.mu, grid), dtype=float)
    s2 = np.asarray(eval_coefficient(model.sigma2, grid), dtype=float)
    if np.any(s2 <= 0):
        raise ValueError("sigma2 must be positive on the grid")
    lam = cumulative_integral(2.0 * mu / s2, grid).values
    q = np.exp(lam - lam.max()) / s2
    return q / definite_integral(q, grid)


def compute_eta2(model: DiffusionModel, functional: AdditiveFunctional,
                 u_prime: np.ndarray, density: np.ndarray,
                 config: SolverConfig = SolverConfig(),
                 x_max: float | None = None) -> float:
    """CLT variance eta2 = int (u')^2 sigma2 p by quadrature."""
    if isinstance(model.domain, TwoBarrier):
        grid = solver_grid(model, config)
    else:
        grid = _single_barrier_grid(model, functional, config, x_max)
    u_prime = np.asarray(u_prime, dtype=float)
    density = np.asarray(density, dtype=float)
    if u_prime.shape != grid.shape or density.shape != grid.shape:
        raise ValueError("u_prime/density grids do not match the solver grid")
    s2 = np.asarray(eval_coefficient(model.sigma2, grid), dtype=float)
    return definite_integral(u_prime ** 2 * s2 * density, grid)


def _ode_residual_sup(grid, mu, s2, f, alpha, u_prime):
    """Sup of |mu u' + (sigma2/2) u'' - (f - alpha)| over interior nodes,
    with u'' from centered differences of the u' samples."""
    h = grid[1] - grid[0]
    upp = (u_prime[2:] - u_prime[:-2]) / (2.0 * h)
    res = mu[1:-1] * u_prime[1:-1] + 0.5 * s2[1:-1] * upp - (f[1:-1] - alpha)
    return float(np.max(np.abs(res)))


def solve(model: DiffusionModel, functional: AdditiveFunctional,
          config: SolverConfig = SolverConfig(),
          x_max: float | None = None) -> PoissonSolution:
    """Full Poisson pipeline: alpha, u', p, eta2, and residual diagnostics."""
    _require_admissible(model, functional)
    if isinstance(model.domain, TwoBarrier):
        alpha = compute_alpha_two_barrier(model, functional, config)
        grid = solver_grid(model, config)
    else:
        alpha = compute_alpha_single_barrier(model, functional, config, x_max)
        grid = _single_barrier_grid(model, functional, config, x_max)
        x_max = float(grid[-1])
    u_prime = compute_u_prime(model, functional, alpha, config, x_max)
    density = stationary_density(model, config, x_max)
    eta2 = compute_eta2(model, functional, u_prime, density, config, x_max)
    mu, s2, f, _ = _lam_tables(model, functional, grid)
    residuals = {
        "ode_sup": _ode_residual_sup(grid, mu, s2, f, alpha, u_prime),
        "bc0": abs(float(u_prime[0]) - functional.r0),
    }
    if isinstance(model.domain, TwoBarrier):
        residuals["bcb"] = abs(float(u_prime[-1]) + functional.rb)
    return PoissonSolution(alpha=alpha, grid=grid, u_prime=u_prime,
                           density=density, eta2=eta2, residuals=residuals)


# ---------------------------------------------------------------------------
# Closed forms (oracles for the generic pipeline)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RbmClosedForm:
    """Closed-form constants for two-sided reflecting Brownian motion.

    ``eta2`` is the displayed closed form; for nonzero drift the generic
    pipeline treats it as a flagged cross-check rather than a trusted fast
    path (guarding against transcription slips in the three-term display).
    """

    alpha: float
    eta2: float
    u_prime: Callable[[np.ndarray], np.ndarray]
    density: Callable[[np.ndarray], np.ndarray]
    zero_drift: bool


def closed_form_rbm(mu: float, sigma2: float, b_barrier: float,
                    r0: float, rb: float,
                    region_eps: float = 1e-9) -> RbmClosedForm:
    """Reflected Brownian motion on [0, b] with f = 0.

    The zero-drift branch is taken when |mu| b / sigma2 < region_eps, where
    the general formulas become numerically singular.
    """
    if not (sigma2 > 0 and b_barrier > 0):
        raise ValueError("closed_form_rbm needs sigma2 > 0 and b_barrier > 0")
    b = b_barrier
    if abs(mu) * b / sigma2 < region_eps:
        alpha = sigma2 * (r0 + rb) / (2.0 * b)
        if r0 + rb > 0:
            eta2 = sigma2 * (r0 ** 3 + rb ** 3) / (3.0 * (r0 + rb))
        else:
            eta2 = 0.0

        def u_prime(x, r0=r0, rb=rb, b=b):
            return r0 - (r0 + rb) / b * np.asarray(x, dtype=float)

        def density(x, b=b):
            return np.full_like(np.asarray(x, dtype=float), 1.0 / b)

        return RbmClosedForm(alpha, eta2, u_prime, density, zero_drift=True)

    xi = 2.0 * mu / sigma2
    exb = math.exp(xi * b)
    emb = math.exp(-xi * b)
    alpha = mu * (r0 + rb * exb) / (exb - 1.0)
    c1 = (r0 + rb) / (1.0 - emb)
    c2 = (r0 * emb + rb) / (1.0 - emb)
    eta2 = sigma2 * (c1 ** 2 * emb
                     - c1 * c2 * 2.0 * xi * b / (exb - 1.0)
                     + c2 ** 2)

    def u_prime(x, c1=c1, c2=c2, xi=xi):
        return c1 * np.exp(-xi * np.asarray(x, dtype=float)) - c2

    def density(x, xi=xi, exb=exb):
        return xi * np.exp(xi * np.asarray(x, dtype=float)) / (exb - 1.0)

    return RbmClosedForm(alpha, eta2, u_prime, density, zero_drift=False)


@dataclass(frozen=True)
class OuClosedForm:
    """Closed-form alpha, u', p for the reflected Ornstein-Uhlenbeck
    process; eta2 stays with the numeric quadrature."""

    alpha: float
    u_prime: Callable[[np.ndarray], np.ndarray]
    density: Callable[[np.ndarray], np.ndarray]


def _norm_cdf(z):
    return 0.5 * (1.0 + erf(np.asarray(z, dtype=float) / math.sqrt(2.0)))


def closed_form_ou(a: float, c: float, sigma2: float, b_barrier: float,
                   r0: float, rb: float,
                   config: SolverConfig = SolverConfig()) -> OuClosedForm:
    """Reflected Ornstein-Uhlenbeck on [0, b]: drift -a(x - c), f = 0.

    alpha comes from the Gaussian-integral form of the speed measure; p is
    the truncated-normal density.
    """
    if not (a > 0 and sigma2 > 0 and b_barrier > 0):
        raise ValueError("closed_form_ou needs a > 0, sigma2 > 0, b_barrier > 0")
    b = b_barrier
    tau = math.sqrt(sigma2 / (2.0 * a))  # sd of the unconstrained OU law

    def big_j(x):
        """int_0^x exp(-a(y-c)^2 / sigma2) dy via the normal CDF."""
        x = np.asarray(x, dtype=float)
        return tau * math.sqrt(2.0 * math.pi) * (
            _norm_cdf((x - c) / tau) - _norm_cdf(-c / tau))

    e_b = math.exp(-(a * (b - c) ** 2 - a * c ** 2) / sigma2)
    alpha = (r0 + rb * e_b) * sigma2 / (2.0 * math.exp(a * c ** 2 / sigma2)
                                        * float(big_j(b)))

    def u_prime(x, a=a, c=c, s2=sigma2, r0=r0, alpha=alpha):
        x = np.asarray(x, dtype=float)
        grow = np.exp(a * (x - c) ** 2 / s2)
        return grow * (r0 * math.exp(-a * c ** 2 / s2)
                       - (2.0 * alpha / s2) * big_j(x))

    zlo = -c / tau
    zhi = (b - c) / tau
    norm = float(_norm_cdf(zhi) - _norm_cdf(zlo))

    def density(x, c=c, tau=tau, norm=norm):
        x = np.asarray(x, dtype=float)
        z = (x - c) / tau
        phi = np.exp(-0.5 * z ** 2) / math.sqrt(2.0 * math.pi)
        return phi / (tau * norm)

    return OuClosedForm(alpha=alpha, u_prime=u_prime, density=density)
