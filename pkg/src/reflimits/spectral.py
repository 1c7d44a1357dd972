"""Scaled cumulant generating function of the additive functional.

psi(theta) = lim (1/t) log E exp(theta A(t)) solves the eigenvalue problem

    mu h' + (sigma2/2) h'' + (theta f - psi) h = 0   on [0, b],
    h'(0) + theta r0 h(0) = 0,
    -h'(b) + theta rb h(b) = 0,

whose Sturm-Liouville form is -(a h')' + q h = lambda c h with
lambda = -psi, a = e^{Lam}, q = -(2 theta f / sigma2) e^{Lam},
c = (2 / sigma2) e^{Lam}.  Among the eigenvalue ladder
lambda_1 < lambda_2 < ... only the bottom eigenfunction is positive, so
psi(theta) = -lambda_1.

The primary solver shoots the Pruefer phase angle with fixed-step RK4 and
bisects on lambda: the Robin conditions become fixed initial/terminal
angles through atan2, and the principal eigenvalue is the unique lambda
whose phase completes zero half-turns.  A finite-difference Robin
eigenproblem (LAPACK bisection + inverse iteration) provides an
independent cross-check, and for driftless-cost reflected Brownian motion
with weights (0, 1) the closed-form regional solution is exposed as an
oracle.  The domain must be compact; half-line models are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .model import (
    AdditiveFunctional,
    DiffusionModel,
    SolverConfig,
    TwoBarrier,
    eval_coefficient,
    solver_grid,
    validate,
)
from .quadrature import cumulative_integral

__all__ = [
    "SlCoefficients",
    "SpectralSolution",
    "RbmRegion",
    "PsiCurve",
    "SolverError",
    "NonCompactDomainError",
    "sl_coefficients",
    "solve_principal",
    "principal_eigenvalue_fd",
    "rbm_closed_form_psi",
    "classify_rbm_region",
    "psi_curve",
]

# Finite-difference step used for the slope-at-origin diagnostic.
_ALPHA_CHECK_STEP = 1e-3


class SolverError(RuntimeError):
    """Eigenvalue solve failed (bracket exhaustion or positivity violation)."""


class NonCompactDomainError(ValueError):
    """The spectral problem is posed on a compact domain only."""


@dataclass(frozen=True)
class SlCoefficients:
    """Sturm-Liouville coefficient arrays on the solver grid.

    ``sl_potential`` is the zeroth-order coefficient of the self-adjoint
    form (the barrier position is always called b_barrier elsewhere, never
    b, to keep the two apart).
    """

    sl_weight_a: np.ndarray
    sl_potential: np.ndarray
    sl_density_c: np.ndarray


@dataclass(frozen=True)
class RbmRegion:
    """Closed-form parameter region tag and its auxiliary root (the growth
    rate for the hyperbolic regions, the frequency for the oscillatory
    ones, absent on the boundary manifolds)."""

    tag: str  # R1 | R2 | R3 | R4 | B1 | B2
    auxiliary_root: Optional[float] = None


@dataclass(frozen=True)
class SpectralSolution:
    """One (theta, psi(theta)) pair with its positive eigenfunction.

    h_grid is normalized to h(0) = 1; bc_residuals holds the absolute
    defects of the two Robin conditions.
    """

    theta: float
    psi: float
    grid: np.ndarray
    h_grid: np.ndarray
    interior_sign_changes: int
    bc_residuals: dict
    region: Union[RbmRegion, str]


@dataclass(frozen=True)
class PsiCurve:
    """psi sampled on an ascending theta grid containing 0.

    alpha_check is the central finite-difference slope at the origin
    (step 1e-3), which must reproduce the Poisson module's alpha;
    convexity_violations counts slope decreases beyond tolerance.
    """

    thetas: np.ndarray
    psis: np.ndarray
    alpha_check: float
    convexity_violations: int


def _require_compact(model: DiffusionModel) -> TwoBarrier:
    if not isinstance(model.domain, TwoBarrier):
        raise NonCompactDomainError(
            "large deviations requires a compact domain: the scaled CGF is "
            "defined through a principal eigenvalue on [0, b]")
    return model.domain


def sl_coefficients(model: DiffusionModel, functional: AdditiveFunctional,
                    theta: float,
                    config: SolverConfig = SolverConfig()) -> SlCoefficients:
    """Self-adjoint coefficient arrays (a, potential, c) on the solver grid."""
    _require_compact(model)
    validate(model, functional).raise_if_inadmissible()
    grid = solver_grid(model, config)
    mu = np.asarray(eval_coefficient(model.mu, grid), dtype=float)
    s2 = np.asarray(eval_coefficient(model.sigma2, grid), dtype=float)
    f = np.asarray(eval_coefficient(functional.f, grid), dtype=float)
    lam = cumulative_integral(2.0 * mu / s2, grid).values
    a = np.exp(lam)
    return SlCoefficients(
        sl_weight_a=a,
        sl_potential=-2.0 * theta * f / s2 * a,
        sl_density_c=2.0 / s2 * a,
    )


# ---------------------------------------------------------------------------
# Pruefer shooting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _FineTables:
    """Quarter-step coefficient tables shared by the shooting kernels.

    Arrays have 4*(grid_points-1) + 1 entries; RK4 steps span two entries,
    so the integrator advances in half solver-grid steps with midpoint
    values available.  The integrating-factor exponent is shifted to the
    middle of its range to balance e^{+Lam} against e^{-Lam}.
    """

    b_barrier: float
    step: float
    a_inv: np.ndarray   # e^{-(Lam - shift)}
    cw: np.ndarray      # e^{+(Lam - shift)} * 2 / sigma2
    f: np.ndarray
    r0: float
    rb: float


def _fine_tables(model, functional, config) -> _FineTables:
    b = _require_compact(model).b
    n_fine = 4 * (config.grid_points - 1) + 1
    xs = np.linspace(0.0, b, n_fine)
    mu = np.asarray(eval_coefficient(model.mu, xs), dtype=float)
    s2 = np.asarray(eval_coefficient(model.sigma2, xs), dtype=float)
    if np.any(s2 <= 0):
        raise ValueError("sigma2 must be positive on the grid")
    f = np.asarray(eval_coefficient(functional.f, xs), dtype=float)
    lam = cumulative_integral(2.0 * mu / s2, xs).values
    shift = 0.5 * (lam.max() + lam.min())
    lam_s = lam - shift
    return _FineTables(
        b_barrier=b,
        step=b / (2 * (config.grid_points - 1)),
        a_inv=np.exp(-lam_s),
        cw=np.exp(lam_s) * 2.0 / s2,
        f=f,
        r0=functional.r0,
        rb=functional.rb,
    )


@njit(cache=True)
def _phi_end(lam, phi0, h, a_inv, cw, tf):
    """Integrate the Pruefer phase from 0 to b; RK4 in half-grid steps."""
    phi = phi0
    n_steps = (a_inv.size - 1) // 2
    for k in range(n_steps):
        j = 2 * k
        s, c = math.sin(phi), math.cos(phi)
        k1 = a_inv[j] * c * c + cw[j] * (lam + tf[j]) * s * s
        p = phi + 0.5 * h * k1
        s, c = math.sin(p), math.cos(p)
        k2 = a_inv[j + 1] * c * c + cw[j + 1] * (lam + tf[j + 1]) * s * s
        p = phi + 0.5 * h * k2
        s, c = math.sin(p), math.cos(p)
        k3 = a_inv[j + 1] * c * c + cw[j + 1] * (lam + tf[j + 1]) * s * s
        p = phi + h * k3
        s, c = math.sin(p), math.cos(p)
        k4 = a_inv[j + 2] * c * c + cw[j + 2] * (lam + tf[j + 2]) * s * s
        phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return phi


@njit(cache=True)
def _reconstruct(lam, p0, h, a_inv, cw, tf, out):
    """Integrate (h, a h') with h(0)=1, a h'(0)=p0; record h at step nodes."""
    hv = 1.0
    pv = p0
    n_steps = (a_inv.size - 1) // 2
    out[0] = hv
    for k in range(n_steps):
        j = 2 * k
        k1h = pv * a_inv[j]
        k1p = -cw[j] * (lam + tf[j]) * hv
        h2 = hv + 0.5 * h * k1h
        p2 = pv + 0.5 * h * k1p
        k2h = p2 * a_inv[j + 1]
        k2p = -cw[j + 1] * (lam + tf[j + 1]) * h2
        h3 = hv + 0.5 * h * k2h
        p3 = pv + 0.5 * h * k2p
        k3h = p3 * a_inv[j + 1]
        k3p = -cw[j + 1] * (lam + tf[j + 1]) * h3
        h4 = hv + h * k3h
        p4 = pv + h * k3p
        k4h = p4 * a_inv[j + 2]
        k4p = -cw[j + 2] * (lam + tf[j + 2]) * h4
        hv += (h / 6.0) * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
        pv += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        out[k + 1] = hv
    return pv


def _phi_boundary_angles(tables: _FineTables, theta: float):
    phi0 = math.atan2(1.0, -theta * tables.r0 * tables.a_inv[0] ** -1.0)
    phi_b = math.atan2(1.0, theta * tables.rb / tables.a_inv[-1])
    return phi0, phi_b


def _bracket_bound(tables: _FineTables, theta: float) -> float:
    sup_f = float(np.max(np.abs(tables.f))) if tables.f.size else 0.0
    sbar = float(np.max(2.0 / tables.cw * (1.0 / tables.a_inv)))
    return abs(theta) * (sup_f + (tables.r0 + tables.rb) * sbar
                         / tables.b_barrier) + 1.0


def _solve_tables(tables: _FineTables, theta: float, config: SolverConfig,
                  half_turns: int = 0):
    """Find the eigenvalue whose Pruefer phase completes ``half_turns``
    half-turns, and reconstruct its eigenfunction at the step nodes."""
    tf = theta * tables.f
    phi0, phi_b = _phi_boundary_angles(tables, theta)
    target = phi_b + half_turns * math.pi

    def gap(lam: float) -> float:
        return _phi_end(lam, phi0, tables.step, tables.a_inv, tables.cw, tf) - target

    bound = _bracket_bound(tables, theta)
    lo, hi = -bound, bound
    for _ in range(64):
        glo, ghi = gap(lo), gap(hi)
        if glo < 0.0 < ghi:
            break
        width = hi - lo
        if glo >= 0.0:
            lo -= width
        if ghi <= 0.0:
            hi += width
    else:
        raise SolverError(
            f"eigenvalue bracket expansion failed for theta={theta}")
    lam1 = brentq(gap, lo, hi, xtol=1e-13, rtol=8.882e-16, maxiter=200)

    n_nodes = 2 * ((tables.a_inv.size - 1) // 4) + 1
    h_nodes = np.empty(n_nodes)
    p0 = -theta * tables.r0 / tables.a_inv[0]
    p_end = _reconstruct(lam1, p0, tables.step, tables.a_inv, tables.cw, tf,
                         h_nodes)
    hp_end = p_end * tables.a_inv[-1]
    hp_0 = p0 * tables.a_inv[0]
    residuals = {
        "left": abs(hp_0 + theta * tables.r0 * h_nodes[0]),
        "right": abs(-hp_end + theta * tables.rb * h_nodes[-1]),
    }
    return lam1, h_nodes, residuals


def _b1_solution(grid: np.ndarray, theta: float) -> SpectralSolution:
    return SpectralSolution(
        theta=theta, psi=0.0, grid=grid, h_grid=np.ones_like(grid),
        interior_sign_changes=0,
        bc_residuals={"left": 0.0, "right": 0.0},
        region=RbmRegion("B1"))


def solve_principal(model: DiffusionModel, functional: AdditiveFunctional,
                    theta: float, config: SolverConfig = SolverConfig(),
                    _tables: _FineTables | None = None) -> SpectralSolution:
    """psi(theta) and the positive eigenfunction, by Pruefer shooting.

    theta = 0 short-circuits to psi = 0, h = 1 (exact for every model).
    The converged eigenfunction is verified positive with zero interior
    sign changes; a violation is surfaced as SolverError, never accepted.
    """
    _require_compact(model)
    validate(model, functional).raise_if_inadmissible()
    grid = solver_grid(model, config)
    if theta == 0.0:
        return _b1_solution(grid, theta)
    tables = _tables if _tables is not None else _fine_tables(
        model, functional, config)
    lam1, h_nodes, residuals = _solve_tables(tables, theta, config)
    sign_changes = int(np.sum(h_nodes[:-1] * h_nodes[1:] < 0.0))
    h_grid = h_nodes[::2].copy()
    if sign_changes != 0 or np.any(h_grid <= 0.0):
        raise SolverError(
            f"principal eigenfunction not positive at theta={theta}: "
            f"{sign_changes} sign changes; this signals a solver bug")
    return SpectralSolution(
        theta=theta, psi=-lam1, grid=grid, h_grid=h_grid,
        interior_sign_changes=sign_changes, bc_residuals=residuals,
        region="numeric")


def _solve_excited(model, functional, theta, config, half_turns):
    """Eigenvalue with a prescribed oscillation count (test hook for the
    spectral ordering lambda_1 < lambda_2 < ...)."""
    tables = _fine_tables(model, functional, config)
    lam, _, _ = _solve_tables(tables, theta, config, half_turns=half_turns)
    return -lam


# ---------------------------------------------------------------------------
# Finite-difference cross-check
# ---------------------------------------------------------------------------

def principal_eigenvalue_fd(model: DiffusionModel,
                            functional: AdditiveFunctional, theta: float,
                            config: SolverConfig = SolverConfig()) -> float:
    """psi(theta) from a Robin-condition finite-difference eigenproblem.

    Independent of the shooting route: conservative second-order
    discretization of the self-adjoint form with half-cell boundary rows,
    reduced to a symmetric tridiagonal problem and solved for its smallest
    eigenvalue by LAPACK bisection + inverse iteration.
    """
    _require_compact(model)
    validate(model, functional).raise_if_inadmissible()
    if theta == 0.0:
        return 0.0
    tables = _fine_tables(model, functional, config)
    n = config.grid_points
    h = tables.b_barrier / (n - 1)
    a_node = 1.0 / tables.a_inv[::4]
    a_mid = 1.0 / tables.a_inv[2::4]
    c_node = tables.cw[::4]
    q_node = -theta * tables.f[::4] * c_node  # potential = -2 theta f/s2 * a
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    diag = np.empty(n)
    diag[1:-1] = (a_mid[:-1] + a_mid[1:]) / h
    diag[0] = a_mid[0] / h - a_node[0] * theta * functional.r0
    diag[-1] = a_mid[-1] / h - a_node[-1] * theta * functional.rb
    diag += w * q_node
    off = -a_mid / h
    mass = w * c_node
    s = 1.0 / np.sqrt(mass)
    lam1 = eigh_tridiagonal(diag * s * s, off * s[:-1] * s[1:],
                            select="i", select_range=(0, 0),
                            eigvals_only=True)[0]
    return -float(lam1)


# ---------------------------------------------------------------------------
# Closed-form reflected Brownian motion (weights r0 = 0, rb = 1, f = 0)
# ---------------------------------------------------------------------------

def classify_rbm_region(theta: float, mu: float, sigma2: float,
                        b_barrier: float, region_eps: float = 1e-9) -> str:
    """Parameter-region tag for the closed-form RBM spectral solution.

    Sign tests on theta, mu(mu + theta sigma2) and
    b mu(mu + theta sigma2) + theta sigma2^2, with a relative tolerance
    band routing near-manifold parameters to B1/B2 (the transcendental
    root equations degenerate on the manifolds themselves).
    """
    if theta == 0.0 or abs(theta) <= region_eps:
        return "B1"
    if theta > 0.0:
        return "R1"
    m = mu * (mu + theta * sigma2)
    if m <= 0.0:
        return "R2"
    t = b_barrier * m + theta * sigma2 * sigma2
    scale = max(abs(b_barrier * m), abs(theta) * sigma2 * sigma2)
    if abs(t) <= region_eps * scale:
        return "B2"
    return "R3" if t > 0.0 else "R4"


def _hyperbolic_root(theta, mu, sigma2, b, lo_edge, hi_edge, root_tol):
    """Root of the log-ratio equation on (lo_edge, hi_edge); the equation
    G(beta) = log|ratio(beta)| - 2 b beta / sigma2 vanishes there exactly
    once (and trivially at beta = 0, which is excluded)."""

    def g(beta: float) -> float:
        return (math.log(abs(beta - mu))
                + math.log(abs(beta + mu + theta * sigma2))
                - math.log(abs(beta + mu))
                - math.log(abs(beta - mu - theta * sigma2))
                - 2.0 * b * beta / sigma2)

    if hi_edge is None:
        # Unbounded interval (|mu| v |mu + theta s2|, inf): G -> +inf at the
        # left edge and -inf at infinity.
        scale = max(lo_edge, 1.0)
        eps = 1e-9
        lo = lo_edge + eps * scale
        while g(lo) <= 0.0 and eps > 1e-15:
            eps /= 8.0
            lo = lo_edge + eps * scale
        if g(lo) <= 0.0:
            # the root sits within one ulp of the edge (its distance decays
            # like e^{-2 b beta / sigma2} for large |theta|)
            return lo
        hi = lo_edge + scale
        for _ in range(200):
            if g(hi) < 0.0:
                break
            hi = lo_edge + 2.0 * (hi - lo_edge)
        else:
            raise SolverError("hyperbolic root bracketing failed (upper)")
    else:
        # Bounded interval (0, |mu| ^ |mu + theta s2|): G dips negative off
        # beta = 0 and blows up at the right edge.
        eps = 1e-12
        hi = hi_edge * (1.0 - eps)
        while g(hi) <= 0.0 and eps > 1e-15:
            eps /= 8.0
            hi = hi_edge * (1.0 - eps)
        if g(hi) <= 0.0:
            return hi  # root within one ulp of the edge
        lo = 0.5 * hi_edge
        for _ in range(200):
            if g(lo) < 0.0:
                break
            lo *= 0.5
        else:
            raise SolverError("hyperbolic root bracketing failed (lower)")
    return brentq(g, lo, hi, xtol=root_tol, rtol=8.882e-16, maxiter=200)


def _trig_root(theta, mu, sigma2, b, root_tol):
    """Root of b xi / sigma2 = atan2(xi |theta| sigma2, xi^2 + m) on
    (0, pi sigma2 / b); atan2 is the stable form of the arccos equation."""
    m = mu * (mu + theta * sigma2)
    v = abs(theta) * sigma2

    def w(xi: float) -> float:
        return math.atan2(xi * v, xi * xi + m) - b * xi / sigma2

    cap = math.pi * sigma2 / b
    lo = 1e-9 * cap
    while w(lo) <= 0.0 and lo > 1e-300:
        lo *= 0.125
    hi = cap * (1.0 - 1e-12)
    if w(lo) <= 0.0 or w(hi) >= 0.0:
        raise SolverError("oscillatory root bracketing failed")
    return brentq(w, lo, hi, xtol=root_tol, rtol=8.882e-16, maxiter=200)


def rbm_closed_form_psi(theta: float, mu: float, sigma2: float,
                        b_barrier: float,
                        config: SolverConfig = SolverConfig(),
                        r0: float = 0.0, rb: float = 1.0) -> SpectralSolution:
    """Closed-form psi(theta) for RBM with weights (r0, rb) = (0, 1), f = 0.

    Classifies the parameter point into one of six regions, solves the
    matching transcendental root equation by bracketed bisection, and
    returns psi together with the explicit positive eigenfunction.  Other
    weights or a nonzero cost have no closed form here; use
    solve_principal for those.
    """
    if r0 != 0.0 or rb != 1.0:
        raise ValueError("closed form covers weights r0=0, rb=1 only; "
                         "use solve_principal for other weights")
    if not (sigma2 > 0 and b_barrier > 0):
        raise ValueError("rbm_closed_form_psi needs sigma2 > 0, b_barrier > 0")
    b = b_barrier
    grid = np.linspace(0.0, b, config.grid_points)
    tag = classify_rbm_region(theta, mu, sigma2, b, config.region_eps)
    ms = mu / sigma2

    if tag == "B1":
        return _b1_solution(grid, theta)

    if tag == "B2":
        psi = -mu * mu / (2.0 * sigma2)
        h = np.exp(-ms * grid) * (ms * grid + 1.0)
        hp_b = -(ms ** 2) * b * math.exp(-ms * b)
        resid = {"left": 0.0, "right": abs(-hp_b + theta * h[-1])}
        region = RbmRegion("B2")
    elif tag in ("R1", "R3"):
        lo_edge = max(abs(mu), abs(mu + theta * sigma2))
        hi_edge = min(abs(mu), abs(mu + theta * sigma2))
        if tag == "R1":
            beta = _hyperbolic_root(theta, mu, sigma2, b, lo_edge, None,
                                    config.root_tol)
        else:
            beta = _hyperbolic_root(theta, mu, sigma2, b, 0.0, hi_edge,
                                    config.root_tol)
        psi = (beta * beta - mu * mu) / (2.0 * sigma2)
        em = np.exp(-ms * grid)
        grow = np.exp(beta * grid / sigma2)
        h = em * ((beta - mu) / grow + (beta + mu) * grow) / (2.0 * beta)
        wb = ((beta - mu) / math.exp(beta * b / sigma2)
              + (beta + mu) * math.exp(beta * b / sigma2)) / (2.0 * beta)
        wpb = ((beta + mu) * math.exp(beta * b / sigma2)
               - (beta - mu) / math.exp(beta * b / sigma2)) * beta / (
                   2.0 * beta * sigma2)
        hp_b = math.exp(-ms * b) * (wpb - ms * wb)
        resid = {"left": 0.0, "right": abs(-hp_b + theta * h[-1])}
        region = RbmRegion(tag, auxiliary_root=beta)
    else:  # R2 / R4
        xi = _trig_root(theta, mu, sigma2, b, config.root_tol)
        psi = -(xi * xi + mu * mu) / (2.0 * sigma2)
        arg = xi * grid / sigma2
        h = np.exp(-ms * grid) * (np.cos(arg) + (mu / xi) * np.sin(arg))
        hp_b = (-math.exp(-ms * b) * math.sin(xi * b / sigma2)
                * (mu * mu + xi * xi) / (xi * sigma2))
        hb = h[-1]
        resid = {"left": 0.0, "right": abs(-hp_b + theta * hb)}
        region = RbmRegion(tag, auxiliary_root=xi)

    sign_changes = int(np.sum(h[:-1] * h[1:] < 0.0))
    if sign_changes != 0 or np.any(h <= 0.0):
        raise SolverError(
            f"closed-form eigenfunction not positive at theta={theta} "
            f"(region {tag}); this signals a root-selection bug")
    return SpectralSolution(theta=theta, psi=float(psi), grid=grid,
                            h_grid=h, interior_sign_changes=sign_changes,
                            bc_residuals=resid, region=region)


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

def psi_curve(model: DiffusionModel, functional: AdditiveFunctional,
              theta_grid, config: SolverConfig = SolverConfig()) -> PsiCurve:
    """solve_principal over an ascending theta grid containing 0.

    Also computes the slope-at-origin diagnostic (two extra solves at
    +-1e-3) and counts discrete convexity violations of the sampled curve.
    """
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.ndim != 1 or thetas.size < 2:
        raise ValueError("theta_grid must be one-dimensional with >= 2 points")
    if not np.all(np.diff(thetas) > 0):
        raise ValueError("theta_grid must be strictly ascending")
    if not np.any(thetas == 0.0):
        raise ValueError("theta_grid must contain 0")
    _require_compact(model)
    validate(model, functional).raise_if_inadmissible()
    tables = _fine_tables(model, functional, config)

    def psi_at(theta: float) -> float:
        if theta == 0.0:
            return 0.0
        lam, h_nodes, _ = _solve_tables(tables, theta, config)
        if np.any(h_nodes <= 0.0):
            raise SolverError(f"eigenfunction not positive at theta={theta}")
        return -lam

    psis = np.array([psi_at(t) for t in thetas])
    d = _ALPHA_CHECK_STEP
    alpha_check = (psi_at(d) - psi_at(-d)) / (2.0 * d)

    slopes = np.diff(psis) / np.diff(thetas)
    scale = max(1.0, float(np.max(np.abs(psis))))
    violations = int(np.sum(np.diff(slopes) < -1e-8 * scale))
    return PsiCurve(thetas=thetas, psis=psis, alpha_check=alpha_check,
                    convexity_violations=violations)
