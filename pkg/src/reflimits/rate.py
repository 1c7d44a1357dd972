"""Large-deviations rate function from a sampled psi curve.

I(y) = sup_theta [theta y - psi(theta)] is evaluated against a cubic-spline
interpolant of the sampled curve: eigen-solves are expensive, and the
objective theta |-> theta y - psi(theta) is concave, so a grid argmax plus
golden-section refinement is exact in the limit.  Suprema attained at a
grid endpoint are flagged as lower bounds rather than extrapolated: the
true maximizer may lie outside the sampled theta range, and extrapolating
psi would fabricate tail behavior.

Tail exponents theta_z z - psi(theta_z) with psi'(theta_z) = z give the
exponential decay rate of P(A(t) >= t z); they must agree with I(z) at
interior points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .spectral import PsiCurve

__all__ = [
    "LegendreResult",
    "TailExponent",
    "RateFunction",
    "SlopeRangeError",
    "legendre",
    "tail_exponent",
    "rate_curve",
]

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class SlopeRangeError(ValueError):
    """Requested level lies outside the attainable slopes of the psi grid."""


@dataclass(frozen=True)
class LegendreResult:
    """One Legendre-transform evaluation.

    boundary_flag marks a supremum attained at a grid endpoint; the value
    is then only a lower bound for the true transform.
    """

    value: float
    arg_theta: float
    boundary_flag: bool


@dataclass(frozen=True)
class TailExponent:
    exponent: float
    theta_z: float


@dataclass(frozen=True)
class RateFunction:
    """I sampled on ascending levels, with per-point maximizers and
    out-of-range markers."""

    ys: np.ndarray
    values: np.ndarray
    arg_thetas: np.ndarray
    domain_flags: np.ndarray


def _check_curve(psi: PsiCurve) -> None:
    if psi.convexity_violations:
        raise ValueError(
            f"psi curve failed convexity validation "
            f"({psi.convexity_violations} violations); refusing to transform")


def _spline(psi: PsiCurve) -> CubicSpline:
    return CubicSpline(psi.thetas, psi.psis)


def _golden_max(fun, lo: float, hi: float, tol: float) -> float:
    """Maximizer of a unimodal function on [lo, hi] by golden-section."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
    return 0.5 * (a + b)


def legendre(psi: PsiCurve, y: float, root_tol: float = 1e-12) -> LegendreResult:
    """sup_theta [theta y - psi(theta)] over the sampled curve."""
    _check_curve(psi)
    spline = _spline(psi)
    thetas = psi.thetas
    grid_obj = thetas * y - psi.psis
    k = int(np.argmax(grid_obj))
    if k == 0 or k == thetas.size - 1:
        return LegendreResult(value=float(grid_obj[k]),
                              arg_theta=float(thetas[k]), boundary_flag=True)

    def obj(theta: float) -> float:
        return theta * y - float(spline(theta))

    lo, hi = thetas[k - 1], thetas[k + 1]
    tol = root_tol * max(1.0, abs(lo), abs(hi))
    arg = _golden_max(obj, lo, hi, tol)
    return LegendreResult(value=obj(arg), arg_theta=float(arg),
                          boundary_flag=False)


def tail_exponent(psi: PsiCurve, z: float,
                  root_tol: float = 1e-12) -> TailExponent:
    """Decay exponent theta_z z - psi(theta_z) with psi'(theta_z) = z.

    z must be attainable as a slope of the sampled curve; out-of-range
    levels are reported, not extrapolated.
    """
    _check_curve(psi)
    secants = np.diff(psi.psis) / np.diff(psi.thetas)
    if z < secants.min() or z > secants.max():
        raise SlopeRangeError(
            f"z={z} outside the attainable slope range "
            f"[{secants.min():.6g}, {secants.max():.6g}] of the psi grid")
    spline = _spline(psi)
    ds = spline.derivative()

    node_slopes = np.asarray(ds(psi.thetas), dtype=float)
    idx = np.searchsorted(node_slopes, z)
    lo = psi.thetas[max(idx - 1, 0)]
    hi = psi.thetas[min(idx, psi.thetas.size - 1)]
    if lo == hi or (float(ds(lo)) - z) * (float(ds(hi)) - z) > 0:
        lo, hi = psi.thetas[0], psi.thetas[-1]

    def slope_gap(theta: float) -> float:
        return float(ds(theta)) - z

    theta_z = brentq(slope_gap, lo, hi, xtol=root_tol, rtol=8.882e-16,
                     maxiter=200)
    return TailExponent(exponent=theta_z * z - float(spline(theta_z)),
                        theta_z=float(theta_z))


def rate_curve(psi: PsiCurve, ys) -> RateFunction:
    """Legendre transform over an ascending array of levels."""
    ys = np.asarray(ys, dtype=float)
    if ys.ndim != 1 or not np.all(np.diff(ys) > 0):
        raise ValueError("ys must be one-dimensional and strictly ascending")
    values = np.empty_like(ys)
    args = np.empty_like(ys)
    flags = np.zeros(ys.size, dtype=bool)
    for i, y in enumerate(ys):
        res = legendre(psi, float(y))
        values[i] = res.value
        args[i] = res.arg_theta
        flags[i] = res.boundary_flag
    return RateFunction(ys=ys, values=values, arg_thetas=args,
                        domain_flags=flags)
