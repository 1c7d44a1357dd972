"""Composite-Simpson integration on shared uniform grids.

Every analytic solver in this package reduces to nested integrals of the
integrating-factor kind, which need cumulative values at *all* grid nodes,
not just the total.  A single pass of composite Simpson provides exactly
that; uniform grids keep it exact for cubics at the paired nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CumulativeTable", "cumulative_integral", "definite_integral"]

# Relative non-uniformity tolerated in a "uniform" grid (linspace jitter).
_UNIFORM_RTOL = 1e-8


@dataclass(frozen=True)
class CumulativeTable:
    """Cumulative integral from the grid origin to each node; values[0] = 0."""

    xs: np.ndarray
    values: np.ndarray


def _check_grid(grid: np.ndarray) -> float:
    if grid.ndim != 1 or grid.size < 3:
        raise ValueError("grid must be one-dimensional with at least 3 nodes")
    d = np.diff(grid)
    if not np.all(d > 0):
        raise ValueError("grid must be strictly ascending")
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if np.max(np.abs(d - h)) > _UNIFORM_RTOL * h:
        raise ValueError("grid must be uniform")
    return h


def cumulative_integral(integrand, grid) -> CumulativeTable:
    """Cumulative composite-Simpson integral of sampled values.

    Paired panels use the standard Simpson weights; the value at each odd
    node comes from integrating the local quadratic over the half panel, so
    odd-node values are exact for quadratics and carry an O(h^4) local
    error otherwise.  If the caller supplies an even node count, the final
    unpaired panel falls back to the trapezoid rule.
    """
    g = np.asarray(integrand, dtype=float)
    xs = np.asarray(grid, dtype=float)
    if g.shape != xs.shape:
        raise ValueError("integrand and grid must have equal length")
    h = _check_grid(xs)
    n = xs.size
    out = np.zeros(n)

    npairs = (n - 1) // 2
    last_paired = 2 * npairs  # index of the last node covered by full panels
    seg = (h / 3.0) * (g[0:last_paired - 1:2] + 4.0 * g[1:last_paired:2]
                       + g[2:last_paired + 1:2])
    # extended-precision prefix sum keeps node values at a few ulp even on
    # long grids (plain float64 cumsum drifts by O(n) ulp)
    out[2:last_paired + 1:2] = np.cumsum(seg, dtype=np.longdouble)
    # Odd nodes: half-panel integral of the quadratic through the panel.
    out[1:last_paired:2] = out[0:last_paired - 1:2] + (h / 12.0) * (
        5.0 * g[0:last_paired - 1:2] + 8.0 * g[1:last_paired:2]
        - g[2:last_paired + 1:2])
    if last_paired != n - 1:  # even node count: trapezoid on the tail panel
        out[-1] = out[-2] + 0.5 * h * (g[-2] + g[-1])
    return CumulativeTable(xs=xs, values=out)


def definite_integral(integrand, grid) -> float:
    """Definite integral over the whole grid (terminal cumulative value)."""
    return float(cumulative_integral(integrand, grid).values[-1])
