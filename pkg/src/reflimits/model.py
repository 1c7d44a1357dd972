"""Problem data for one-dimensional reflecting diffusions.

A diffusion on [0, b] (or [0, inf)) is described by a drift coefficient
mu(x), a squared volatility sigma2(x) > 0, and the reflecting domain.  The
quantity of interest is the additive functional

    A(t) = int_0^t f(X(s)) ds + r0 * L(t) + rb * U(t),

where L and U are the boundary local times at the lower and upper barrier
and r0, rb >= 0 weight them.  Reflection directions are fixed: +1 at the
lower barrier, -1 at the upper one.

Coefficients are closed parametric families (constant, mean-reverting
linear drift, constant cost, zero cost) plus a sampled-grid fallback with
linear interpolation.  All types are immutable; all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ConstantDrift",
    "OuDrift",
    "ConstantSq",
    "ConstantCost",
    "ZeroCost",
    "SampledGrid",
    "CoefficientSpec",
    "TwoBarrier",
    "SingleBarrier",
    "DiffusionModel",
    "AdditiveFunctional",
    "SolverConfig",
    "ValidationReport",
    "InadmissibleModelError",
    "eval_coefficient",
    "validate",
    "solver_grid",
]


class InadmissibleModelError(ValueError):
    """Raised by solvers when a model violates the standing hypotheses."""


@dataclass(frozen=True)
class ConstantDrift:
    """Constant drift mu(x) = mu."""

    mu: float


@dataclass(frozen=True)
class OuDrift:
    """Mean-reverting drift mu(x) = -a * (x - c), a > 0."""

    a: float
    c: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"OuDrift requires a > 0, got a={self.a}")


@dataclass(frozen=True)
class ConstantSq:
    """Constant squared volatility sigma2(x) = sigma2.

    Positivity is a model hypothesis, not a construction invariant: it is
    reported by :func:`validate` so that an inadmissible value can be
    diagnosed rather than rejected at parse time.
    """

    sigma2: float


@dataclass(frozen=True)
class ConstantCost:
    """Constant running cost f(x) = value."""

    value: float


@dataclass(frozen=True)
class ZeroCost:
    """Zero running cost, f(x) = 0."""


@dataclass(frozen=True, eq=False)
class SampledGrid:
    """Coefficient tabulated on a strictly ascending grid.

    Evaluation interpolates linearly between nodes and reproduces the
    tabulated values exactly at the nodes.  The grid must cover the part
    of the domain the solvers touch; evaluation outside [xs[0], xs[-1]]
    raises.
    """

    xs: np.ndarray
    values: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, SampledGrid)
                and np.array_equal(self.xs, other.xs)
                and np.array_equal(self.values, other.values))

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.size < 2:
            raise ValueError("SampledGrid needs at least two nodes")
        if values.shape != xs.shape:
            raise ValueError("SampledGrid xs and values must have equal length")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("SampledGrid xs must be strictly ascending")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", values)


CoefficientSpec = Union[
    ConstantDrift, OuDrift, ConstantSq, ConstantCost, ZeroCost, SampledGrid
]


@dataclass(frozen=True)
class TwoBarrier:
    """Compact domain [0, b] with reflection at both endpoints."""

    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"TwoBarrier requires b > 0, got b={self.b}")


@dataclass(frozen=True)
class SingleBarrier:
    """Half-line domain [0, inf) with reflection at the origin only."""


@dataclass(frozen=True)
class DiffusionModel:
    """Drift, squared volatility, and reflecting domain of the diffusion."""

    mu: CoefficientSpec
    sigma2: CoefficientSpec
    domain: Union[TwoBarrier, SingleBarrier]


@dataclass(frozen=True)
class AdditiveFunctional:
    """Running cost plus boundary weights of A(t).

    ``rb`` is ignored for a single-barrier domain (there is no upper
    boundary to weight).
    """

    f: CoefficientSpec = ZeroCost()
    r0: float = 0.0
    rb: float = 0.0


@dataclass(frozen=True)
class SolverConfig:
    """Shared numerical knobs for the deterministic solvers.

    ``grid_points`` must be odd so the composite-Simpson panels pair up;
    ``region_eps`` is the relative half-width of the band around closed-form
    region boundaries that routes to the boundary-case formulas.
    """

    grid_points: int = 4001
    quad_tol: float = 1e-10
    root_tol: float = 1e-12
    eig_tol: float = 1e-10
    region_eps: float = 1e-9

    def __post_init__(self):
        if self.grid_points < 3 or self.grid_points % 2 == 0:
            raise ValueError("grid_points must be odd and >= 3")
        for name in ("quad_tol", "root_tol", "eig_tol", "region_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking a (model, functional) pair against the standing
    hypotheses: positive volatility, bounded cost, nonnegative weights."""

    violations: tuple[str, ...] = ()

    @property
    def admissible(self) -> bool:
        return not self.violations

    def raise_if_inadmissible(self) -> None:
        if self.violations:
            raise InadmissibleModelError("; ".join(self.violations))


def eval_coefficient(spec: CoefficientSpec, x):
    """Evaluate a coefficient spec at ``x`` (scalar or array).

    SampledGrid specs interpolate linearly and reject points outside their
    tabulated range.
    """
    xa = np.asarray(x, dtype=float)
    if isinstance(spec, ConstantDrift):
        out = np.full_like(xa, spec.mu)
    elif isinstance(spec, OuDrift):
        out = -spec.a * (xa - spec.c)
    elif isinstance(spec, ConstantSq):
        out = np.full_like(xa, spec.sigma2)
    elif isinstance(spec, ConstantCost):
        out = np.full_like(xa, spec.value)
    elif isinstance(spec, ZeroCost):
        out = np.zeros_like(xa)
    elif isinstance(spec, SampledGrid):
        lo, hi = spec.xs[0], spec.xs[-1]
        if np.any(xa < lo) or np.any(xa > hi):
            raise ValueError(
                f"evaluation point outside sampled range [{lo}, {hi}]"
            )
        out = np.interp(xa, spec.xs, spec.values)
    else:
        raise TypeError(f"unknown coefficient spec {type(spec).__name__}")
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def _validation_points(model: DiffusionModel, n: int = 257) -> np.ndarray:
    if isinstance(model.domain, TwoBarrier):
        return np.linspace(0.0, model.domain.b, n)
    # Half-line: probe a generous finite stretch, clipped to any sampled
    # range so SampledGrid coefficients do not raise during validation.
    hi = 50.0
    for spec in (model.mu, model.sigma2):
        if isinstance(spec, SampledGrid):
            hi = min(hi, float(spec.xs[-1]))
    return np.linspace(0.0, hi, n)


def validate(model: DiffusionModel, functional: AdditiveFunctional) -> ValidationReport:
    """Check the hypotheses shared by every solver.

    Reports violations instead of raising; downstream solvers refuse
    inadmissible models.  Idempotent and side-effect free.
    """
    violations: list[str] = []
    pts = _validation_points(model)
    try:
        s2 = eval_coefficient(model.sigma2, pts)
    except ValueError as exc:
        violations.append(f"sigma2 not evaluable on domain: {exc}")
        s2 = None
    if s2 is not None and not np.all(np.asarray(s2) > 0):
        violations.append("sigma2 must be positive on the whole domain")
    if isinstance(model.domain, SingleBarrier) and isinstance(functional.f, OuDrift):
        violations.append("cost f is unbounded on [0, inf)")
    if functional.r0 < 0 or functional.rb < 0:
        violations.append("boundary weights must be nonnegative")
    return ValidationReport(tuple(violations))


def solver_grid(model: DiffusionModel, config: SolverConfig,
                x_max: float | None = None) -> np.ndarray:
    """Uniform solver grid over [0, b], or [0, x_max] for a half-line domain."""
    if isinstance(model.domain, TwoBarrier):
        hi = model.domain.b
    else:
        if x_max is None:
            raise ValueError("single-barrier grids need an explicit x_max")
        hi = float(x_max)
    if not hi > 0:
        raise ValueError("grid upper end must be positive")
    return np.linspace(0.0, hi, config.grid_points)


def _runtime_coef(spec: CoefficientSpec):
    """Pack a coefficient spec into plain scalars/arrays for jitted kernels.

    Returns (kind, p0, p1, xs, values) with kind 0=constant, 1=-a(x-c),
    2=sampled grid.
    """
    empty = np.empty(0, dtype=np.float64)
    if isinstance(spec, ConstantDrift):
        return 0, float(spec.mu), 0.0, empty, empty
    if isinstance(spec, ConstantSq):
        return 0, float(spec.sigma2), 0.0, empty, empty
    if isinstance(spec, ConstantCost):
        return 0, float(spec.value), 0.0, empty, empty
    if isinstance(spec, ZeroCost):
        return 0, 0.0, 0.0, empty, empty
    if isinstance(spec, OuDrift):
        return 1, float(spec.a), float(spec.c), empty, empty
    if isinstance(spec, SampledGrid):
        return 2, 0.0, 0.0, spec.xs, spec.values
    raise TypeError(f"unknown coefficient spec {type(spec).__name__}")
