"""Independent stochastic oracle: reflected Euler-Maruyama simulation.

Propose X* = X + mu(X) dt + sqrt(sigma2(X) dt) Z; an overshoot below the
lower barrier is collected as lower local time (Delta L = barrier - X*)
and the point projected back, symmetrically above the upper barrier.  The
additive functional accumulates f(X) dt at the pre-step position plus the
weighted local-time increments.

Plain projection at the physical barriers carries a known O(sqrt(dt))
boundary bias (the discrete walk misses the local time of within-step
excursions).  By default the barriers are therefore shifted inward by
0.5826 sigma sqrt(dt) -- the mean overshoot constant of a Gaussian walk --
which cancels the leading bias of both the local-time rates and the
occupation law; ``boundary_shift=False`` reproduces the uncorrected
projection scheme.

Randomness is drawn from counter-based Philox streams keyed by
(seed, replication), so replications are reproducible and independent of
the execution order: estimates are bitwise identical for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .model import (
    AdditiveFunctional,
    DiffusionModel,
    TwoBarrier,
    _runtime_coef,
    eval_coefficient,
    validate,
)

__all__ = [
    "McConfig",
    "PathRecord",
    "McEstimate",
    "CgfPoint",
    "BatchMeansEstimate",
    "simulate_path",
    "estimate_lln_clt",
    "estimate_scaled_cgf",
    "estimate_batch_means",
    "BOUNDARY_SHIFT_CONSTANT",
]

# Mean overshoot of a Gaussian random walk at a barrier: -zeta(1/2)/sqrt(2 pi).
BOUNDARY_SHIFT_CONSTANT = 0.5825971579390107


@dataclass(frozen=True)
class McConfig:
    """Simulation design.

    ``boundary_shift`` toggles the sqrt(dt) barrier-shift correction (see
    module docstring).  ``hist_bins`` histogram bins span [0, b] on a
    compact domain and [0, hist_xmax] on the half-line, where positions
    beyond hist_xmax land in an overflow counter.
    """

    horizon_t: float
    replications: int
    seed: int
    x0: float
    dt: float = 1e-4
    batch_count: int = 32
    hist_bins: int = 50
    hist_xmax: Optional[float] = None
    boundary_shift: bool = True
    chunk_steps: int = 1_000_000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon_t > 0:
            raise ValueError("horizon_t must be positive")
        if self.dt > self.horizon_t:
            raise ValueError("dt must not exceed horizon_t")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.batch_count < 1 or self.hist_bins < 1 or self.chunk_steps < 1:
            raise ValueError("batch_count, hist_bins, chunk_steps must be >= 1")


@dataclass(frozen=True)
class PathRecord:
    """Terminal state of one simulated replication."""

    a_final: float
    l_final: float
    u_final: float
    x_final: float
    occupation: np.ndarray
    overflow: int
    n_steps: int


@dataclass(frozen=True)
class CgfPoint:
    """Empirical scaled CGF at one theta, with a weight-concentration
    diagnostic: when most exponential weight sits on one replication the
    estimate is flagged unreliable."""

    value: float
    se: float
    top_weight_fraction: float
    unreliable: bool


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimates with replication standard errors."""

    alpha_hat: float
    alpha_se: float
    eta2_hat: float
    eta2_se: float
    diagnostics: dict
    occupation_density: Optional[np.ndarray] = None
    bin_edges: Optional[np.ndarray] = None
    cgf_hat: Optional[dict] = None


@dataclass(frozen=True)
class BatchMeansEstimate:
    """Single-long-path batch-means variance estimate."""

    eta2_hat: float
    eta2_se: float
    alpha_hat: float
    batch_count: int
    batch_length: float


@njit(cache=True, inline="always")
def _ceval(kind, p0, p1, xs, vs, x):
    if kind == 0:
        return p0
    if kind == 1:
        return -p0 * (x - p1)
    # sampled grid, linear interpolation, clamped to the tabulated range
    n = xs.size
    if x <= xs[0]:
        return vs[0]
    if x >= xs[n - 1]:
        return vs[n - 1]
    j = np.searchsorted(xs, x)
    w = (x - xs[j - 1]) / (xs[j] - xs[j - 1])
    return vs[j - 1] * (1.0 - w) + vs[j] * w


@njit(cache=True, nogil=True)
def _sim_chunk(x, a, l, u, z, dt,
               kmu, mu0, mu1, muxs, muvs,
               ks2, s20, s21, s2xs, s2vs,
               kf, f0, f1, fxs, fvs,
               r0, rb, lo_b, hi_b,
               bin_w, nbins, clamp_top, occ):
    """Advance one path through len(z) steps; accumulate A, L, U and the
    occupation histogram in place.  The running totals are threaded through
    so results are bitwise independent of the chunking.  Returns
    (x, a, l, u, overflow)."""
    sqdt = math.sqrt(dt)
    overflow = 0
    for i in range(z.size):
        mu = _ceval(kmu, mu0, mu1, muxs, muvs, x)
        s2 = _ceval(ks2, s20, s21, s2xs, s2vs, x)
        fv = _ceval(kf, f0, f1, fxs, fvs, x)
        xstar = x + mu * dt + math.sqrt(s2 * dt) * z[i]
        dl = 0.0
        du = 0.0
        if xstar < lo_b:
            dl = lo_b - xstar
            xstar = lo_b
        elif xstar > hi_b:
            du = xstar - hi_b
            xstar = hi_b
        x = xstar
        a += fv * dt + r0 * dl + rb * du
        l += dl
        u += du
        k = int(x / bin_w)
        if k >= nbins:
            if clamp_top:
                k = nbins - 1
            else:
                overflow += 1
                continue
        occ[k] += 1
    return x, a, l, u, overflow


class _Runner:
    """Frozen per-run simulation context shared across replications."""

    def __init__(self, model: DiffusionModel, functional: AdditiveFunctional,
                 mc: McConfig):
        validate(model, functional).raise_if_inadmissible()
        self.mc = mc
        self.n_steps = int(round(mc.horizon_t / mc.dt))
        if self.n_steps < 1:
            raise ValueError("horizon_t / dt must be at least one step")
        self.coef = (_runtime_coef(model.mu) + _runtime_coef(model.sigma2)
                     + _runtime_coef(functional.f))
        self.r0 = float(functional.r0)
        self.rb = float(functional.rb)
        two_barrier = isinstance(model.domain, TwoBarrier)
        b = model.domain.b if two_barrier else math.inf
        if not 0.0 <= mc.x0 <= b:
            raise ValueError(f"x0={mc.x0} outside the domain")
        shift0 = shiftb = 0.0
        if mc.boundary_shift:
            s2_lo = eval_coefficient(model.sigma2, 0.0)
            shift0 = BOUNDARY_SHIFT_CONSTANT * math.sqrt(s2_lo * mc.dt)
            if two_barrier:
                s2_hi = eval_coefficient(model.sigma2, b)
                shiftb = BOUNDARY_SHIFT_CONSTANT * math.sqrt(s2_hi * mc.dt)
                shift0 = min(shift0, 0.25 * b)
                shiftb = min(shiftb, 0.25 * b)
        self.lo_b = shift0
        self.hi_b = (b - shiftb) if two_barrier else math.inf
        self.x_start = min(max(mc.x0, self.lo_b), self.hi_b)
        hist_hi = b if two_barrier else (
            mc.hist_xmax if mc.hist_xmax is not None else 20.0)
        self.bin_w = hist_hi / mc.hist_bins
        self.bin_edges = np.linspace(0.0, hist_hi, mc.hist_bins + 1)
        self.clamp_top = two_barrier

    def run_one(self, replication_index: int, n_steps: Optional[int] = None,
                record_at: Optional[list] = None) -> PathRecord:
        """Simulate one replication; optionally record the running A at the
        given step counts (ascending) into a list of equal length."""
        mc = self.mc
        total = self.n_steps if n_steps is None else n_steps
        key = np.array([mc.seed, replication_index], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        occ = np.zeros(mc.hist_bins, dtype=np.int64)
        x = self.x_start
        a = l = u = 0.0
        overflow = 0
        done = 0
        marks = [] if record_at is None else list(record_at)
        a_at_marks: list[float] = []
        while done < total:
            m = min(mc.chunk_steps, total - done)
            if len(a_at_marks) < len(marks):
                m = min(m, marks[len(a_at_marks)] - done)
            z = rng.standard_normal(m)
            x, a, l, u, ov = _sim_chunk(
                x, a, l, u, z, mc.dt, *self.coef, self.r0, self.rb,
                self.lo_b, self.hi_b, self.bin_w, mc.hist_bins,
                self.clamp_top, occ)
            overflow += ov
            done += m
            if len(a_at_marks) < len(marks) and done == marks[len(a_at_marks)]:
                a_at_marks.append(a)
        if record_at is not None:
            record_at[:] = a_at_marks
        return PathRecord(a_final=a, l_final=l, u_final=u, x_final=x,
                          occupation=occ, overflow=overflow,
                          n_steps=total)


def simulate_path(model: DiffusionModel, functional: AdditiveFunctional,
                  mc: McConfig, replication_index: int) -> PathRecord:
    """One replication of the reflected Euler-Maruyama path.

    The replication's randomness is fully determined by
    (mc.seed, replication_index); simulating replications in any order or
    in parallel yields identical records.
    """
    return _Runner(model, functional, mc).run_one(replication_index)


def _run_all(runner: _Runner, threads: int):
    reps = runner.mc.replications
    records: list[Optional[PathRecord]] = [None] * reps
    if threads <= 1:
        for r in range(reps):
            records[r] = runner.run_one(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {pool.submit(runner.run_one, r): r for r in range(reps)}
            for fut, r in futs.items():
                records[r] = fut.result()
    return records


def estimate_lln_clt(model: DiffusionModel, functional: AdditiveFunctional,
                     mc: McConfig, threads: int = 1) -> McEstimate:
    """Replication estimates of the strong-law and CLT constants.

    alpha_hat is the replication mean of A(t)/t; eta2_hat the replication
    sample variance of (A(t) - alpha_hat t)/sqrt(t).  The occupation
    histogram is pooled across replications.
    """
    if mc.replications < 2:
        raise ValueError("standard errors need replications >= 2")
    runner = _Runner(model, functional, mc)
    records = _run_all(runner, threads)
    t = mc.dt * runner.n_steps
    rates = np.array([rec.a_final / t for rec in records])
    r = rates.size
    alpha_hat = float(rates.mean())
    alpha_se = float(rates.std(ddof=1) / math.sqrt(r))
    eta2_hat = float(t * rates.var(ddof=1))
    eta2_se = eta2_hat * math.sqrt(2.0 / (r - 1))
    occ = np.zeros(mc.hist_bins, dtype=np.int64)
    for rec in records:
        occ += rec.occupation
    counted = int(occ.sum())
    density = occ / (counted * runner.bin_w) if counted else occ.astype(float)
    return McEstimate(
        alpha_hat=alpha_hat, alpha_se=alpha_se,
        eta2_hat=eta2_hat, eta2_se=eta2_se,
        occupation_density=density, bin_edges=runner.bin_edges,
        diagnostics={"dt": mc.dt, "horizon_t": t,
                     "replications": mc.replications, "seed": mc.seed,
                     "boundary_shift": mc.boundary_shift,
                     "overflow_fraction":
                         sum(rec.overflow for rec in records)
                         / (runner.n_steps * r)})


def _cgf_point(theta: float, a_finals: np.ndarray, t: float) -> CgfPoint:
    """(1/t) log mean exp(theta A) in log-sum-exp form with a delta-method
    standard error."""
    r = a_finals.size
    if theta == 0.0:
        return CgfPoint(value=0.0, se=0.0, top_weight_fraction=1.0 / r,
                        unreliable=False)
    s = theta * a_finals
    m = float(s.max())
    w = np.exp(s - m)
    mean_w = float(w.mean())
    value = (m + math.log(mean_w)) / t
    se = float(w.std(ddof=1) / (mean_w * math.sqrt(r))) / t
    top = float(w.max() / w.sum())
    return CgfPoint(value=value, se=se, top_weight_fraction=top,
                    unreliable=top > 0.5)


def estimate_scaled_cgf(model: DiffusionModel,
                        functional: AdditiveFunctional, mc: McConfig,
                        thetas, threads: int = 1) -> McEstimate:
    """Empirical scaled CGF (1/t) log E exp(theta A(t)) on a theta list.

    Computed in log-sum-exp form, so exp(theta A) never overflows.  Each
    point carries the fraction of weight on the top replication; above 0.5
    the point is flagged unreliable (the estimator degenerates when
    t |theta| is large).
    """
    if mc.replications < 2:
        raise ValueError("standard errors need replications >= 2")
    runner = _Runner(model, functional, mc)
    records = _run_all(runner, threads)
    t = mc.dt * runner.n_steps
    a_finals = np.array([rec.a_final for rec in records])
    rates = a_finals / t
    r = rates.size
    cgf = {float(th): _cgf_point(float(th), a_finals, t) for th in thetas}
    occ = np.zeros(mc.hist_bins, dtype=np.int64)
    for rec in records:
        occ += rec.occupation
    counted = int(occ.sum())
    density = occ / (counted * runner.bin_w) if counted else occ.astype(float)
    return McEstimate(
        alpha_hat=float(rates.mean()),
        alpha_se=float(rates.std(ddof=1) / math.sqrt(r)),
        eta2_hat=float(t * rates.var(ddof=1)),
        eta2_se=float(t * rates.var(ddof=1) * math.sqrt(2.0 / (r - 1))),
        cgf_hat=cgf,
        occupation_density=density, bin_edges=runner.bin_edges,
        diagnostics={"dt": mc.dt, "horizon_t": t,
                     "replications": mc.replications, "seed": mc.seed,
                     "boundary_shift": mc.boundary_shift})


def estimate_batch_means(model: DiffusionModel,
                         functional: AdditiveFunctional,
                         mc: McConfig) -> BatchMeansEstimate:
    """eta2 from one long path split into batch_count batches.

    Cross-checks the replication design: the strong law and CLT are
    single-path statements, so batch means of A-increments over
    batch_count equal stretches estimate the same variance constant.
    Steps beyond the last full batch are dropped.
    """
    if mc.batch_count < 2:
        raise ValueError("batch means need batch_count >= 2")
    runner = _Runner(model, functional, mc)
    per = runner.n_steps // mc.batch_count
    if per < 1:
        raise ValueError("horizon too short for the requested batch_count")
    marks = [(j + 1) * per for j in range(mc.batch_count)]
    a_marks = list(marks)
    runner.run_one(0, n_steps=marks[-1], record_at=a_marks)
    tau = per * mc.dt
    incr = np.diff(np.concatenate(([0.0], a_marks))) / tau
    m = incr.size
    eta2_hat = float(tau * incr.var(ddof=1))
    return BatchMeansEstimate(
        eta2_hat=eta2_hat,
        eta2_se=eta2_hat * math.sqrt(2.0 / (m - 1)),
        alpha_hat=float(a_marks[-1] / (tau * m)),
        batch_count=m,
        batch_length=tau)
