"""Command-line entry point.

Subcommands run the solver pipelines in dependency order and emit one
structured JSON document plus comma-separated tables per curve:

    reflimits analyze  --preset rbm-drift --out results/
    reflimits psi      --preset zhang-case --out results/
    reflimits rate     --preset zhang-case --out results/
    reflimits simulate --preset rbm-zero-drift --out results/ --threads 4
    reflimits verify   --preset rbm-zero-drift --out results/

Every command accepts --spec PATH (a JSON run spec) instead of a preset,
plus --seed N (overrides the spec's Monte Carlo seed) and --threads N
(replication parallelism; never changes the numbers).  Exit codes:
0 success, 2 validation failure, 3 solver failure, 4 verification failure.
All numbers in the result document come from module operations; the CLI
only formats.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import poisson, rate, spectral
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
    ZeroCost,
    validate,
)
from .montecarlo import McConfig, estimate_lln_clt, estimate_scaled_cgf
from .poisson import NonErgodicError
from .quadrature import cumulative_integral
from .spectral import NonCompactDomainError, SolverError

__all__ = ["RunSpec", "parse_spec", "spec_to_dict", "preset_spec", "run",
           "verify", "main", "PRESETS", "SCHEMA_VERSION",
           "DEFAULT_VERIFY_THRESHOLDS"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

ALL_OUTPUTS = ("alpha", "eta2", "density", "u_prime", "psi", "rate", "mc",
               "verify")

DEFAULT_VERIFY_THRESHOLDS = {
    "max_alpha_z": 3.0,
    "max_eta2_rel": 0.15,
    "max_occupation_gap": 0.05,
    "max_cgf_gap": 0.02,
    "alpha_offset": 0.0,  # test hook: shifts the analytic alpha reference
}


@dataclass(frozen=True)
class RunSpec:
    """Parsed run specification: model + functional + solver/MC settings
    plus the set of requested outputs."""

    model: DiffusionModel
    functional: AdditiveFunctional
    solver: SolverConfig
    mc: Optional[McConfig]
    cgf_thetas: tuple
    theta_grid: tuple
    rate_ys: tuple
    outputs: tuple
    x_max: Optional[float]
    verify_thresholds: dict

    def require_compact(self, what: str) -> None:
        if not isinstance(self.model.domain, TwoBarrier):
            raise InadmissibleModelError(
                f"{what} requires a compact domain: large deviations "
                "quantities are defined on [0, b] only")


# ---------------------------------------------------------------------------
# Spec parsing / serialization
# ---------------------------------------------------------------------------

def _parse_coefficient(d: dict, role: str):
    kind = d.get("kind")
    if kind == "constant":
        value = float(d["value"])
        if role == "mu":
            return ConstantDrift(value)
        if role == "sigma2":
            return ConstantSq(value)
        return ConstantCost(value)
    if kind == "ou":
        return OuDrift(float(d["a"]), float(d["c"]))
    if kind == "zero":
        return ZeroCost()
    if kind == "sampled":
        return SampledGrid(np.asarray(d["xs"], dtype=float),
                           np.asarray(d["values"], dtype=float))
    raise ValueError(f"unknown coefficient kind {kind!r} for {role}")


def _coefficient_to_dict(spec) -> dict:
    if isinstance(spec, ConstantDrift):
        return {"kind": "constant", "value": spec.mu}
    if isinstance(spec, ConstantSq):
        return {"kind": "constant", "value": spec.sigma2}
    if isinstance(spec, ConstantCost):
        return {"kind": "constant", "value": spec.value}
    if isinstance(spec, OuDrift):
        return {"kind": "ou", "a": spec.a, "c": spec.c}
    if isinstance(spec, ZeroCost):
        return {"kind": "zero"}
    if isinstance(spec, SampledGrid):
        return {"kind": "sampled", "xs": list(map(float, spec.xs)),
                "values": list(map(float, spec.values))}
    raise TypeError(f"unknown coefficient {type(spec).__name__}")


def _parse_grid(node, name: str) -> tuple:
    """A grid is either an explicit list or {lo, hi, points}."""
    if node is None:
        return ()
    if isinstance(node, dict):
        pts = np.linspace(float(node["lo"]), float(node["hi"]),
                          int(node["points"]))
        return tuple(float(v) for v in pts)
    arr = [float(v) for v in node]
    if len(arr) < 2:
        raise ValueError(f"{name} needs at least two points")
    return tuple(arr)


def parse_spec(doc: dict) -> RunSpec:
    """Build a RunSpec from its JSON document."""
    md = doc["model"]
    dom = md["domain"]
    if dom["kind"] == "two_barrier":
        domain = TwoBarrier(float(dom["b"]))
    elif dom["kind"] == "single_barrier":
        domain = SingleBarrier()
    else:
        raise ValueError(f"unknown domain kind {dom['kind']!r}")
    model = DiffusionModel(
        mu=_parse_coefficient(md["mu"], "mu"),
        sigma2=_parse_coefficient(md["sigma2"], "sigma2"),
        domain=domain,
    )
    fd = doc.get("functional", {})
    functional = AdditiveFunctional(
        f=_parse_coefficient(fd.get("f", {"kind": "zero"}), "f"),
        r0=float(fd.get("r0", 0.0)),
        rb=float(fd.get("rb", 0.0)),
    )
    solver = SolverConfig(**doc.get("solver", {}))
    mc = None
    cgf_thetas: tuple = ()
    if "mc" in doc:
        mc_doc = dict(doc["mc"])
        cgf_thetas = tuple(float(t) for t in mc_doc.pop("cgf_thetas", ()))
        mc_doc["seed"] = int(mc_doc.get("seed", 0))
        mc = McConfig(**mc_doc)
    outputs = tuple(doc.get("outputs", ()))
    for out in outputs:
        if out not in ALL_OUTPUTS:
            raise ValueError(f"unknown output {out!r}")
    thresholds = dict(DEFAULT_VERIFY_THRESHOLDS)
    thresholds.update(doc.get("verify", {}))
    return RunSpec(
        model=model,
        functional=functional,
        solver=solver,
        mc=mc,
        cgf_thetas=cgf_thetas,
        theta_grid=_parse_grid(doc.get("theta_grid"), "theta_grid"),
        rate_ys=_parse_grid(doc.get("rate_ys"), "rate_ys"),
        outputs=outputs,
        x_max=(float(doc["x_max"]) if "x_max" in doc else None),
        verify_thresholds=thresholds,
    )


def spec_to_dict(spec: RunSpec) -> dict:
    """Serialize a RunSpec back to its JSON document form."""
    if isinstance(spec.model.domain, TwoBarrier):
        dom = {"kind": "two_barrier", "b": spec.model.domain.b}
    else:
        dom = {"kind": "single_barrier"}
    doc: dict = {
        "model": {
            "mu": _coefficient_to_dict(spec.model.mu),
            "sigma2": _coefficient_to_dict(spec.model.sigma2),
            "domain": dom,
        },
        "functional": {
            "f": _coefficient_to_dict(spec.functional.f),
            "r0": spec.functional.r0,
            "rb": spec.functional.rb,
        },
        "solver": {
            "grid_points": spec.solver.grid_points,
            "quad_tol": spec.solver.quad_tol,
            "root_tol": spec.solver.root_tol,
            "eig_tol": spec.solver.eig_tol,
            "region_eps": spec.solver.region_eps,
        },
        "outputs": list(spec.outputs),
        "verify": dict(spec.verify_thresholds),
    }
    if spec.mc is not None:
        doc["mc"] = {
            "horizon_t": spec.mc.horizon_t,
            "replications": spec.mc.replications,
            "seed": spec.mc.seed,
            "x0": spec.mc.x0,
            "dt": spec.mc.dt,
            "batch_count": spec.mc.batch_count,
            "hist_bins": spec.mc.hist_bins,
            "boundary_shift": spec.mc.boundary_shift,
        }
        if spec.mc.hist_xmax is not None:
            doc["mc"]["hist_xmax"] = spec.mc.hist_xmax
        if spec.cgf_thetas:
            doc["mc"]["cgf_thetas"] = list(spec.cgf_thetas)
    if spec.theta_grid:
        doc["theta_grid"] = list(spec.theta_grid)
    if spec.rate_ys:
        doc["rate_ys"] = list(spec.rate_ys)
    if spec.x_max is not None:
        doc["x_max"] = spec.x_max
    return doc


# ---------------------------------------------------------------------------
# Presets: the worked examples, one command each
# ---------------------------------------------------------------------------

def _preset_mc(seed: int = 4, **kw) -> dict:
    base = {"horizon_t": 200.0, "replications": 200, "seed": seed,
            "x0": 0.5, "dt": 4e-4, "hist_bins": 25}
    base.update(kw)
    return base


PRESETS = {
    # driftless Brownian motion between two barriers, pure boundary cost
    "rbm-zero-drift": {
        "model": {"mu": {"kind": "constant", "value": 0.0},
                  "sigma2": {"kind": "constant", "value": 1.0},
                  "domain": {"kind": "two_barrier", "b": 1.0}},
        "functional": {"f": {"kind": "zero"}, "r0": 1.0, "rb": 1.0},
        "mc": _preset_mc(),
        "theta_grid": {"lo": -3.0, "hi": 3.0, "points": 61},
        "outputs": ["alpha", "eta2", "density", "u_prime"],
    },
    # positive drift variant
    "rbm-drift": {
        "model": {"mu": {"kind": "constant", "value": 1.0},
                  "sigma2": {"kind": "constant", "value": 1.0},
                  "domain": {"kind": "two_barrier", "b": 1.0}},
        "functional": {"f": {"kind": "zero"}, "r0": 1.0, "rb": 1.0},
        "mc": _preset_mc(),
        "theta_grid": {"lo": -3.0, "hi": 3.0, "points": 61},
        "outputs": ["alpha", "eta2", "density", "u_prime"],
    },
    # reflected Ornstein-Uhlenbeck, mean reversion to the mid-point
    "rou": {
        "model": {"mu": {"kind": "ou", "a": 1.0, "c": 0.5},
                  "sigma2": {"kind": "constant", "value": 1.0},
                  "domain": {"kind": "two_barrier", "b": 1.0}},
        "functional": {"f": {"kind": "zero"}, "r0": 1.0, "rb": 1.0},
        "mc": _preset_mc(),
        "theta_grid": {"lo": -3.0, "hi": 3.0, "points": 61},
        "outputs": ["alpha", "eta2", "density", "u_prime"],
    },
    # upper-barrier loss process: weights (0, 1), the case with a full
    # closed-form spectral solution
    "zhang-case": {
        "model": {"mu": {"kind": "constant", "value": 1.0},
                  "sigma2": {"kind": "constant", "value": 1.0},
                  "domain": {"kind": "two_barrier", "b": 1.0}},
        "functional": {"f": {"kind": "zero"}, "r0": 0.0, "rb": 1.0},
        "mc": _preset_mc(horizon_t=50.0, replications=1000, dt=5e-4,
                         cgf_thetas=[-0.5]),
        "theta_grid": {"lo": -3.0, "hi": 3.0, "points": 61},
        "outputs": ["alpha", "eta2", "psi", "rate"],
    },
}


def preset_spec(name: str) -> dict:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; "
                         f"choose from {sorted(PRESETS)}")
    return json.loads(json.dumps(PRESETS[name]))  # deep copy


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def _fmt(x: float) -> float:
    return float(x)


def _bin_averages(grid: np.ndarray, density: np.ndarray,
                  edges: np.ndarray) -> np.ndarray:
    """Average of an analytic density over histogram bins, via its
    cumulative integral on the solver grid."""
    cum = cumulative_integral(density, grid).values
    at_edges = np.interp(edges, grid, cum)
    return np.diff(at_edges) / np.diff(edges)


def run(spec: RunSpec, outputs: tuple, threads: int = 1):
    """Execute the requested pipelines in dependency order.

    Returns (document, curves) where curves maps file stem -> (header row,
    column arrays) for the CSV tables.
    """
    report = validate(spec.model, spec.functional)
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "spec": spec_to_dict(spec),
        "results": {
            "validation": {"admissible": report.admissible,
                           "violations": list(report.violations)},
        },
    }
    curves: dict = {}
    report.raise_if_inadmissible()
    res = doc["results"]

    want = set(outputs)
    if "verify" in want:
        want |= {"alpha", "eta2", "density"}
        if spec.mc is None:
            raise InadmissibleModelError("verify requires an mc section")
    for out in want & {"psi", "rate"}:
        spec.require_compact(out)

    need_poisson = want & {"alpha", "eta2", "density", "u_prime", "verify"}
    psol = None
    if need_poisson:
        psol = poisson.solve(spec.model, spec.functional, spec.solver,
                             spec.x_max)
        res["alpha"] = _fmt(psol.alpha)
        res["eta2"] = _fmt(psol.eta2)
        res["poisson_residuals"] = {k: _fmt(v)
                                    for k, v in psol.residuals.items()}
        if "density" in want or "verify" in want:
            curves["density"] = (("x", "p"), (psol.grid, psol.density))
            res["density_csv"] = "density.csv"
        if "u_prime" in want:
            curves["u_prime"] = (("x", "u_prime"), (psol.grid, psol.u_prime))
            res["u_prime_csv"] = "u_prime.csv"

    curve = None
    if want & {"psi", "rate"}:
        thetas = spec.theta_grid or tuple(np.linspace(-3.0, 3.0, 61))
        curve = spectral.psi_curve(spec.model, spec.functional,
                                   np.asarray(thetas), spec.solver)
        res["psi"] = {
            "alpha_check": _fmt(curve.alpha_check),
            "convexity_violations": int(curve.convexity_violations),
            "csv": "psi.csv",
        }
        curves["psi"] = (("theta", "psi"), (curve.thetas, curve.psis))

    if "rate" in want:
        if spec.rate_ys:
            ys = np.asarray(spec.rate_ys)
        else:
            secants = np.diff(curve.psis) / np.diff(curve.thetas)
            lo, hi = secants.min(), secants.max()
            pad = 0.05 * (hi - lo)
            ys = np.linspace(lo + pad, hi - pad, 101)
        rf = rate.rate_curve(curve, ys)
        res["rate"] = {"csv": "rate.csv",
                       "boundary_points": int(rf.domain_flags.sum())}
        curves["rate"] = (("y", "rate", "arg_theta", "boundary_flag"),
                          (rf.ys, rf.values, rf.arg_thetas,
                           rf.domain_flags.astype(int)))

    mc_est = None
    if want & {"mc", "verify"}:
        if spec.mc is None:
            raise InadmissibleModelError("mc output requires an mc section")
        if spec.cgf_thetas:
            mc_est = estimate_scaled_cgf(spec.model, spec.functional,
                                         spec.mc, spec.cgf_thetas, threads)
        else:
            mc_est = estimate_lln_clt(spec.model, spec.functional, spec.mc,
                                      threads)
        mc_doc = {
            "alpha_hat": _fmt(mc_est.alpha_hat),
            "alpha_se": _fmt(mc_est.alpha_se),
            "eta2_hat": _fmt(mc_est.eta2_hat),
            "eta2_se": _fmt(mc_est.eta2_se),
            "diagnostics": {k: (v if isinstance(v, (int, bool)) else _fmt(v))
                            for k, v in mc_est.diagnostics.items()},
        }
        if mc_est.cgf_hat is not None:
            mc_doc["cgf"] = {
                repr(th): {"value": _fmt(pt.value), "se": _fmt(pt.se),
                           "top_weight_fraction": _fmt(pt.top_weight_fraction),
                           "unreliable": pt.unreliable}
                for th, pt in mc_est.cgf_hat.items()}
        if mc_est.occupation_density is not None:
            curves["occupation"] = (("bin_left", "bin_right", "density"),
                                    (mc_est.bin_edges[:-1],
                                     mc_est.bin_edges[1:],
                                     mc_est.occupation_density))
            mc_doc["occupation_csv"] = "occupation.csv"
        res["mc"] = mc_doc

    if "verify" in want:
        res["verify"] = _verify_doc(spec, psol, mc_est)

    return doc, curves


def verify(spec: RunSpec, threads: int = 1) -> dict:
    """Analytic vs Monte Carlo cross-validation for one run spec.

    Returns the verification report: per-check comparisons (alpha z-score,
    eta2 relative error, occupation sup-gap, per-theta CGF gaps) and an
    overall pass flag evaluated against the spec's thresholds.
    """
    doc, _ = run(spec, ("verify",), threads=threads)
    return doc["results"]["verify"]


def _verify_doc(spec: RunSpec, psol, mc_est) -> dict:
    """Side-by-side analytic vs Monte Carlo comparison with pass/fail."""
    thr = spec.verify_thresholds
    alpha_ref = psol.alpha + thr.get("alpha_offset", 0.0)
    checks: dict = {}
    gap = mc_est.alpha_hat - alpha_ref
    if mc_est.alpha_se > 0.0:
        z = gap / mc_est.alpha_se
    else:
        # deterministic functional: zero spread, compare values directly
        z = 0.0 if abs(gap) <= 1e-12 * max(1.0, abs(alpha_ref)) else math.inf
    checks["alpha"] = {
        "analytic": _fmt(alpha_ref), "mc": _fmt(mc_est.alpha_hat),
        "se": _fmt(mc_est.alpha_se), "z": _fmt(z),
        "pass": bool(abs(z) <= thr["max_alpha_z"]),
    }
    if psol.eta2 > 0:
        rel = abs(mc_est.eta2_hat - psol.eta2) / psol.eta2
    else:
        rel = abs(mc_est.eta2_hat)
    checks["eta2"] = {
        "analytic": _fmt(psol.eta2), "mc": _fmt(mc_est.eta2_hat),
        "rel_error": _fmt(rel),
        "pass": bool(rel <= thr["max_eta2_rel"]),
    }
    if mc_est.occupation_density is not None:
        ref = _bin_averages(psol.grid, psol.density, mc_est.bin_edges)
        gap = float(np.max(np.abs(mc_est.occupation_density - ref)))
        checks["occupation"] = {
            "sup_gap": _fmt(gap),
            "pass": bool(gap <= thr["max_occupation_gap"]),
        }
    if mc_est.cgf_hat:
        spec.require_compact("cgf verification")
        cgf_checks = {}
        for th, pt in mc_est.cgf_hat.items():
            sol = spectral.solve_principal(spec.model, spec.functional, th,
                                           spec.solver)
            gap = abs(pt.value - sol.psi)
            cgf_checks[repr(th)] = {
                "analytic": _fmt(sol.psi), "mc": _fmt(pt.value),
                "se": _fmt(pt.se), "gap": _fmt(gap),
                "unreliable": pt.unreliable,
                "pass": bool(gap <= thr["max_cgf_gap"]),
            }
        checks["cgf"] = cgf_checks
    flat = []
    for c in checks.values():
        if "pass" in c:
            flat.append(c["pass"])
        else:
            flat.extend(v["pass"] for v in c.values())
    return {"checks": checks, "pass": bool(all(flat))}


# ---------------------------------------------------------------------------
# Output writing
# ---------------------------------------------------------------------------

def _atomic_write(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, columns) -> str:
    # plain-Python floats give the shortest round-trippable repr
    cols = [np.asarray(c, dtype=float).tolist() for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def write_outputs(doc: dict, curves: dict, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    for stem, (header, columns) in curves.items():
        _atomic_write(os.path.join(out_dir, f"{stem}.csv"),
                      _csv_text(header, columns))
    path = os.path.join(out_dir, "result.json")
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_SUBCOMMAND_OUTPUTS = {
    "analyze": ("alpha", "eta2", "density", "u_prime"),
    "psi": ("psi",),
    "rate": ("psi", "rate"),
    "simulate": ("mc",),
    "verify": ("verify",),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reflimits",
        description="Limit-theorem constants for additive functionals of "
                    "reflecting diffusions, with Monte Carlo verification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("analyze", "alpha, eta2, stationary density, u'"),
            ("psi", "scaled cumulant generating function curve"),
            ("rate", "psi curve plus the large-deviations rate function"),
            ("simulate", "Monte Carlo estimates only"),
            ("verify", "analytic vs Monte Carlo cross-validation")):
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--spec", help="path to a JSON run spec")
        src.add_argument("--preset", choices=sorted(PRESETS),
                         help="named built-in example")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the Monte Carlo seed")
        p.add_argument("--threads", type=int, default=1,
                       help="replication parallelism (results identical "
                            "for any value)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.preset:
            doc_in = preset_spec(args.preset)
        else:
            with open(args.spec) as fh:
                doc_in = json.load(fh)
        spec = parse_spec(doc_in)
        if args.seed is not None:
            if spec.mc is None:
                raise ValueError("--seed given but the spec has no mc section")
            spec = replace(spec, mc=replace(spec.mc, seed=args.seed))
        outputs = _SUBCOMMAND_OUTPUTS[args.command]
        for out in set(outputs) & {"psi", "rate"}:
            spec.require_compact(out)
    except (KeyError, ValueError, OSError, InadmissibleModelError) as exc:
        print(f"error: invalid run spec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        doc, curves = run(spec, outputs, threads=args.threads)
    except InadmissibleModelError as exc:
        print(f"error: inadmissible model: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonCompactDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NonErgodicError, SolverError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    path = write_outputs(doc, curves, args.out)
    print(f"wrote {path}")
    if args.command == "verify" and not doc["results"]["verify"]["pass"]:
        print("verification FAILED", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
