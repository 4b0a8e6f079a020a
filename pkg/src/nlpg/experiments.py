"""Benchmark harness: refinement studies, CSV output, CLI presets."""

import io
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .adapt import adaptive_loop
from .analysis import ExperimentRecord, rate, rate_dof
from .driver import solve_problem
from .mesh import initial_mesh, refine_uniform, uniform_mesh
from .problems import PROBLEM_NAMES, make_problem

COUPLINGS = ("fixed", "h", "2h", "h^2", "sqrt(h)")
NORMS = ("app", "eng")
REFINEMENTS = ("uniform-h", "uniform-p", "adaptive")

CSV_HEADER = "step,h_min,delta,n_trial,n_test,err_energy,rate_energy,err_l2,rate_l2"

_INITIAL_H = 0.2   # width of the five starting interior elements


@dataclass
class RunConfig:
    """One benchmark run.  ``steps`` counts solves; refinement happens between
    them (so a uniform-h run with steps=9 ends at h = 0.2 / 2**8)."""

    problem: str = "smooth-nonlocal"
    eps: float = 0.01
    delta: float = 0.1
    coupling: str = "fixed"
    p: int = 1
    dp: int = 2
    norm: str = "app"
    refinement: str = "uniform-h"
    steps: int = 9
    theta: float = 0.1
    n_over: int = 13
    output: str = ""

    def validate(self):
        if self.problem not in PROBLEM_NAMES:
            raise ValueError(f"problem: unknown value {self.problem!r}, expected {PROBLEM_NAMES}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling: unknown value {self.coupling!r}, expected {COUPLINGS}")
        if self.norm not in NORMS:
            raise ValueError(f"norm: unknown value {self.norm!r}, expected {NORMS}")
        if self.refinement not in REFINEMENTS:
            raise ValueError(
                f"refinement: unknown value {self.refinement!r}, expected {REFINEMENTS}")
        if self.coupling != "fixed" and self.refinement != "uniform-h":
            raise ValueError("coupling: delta couplings require refinement = uniform-h")
        if self.coupling == "fixed" and self.delta <= 0.0:
            raise ValueError(f"delta: must be positive, got {self.delta}")
        if self.eps <= 0.0:
            raise ValueError(f"eps: must be positive, got {self.eps}")
        if self.p < 1:
            raise ValueError(f"p: must be >= 1, got {self.p}")
        if self.dp < 1:
            raise ValueError(f"dp: test-space enrichment must be >= 1, got {self.dp}")
        if self.steps < 0:
            raise ValueError(f"steps: must be >= 0, got {self.steps}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta: must lie in (0, 1], got {self.theta}")
        if self.n_over < 1:
            raise ValueError(f"n_over: must be >= 1, got {self.n_over}")


def coupling_delta(coupling, h):
    if coupling == "h":
        return h
    if coupling == "2h":
        return 2.0 * h
    if coupling == "h^2":
        return h * h
    if coupling == "sqrt(h)":
        return math.sqrt(h)
    raise ValueError(f"coupling: unknown value {coupling!r}")


def _record(step, mesh, result, prev, dof_rates=False):
    r_e = r_l = math.nan
    if prev is not None:
        if dof_rates:
            r_e = rate_dof(prev.err_energy, result.err_energy, prev.n_trial, result.n_trial)
            r_l = rate_dof(prev.err_l2, result.err_l2, prev.n_trial, result.n_trial)
        else:
            r_e = rate(prev.err_energy, result.err_energy)
            r_l = rate(prev.err_l2, result.err_l2)
    return ExperimentRecord(
        step=step, h_min=float(mesh.interior_widths.min()),
        h_max=float(mesh.interior_widths.max()), delta=mesh.delta,
        n_trial=result.n_trial, n_test=result.n_test,
        err_energy=result.err_energy, rate_energy=r_e,
        err_l2=result.err_l2, rate_l2=r_l)


def uniform_h_study(cfg, norms=None):
    """Uniform h-refinement records for one or several test norms at once.

    Assembly is shared across norms per step; returns {norm: [records]}.
    """
    norms = tuple(norms) if norms else (cfg.norm,)
    out = {n: [] for n in norms}
    prev = {n: None for n in norms}
    mesh = None
    for step in range(max(1, cfg.steps)):
        if cfg.coupling == "fixed":
            mesh = initial_mesh(cfg.delta) if mesh is None else mesh
        else:
            n_int = 5 * 2**step
            mesh = uniform_mesh(coupling_delta(cfg.coupling, _INITIAL_H / 2**step), n_int)
        problem = make_problem(cfg.problem, cfg.eps, mesh.delta)
        results = solve_problem(mesh, problem, eps=cfg.eps, p=cfg.p, dp=cfg.dp,
                                norms=norms, n_over=cfg.n_over)
        for n in norms:
            rec = _record(step, mesh, results[n], prev[n])
            out[n].append(rec)
            prev[n] = rec
        if cfg.coupling == "fixed":
            mesh = refine_uniform(mesh)
    return out


def uniform_p_study(cfg, norms=None):
    """Uniform p-refinement on the fixed initial mesh, trial orders 1..steps."""
    norms = tuple(norms) if norms else (cfg.norm,)
    out = {n: [] for n in norms}
    prev = {n: None for n in norms}
    mesh = initial_mesh(cfg.delta)
    problem = make_problem(cfg.problem, cfg.eps, cfg.delta)
    for step in range(max(1, cfg.steps)):
        p = step + 1
        results = solve_problem(mesh, problem, eps=cfg.eps, p=p, dp=cfg.dp,
                                norms=norms, n_over=cfg.n_over)
        for n in norms:
            # p-sweeps report rates against DOF growth, matching halving rates
            # only asymptotically
            rec = _record(step, mesh, results[n], prev[n], dof_rates=True)
            out[n].append(rec)
            prev[n] = rec
    return out


def run(cfg):
    """Execute one configured study and return its records."""
    cfg.validate()
    if cfg.refinement == "adaptive":
        problem = make_problem(cfg.problem, cfg.eps, cfg.delta)
        return adaptive_loop(problem, cfg)
    if cfg.refinement == "uniform-p":
        return uniform_p_study(cfg)[cfg.norm]
    return uniform_h_study(cfg)[cfg.norm]


def overshoot_metric(space, coeffs, samples_per_element=1000):
    """Largest violation of the [0, 1] solution range, sampled densely on (0, 1)."""
    worst = 0.0
    coeffs = np.asarray(coeffs, dtype=float)
    for e in space.mesh.interior_elements:
        a, b = space.mesh.bounds(e)
        xs = np.linspace(a, b, samples_per_element, endpoint=False)
        vals = space.local_basis(e, xs) @ coeffs[space.element_dofs(e)]
        worst = max(worst, float(np.maximum(vals - 1.0, 0.0).max()),
                    float(np.maximum(-vals, 0.0).max()))
    return worst


def _fmt(x, spec):
    return "" if (isinstance(x, float) and math.isnan(x)) else format(x, spec)


def records_to_csv(records, file=None):
    """Render records in the stable CSV schema; returns the text."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in records:
        buf.write(",".join([
            str(r.step), format(r.h_min, ".10g"), format(r.delta, ".10g"),
            str(r.n_trial), str(r.n_test),
            format(r.err_energy, ".6e"), _fmt(r.rate_energy, ".4f"),
            format(r.err_l2, ".6e"), _fmt(r.rate_l2, ".4f"),
        ]) + "\n")
    text = buf.getvalue()
    if file:
        with open(file, "w") as fh:
            fh.write(text)
    return text


def _wide_csv(first_header, first_column, columns, file):
    """Multi-column table: err(rate) pairs per study column."""
    names = list(columns)
    buf = io.StringIO()
    heads = [first_header]
    for name in names:
        heads += [f"err[{name}]", f"rate[{name}]"]
    buf.write(",".join(heads) + "\n")
    n_rows = len(first_column)
    for k in range(n_rows):
        row = [format(first_column[k], ".10g") if isinstance(first_column[k], float)
               else str(first_column[k])]
        for name in names:
            rec = columns[name][k]
            row += [format(rec.err_energy, ".6e"), _fmt(rec.rate_energy, ".4f")]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if file:
        with open(file, "w") as fh:
            fh.write(text)
    return text


def run_table1(norm="app", steps=9, out=None, n_over=13):
    """Smooth-solution uniform-h sweep over the four horizon sizes."""
    deltas = (0.1, 0.01, 0.001, 0.0001)
    cols = {}
    for d in deltas:
        cfg = RunConfig(problem="smooth-nonlocal", delta=d, norm=norm, steps=steps,
                        n_over=n_over)
        cols[f"delta={d:g}"] = run(cfg)
    h = [rec.h_min for rec in next(iter(cols.values()))]
    return _wide_csv("h", h, cols, out)


def run_table3(norm="app", dp=2, steps=4, out=None, n_over=13):
    """Smooth-solution uniform-p sweep over the four horizon sizes."""
    deltas = (0.1, 0.01, 0.001, 0.0001)
    cols = {}
    for d in deltas:
        cfg = RunConfig(problem="smooth-nonlocal", delta=d, norm=norm, dp=dp,
                        refinement="uniform-p", steps=steps, n_over=n_over)
        cols[f"delta={d:g}"] = run(cfg)
    n = [rec.n_trial for rec in next(iter(cols.values()))]
    return _wide_csv("N", n, cols, out)


def run_table7(norm="app", steps=9, out=None, n_over=13):
    """Local-limit couplings delta = h, 2h, h^2, sqrt(h) under uniform h."""
    cols = {}
    for coupling in ("h", "2h", "h^2", "sqrt(h)"):
        cfg = RunConfig(problem="smooth-local-forcing", coupling=coupling, norm=norm,
                        steps=steps, n_over=n_over)
        cols[f"delta={coupling}"] = run(cfg)
    h = [rec.h_min for rec in next(iter(cols.values()))]
    return _wide_csv("h", h, cols, out)


def run_sharp_demo(delta=1e-5, eps=0.01, p=1, dp=6, out=None, n_over=13,
                   samples_per_element=1000):
    """Sharp-gradient stability comparison on the initial mesh.

    Solves with both test norms, reports the overshoot of each, and (when
    ``out`` is given) writes sampled solution curves x,exact,u_app,u_eng.
    """
    mesh = initial_mesh(delta)
    problem = make_problem("sharp", eps, delta)
    results = solve_problem(mesh, problem, eps=eps, p=p, dp=dp,
                            norms=("app", "eng"), n_over=n_over)
    overshoot = {n: overshoot_metric(results[n].trial, results[n].coeffs,
                                     samples_per_element) for n in ("app", "eng")}
    if out:
        xs = np.concatenate([np.linspace(*mesh.bounds(e), 201)[:-1]
                             for e in mesh.interior_elements] + [[1.0]])
        with open(out, "w") as fh:
            fh.write("x,exact,u_app,u_eng\n")
            ua = results["app"].trial.evaluate(results["app"].coeffs, xs)
            ue = results["eng"].trial.evaluate(results["eng"].coeffs, xs)
            ex = problem.u_exact(xs)
            for row in zip(xs, ex, ua, ue):
                fh.write(",".join(format(v, ".8e") for v in row) + "\n")
    return results, overshoot


def config_from_file(path):
    """Parse a flat ``key = value`` config file into a RunConfig."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return apply_overrides(RunConfig(), values)


def apply_overrides(cfg, values):
    """Apply string key/value overrides onto a RunConfig."""
    types = {f.name: f.type for f in fields(RunConfig)}
    converted = {}
    for key, val in values.items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        kind = types[key]
        if kind is int or kind == "int":
            converted[key] = int(val)
        elif kind is float or kind == "float":
            converted[key] = float(val)
        else:
            converted[key] = val
    return replace(cfg, **converted)
