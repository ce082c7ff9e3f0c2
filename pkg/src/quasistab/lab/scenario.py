"""Scenario files: validation, dispatch to a model, and artifact emission."""

import csv
import io
import json
import os
import re
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..errors import BreakdownError, ChartExitError, QuasistabError, SchemaError
from .decay import fit_decay
from .svg import decay_svg

__all__ = ["SCHEMA", "RunReport", "validate_config", "load_config", "run_scenario", "run_batch",
           "write_atomic", "dump_json"]

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_modes = {
    "type": "object",
    "patternProperties": {"^[0-9]+$": _num},
    "additionalProperties": False,
}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_MODEL_SCHEMAS = {
    "heleshaw": (
        _obj({"n_points": _int}),
        _obj({"v0": _modes, "t_end": _pos, "n_samples": _int}),
    ),
    "fmcf": (
        _obj({"sigma": _pos, "n_points": _int, "delta": _pos, "far_cells": _int,
              "quad_order": _int}),
        _obj({"k_max": _int, "evolve": {"type": "boolean"}, "mean": _num, "epsilon": _num,
              "modes": _modes, "t_end": _pos, "dt": _pos}),
    ),
    "manifold": (
        _obj({
            "system": {"type": "object"},
            "synthetic": _obj({"m": _int, "d": _int, "stable_eigs": {"type": "array", "items": _num},
                               "curvature": _num, "seed": _int}, ["m", "d", "stable_eigs"]),
            "closed_form": {"type": "boolean"},
            "u_star": {"type": "array", "items": _num},
            "gap_tol": _pos,
            "r0": _pos,
        }),
        _obj({"u0": {"type": "array", "items": _num}, "epsilon": _pos, "t_end": _pos, "dt": _pos}),
    ),
    "rd": (
        _obj({"L": _pos, "n_cells": _int, "kappa": _num, "a": {"type": "array", "items": _num},
              "a_min": _pos, "gradient_term": {"type": "boolean"}}),
        _obj({"u0": _modes, "t_end": _pos, "dt": _pos, "omega_factor": _pos,
              "exponents": _obj({"n": _int, "p": _pos, "tau": _pos})}),
    ),
}

SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string"},
        "model": {"enum": sorted(_MODEL_SCHEMAS)},
        "params": {"type": "object"},
        "experiment": {"type": "object"},
    },
    "required": ["model", "params", "experiment"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"model": {"const": name}}},
         "then": {"properties": {"params": p, "experiment": e}}}
        for name, (p, e) in sorted(_MODEL_SCHEMAS.items())
    ],
}


def _error_key(err):
    path = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1]
        path.append(missing)
    elif err.validator == "additionalProperties":
        known = set(err.schema.get("properties", {}))
        pattern = err.schema.get("patternProperties")
        extra = sorted(k for k in err.instance if k not in known)
        if pattern:
            extra = [k for k in extra if not any(re.match(p, k) for p in pattern)]
        if extra:
            path.append(extra[0])
    return ".".join(path) or "<root>"


def validate_config(cfg):
    """Raise :class:`SchemaError` naming the first offending key."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = min(errors, key=lambda e: -len(list(e.absolute_path)))
        key = _error_key(err)
        raise SchemaError(f"{key}: {err.message}", key)
    return cfg


def load_config(path):
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "<root>") from exc
    return cfg


def dump_json(obj):
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()


@dataclass
class RunReport:
    scenario_id: str
    model: str
    status: str
    normal_stability: dict = field(default_factory=dict)
    gap: float = None
    omega_fit: float = None
    u_hat: dict = field(default_factory=dict)
    K: float = None
    artifacts: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    message: str = ""

    def as_dict(self):
        return {
            "scenario_id": self.scenario_id,
            "model": self.model,
            "status": self.status,
            "normal_stability": self.normal_stability,
            "gap": self.gap,
            "omega_fit": self.omega_fit,
            "u_hat": self.u_hat,
            "K": self.K,
            "artifacts": self.artifacts,
            "extra": self.extra,
            "message": self.message,
        }


def _cos_modes(modes, x, scale=1.0):
    out = np.zeros_like(x)
    for k, amp in sorted(modes.items(), key=lambda kv: int(kv[0])):
        out += amp * np.cos(int(k) * scale * x)
    return out


# -- model runners: each returns (report fields, csv header, csv rows, svg series)

def _run_heleshaw(params, exp, seed):
    from ..heleshaw import HsState, hs_conserved, hs_evolve, hs_gap, hs_normal_stability
    from ..spectral import PeriodicGrid, project_low_modes

    grid = PeriodicGrid(params.get("n_points", 256))
    gap, cert = hs_gap(grid)
    v0 = HsState(grid.field(_cos_modes(exp.get("v0", {"2": 1.0}), grid.x)))
    t_end = exp.get("t_end", 5.0)
    times = np.linspace(0.0, t_end, exp.get("n_samples", 101))
    rows, norms = [], []
    c0 = hs_conserved(v0)
    drift = 0.0
    for t in times:
        v = hs_evolve(v0, t).field
        w = v - project_low_modes(v, 1)
        n = float(np.sqrt(grid.spacing * np.sum(w.values ** 2)))
        c = hs_conserved(v)
        drift = max(drift, max(abs(a - b) for a, b in zip(c, c0)))
        norms.append(n)
        rows.append([t, n, *c])
    fit = fit_decay(times, norms)
    fields = dict(
        gap=gap, omega_fit=fit.omega_fit,
        normal_stability=hs_normal_stability(grid),
        extra={"fit": fit.as_dict(), "gap_attained_at_k": cert.argmax_k,
               "conserved_drift": drift},
    )
    return fields, ["t", "stable_norm", "area", "center_x", "center_y"], rows, (times, norms)


def _run_fmcf(params, exp, seed):
    from ..fmcf import FmcfConfig, apply_fmcf_A, evolve_fmcf, fmcf_numeric_symbol
    from ..spectral import PeriodicGrid

    kw = {k: params[k] for k in ("sigma", "delta", "far_cells", "quad_order") if k in params}
    cfg = FmcfConfig(grid=PeriodicGrid(params.get("n_points", 256)), **kw)
    sym = fmcf_numeric_symbol(cfg, k_max=exp.get("k_max", min(32, cfg.grid.n_points // 4)))
    extra = {"p_fit": sym.exponent, "omega0_num": sym.omega0, "omega0_fit": sym.omega0_fit,
             "leakage": sym.leakage, "symbol_table": sym.table.tolist()}
    fields = dict(gap=sym.omega0, extra=extra)
    if not exp.get("evolve", False):
        k = np.arange(1, sym.table.size)
        return fields, ["k", "m_num"], np.column_stack([k, sym.table[1:]]), (k, -sym.table[1:])
    grid = cfg.grid
    eps = exp.get("epsilon", 1e-2)
    modes = exp.get("modes", {"1": 1.0, "3": 1.0})
    u0 = grid.field(exp.get("mean", 0.0) + eps * _cos_modes(modes, grid.x))
    tr = evolve_fmcf(u0, cfg, t_end=exp.get("t_end", 3.0), dt=exp.get("dt", 0.01))
    fit = fit_decay(tr.times, tr.deviations)
    res = float(np.abs(apply_fmcf_A(tr.final, tr.final, cfg).values).max())
    fields.update(omega_fit=fit.omega_fit,
                  u_hat={"mean": float(tr.means[-1]), "residual": res,
                         "mean_drift": float(tr.means[-1] - tr.means[0])})
    extra["fit"] = fit.as_dict()
    rows = np.column_stack([tr.times, tr.means, tr.deviations])
    return fields, ["t", "mean", "deviation"], rows, (tr.times, tr.deviations)


def _run_manifold(params, exp, seed):
    from ..manifold import check_normal_stability, system_from_json
    from ..manifold.synth import closed_form_system, synthesize_normally_stable
    from .experiments import chart_param, run_manifold_pipeline

    if "synthetic" in params:
        s = params["synthetic"]
        syn = synthesize_normally_stable(s["m"], s["d"], s["stable_eigs"], s.get("curvature", 0.0),
                                         seed=s.get("seed", seed))
        system, u_star, param, m = syn.system, syn.u_star, syn.manifold_param, syn.m
    elif params.get("closed_form"):
        system, u_star, param, m = closed_form_system(), np.zeros(2), None, None
    elif "system" in params:
        system, u_star, param, m = system_from_json(params["system"]), None, None, None
    else:
        raise SchemaError("params: one of 'synthetic', 'closed_form', 'system' is required",
                          "params.system")
    if u_star is None:
        u_star = np.asarray(params.get("u_star", np.zeros(system.dim)), float)
    if "u0" in exp:
        u0 = np.asarray(exp["u0"], float)
    else:
        v = np.random.default_rng(seed).standard_normal(system.dim)
        u0 = u_star + exp.get("epsilon", 1e-2) * v / np.linalg.norm(v)
    gap_tol = params.get("gap_tol", 1e-6)
    run = run_manifold_pipeline(system, u_star, u0, exp.get("t_end", 30.0), exp.get("dt", 0.05),
                                r0=params.get("r0", 0.5), gap_tol=gap_tol)
    if param is None:
        # the chart's own graph: its points are equilibria only if the tangent condition holds
        param, m = chart_param(run.chart), run.split.kernel_dim
    ns = check_normal_stability(system, u_star, param, m, gap_tol=gap_tol, strict=False)
    fields = dict(
        normal_stability=ns.as_dict(), gap=run.split.gap, omega_fit=run.fit.omega_fit,
        u_hat={"x_hat": run.chart.coords(run.reduced.x[-1]).tolist(),
               "point": run.u_hat.tolist(), "residual": run.residual},
        extra={"fit": run.fit.as_dict()},
    )
    red = run.reduced
    xs = red.x @ run.chart.split.kernel_basis
    rows = np.column_stack([red.times, run.trajectory.states, xs, red.y_norm])
    header = (["t"] + [f"u{i + 1}" for i in range(system.dim)]
              + [f"x{i + 1}" for i in range(xs.shape[1])] + ["y_norm"])
    return fields, header, rows, (red.times, red.y_norm)


def _run_rd(params, exp, seed):
    from ..rd import RdConfig, evolve_rd, rd_exponents, rd_weighted_diagnostic

    cfg = RdConfig(length=params.get("L", 1.0), n_cells=params.get("n_cells", 256),
                   a_coeffs=tuple(params.get("a", (1.0, 0.0, 0.5))), kappa=params.get("kappa", 4.0),
                   a_min=params.get("a_min", 0.5), gradient_term=params.get("gradient_term", True))
    e = exp.get("exponents", {"n": 1, "p": 2.5, "tau": 0.275})
    exps = rd_exponents(e.get("n", 1), e.get("p", 2.5), cfg.kappa, e.get("tau", 0.275))
    u0 = _cos_modes(exp.get("u0", {"1": 1e-2}), cfg.x, np.pi / cfg.length)
    tr = evolve_rd(u0, cfg, t_end=exp.get("t_end", 3.0), dt=exp.get("dt", 1e-3), s_c=exps.s_c)
    fit = fit_decay(tr.times, tr.l2_dev)
    diag = rd_weighted_diagnostic(tr, exps, exp.get("omega_factor", 0.5) * fit.omega_fit)
    fields = dict(
        gap=float((np.pi / cfg.length) ** 2), omega_fit=fit.omega_fit, K=diag.K,
        u_hat={"mean": diag.u_hat, "spread": float(np.ptp(tr.states[-1]))},
        extra={"fit": fit.as_dict(), "K_half": diag.K_half, "t_end_stable": diag.t_end_stable,
               "s_c": exps.s_c, "mu": exps.mu, "alpha_crit": exps.alpha_crit},
    )
    rows = np.column_stack([tr.times, tr.means, tr.l2_dev, tr.h1_dev,
                            np.concatenate([[np.nan], diag.history])])
    return fields, ["t", "mean", "L2dev", "H1dev", "weighted_stat"], rows, (tr.times, tr.l2_dev)


_RUNNERS = {"heleshaw": _run_heleshaw, "fmcf": _run_fmcf, "manifold": _run_manifold, "rd": _run_rd}


def run_scenario(config, out, seed=0):
    """Validate, run and write ``report.json``, ``trajectory.csv`` and ``decay.svg`` into ``out``.

    ``config`` is a mapping or a path.  Failures are mapped to the report
    status ``schema_error``, ``breakdown``, ``chart_exit`` or ``error``; the
    report is written in every case.
    """
    out = Path(out)
    if isinstance(config, (str, os.PathLike)):
        try:
            config = load_config(config)
        except SchemaError as exc:
            return _emit(out, RunReport("", "", "schema_error", message=str(exc),
                                        extra={"key": exc.key}))
    sid = str(config.get("id", "scenario")) if isinstance(config, dict) else "scenario"
    model = config.get("model", "") if isinstance(config, dict) else ""
    try:
        validate_config(config)
        fields, header, rows, series = _RUNNERS[model](config["params"], config["experiment"],
                                                       int(seed))
    except SchemaError as exc:
        return _emit(out, RunReport(sid, model, "schema_error", message=str(exc),
                                    extra={"key": exc.key}))
    except BreakdownError as exc:
        return _emit(out, RunReport(sid, model, "breakdown", message=str(exc),
                                    extra={"last_time": exc.last_time}))
    except ChartExitError as exc:
        return _emit(out, RunReport(sid, model, "chart_exit", message=str(exc),
                                    extra={"exit_time": exc.exit_time}))
    except QuasistabError as exc:
        return _emit(out, RunReport(sid, model, "error", message=f"{type(exc).__name__}: {exc}"))
    report = RunReport(sid, model, "ok", **fields)
    write_atomic(out / "trajectory.csv", _csv_text(header, rows))
    write_atomic(out / "decay.svg", decay_svg(*series, title=f"{model}: {sid}"))
    report.artifacts = {"csv": "trajectory.csv", "svg": "decay.svg"}
    return _emit(out, report)


def _emit(out, report):
    write_atomic(Path(out) / "report.json", dump_json(_clean(report.as_dict())))
    return report


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _run_one(args):
    cfg, out, seed = args
    return run_scenario(cfg, out, seed).as_dict()


def run_batch(configs, out, seed=0, jobs=1):
    """Run scenarios into ``out/<index>``; parallel when ``jobs > 1``.

    Each scenario writes only its own directory; the summary is assembled
    afterwards in input order.
    """
    out = Path(out)
    args = [(c, out / f"{i:03d}", seed) for i, c in enumerate(configs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, args))
    else:
        results = [_run_one(a) for a in args]
    write_atomic(out / "summary.json", dump_json(_clean(results)))
    return results
