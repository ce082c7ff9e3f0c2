"""Command-line interface.

Exit codes: 0 success, 2 acceptance failure, 1 any other error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import QuasistabError

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="scenario JSON file")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    parser.add_argument("--seed", type=_u64, default=argparse.SUPPRESS if suppress else 0,
                        help="random seed (unsigned 64-bit)")


def build_parser():
    parser = argparse.ArgumentParser(prog="quasistab", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True)

    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    sub.add_parser("simulate", parents=[common], help="run a scenario and write its artifacts")
    sub.add_parser("linearize", parents=[common], help="linearisation at u* (manifold model)")
    sub.add_parser("spectrum", parents=[common], help="spectral data of the scenario's generator")
    fd = sub.add_parser("fit-decay", parents=[common], help="fit an exponential rate to a CSV column")
    fd.add_argument("csv", type=Path)
    fd.add_argument("--column", default=None, help="norm column (default: last)")
    fd.add_argument("--time-column", default="t")
    fd.add_argument("--floor", type=float, default=None)
    vp = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    vp.add_argument("--only", type=int, nargs="*", default=None, help="criterion numbers")
    sub.add_parser("report", parents=[common], help="summarise report.json in --out")
    return parser


def _need(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise QuasistabError(f"--{name} is required for '{args.verb}'")
    return value


def _manifold_system(cfg, seed):
    from .manifold import closed_form_system, synthesize_normally_stable, system_from_json

    params = cfg["params"]
    if "synthetic" in params:
        s = params["synthetic"]
        syn = synthesize_normally_stable(s["m"], s["d"], s["stable_eigs"], s.get("curvature", 0.0),
                                         seed=s.get("seed", seed))
        return syn.system, syn.u_star
    system = closed_form_system() if params.get("closed_form") else system_from_json(params["system"])
    return system, np.asarray(params.get("u_star", np.zeros(system.dim)), float)


def cmd_simulate(args):
    from .lab.scenario import run_scenario

    report = run_scenario(_need(args, "config"), _need(args, "out"), args.seed)
    print(f"{report.model or '?'} [{report.status}] -> {args.out / 'report.json'}")
    if report.message:
        print(report.message, file=sys.stderr)
    return EXIT_OK if report.status == "ok" else EXIT_ERROR


def _load(args):
    from .lab.scenario import load_config, validate_config

    return validate_config(load_config(_need(args, "config")))


def _emit(args, name, payload):
    from .lab.scenario import _clean, dump_json, write_atomic

    text = dump_json(_clean(payload))
    if args.out is not None:
        write_atomic(args.out / name, text)
    sys.stdout.write(text)


def cmd_linearize(args):
    from .manifold import linearize_at

    cfg = _load(args)
    if cfg["model"] != "manifold":
        raise QuasistabError("linearize applies to the manifold model")
    system, u_star = _manifold_system(cfg, args.seed)
    L = linearize_at(system, u_star)
    _emit(args, "linearization.json", {"u_star": u_star.tolist(), "matrix": L.tolist()})
    return EXIT_OK


def cmd_spectrum(args):
    cfg = _load(args)
    model = cfg["model"]
    if model == "manifold":
        from .manifold import linearize_at, spectral_split

        system, u_star = _manifold_system(cfg, args.seed)
        split = spectral_split(linearize_at(system, u_star), cfg["params"].get("gap_tol", 1e-6))
        payload = {"kernel_dim": split.kernel_dim, "gap": split.gap,
                   "stable_eigs": [[z.real, z.imag] for z in split.stable_eigs],
                   "projection_defects": split.projection_defects()}
    elif model == "heleshaw":
        from .heleshaw import hs_gap, hs_symbol
        from .spectral import PeriodicGrid

        grid = PeriodicGrid(cfg["params"].get("n_points", 256))
        gap, cert = hs_gap(grid)
        k = np.arange(0, 17)
        payload = {"gap": gap, "argmax_k": cert.argmax_k, "symbol": hs_symbol(k).tolist()}
    elif model == "fmcf":
        from .fmcf import FmcfConfig, fmcf_numeric_symbol
        from .spectral import PeriodicGrid

        p = cfg["params"]
        kw = {k: p[k] for k in ("sigma", "delta", "far_cells", "quad_order") if k in p}
        fc = FmcfConfig(grid=PeriodicGrid(p.get("n_points", 256)), **kw)
        sym = fmcf_numeric_symbol(fc, k_max=cfg["experiment"].get("k_max", 32))
        payload = {"p_fit": sym.exponent, "omega0_num": sym.omega0, "omega0_fit": sym.omega0_fit,
                   "symbol": sym.table.tolist()}
    else:
        lengths = cfg["params"].get("L", 1.0)
        payload = {"neumann_gap": (np.pi / lengths) ** 2}
    _emit(args, "spectrum.json", payload)
    return EXIT_OK


def cmd_fit_decay(args):
    from .lab.decay import fit_decay

    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise QuasistabError(f"{args.csv} has no data rows")
    col = args.column or list(rows[0])[-1]
    t = np.array([float(r[args.time_column]) for r in rows])
    v = np.array([float(r[col]) for r in rows])
    fit = fit_decay(t, v, floor=args.floor)
    _emit(args, "fit.json", fit.as_dict())
    return EXIT_OK


def cmd_verify(args):
    from .lab.acceptance import run_all
    from .lab.scenario import _clean, dump_json, write_atomic

    results = run_all(args.seed, set(args.only) if args.only else None, echo=print)
    passed = all(r.passed and r.within_time for r in results)
    report = {"seed": args.seed, "passed": passed, "criteria": [r.as_dict() for r in results]}
    if args.out is not None:
        write_atomic(args.out / "report.json", dump_json(_clean(report)))
    print(f"{sum(r.passed and r.within_time for r in results)}/{len(results)} criteria passed")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_report(args):
    out = _need(args, "out")
    if args.config is not None:
        from .lab.scenario import run_scenario

        run_scenario(args.config, out, args.seed)
    data = json.loads((out / "report.json").read_text())
    if "criteria" in data:
        for c in data["criteria"]:
            print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['number']:2d}. {c['name']}")
        return EXIT_OK if data["passed"] else EXIT_FAIL
    print(f"scenario {data['scenario_id']} ({data['model']}): {data['status']}")
    for key in ("gap", "omega_fit", "K"):
        if data.get(key) is not None:
            print(f"  {key:10s} {data[key]:.6g}")
    for key, val in sorted(data.get("normal_stability", {}).items()):
        if isinstance(val, bool):
            print(f"  {key:14s} {val}")
    for key, val in sorted(data.get("artifacts", {}).items()):
        print(f"  {key}: {out / val}")
    return EXIT_OK if data["status"] == "ok" else EXIT_ERROR


COMMANDS = {
    "simulate": cmd_simulate,
    "linearize": cmd_linearize,
    "spectrum": cmd_spectrum,
    "fit-decay": cmd_fit_decay,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except (QuasistabError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
