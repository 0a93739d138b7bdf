"""Command-line interface: simulate, analyze, preset, sweep.

Exit codes: 0 success, 2 configuration error, 3 step sizes over the
stability bound without allow_unstable.  All tables are written as CSV by
default or JSON records with --format json; simulation outputs land in
--out (default current directory).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, InstabilityError
from .presets import (
    PRESET_NAMES,
    _apply_overrides,
    run_preset,
    write_artifacts,
)
from .runner import (
    SWEEP_AXES,
    compile_scenario,
    run_scenario,
    sweep,
    theory_report,
)
from .scenario import load_scenario


def _write_table(out_dir, name, fields, rows, fmt):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(json.dumps(rows, indent=1) + "\n")
    else:
        path = out / f"{name}.csv"
        lines = [",".join(fields)]
        lines += [",".join(str(row[f]) for f in fields) for row in rows]
        path.write_text("\n".join(lines) + "\n")
    return path


def _overridden(args):
    scenario = load_scenario(args.scenario)
    return _apply_overrides(scenario, seed=args.seed, runs=args.runs,
                            iters=args.iters)


def _cmd_simulate(args):
    scenario = _overridden(args)
    result = run_scenario(scenario, jobs=args.jobs)
    curve_rows = []
    node_rows = []
    for alg in result.algorithms:
        for k, value in enumerate(alg.msd_db):
            curve_rows.append({"iter": k, "algorithm": alg.name,
                               "msd_db": float(value)})
        for node, value in enumerate(alg.per_node_msd_db):
            node_rows.append({"node": node, "algorithm": alg.name,
                              "msd_db": float(value)})
    paths = [_write_table(args.out, "curves",
                          ("iter", "algorithm", "msd_db"), curve_rows,
                          args.format),
             _write_table(args.out, "per_node",
                          ("node", "algorithm", "msd_db"), node_rows,
                          args.format)]
    if result.tracking is not None:
        tr = result.tracking
        rows = []
        for k in range(tr["estimates"].shape[0]):
            for c, comp in enumerate(tr["components"]):
                rows.append({"iter": k, "component_index": comp,
                             "estimate": float(tr["estimates"][k, c]),
                             "truth": float(tr["truth"][k, c])})
        paths.append(_write_table(args.out, "tracking",
                                  ("iter", "component_index", "estimate",
                                   "truth"), rows, args.format))
    for alg in result.algorithms:
        note = f" ({alg.n_diverged} diverged)" if alg.n_diverged else ""
        print(f"{alg.name}: steady {alg.steady_msd_db:.2f} dB over "
              f"{result.n_runs} runs{note}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_analyze(args):
    scenario = _overridden(args)
    rows = []
    for rep in theory_report(compile_scenario(scenario)):
        for node, value in enumerate(rep.per_node_msd_db):
            rows.append({
                "algorithm": rep.name,
                "node": node,
                "msd_db_theory": float(value),
                "network_msd_db": rep.network_msd_db,
                "spectral_radius": rep.spectral_radius,
                "step_bound_min": float(rep.step_bounds.min()),
            })
    path = _write_table(args.out, "theory",
                        ("algorithm", "node", "msd_db_theory",
                         "network_msd_db", "spectral_radius",
                         "step_bound_min"), rows, args.format)
    for rep in theory_report(compile_scenario(scenario)):
        print(f"{rep.name}: network {rep.network_msd_db:.2f} dB, "
              f"rho {rep.spectral_radius:.4f}")
    print(f"wrote {path}")
    return 0


def _cmd_preset(args):
    artifacts, scenario = run_preset(args.name, desk=args.desk,
                                     jobs=args.jobs, seed=args.seed,
                                     runs=args.runs, iters=args.iters)
    paths = write_artifacts(artifacts, scenario, args.out, fmt=args.format)
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_sweep(args):
    scenario = _overridden(args)
    values = [float(v) for v in args.values.replace(",", " ").split()]
    rows = sweep(scenario, args.axis, values, jobs=args.jobs)
    path = _write_table(args.out, "sweep",
                        ("axis_value", "algorithm", "msd_db"), rows,
                        args.format)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def _common_flags(sub):
    sub.add_argument("--seed", type=int, default=None,
                     help="override master_seed")
    sub.add_argument("--runs", type=int, default=None,
                     help="override n_runs")
    sub.add_argument("--iters", type=int, default=None,
                     help="override n_iters (steady window is clamped)")
    sub.add_argument("--jobs", type=int, default=1,
                     help="worker processes over Monte Carlo runs")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--out", default=".", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gmrf-diffusion",
        description="Diffusion estimation over networks with Markov-field "
                    "noise: simulation, steady-state theory, experiment "
                    "presets.")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run a scenario file")
    sim.add_argument("scenario")
    _common_flags(sim)
    sim.set_defaults(func=_cmd_simulate)

    ana = subs.add_parser("analyze", help="steady-state theory for a scenario")
    ana.add_argument("scenario")
    _common_flags(ana)
    ana.set_defaults(func=_cmd_analyze)

    pre = subs.add_parser("preset", help="run a canned experiment")
    pre.add_argument("name", choices=PRESET_NAMES)
    pre.add_argument("--desk", action="store_true",
                     help="reduced-scale variant for quick runs")
    _common_flags(pre)
    pre.set_defaults(func=_cmd_preset)

    swp = subs.add_parser("sweep", help="steady-state MSD along one axis")
    swp.add_argument("scenario")
    swp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    swp.add_argument("--values", required=True,
                     help="comma- or space-separated numbers")
    _common_flags(swp)
    swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
