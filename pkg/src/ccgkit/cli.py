"""Command-line front end: scenario runs, CCG/CZ comparison and set demos.

Exit codes: 0 success, 2 bad configuration or input file, 3 the filter's
estimate became empty (inconsistent bounds).  ``CCGKIT_SOLVER_TOL`` overrides
the feasibility decision tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report as rpt
from . import sets
from .estimator import MODE_CCG, MODE_CZ, EmptyEstimateError, derive_rng
from .hull import convex_hull_pair
from .reduction import ReductionSpec, reduce_to_order
from .solve import SolverOptions, outer_polygon, polygon_area, support_batch, unit_directions, volume_2d
from .unicycle import ConfigError, ScenarioConfig, default_config, run_scenario

EXIT_CONFIG = 2
EXIT_EMPTY = 3


def _solver_options() -> SolverOptions:
    tol = os.environ.get("CCGKIT_SOLVER_TOL")
    if tol is None:
        return SolverOptions()
    try:
        return SolverOptions(feas_tol=float(tol))
    except ValueError:
        raise ConfigError(f"CCGKIT_SOLVER_TOL is not a number: {tol!r}")


def _load_config(args) -> ScenarioConfig:
    if args.config:
        cfg = ScenarioConfig.from_file(args.config)
    else:
        cfg = default_config()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if getattr(args, "mode", None) is not None:
        overrides["filter_mode"] = args.mode
    if args.snapshot_every is not None:
        overrides["snapshot_every"] = args.snapshot_every
    if overrides:
        d = cfg.to_dict()
        d.update(overrides)
        cfg = ScenarioConfig.from_dict(d)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    options = _solver_options()
    try:
        result = run_scenario(cfg, options)
    except EmptyEstimateError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_EMPTY
    rpt.write_steps_csv(out / "steps.csv", result.logs)
    rpt.write_snapshots_json(out / "snapshots.json", result)
    report = rpt.write_report_json(out / "report.json", result)
    if args.svg:
        rpt.plot_volume(out / "volume.svg", result.logs)
        rpt.plot_trajectory(out / "trajectory.svg", result)
    s = report["summary"]
    print(
        f"{cfg.filter_mode} run: {s['steps']} steps, containment "
        f"{'ok' if s['containment_ok'] else 'VIOLATED'}, "
        f"mean step {s['mean_step_ms']:.1f} ms -> {out}"
    )
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    options = _solver_options()
    results = {}
    for mode in (MODE_CCG, MODE_CZ):
        mode_cfg = ScenarioConfig.from_dict({**cfg.to_dict(), "filter_mode": mode})
        try:
            results[mode] = run_scenario(mode_cfg, options)
        except EmptyEstimateError as err:
            print(f"error ({mode}): {err}", file=sys.stderr)
            return EXIT_EMPTY
        rpt.write_steps_csv(out / f"steps_{mode}.csv", results[mode].logs)
        rpt.write_report_json(out / f"report_{mode}.json", results[mode])
        rpt.write_snapshots_json(out / f"snapshots_{mode}.json", results[mode])
    rpt.write_compare_csv(out / "compare.csv", results[MODE_CCG], results[MODE_CZ])
    if args.svg:
        rpt.plot_compare_volume(
            out / "volume_compare.svg", results[MODE_CCG].logs, results[MODE_CZ].logs
        )
        for mode in (MODE_CCG, MODE_CZ):
            rpt.plot_trajectory(out / f"trajectory_{mode}.svg", results[mode])
    worse = sum(
        a.volume > b.volume + 1e-6
        for a, b in zip(results[MODE_CCG].logs, results[MODE_CZ].logs)
    )
    print(
        f"compare: {len(results[MODE_CCG].logs)} steps, "
        f"ccg volume above cz at {worse} steps -> {out}"
    )
    return 0


def cmd_hull_demo(args) -> int:
    out = _outdir(args)
    try:
        A = sets.load(args.set_a)
        B = sets.load(args.set_b)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as err:
        print(f"error: cannot parse input sets: {err}", file=sys.stderr)
        return EXIT_CONFIG
    options = _solver_options()
    Zh = convex_hull_pair(A, B)
    relaxed = convex_hull_pair(
        sets.relax_to_box_blocks(A), sets.relax_to_box_blocks(B)
    )
    angles = 2.0 * math.pi * np.arange(360) / 360.0
    U = np.column_stack([np.cos(angles), np.sin(angles)])
    hA, _ = support_batch(A, U, options)
    hB, _ = support_batch(B, U, options)
    hZ, _ = support_batch(Zh, U, options)
    hR, _ = support_batch(relaxed, U, options)
    target = np.maximum(hA, hB)
    named = {"set_a": A, "set_b": B, "hull": Zh, "relaxed_hull": relaxed}
    polygons = {
        name: outer_polygon(Z, 90, options).tolist() for name, Z in named.items()
    }
    demo = {
        "counts": {
            name: {"n_g": Z.n_g, "n_c": Z.n_c} for name, Z in named.items()
        },
        "max_exact_hull_residual": float(np.max(np.abs(hZ - target))),
        "max_relaxed_hull_slack": float(np.max(hR - target)),
        "polygons": polygons,
    }
    sets.save(Zh, out / "hull.json")
    sets.save(relaxed, out / "relaxed_hull.json")
    with open(out / "hull_demo.json", "w") as fh:
        json.dump(demo, fh, indent=2)
    if args.svg:
        _plot_polygons(out / "hull_demo.svg", polygons)
    print(
        f"hull: n_g={Zh.n_g}, n_c={Zh.n_c}, "
        f"exactness residual {demo['max_exact_hull_residual']:.2e}, "
        f"relaxed slack {demo['max_relaxed_hull_slack']:.2e} -> {out}"
    )
    return 0


def cmd_reduce_demo(args) -> int:
    out = _outdir(args)
    options = _solver_options()
    if args.set:
        try:
            Z = sets.load(args.set)
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as err:
            print(f"error: cannot parse input set: {err}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        Z = convex_hull_pair(
            sets.from_ellipsoid(np.eye(2), [-2.0, 0.0]),
            sets.from_ellipsoid([[1.0, 0.5], [0.0, 1.0]], [2.0, 1.0]),
        )
    gamma = args.gamma if args.gamma is not None else 10
    spec = ReductionSpec(gamma, seed=args.seed if args.seed is not None else 0)
    reduced = reduce_to_order(Z, spec, options=options)
    rng = derive_rng(spec.seed or 0, 99)
    U = unit_directions(rng, Z.dim, 200)
    h_in, _ = support_batch(Z, U, options)
    h_out, _ = support_batch(reduced, U, options)
    demo = {
        "input": {"n_g": Z.n_g, "n_c": Z.n_c},
        "reduced": {"n_g": reduced.n_g, "n_c": reduced.n_c},
        "gamma": gamma,
        "min_support_slack": float(np.min(h_out - h_in)),
    }
    if Z.dim == 2:
        demo["input_area"] = volume_2d(Z, 90, options)
        demo["reduced_area"] = volume_2d(reduced, 90, options)
        polygons = {
            "input": outer_polygon(Z, 90, options).tolist(),
            "reduced": outer_polygon(reduced, 90, options).tolist(),
        }
        demo["polygons"] = polygons
        if args.svg:
            _plot_polygons(out / "reduce_demo.svg", polygons)
    sets.save(reduced, out / "reduced.json")
    with open(out / "reduce_demo.json", "w") as fh:
        json.dump(demo, fh, indent=2)
    print(
        f"reduced to n_g={reduced.n_g}, n_c={reduced.n_c}, "
        f"support slack >= {demo['min_support_slack']:.2e} -> {out}"
    )
    return 0


def _plot_polygons(path, polygons: dict):
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    for name, poly in polygons.items():
        arr = np.asarray(poly)
        closed = np.vstack([arr, arr[:1]])
        ax.plot(closed[:, 0], closed[:, 1], label=name)
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _add_common(p, with_mode: bool):
    p.add_argument("--config", help="scenario config JSON (default: built-in figure-8)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--gamma", type=int, help="override the reduction order")
    if with_mode:
        p.add_argument("--mode", choices=[MODE_CCG, MODE_CZ],
                       help="override the filter set mode")
    p.add_argument("--svg", action="store_true", help="also render figures")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int,
                   help="snapshot cadence in iterations (default 40)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccgkit",
        description="Guaranteed set-valued estimation with constrained convex generators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and run the filter")
    _add_common(p_run, with_mode=True)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run the same seed in ccg and cz modes")
    _add_common(p_cmp, with_mode=False)
    p_cmp.set_defaults(func=cmd_compare)

    p_hull = sub.add_parser("hull-demo", help="exact vs box-relaxed hull of two sets")
    p_hull.add_argument("set_a", help="JSON file of the first set")
    p_hull.add_argument("set_b", help="JSON file of the second set")
    p_hull.add_argument("--out", default="out", help="output directory")
    p_hull.add_argument("--svg", action="store_true", help="also render figures")
    p_hull.set_defaults(func=cmd_hull_demo)

    p_red = sub.add_parser("reduce-demo", help="order reduction on a set")
    p_red.add_argument("set", nargs="?", help="JSON file of the set (default: hull of two ellipsoids)")
    p_red.add_argument("--gamma", type=int, help="reduction order (default 10)")
    p_red.add_argument("--seed", type=int, help="direction seed (default 0)")
    p_red.add_argument("--out", default="out", help="output directory")
    p_red.add_argument("--svg", action="store_true", help="also render figures")
    p_red.set_defaults(func=cmd_reduce_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
