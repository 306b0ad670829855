"""Command-line interface: run the benchmark, validate a config, stream a
single demo trial, or re-render figures from saved results."""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import bench
from .bench import ConfigError, ExperimentConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="binmpc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the horizon-sweep experiment")
    run.add_argument("--config", default=None, help="JSON config path (default: shipped config)")
    run.add_argument("--horizons", default=None, help="comma-separated horizon override, e.g. 20,40")
    run.add_argument("--modes", default=None, help="comma-separated mode override: flat,hierarchical")
    run.add_argument("--trials", type=int, default=None, help="trials-per-cell override")
    run.add_argument("--seed", type=int, default=None, help="base seed override")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--steps", action="store_true", help="also write per-control-step steps.csv")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    val = sub.add_parser("validate", help="parse a config and audit its geometry")
    val.add_argument("--config", default=None)

    demo = sub.add_parser("demo", help="run one trial, streaming per-step diagnostics")
    demo.add_argument("--config", default=None)
    demo.add_argument("--horizon", type=int, default=None, help="horizon (default: first in config)")
    demo.add_argument("--mode", default="hierarchical", choices=["flat", "hierarchical"])
    demo.add_argument("--trial", type=int, default=0)

    rep = sub.add_parser("report", help="render figures from an existing results directory")
    rep.add_argument("--results", required=True, help="directory containing summary.json")
    rep.add_argument("--out", default=None, help="figure output directory (default: results dir)")
    return p


def _load(args) -> ExperimentConfig:
    raw = bench.load_config(args.config)
    return ExperimentConfig.from_dict(raw)


def _cmd_run(args) -> int:
    cfg = _load(args)
    if args.horizons:
        cfg.horizons = [int(h) for h in args.horizons.split(",")]
    if args.modes:
        cfg.modes = [m.strip() for m in args.modes.split(",")]
        for m in cfg.modes:
            if m not in ("flat", "hierarchical"):
                raise ConfigError(f"unknown mode {m!r}")
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.base_seed = args.seed
    resolved = dict(cfg.raw)
    resolved["experiment"] = dict(
        cfg.raw["experiment"],
        horizons=cfg.horizons, modes=cfg.modes,
        trials=cfg.trials, base_seed=cfg.base_seed,
    )

    t0 = time.perf_counter()
    done = [0]
    total = len(cfg.horizons) * len(cfg.modes) * cfg.trials

    def progress(res):
        done[0] += 1
        succ = sum(w.success for w in res.waypoints)
        print(
            f"[{done[0]}/{total}] H={res.horizon} {res.mode} trial {res.trial}: "
            f"{succ}/{len(res.waypoints)} waypoints, {res.elapsed_s:.1f}s sim, "
            f"{res.control_steps} steps",
            flush=True,
        )

    summaries, trials = bench.run_experiment(cfg, record_steps=args.steps, progress=progress)
    paths = bench.write_results(summaries, trials, args.out, raw_config=resolved, write_steps=args.steps)
    print(f"wrote {paths['trials']} and {paths['summary']} ({time.perf_counter() - t0:.1f}s)")
    if not args.no_figures:
        from .report import render_figures

        for fig in render_figures(args.out):
            print(f"wrote {fig}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _load(args)
    # constructors enforce the world/plan invariants; also check the expanded plans
    for mode in cfg.modes:
        cfg.make_supervisor(mode)
    print(
        f"config ok: {cfg.model.n_joints}-link arm, "
        f"{len(cfg.world.obstacles)} obstacles, {len(cfg.world.regions)} regions, "
        f"{len(cfg.plan.waypoints)} waypoints, "
        f"cells = {len(cfg.horizons)} horizons x {len(cfg.modes)} modes x {cfg.trials} trials"
    )
    return 0


def _cmd_demo(args) -> int:
    cfg = _load(args)
    horizon = args.horizon if args.horizon is not None else cfg.horizons[0]
    res = bench.run_trial(cfg, horizon, args.mode, args.trial, record_steps=True)
    for row in res.steps:
        print(json.dumps(row))
    summary = {
        "horizon": res.horizon,
        "mode": res.mode,
        "trial": res.trial,
        "success": [w.success for w in res.waypoints],
        "elapsed_s": res.elapsed_s,
        "traversed_m": res.traversed_m,
        "control_steps": res.control_steps,
        "rollout_count": res.rollout_count,
    }
    print(json.dumps(summary))
    return 0


def _cmd_report(args) -> int:
    from .report import render_figures

    for fig in render_figures(args.results, args.out):
        print(f"wrote {fig}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "demo": _cmd_demo,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
