"""Command-line harness: ``thzris {train,sweep-distance,reward-cdf,lr-study,check}``.

Outputs go to ``--out`` (default: the scenario's ``run.output_dir``). CSV
files are UTF-8 with a header row; JSON summaries are single objects.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import checks, experiments
from .errors import RejectedInputError, ScenarioError
from .scenario import FULL_HYPER, SCHEMES, load_scenario

log = logging.getLogger("thzris")

TRACE_HEADER = ("episode", "step", "instant_reward", "average_reward")
SWEEP_HEADER = ("scheme", "distance_m", "throughput_bps")
CDF_HEADER = ("config", "reward", "cdf")
LR_HEADER = ("learning_rate", "step", "average_reward")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--out", help="output directory (default: run.output_dir)")
    common.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("--full-scale", action="store_true",
                        help="use Z=5000 episodes of T=20000 steps instead of the scenario's values")

    parser = argparse.ArgumentParser(prog="thzris", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train one agent and save its best solution")
    p.add_argument("--scenario", required=True)

    p = sub.add_parser("sweep-distance", parents=[common], help="throughput versus distance per scheme")
    p.add_argument("--scenario", required=True)
    p.add_argument("--distances", type=_float_list, help="comma-separated meters (default: run.distances)")
    p.add_argument("--schemes", type=_str_list, help=f"comma-separated subset of {','.join(SCHEMES)}")

    p = sub.add_parser("reward-cdf", parents=[common], help="CDF of per-episode average rewards")
    p.add_argument("--scenario", required=True, action="append",
                   help="repeat for several configurations; each is labeled by run.label")

    p = sub.add_parser("lr-study", parents=[common], help="average reward per step for several learning rates")
    p.add_argument("--scenario", required=True)
    p.add_argument("--rates", type=_float_list, help="comma-separated rates (default: run.learning_rates)")

    sub.add_parser("check", help="run the invariant suite; nonzero exit on any failure")
    return parser


def _load(path, args):
    sc = load_scenario(path)
    if args.seed is not None:
        sc = sc.with_run(seed=args.seed)
    if args.full_scale:
        sc = sc.with_hyper(**FULL_HYPER)
    return sc


def _outdir(args, sc):
    out = args.out or sc.run.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def cmd_train(args):
    sc = _load(args.scenario, args)
    out = _outdir(args, sc)
    topo = experiments.place_topology(sc.system.I, sc.system.K, sc.placement)
    res = experiments.run_training(sc.system, topo, sc.link, sc.hyper, sc.run.init_method, seed=sc.run.seed)
    experiments.write_csv(os.path.join(out, "reward_trace.csv"), TRACE_HEADER, res.trace_rows())
    best = res.best_solution
    np.savez(os.path.join(out, "best_solution.npz"), F=best.F, sum_rate=res.best_rate,
             **{f"phases_{i + 1}": phi for i, phi in enumerate(best.phases)})
    res.agent.save(os.path.join(out, "agent"))
    summary = {
        "best_sum_rate": res.best_rate,
        "best_episode": res.best_episode,
        "episodes_run": res.metrics["episodes"],
        "steps_per_episode": res.metrics["steps_per_episode"],
        "wall_time_s": res.metrics["wall_time_s"],
        "feasibility_violations": res.metrics["feasibility_violations"],
        "degenerate_actions": res.metrics["degenerate_actions"],
        "overflow_events": res.metrics["overflow_events"],
        "init_method": sc.run.init_method,
        "seed": sc.run.seed,
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"best sum rate {res.best_rate:.4f} bits/s/Hz; artifacts in {out}")
    return 0


def cmd_sweep_distance(args):
    sc = _load(args.scenario, args)
    out = _outdir(args, sc)
    rows, _ = experiments.sweep_distance(sc, args.distances, args.schemes, workers=args.workers)
    path = os.path.join(out, "sweep_distance.csv")
    experiments.write_csv(path, SWEEP_HEADER, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_reward_cdf(args):
    scs = [_load(p, args) for p in args.scenario]
    out = _outdir(args, scs[0])
    rows = experiments.reward_cdf(scs, workers=args.workers)
    path = os.path.join(out, "reward_cdf.csv")
    experiments.write_csv(path, CDF_HEADER, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_lr_study(args):
    sc = _load(args.scenario, args)
    out = _outdir(args, sc)
    rows = experiments.lr_study(sc, args.rates, workers=args.workers)
    path = os.path.join(out, "lr_study.csv")
    experiments.write_csv(path, LR_HEADER, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_check(args):
    results = checks.run_checks()
    print(checks.format_report(results))
    return 0 if all(ok for _, ok, _ in results) else 1


COMMANDS = {
    "train": cmd_train,
    "sweep-distance": cmd_sweep_distance,
    "reward-cdf": cmd_reward_cdf,
    "lr-study": cmd_lr_study,
    "check": cmd_check,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, RejectedInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
