"""mtsim command line.

Subcommands: gen-trace, simulate, tune, recommend, characterize.
Exit codes: 0 success, 2 usage error, 3 validation or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import engine, recommender, tuner, workload
from .buffer import read_snapshot, write_snapshot
from .devices import DEFAULT_BLOCK_SIZE, load_catalog, parse_size
from .errors import MtsimError

log = logging.getLogger("mtsim")

EXIT_USAGE = 2
EXIT_INVALID = 3

NAMED_POLICIES = {
    "eager": engine.EAGER,
    "a": engine.POLICY_A,
    "b": engine.POLICY_B,
    "c": engine.POLICY_C,
    "d": engine.POLICY_D,
}


def parse_policy(text: str) -> engine.MigrationPolicy:
    named = NAMED_POLICIES.get(text.strip().lower())
    return named if named is not None else engine.MigrationPolicy.parse(text)


def parse_size_list(text: str) -> tuple:
    return tuple(parse_size(p) for p in text.split(",") if p.strip())


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _catalog(args):
    return load_catalog(args.catalog).with_multiplier(args.nvm_latency_mult)


def _hierarchy(args):
    return engine.parse_hierarchy(args.hierarchy, _catalog(args), args.block_size)


# -- commands ----------------------------------------------------------------

def cmd_gen_trace(args, parser):
    if args.read_ratio is not None and not 0.0 <= args.read_ratio <= 1.0:
        parser.error("--read-ratio must be in [0, 1]")
    if args.fill is not None and not 0.0 <= args.fill <= 1.0:
        parser.error("--fill must be in [0, 1]")
    allowed = {
        "zipf": {"theta"},
        "log": {"log_fraction"},
        "shifting": {"hot_blocks", "shift_period", "hot_probability"},
    }[args.workload]
    for flag in ("theta", "log_fraction", "hot_blocks", "shift_period", "hot_probability"):
        if getattr(args, flag) is not None and flag not in allowed:
            parser.error(f"--{flag.replace('_', '-')} does not apply to --workload {args.workload}")
    if args.snapshot and not args.hierarchy:
        parser.error("--snapshot needs --hierarchy to size the buffer pools")

    if args.workload == "zipf":
        shape = workload.Zipf(1.0 if args.theta is None else args.theta)
    elif args.workload == "log":
        shape = workload.LogAppend(0.2 if args.log_fraction is None else args.log_fraction)
    else:
        shape = workload.ShiftingHotSet(
            args.hot_blocks if args.hot_blocks is not None else max(1, args.blocks // 100),
            args.shift_period if args.shift_period is not None else max(1, args.ops // 10),
            0.9 if args.hot_probability is None else args.hot_probability)
    spec = workload.WorkloadSpec(shape, args.blocks, args.ops,
                                 0.9 if args.read_ratio is None else args.read_ratio, args.seed)
    trace = workload.generate(spec)
    workload.write_trace(trace, args.output)
    if args.snapshot:
        h = _hierarchy(args)
        snap = workload.warm_snapshot(spec, h.slots(engine.TierKind.DRAM),
                                      h.slots(engine.TierKind.NVM),
                                      1.0 if args.fill is None else args.fill)
        write_snapshot(snap, args.snapshot)
    return 0


def cmd_simulate(args, parser):
    trace = workload.read_trace(args.trace)
    snapshot = read_snapshot(args.snapshot) if args.snapshot else None
    config = engine.EngineConfig(args.policy, args.block_size, args.warmup, args.seed)
    metrics = engine.run_trace(config, _hierarchy(args), trace, snapshot)
    if args.format == "json":
        text = engine.format_metrics_json(metrics)
    else:
        text = engine.format_metrics_csv(metrics)
    _emit(text, args.output)
    return 0


def _annealing_config(args, initial=engine.EAGER) -> tuner.AnnealingConfig:
    return tuner.AnnealingConfig(
        alpha=args.alpha, gamma=args.gamma, t0=args.t0, t_min=args.tmin, lam=args.lam,
        epoch_ops=args.epoch_ops, mode=args.mode, seed=args.seed, initial_policy=initial,
        block_size=args.block_size, warmup_fraction=args.warmup)


def cmd_tune(args, parser):
    trace = workload.read_trace(args.trace)
    snapshot = read_snapshot(args.snapshot) if args.snapshot else None
    grid = tuner.PolicyGrid(tuple(float(v) for v in args.grid.split(",")))
    config = _annealing_config(args, args.initial_policy)
    result = tuner.anneal(config, _hierarchy(args), trace, grid, snapshot)
    _emit(tuner.format_history(result), args.output)
    summary = {"best_policy": str(result.best_policy), "best_objective": result.best_objective,
               "steps": len(result.history), "evaluations": result.evaluations}
    if args.output not in (None, "-"):
        sys.stdout.write(json.dumps(summary) + "\n")
    if args.plot:
        from .plotting import plot_history
        plot_history(result, args.plot)
    return 0


def cmd_recommend(args, parser):
    if args.tune and args.policy is not None:
        parser.error("--policy and --tune are mutually exclusive")
    if args.budget <= 0:
        parser.error("--budget must be positive")
    trace = workload.read_trace(args.trace)
    sets = recommender.CandidateSets(parse_size_list(args.dram_set),
                                     parse_size_list(args.nvm_set),
                                     parse_size_list(args.ssd_set))
    if args.tune:
        source = recommender.Tuned(_annealing_config(args))
    else:
        source = recommender.Fixed(args.policy or engine.EAGER)
    rec = recommender.recommend(sets, _catalog(args), args.budget, trace, source,
                                args.block_size, args.warmup, args.seed, args.parallel)
    if args.format == "json":
        text = recommender.format_report_json(rec)
    else:
        text = recommender.format_report_csv(rec)
    _emit(text, args.output)
    if args.plot and len(rec):
        from .plotting import plot_recommendation
        plot_recommendation(rec, args.plot)
    return 0


def cmd_characterize(args, parser):
    trace = workload.read_trace(args.trace)
    cdf = workload.characterize(trace)
    _emit(workload.format_cdf(cdf), args.output)
    if args.plot:
        from .plotting import plot_cdf
        plot_cdf(cdf, args.plot)
    return 0


# -- argument parsing --------------------------------------------------------

def _add_device_flags(p):
    p.add_argument("--hierarchy", required=True, metavar="SPEC",
                   help="e.g. dram:16GB,nvm:1TB,ssd:2TB (missing tiers are absent)")
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, metavar="BYTES")
    p.add_argument("--nvm-latency-mult", type=float, default=2.0, metavar="M",
                   help="NVM latency as a multiple of DRAM latency (default 2)")
    p.add_argument("--catalog", metavar="PATH",
                   help="device catalog file (default: $MTSIM_CATALOG, else built-in)")


def _add_anneal_flags(p):
    d = tuner.AnnealingConfig()
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--gamma", type=int, default=d.gamma)
    p.add_argument("--t0", type=float, default=d.t0)
    p.add_argument("--tmin", type=float, default=d.t_min)
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    p.add_argument("--epoch-ops", type=int, default=d.epoch_ops)
    p.add_argument("--mode", choices=[m.value for m in tuner.Mode], default=d.mode.value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtsim", description="Multi-tier DRAM/NVM/SSD buffer management simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="generate a synthetic trace")
    p.add_argument("--workload", choices=["zipf", "log", "shifting"], default="zipf")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--ops", type=int, required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--read-ratio", type=float)
    p.add_argument("--log-fraction", type=float)
    p.add_argument("--hot-blocks", type=int)
    p.add_argument("--shift-period", type=int)
    p.add_argument("--hot-probability", type=float)
    p.add_argument("--seed", type=int, default=0, help="default 0")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--snapshot", metavar="PATH", help="also write a warm snapshot")
    p.add_argument("--fill", type=float, help="snapshot fill fraction (default 1.0)")
    p.add_argument("--hierarchy", metavar="SPEC", help="sizes the snapshot's pools")
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    p.add_argument("--nvm-latency-mult", type=float, default=None, help=argparse.SUPPRESS)
    p.add_argument("--catalog", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("simulate", help="replay a trace under a migration policy")
    p.add_argument("--trace", required=True)
    _add_device_flags(p)
    p.add_argument("--policy", type=parse_policy, default=engine.EAGER,
                   help="dr,dw,nr,nw or a named policy (eager, A, B, C, D); default eager")
    p.add_argument("--warmup", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="tune the policy with simulated annealing")
    p.add_argument("--trace", required=True)
    _add_device_flags(p)
    _add_anneal_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--warmup", type=float, default=0.5, help="warm-up share of each replay epoch")
    p.add_argument("--grid", default=",".join(f"{v:g}" for v in tuner.DEFAULT_GRID))
    p.add_argument("--initial-policy", type=parse_policy, default=engine.EAGER)
    p.add_argument("--snapshot")
    p.add_argument("-o", "--output", help="history CSV (default stdout)")
    p.add_argument("--plot", metavar="IMAGE", help="also render the objective history")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("recommend", help="rank hierarchies under a budget")
    p.add_argument("--trace", required=True)
    p.add_argument("--budget", type=float, required=True, metavar="USD")
    p.add_argument("--dram-set", default="0,4GB,16GB,64GB")
    p.add_argument("--nvm-set", default="0,256GB,1TB")
    p.add_argument("--ssd-set", default="2TB")
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    p.add_argument("--nvm-latency-mult", type=float, default=2.0)
    p.add_argument("--catalog")
    p.add_argument("--policy", type=parse_policy)
    p.add_argument("--tune", action="store_true", help="anneal a policy per candidate")
    _add_anneal_flags(p)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--warmup", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output")
    p.add_argument("--plot", metavar="IMAGE")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("characterize", help="skew CDF of per-block access counts")
    p.add_argument("--trace", required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--plot", metavar="IMAGE")
    p.set_defaults(func=cmd_characterize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="mtsim: %(levelname)s: %(message)s", stream=sys.stderr,
                        force=True)
    try:
        return args.func(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (MtsimError, ValueError, OSError) as exc:
        print(f"mtsim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
