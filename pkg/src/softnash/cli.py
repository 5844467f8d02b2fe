"""Command line entry point: ``softnash train | ground-truth | compare``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .envs import DEFAULT_GAMMA, ENV_NAMES
from .game import ContractError
from .harness import ExperimentConfig, compare_runs, export_ground_truth, format_comparison, public_summary, run_experiment
from .learners import ALGORITHMS, HyperParams


def _hp_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_hp(items) -> dict:
    """``KEY=VALUE`` pairs; values are parsed as JSON when possible."""
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ContractError(f"--hp expects KEY=VALUE, got {item!r}")
        out[key.strip()] = _hp_value(value.strip())
    HyperParams().update(**out)  # reject unknown names early
    return out


def _train_config(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    flags = {
        "env": args.env, "algo": args.algo, "schedule": args.schedule, "episodes": args.episodes,
        "runs": args.runs, "seed": args.seed, "gamma": args.gamma, "epsilon": args.epsilon,
        "prior_in": args.prior_in, "layout": args.layout, "success_prob": args.success_prob,
        "eval_every": args.eval_every, "jobs": args.jobs, "out": args.out, "cache_dir": args.cache_dir,
    }
    doc.update({k: v for k, v in flags.items() if v is not None})
    hp = dict(doc.get("hyperparams", {}))
    hp.update(parse_hp(args.hp))
    doc["hyperparams"] = hp
    if "env" not in doc:
        raise ContractError("--env is required (on the command line or in --config)")
    return ExperimentConfig.from_dict(doc)


def cmd_train(args) -> int:
    cfg = _train_config(args)
    summary = public_summary(run_experiment(cfg))
    nf = summary["nash_fraction"]
    print(f"{cfg.env} {cfg.algo}: nash_fraction {nf['mean']:.3f} +- {nf['std']:.3f} over {len(nf['values'])} runs, "
          f"lp_calls {summary['lp_calls']['mean']:.0f}")
    if summary["failures"]:
        print(f"{len(summary['failures'])} replicate(s) failed; see summary.json", file=sys.stderr)
        return 1
    return 0


def cmd_ground_truth(args) -> int:
    res = export_ground_truth(args.env, args.gamma, args.out, layout=args.layout, success_prob=args.success_prob)
    print(f"wrote {args.out} ({res.iterations} iterations)")
    return 0


def cmd_compare(args) -> int:
    summaries = []
    for path in args.summaries:
        with open(path) as fh:
            summaries.append(json.load(fh))
    print(format_comparison(compare_runs(summaries)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softnash", description="Tabular learners for zero-sum stochastic games.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train and evaluate replicates")
    t.add_argument("--config", help="JSON experiment config; flags override its values")
    t.add_argument("--env", choices=ENV_NAMES)
    t.add_argument("--algo", choices=ALGORITHMS)
    t.add_argument("--schedule", choices=("dynamic", "fixed"))
    t.add_argument("--episodes", type=int)
    t.add_argument("--runs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--gamma", type=float)
    t.add_argument("--epsilon", type=float)
    t.add_argument("--prior-in", dest="prior_in")
    t.add_argument("--layout")
    t.add_argument("--success-prob", dest="success_prob", type=float)
    t.add_argument("--eval-every", dest="eval_every", type=int)
    t.add_argument("--jobs", type=int)
    t.add_argument("--cache-dir", dest="cache_dir")
    t.add_argument("--hp", action="append", metavar="KEY=VALUE", help="hyper-parameter override (repeatable)")
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("ground-truth", help="write exact Nash values and policies")
    g.add_argument("--env", required=True, choices=ENV_NAMES)
    g.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    g.add_argument("--layout")
    g.add_argument("--success-prob", dest="success_prob", type=float)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_ground_truth)

    c = sub.add_parser("compare", help="compare summary.json files against Minimax-Q")
    c.add_argument("summaries", nargs="+")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
