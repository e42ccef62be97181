"""Command-line entry points: ``certify`` and ``oracle-compare``."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DatasetError
from .harness import RunConfig, certify_batch, oracle_compare
from .knn import DEFAULT_GRID, DEFAULT_P


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--train", required=True, help="training CSV")
    sub.add_argument("--test", required=True, help="test CSV")
    sub.add_argument("--schema", required=True, help="schema JSON")
    sub.add_argument("--out", required=True, help="output directory for reports")
    sub.add_argument("--epsilon-frac", type=float, default=0.01,
                     help="perturbation as a fraction of each attribute range")
    sub.add_argument("--n-flips", type=int, default=0, help="label-flip budget n")
    sub.add_argument("--p", type=int, default=DEFAULT_P, help="cross-validation folds")
    sub.add_argument("--grid", type=_int_list,
                     default=DEFAULT_GRID, help="candidate k values, comma separated")
    sub.add_argument("--variant", choices=["flip", "individual", "epsilon"],
                     default="flip")
    sub.add_argument("--metric", choices=["euclidean", "manhattan"],
                     default="euclidean")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--group-by", type=_str_list, default=(),
                     help="attributes for per-group breakdown, comma separated")
    sub.add_argument("--jobs", type=int, default=0,
                     help="worker threads (0 = all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knncert",
        description="Certify fairness of KNN classification under input "
                    "perturbation and training-label bias.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    cert = subs.add_parser("certify", help="batch certification")
    _add_common(cert)

    cmp_ = subs.add_parser("oracle-compare",
                           help="certify and compare against enumeration ground truth")
    _add_common(cmp_)
    cmp_.add_argument("--oracle-cap", type=int, default=10**6,
                      help="refuse enumeration beyond this many clean sets")
    cmp_.add_argument("--oracle-relearn", choices=["on", "off"], default="on",
                      help="re-learn K per clean set (ground-truth pipeline)")
    cmp_.add_argument("--falsify-samples", type=int, default=200,
                      help="sampled probes per certified input (epsilon variant)")
    return parser


def _config_from(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        train=args.train,
        test=args.test,
        schema=args.schema,
        out=args.out,
        epsilon_frac=args.epsilon_frac,
        n_flips=args.n_flips,
        p=args.p,
        grid=tuple(args.grid),
        seed=args.seed,
        metric=args.metric,
        variant=args.variant,
        group_by=tuple(args.group_by),
        jobs=args.jobs,
    )
    if args.command == "oracle-compare":
        cfg.oracle_cap = args.oracle_cap
        cfg.oracle_relearn = args.oracle_relearn == "on"
        cfg.falsify_samples = args.falsify_samples
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from(args)
        if args.command == "certify":
            summary = certify_batch(cfg)
            print(f"certified {summary['certified']}/{summary['n_inputs']} "
                  f"({summary['certified_pct']:.1f}%) "
                  f"variant={summary['variant']} kset={summary['kset']} "
                  f"reports in {cfg.out}")
            return 0
        summary = oracle_compare(cfg)
        oracle = summary["oracle"]
        print(f"certified {summary['certified']}/{summary['n_inputs']} "
              f"({summary['certified_pct']:.1f}%), "
              f"ground truth fair {oracle['ground_truth_fair']}"
              f"/{oracle['ground_truth_known']}, "
              f"accuracy "
              + (f"{oracle['accuracy_pct']:.1f}%" if oracle["accuracy_pct"] is not None
                 else "n/a")
              + f", reports in {cfg.out}")
        if oracle["soundness_violations"]:
            print(f"SOUNDNESS VIOLATION on inputs {oracle['soundness_violations']}",
                  file=sys.stderr)
            return 3
        return 0
    except (ConfigError, DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
