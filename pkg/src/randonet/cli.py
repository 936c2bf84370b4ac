"""Command line interface: run, sweep, gen-data, verify.

Flags can also be supplied through a JSON config file (``--config``);
explicit flags win over file values. On failure the process exits nonzero
after printing a one-line JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import acceptance, harness, problems

__all__ = ["main", "build_parser"]


def _parse_m_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad branch size list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("branch size list is empty")
    return values


def _add_experiment_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--case", type=int, choices=problems.CASE_IDS, help="case study id")
    sub.add_argument("--branch", choices=("jl", "rffn"), help="branch embedding kind")
    sub.add_argument("--m", type=_parse_m_list, dest="m",
                     help="branch width M, or comma-separated list for sweeps")
    sub.add_argument("--n", type=int, dest="n", help="trunk width N (default 200)")
    sub.add_argument("--train-frac", type=float, help="training fraction in (0, 1)")
    sub.add_argument("--solver", choices=("cod", "tsvd", "tikhonov"), help="least-squares route")
    sub.add_argument("--lambda", type=float, dest="reg", help="Tikhonov regularization weight")
    sub.add_argument("--tol", type=float, help="rank tolerance for cod/tsvd (default auto)")
    sub.add_argument("--bandwidth", type=float, dest="bandwidth",
                     help="RFFN kernel bandwidth (default: 5x sensor count)")
    sub.add_argument("--trunk-bound", type=float, dest="trunk_bound",
                     help="tanh trunk weight bound (default: 25 / domain half-width)")
    sub.add_argument("--seed-data", type=int, help="dataset generation seed")
    sub.add_argument("--seed-embed", type=int, help="embedding sampling seed")
    sub.add_argument("--seed-split", type=int, help="train/test split seed")
    sub.add_argument("--size", type=int, help="dataset size override (default per case)")
    sub.add_argument("--cache-dir", help="directory for cached datasets")
    sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    sub.add_argument("--config", help="JSON file with defaults for these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randonet", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="train on one case and report test metrics")
    _add_experiment_flags(run)

    swp = subs.add_parser("sweep", help="branch-width sweep with a convergence CSV")
    _add_experiment_flags(swp)

    gen = subs.add_parser("gen-data", help="export a case dataset to CSV")
    gen.add_argument("--case", type=int, choices=problems.CASE_IDS, required=True)
    gen.add_argument("--seed-data", type=int, default=0)
    gen.add_argument("--size", type=int, help="dataset size override")
    gen.add_argument("--out", required=True, help="output CSV path")

    ver = subs.add_parser("verify", help="run the acceptance criteria")
    ver.add_argument("--criteria", help="comma-separated criterion ids (default: all)")
    ver.add_argument("--cache-dir", help="directory for cached datasets")
    return parser


_CONFIG_KEYS = {
    "case": "case",
    "branch": "branch",
    "m": "m",
    "n": "n",
    "train_frac": "train_frac",
    "solver": "solver",
    "lambda": "reg",
    "tol": "tol",
    "bandwidth": "bandwidth",
    "trunk_bound": "trunk_bound",
    "seed_data": "seed_data",
    "seed_embed": "seed_embed",
    "seed_split": "seed_split",
    "size": "size",
    "cache_dir": "cache_dir",
    "out": "out",
    "json": "json",
}


def _merge_config_file(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as fh:
        data = json.load(fh)
    for key, attr in _CONFIG_KEYS.items():
        if key in data and getattr(args, attr, None) in (None, False):
            value = data[key]
            if attr == "m" and not isinstance(value, (list, tuple)):
                value = [value]
            if attr == "m":
                value = tuple(int(v) for v in value)
            setattr(args, attr, value)
    unknown = set(data) - set(_CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config file keys: {sorted(unknown)}")


def _experiment_config(args: argparse.Namespace) -> harness.ExperimentConfig:
    if args.case is None:
        raise ValueError("--case is required (flag or config file)")
    return harness.ExperimentConfig(
        case=args.case,
        branch=args.branch or "jl",
        branch_sizes=args.m or (100,),
        trunk_size=args.n or 200,
        train_fraction=0.8 if args.train_frac is None else args.train_frac,
        solver=args.solver or "cod",
        reg=0.0 if args.reg is None else args.reg,
        tol=args.tol,
        seed_data=0 if args.seed_data is None else args.seed_data,
        seed_embed=1 if args.seed_embed is None else args.seed_embed,
        seed_split=2 if args.seed_split is None else args.seed_split,
        dataset_size=args.size,
        trunk_weight_bound=args.trunk_bound,
        rffn_bandwidth=args.bandwidth,
        cache_dir=args.cache_dir,
    )


def _emit_report(report, args) -> None:
    if args.out:
        if args.json:
            harness.write_report_json(report, args.out)
        else:
            harness.write_report_csv(report, args.out)
    header = f"{'case':>4} {'branch':>6} {'M':>6} {'mse':>12} {'l2_median':>12} {'seconds':>9}"
    print(header)
    for row in report.rows:
        print(
            f"{row.case:>4} {row.branch:>6} {row.m_branch:>6} "
            f"{row.mse:>12.4e} {row.l2_median:>12.4e} {row.train_seconds:>9.3f}"
        )
    print(f"dataset fingerprint: {report.dataset_fingerprint}")


def _cmd_run(args) -> int:
    _merge_config_file(args)
    report = harness.run_experiment(_experiment_config(args))
    _emit_report(report, args)
    return 0


def _cmd_sweep(args) -> int:
    _merge_config_file(args)
    report = harness.sweep(_experiment_config(args), args.out)
    _emit_report(report, args)
    return 0


def _cmd_gen_data(args) -> int:
    case = problems.case_config(args.case, size=args.size, seed=args.seed_data)
    ds, params = problems.build_case(case, with_params=True)
    problems.export_dataset_csv(args.out, case, ds, params)
    print(f"wrote {case.sampling.size} functions to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    cids = None
    if args.criteria:
        cids = [c.strip() for c in args.criteria.split(",") if c.strip()]
        for cid in cids:
            if cid not in acceptance.CRITERIA:
                raise ValueError(f"unknown criterion {cid!r}")
    results = acceptance.run_criteria(cids, cache_dir=args.cache_dir)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "gen-data": _cmd_gen_data,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(record), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
