"""Command line entry point: ``run``, ``sweep`` and ``accountant`` subcommands."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .accountant import (
    MechanismParams,
    PrivacyLedger,
    epsilon_and_order,
    required_sigma,
)
from .errors import D2P2Error


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--optimizer", help="d2p2|d2p|dp2|dpsgd|sgd, or a comma list")
    p.add_argument("--dataset", help="synthetic or csv:<path>")
    p.add_argument("--objective", help="logistic|mlp|quadratic")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--sigma-eps", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--reduction-rate", type=float)
    p.add_argument("--seeds", help="comma separated, e.g. 0,1,2,3,4")
    p.add_argument("--delta", type=float)
    p.add_argument("--out", help="output directory")


_FLAG_KEYS = {
    "optimizer": "optimizer", "dataset": "dataset", "objective": "objective",
    "epochs": "epochs", "batch_size": "batch_size", "lr": "lr",
    "sigma_eps": "sigma_eps", "gamma": "gamma", "reduction_rate": "reduction_rate",
    "seeds": "seeds", "delta": "delta", "out": "out",
}


def _spec_from_args(args, **extra) -> harness.ExperimentSpec:
    overrides = {key: getattr(args, attr) for attr, key in _FLAG_KEYS.items()}
    overrides.update(extra)
    return harness.load_spec(args.config, overrides)


def cmd_run(args) -> int:
    result = harness.run(_spec_from_args(args))
    for path in result.run_files:
        print(path)
    print(result.aggregate_file)
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args, sweep_axis=args.axis, sweep_values=args.values)
    result = harness.run(spec)
    rows = harness.sweep_report(result.aggregates)
    report = spec.out / "report.csv"
    report.write_text(harness.report_csv_text(rows))
    print(harness.format_report(rows))
    print(report)
    return 0


def cmd_accountant(args) -> int:
    mode = "dynamic" if args.dynamic else "static"
    if args.target_eps is not None:
        sigma = required_sigma(args.n, args.batch_size, args.steps, args.target_eps,
                               args.delta, mode)
        print(f"sigma_eps={sigma!r}")
        return 0
    params = MechanismParams(args.n, args.batch_size, args.sigma_eps, mode, args.delta)
    eps, order = epsilon_and_order(PrivacyLedger.after(params, args.steps), args.delta)
    print(f"epsilon={eps!r} order={order}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2p2", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and write metric CSVs")
    _add_run_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run over one swept knob and print a report")
    _add_run_options(p)
    p.add_argument("--axis", required=True, choices=sorted(harness.SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("accountant", help="print epsilon for a subsampled Gaussian run")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--sigma-eps", type=float, default=3.0)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--dynamic", action="store_true", help="sigma_eps^2 / k schedule")
    p.add_argument("--target-eps", type=float,
                   help="instead print the smallest sigma_eps reaching this epsilon")
    p.set_defaults(func=cmd_accountant)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (D2P2Error, OSError) as exc:
        print("error: " + json.dumps({"type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
