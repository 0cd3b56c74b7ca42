"""Command line interface.

Subcommands: ``simulate <config>``, ``sweep <config>``, ``check-exponents``,
``verify-snapshot <path>``, ``bench-kernels``. Exit codes: 0 completed,
2 halted on the blow-up ceiling, 1 error.
"""

import argparse
import json
import sys
from fractions import Fraction

from .errors import ConfigError, KsnsError
from .runner import RunConfig, SweepConfig, parse_config, run, sweep


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _cmd_simulate(args):
    config = _load_config(args.config)
    if isinstance(config, SweepConfig):
        config = config.base
    if args.outdir:
        config.outdir = args.outdir
    if config.applied_defaults and args.verbose:
        for line in config.applied_defaults:
            print(f"default applied: {line}")
    report = run(config)
    print(
        f"{report.halt_reason}: {report.steps} steps to t={report.t_final:.6g} "
        f"in {report.wall_time:.2f}s [{report.backend} kernels]"
    )
    if report.csv_path:
        print(f"diagnostics: {report.csv_path}")
    return report.exit_code


def _cmd_sweep(args):
    config = _load_config(args.config)
    if isinstance(config, RunConfig):
        raise ConfigError(["sweep requires sweep.alpha and sweep.eps keys"])
    if args.outdir:
        config.base.outdir = args.outdir
    report = sweep(config)
    for cell in report["cells"]:
        status = cell["halt_reason"]
        print(
            f"alpha={cell['alpha']:<6g} eps={cell['eps']:<6g} {status:>16s}  "
            f"sup_n_max={cell['sup_n_max']:.6g}"
        )
    failed = [c for c in report["cells"] if c["error"]]
    return 1 if failed else 0


def _cmd_check_exponents(args):
    from .exponents import feasibility_report

    p = Fraction(args.p)
    report = feasibility_report(count=args.samples, p=p)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_verify_snapshot(args):
    from .snapshot import verify_snapshot

    summary = verify_snapshot(args.path)
    print(json.dumps(summary, indent=2))
    return 0 if summary["finite"] else 1


def _cmd_bench(args):
    from .bench import format_benchmark, run_benchmark

    rows = run_benchmark(size=args.size, dims=args.dims)
    print(format_benchmark(rows))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="ksns")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one configuration")
    p_sim.add_argument("config")
    p_sim.add_argument("--outdir", default=None)
    p_sim.add_argument("--verbose", action="store_true")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run an (alpha, eps) sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--outdir", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_exp = sub.add_parser("check-exponents", help="exact exponent certificates")
    p_exp.add_argument("--p", default="13/8")
    p_exp.add_argument("--samples", type=int, default=200)
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=_cmd_check_exponents)

    p_ver = sub.add_parser("verify-snapshot", help="validate a binary snapshot")
    p_ver.add_argument("path")
    p_ver.set_defaults(func=_cmd_verify_snapshot)

    p_bench = sub.add_parser("bench-kernels", help="compare kernel backends")
    p_bench.add_argument("--size", type=int, default=64)
    p_bench.add_argument("--dims", type=int, default=2)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return 1
    except KsnsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
