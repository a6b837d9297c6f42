"""Command-line interface.

Exit codes: 0 success, 1 usage/config error, 2 acceptance failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import spectral_core as sc
from .regime import RegimeKind, classify, growth_rate, stable_eigenvalues

EXIT_OK, EXIT_USAGE, EXIT_ACCEPT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser, suppress: bool, with_out: bool = True) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="TOML configuration file")
    if with_out:
        parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0, help="64-bit seed")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="FFT worker threads")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    # subcommands writing a single file use --out for that file
    common_file = _Parser(add_help=False)
    _global_flags(common_file, suppress=True, with_out=False)
    p = _Parser(prog="rotcouette", description="Rotating Couette flow spectral laboratory")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("classify", parents=[common], help="regime report as key=value lines")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--nu", type=float, required=True)

    s = sub.add_parser("eigen", parents=[common], help="simple-zero eigenvalues at (eta, l)")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--l", type=int, required=True)

    s = sub.add_parser("instability-map", parents=[common_file], help="CSV of S and S' membership")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--eta-max", type=float, required=True)
    s.add_argument("--eta-steps", type=int, required=True)
    s.add_argument("--l-max", type=int, required=True)
    s.add_argument("--out", dest="out_file", required=True)

    s = sub.add_parser("multiplier", parents=[common_file], help="multiplier time series")
    s.add_argument("--which", choices=["m", "m1", "m2", "a"], required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--dt", type=float, required=True)
    s.add_argument("--out", dest="out_file", required=True)

    sub.add_parser("linear", parents=[common], help="full linear evolution (needs --config)")

    s = sub.add_parser("dispersive", parents=[common_file], help="dispersive sup-norm series")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--tmax", type=float, required=True)
    s.add_argument("--out", dest="out_file", required=True)

    sub.add_parser("simulate", parents=[common], help="nonlinear run (needs --config)")

    s = sub.add_parser("scan", parents=[common_file], help="transition-threshold bisection (needs --config)")
    s.add_argument("--nu-list", type=float, nargs="+", required=True)
    s.add_argument("--eps-min", type=float, required=True)
    s.add_argument("--eps-max", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--out", dest="out_file", required=True)

    s = sub.add_parser("figures", parents=[common], help="eigen-curve and instability-map CSVs")
    s.add_argument("--eta-steps", type=int, default=601)

    s = sub.add_parser("accept", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    s.add_argument("--baselines", default=None, help="baseline JSON (frozen on first run)")
    s.add_argument("--report", default=None, help="write a JSON report here")
    return p


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in r])


def _out_dir(args) -> Path:
    d = Path(args.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _need_config(args):
    if not args.config:
        raise UsageError(f"{args.command} requires --config FILE")
    from .nonlinear import SimulationConfig

    with warnings.catch_warnings():
        if args.command == "linear":
            # per-mode propagation has no products, so shear resolution does not apply
            warnings.simplefilter("ignore")
        cfg = SimulationConfig.from_toml(args.config)
    if args.seed:
        cfg.seed = args.seed
    return cfg


def cmd_classify(args) -> int:
    for line in classify(args.beta, args.nu).as_lines():
        print(line)
    return EXIT_OK


def cmd_eigen(args) -> int:
    rep = classify(args.beta, args.nu)
    r2 = args.eta**2 + args.l**2
    if rep.kind is RegimeKind.EXPONENTIALLY_UNSTABLE:
        rate = growth_rate(args.beta, args.nu, args.eta, args.l)
        other = -args.nu * r2 - math.sqrt(-rep.b_beta) * abs(args.l) / math.sqrt(r2)
        print(f"lambda_plus={rate!r}")
        print(f"lambda_minus={other!r}")
    elif rep.kind is RegimeKind.STABLE:
        lp, lm = stable_eigenvalues(args.beta, args.nu, args.eta, args.l)
        print(f"lambda_plus={lp.real!r}{lp.imag:+}i")
        print(f"lambda_minus={lm.real!r}{lm.imag:+}i")
    else:
        if r2 == 0:
            raise ValueError("eigenvalues are singular at (eta, l) = (0, 0)")
        # degenerate (Jordan) pair: the secular lift-up term
        print(f"lambda_double={-args.nu * r2!r}")
    return EXIT_OK


def cmd_instability_map(args) -> int:
    from .figures import write_instability_map

    write_instability_map(args.out_file, args.beta, args.nu, args.eta_max, args.eta_steps, args.l_max)
    return EXIT_OK


def cmd_multiplier(args) -> int:
    from . import multipliers as mu

    if args.dt <= 0 or args.t_max < 0:
        raise UsageError("need dt > 0 and t-max >= 0")
    t = np.arange(0.0, args.t_max + 0.5 * args.dt, args.dt)
    k, eta, l, nu = args.k, args.eta, args.l, args.nu
    if args.which == "m":
        v, d = mu.m_values(t, k, eta, l, nu)
    elif args.which == "m1":
        v, d = mu.m1_values(t, k, eta, l, nu)
    elif args.which == "m2":
        v, d = mu.m2_values(t, k, eta, l)
    else:
        v = mu.a_values(t, k, eta, l, nu, args.delta)
        d = (mu.m_values(t, k, eta, l, nu)[1] + mu.m1_values(t, k, eta, l, nu)[1]
             + mu.m2_values(t, k, eta, l)[1] + args.delta * nu ** (1.0 / 3.0))
    v, d = np.broadcast_arrays(v, d)
    _write_csv(args.out_file, ["t", "value", "dlog"], zip(t, v, d))
    return EXIT_OK


def cmd_linear(args) -> int:
    from .experiments import LINEAR_COLUMNS, linear_norm_series

    cfg = _need_config(args)
    rows = linear_norm_series(cfg)
    path = _out_dir(args) / "linear.csv"
    _write_csv(path, LINEAR_COLUMNS, rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_dispersive(args) -> int:
    from .experiments import dispersive_series_rows

    if args.tmax <= 1:
        raise UsageError("--tmax must exceed 1")
    rows = dispersive_series_rows(args.beta, args.nu, args.tmax)
    _write_csv(args.out_file, ["t", "supnorm_u1", "supnorm_u2", "supnorm_u3", "fitted_slope_so_far"], rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .nonlinear import RunStatus, run

    cfg = _need_config(args)
    if args.out:
        cfg.output_dir = args.out
    elif cfg.output_dir is None:
        cfg.output_dir = "."
    res = run(cfg)
    print(f"status={res.status.value}")
    print(f"t={res.state.time!r}")
    print(f"max_bootstrap_over_eps2={res.ledger.max_bootstrap() / res.epsilon**2 if res.epsilon else 0.0!r}")
    return EXIT_OK if res.status is RunStatus.COMPLETED else EXIT_NUMERIC


def cmd_scan(args) -> int:
    from .nonlinear import threshold_scan

    cfg = _need_config(args)
    table = threshold_scan(cfg, args.nu_list, (args.eps_min, args.eps_max), args.steps)
    table.write_csv(args.out_file)
    for r in table.rows:
        print(f"nu={r.nu!r} eps_critical={r.eps_critical!r} bracket_ok={r.bracket_ok}")
    print(f"exponent={table.exponent!r}")
    return EXIT_OK


def cmd_figures(args) -> int:
    from .figures import FigureKind, emit_figure_data

    d = _out_dir(args)
    panels = {
        "eigen_curve_nu1e-3.csv": (FigureKind.EIGEN_CURVE, {"beta": 0.5, "nu": 1e-3, "l": 2, "steps": args.eta_steps}),
        "eigen_curve_nu1e-4.csv": (FigureKind.EIGEN_CURVE, {"beta": 0.5, "nu": 1e-4, "l": 2, "steps": args.eta_steps}),
        "instability_map_beta0.5.csv": (FigureKind.INSTABILITY_MAP, {"beta": 0.5, "nu": 1e-3}),
        "instability_map_beta0.1.csv": (FigureKind.INSTABILITY_MAP, {"beta": 0.1, "nu": 1e-3}),
    }
    for name, (kind, params) in panels.items():
        print(f"wrote {emit_figure_data(kind, params, d / name)}")
    return EXIT_OK


def cmd_accept(args) -> int:
    from .acceptance import ALL_CRITERIA, SuiteConfig, report_json, run_acceptance

    crit = ALL_CRITERIA
    if args.only:
        try:
            crit = tuple(int(x) for x in args.only.split(",") if x.strip())
        except ValueError as exc:
            raise UsageError(f"bad --only list: {args.only}") from exc
    report = run_acceptance(SuiteConfig(criteria=crit, seed=args.seed, baselines_path=args.baselines), echo=print)
    if args.report:
        Path(args.report).write_text(report_json(report))
    return EXIT_OK if report.passed else EXIT_ACCEPT


COMMANDS = {
    "classify": cmd_classify, "eigen": cmd_eigen, "instability-map": cmd_instability_map,
    "multiplier": cmd_multiplier, "linear": cmd_linear, "dispersive": cmd_dispersive,
    "simulate": cmd_simulate, "scan": cmd_scan, "figures": cmd_figures, "accept": cmd_accept,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sc.set_fft_workers(args.threads)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
