"""Command-line front end: curve presets, the validation battery and the asymptotic table.

Exit codes: 0 on success, 1 when a computation failed, 2 on a bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import bounds
from .curves import MODES, RunConfig, build_curves, parse_snr_grid, resolve_threads
from .errors import ConfigurationError, FadecapError
from .validation import run_validation

__all__ = ["main", "build_parser", "config_from_args", "asymptotic_table"]

DEFAULT_PAIRS = ((4, 100), (10, 400), (50, 1000))


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    out = []
    for part in text.split(","):
        if ":" in part:
            a, b = part.split(":")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _int_list_arg(text):
    try:
        return _int_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers like 1,2,5 or 1:10, got {text!r}") from exc


def _pairs(text):
    try:
        return tuple(tuple(int(v) for v in p.split(":")) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected m:L pairs like 4:100,10:400, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def build_parser():
    p = _Parser(prog="fadecap", description="Capacity curves for multicode CDMA fading channels "
                                            "with partial channel knowledge.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("curve", help="emit capacity curves as CSV or JSON")
    c.add_argument("--mode", choices=MODES, default="fig1-7")
    c.add_argument("--beta", type=_float_list, default=(), help="comma-separated CSI-error powers")
    c.add_argument("--K", type=_int_list_arg, default=(), help="signal dimensions, e.g. 1:10")
    c.add_argument("--L", type=_int_list_arg, default=(), help="numbers of paths, e.g. 1,2,4")
    c.add_argument("--snr-db", default=None, help="start:stop:step in dB (default 0:20:1)")
    c.add_argument("--mmax", type=int, default=10, help="largest AMQAM size")
    c.add_argument("--points", type=int, default=4, help="largest support of the optimized law")
    c.add_argument("--series", default="", help="subset of series for fig1-7/custom")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threads", type=int, default=None, help="worker threads (overrides FADECAP_THREADS)")
    c.add_argument("--out", default=".", help="output directory")
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--quick", action="store_true", help="reduced quadrature and search budgets")

    v = sub.add_parser("validate", help="run the invariant battery and print a JSON report")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--quick", action="store_true")
    v.add_argument("--out", default=None, help="write the report here instead of stdout")

    a = sub.add_parser("asymptotic", help="on-off bounds for K = exp(2 m L)")
    a.add_argument("--pairs", type=_pairs, default=DEFAULT_PAIRS, help="m:L pairs")
    a.add_argument("--sigma2", type=float, default=1.0)
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    a.add_argument("--out", default=None)
    return p


def config_from_args(args):
    quick = bool(args.quick)
    if args.snr_db is not None:
        snr = parse_snr_grid(args.snr_db)
    else:
        snr = parse_snr_grid("0:20:4" if quick else "0:20:1")
    series = tuple(s for s in args.series.split(",") if s)
    return RunConfig(mode=args.mode, betas=tuple(args.beta), K=tuple(args.K), L=tuple(args.L),
                     snr_db=snr, m_max=args.mmax, points=args.points, seed=args.seed,
                     quick=quick, series=series, fmt=args.format,
                     threads=resolve_threads(args.threads), out=args.out)


def asymptotic_table(pairs, sigma2=1.0):
    """One row per (m, L) with ln K = 2 m L."""
    rows = []
    for m, L in pairs:
        if m < 1 or L < 1:
            raise ConfigurationError("m and L must be positive")
        log_k = 2.0 * m * L
        onoff = bounds.asymptotic_onoff_bound(m, L, sigma2)
        integral = bounds.lower_bound_lemma3(1, m, L, 1.0, sigma2, log_k=log_k).value
        rows.append({
            "m": m, "L": L, "ln_K": log_k,
            "cor1_vanishing": bounds.fourth_moment_vanishing_bound(1.0, [L], sigma2)[0],
            "onoff_bound": onoff,
            "gap": 1.0 / sigma2 - onoff,
            "onoff_integral": integral,
        })
    return rows


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_curve(args):
    cfg = config_from_args(args)
    curves = build_curves(cfg, threads=cfg.threads)
    failed = False
    for curve in curves:
        path = curve.write(cfg.out, cfg.fmt)
        print(path)
        for d in curve.metadata["diagnostics"]:
            print(f"warning: {d}", file=sys.stderr)
            failed = True
    return 1 if failed else 0


def _cmd_validate(args):
    report = run_validation(quick=args.quick, seed=args.seed)
    _emit(json.dumps(report, indent=1, default=float) + "\n", args.out)
    return 0 if report["all_passed"] else 1


def _cmd_asymptotic(args):
    rows = asymptotic_table(args.pairs, args.sigma2)
    if args.format == "json":
        text = json.dumps({"sigma2": args.sigma2, "rows": rows}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([v if isinstance(v, int) else f"{v:.9g}" for v in r.values()])
        text = buf.getvalue()
    _emit(text, args.out)
    return 0


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        handler = {"curve": _cmd_curve, "validate": _cmd_validate,
                   "asymptotic": _cmd_asymptotic}[args.command]
        return handler(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (FadecapError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
