"""Command-line entry point.

Exit codes: 0 on success, 2 when a report is tainted by guard-band
ambiguity, 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .config import load_config
from .counting import remainder
from .exact import parse_scalar
from .geometry import decompose, decomposition_report
from .harness import (
    _count_record,
    _run_domain,
    emit_report,
    naive_oracle_count,
    run_average_sweep,
    run_spectral,
    run_sweep,
)

EXIT_OK, EXIT_ERROR, EXIT_TAINTED = 0, 1, 2


def _eps(text: str) -> Fraction:
    v = parse_scalar(text)
    if not isinstance(v, Fraction) or v <= 0:
        raise argparse.ArgumentTypeError(f"epsilon must be a positive rational, got {text!r}")
    return v


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="experiment config file")
    common.add_argument("--mode", choices=("exact", "float"), help="override the config mode")
    common.add_argument("--seed", type=_u64, help="override the master seed")
    common.add_argument("--out", help="directory for report files (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "plotdata"), default="json")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--timing", action="store_true", help="record wall times (breaks byte-identity)")

    p = argparse.ArgumentParser(prog="anisocount", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", parents=[common], help="print the subspace decomposition")
    c = sub.add_parser("count", parents=[common], help="count, main term and remainder at one epsilon")
    c.add_argument("--eps", type=_eps, required=True)
    sub.add_parser("sweep", parents=[common], help="remainder sweep and exponent fit")
    sub.add_parser("average", parents=[common], help="Haar-averaged remainder sweep")
    sub.add_parser("spectral", parents=[common], help="eigenvalue counts against the adiabatic prediction")
    o = sub.add_parser("oracle", parents=[common], help="brute-force count at one epsilon")
    o.add_argument("--eps", type=_eps, required=True)
    return p


def _write(files: dict, out):
    if out is None:
        for text in files.values():
            sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "decompose":
            text = decomposition_report(decompose(cfg.subspace))
            _write({"decomposition.txt": text}, None)
            if args.out:
                from pathlib import Path

                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "decomposition.txt").write_text(text)
            return EXIT_OK
        if args.command == "count":
            mode = args.mode or cfg.mode
            seed = cfg.seed if args.seed is None else args.seed
            rec = remainder(decompose(cfg.subspace), _run_domain(cfg, mode), args.eps, mode, seed)
            sys.stdout.write(json.dumps(_count_record(rec, args.timing), indent=2, sort_keys=True) + "\n")
            return EXIT_TAINTED if rec.guard_band_hits else EXIT_OK
        if args.command == "oracle":
            sys.stdout.write(f"{naive_oracle_count(cfg, args.eps, args.mode)}\n")
            return EXIT_OK
        runner = {"sweep": run_sweep, "average": run_average_sweep, "spectral": run_spectral}[args.command]
        report = runner(cfg, mode=args.mode, seed=args.seed, jobs=args.jobs, timing=args.timing)
        out = args.out or cfg.out
        files = emit_report(report, args.format, out)
        _write(files, out)
        return EXIT_TAINTED if report.tainted else EXIT_OK
    except Exception as exc:  # every failure maps to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
