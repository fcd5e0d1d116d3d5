"""Command line entry point: ``risparking {build-matrix,run,sweep,report}``."""
from __future__ import annotations

import argparse
import re
import sys
import time
from pathlib import Path

from .channel import save_matrix
from .harness import (FAST_TRIALS, ConfigError, ExperimentConfig, ExperimentResult, build_matrix,
                      format_report, load_config, read_results, run_sweep, write_results)

FIGURES = {
    "3": {"ris_count": [2], "vehicle_count": list(range(1, 41))},
    "4": {"ris_count": [1, 2, 4], "snr_db": [30.0], "vehicle_count": list(range(1, 41))},
}


def int_list(text: str) -> list[int]:
    """Parse ``"1,5,10-12"`` into ``[1, 5, 10, 11, 12]``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            out.extend(range(int(m[1]), int(m[2]) + 1))
        else:
            out.append(int(part))
    return out


def float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",")]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file (empty or omitted gives the default setup)")
    p.add_argument("--seed", type=int, help="master seed")


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--snr", type=float_list, help="comma-separated SNRs in dB ('inf' allowed)")
    p.add_argument("--vehicles", type=int_list, help="vehicle counts, e.g. 1-40 or 5,10")
    p.add_argument("--ris-count", type=int_list, help="RIS counts, e.g. 1,2,4")
    p.add_argument("--fast", action="store_true", help=f"use {FAST_TRIALS} trials per point")
    p.add_argument("--threads", type=int, help="worker threads (default: CPU count, capped by RIS_SIM_THREADS)")
    p.add_argument("--out", type=Path, help="output directory (sweep default: ./results)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risparking", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-matrix", help="compute and cache a sensing matrix")
    _add_common(p)
    p.add_argument("--ris-count", dest="matrix_ris", type=int, default=2)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("run", help="evaluate a single sweep point")
    _add_common(p)
    _add_sweep_flags(p)

    p = sub.add_parser("sweep", help="run a full sweep and write CSV results")
    _add_common(p)
    _add_sweep_flags(p)
    p.add_argument("--figure", choices=sorted(FIGURES),
                   help="preset: 3 = SNR sweep with 2 RIS, 4 = RIS-count sweep at 30 dB")

    p = sub.add_parser("report", help="print a results CSV as a table")
    p.add_argument("csv", type=Path)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.master_seed = args.seed
    sw = cfg.sweep
    for key, value in FIGURES.get(getattr(args, "figure", None), {}).items():
        setattr(sw, key, list(value))
    if getattr(args, "fast", False):
        sw.trials = FAST_TRIALS
    for attr, key in (("trials", "trials"), ("snr", "snr_db"), ("vehicles", "vehicle_count"),
                      ("ris_count", "ris_count")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(sw, key, value)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "report":
            print(format_report(read_results(args.csv)))
            return 0
        cfg = _config(args)
        if args.command == "build-matrix":
            A = build_matrix(cfg, args.matrix_ris)
            args.out.mkdir(parents=True, exist_ok=True)
            path = args.out / f"sensing_matrix_ris{args.matrix_ris}.rism"
            save_matrix(A.entries, path)
            print(f"wrote {A.N_A}x{A.Q} matrix to {path}")
            return 0
        if args.command == "run":
            # a single point: the last value of each axis
            sw = cfg.sweep
            sw.snr_db, sw.vehicle_count, sw.ris_count = (
                sw.snr_db[-1:], sw.vehicle_count[-1:], sw.ris_count[-1:])
        elif args.out is None:
            args.out = Path("results")
        start = time.perf_counter()
        result = run_sweep(cfg, workers=args.threads)
        elapsed = time.perf_counter() - start
        print(format_report(result.rows))
        if args.out is not None:
            paths = write_results(result, args.out, cfg, wall_time=elapsed)
            print(f"wrote {paths['results']} ({elapsed:.1f} s)")
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
