"""Command-line entry point.

Exit codes: 0 success, 2 when a requested method produced no feasible setup
in the whole batch, 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import PRESETS, load_config
from .harness import METHODS, default_workers, records_all_infeasible, run_experiment

log = logging.getLogger("cfisac")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _methods(text: str) -> list[str]:
    out = [m.strip().upper() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"methods must be from {','.join(m.lower() for m in METHODS)}")
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with NetworkConfig overrides")
    p.add_argument("--preset", choices=sorted(PRESETS), default="figure-defaults")
    p.add_argument("--setups", type=int, default=None, help="number of random setups")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes (0 = all cores)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfisac", description="Cell-free ISAC/URLLC power minimization experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte-Carlo comparison of JPALB and the baselines")
    _common(run)
    run.add_argument("--methods", type=_methods, default=["JPALB", "NLB"])
    run.add_argument("--sweep-gamma-db", type=_floats, default=None, help="sensing thresholds in dB, e.g. 0,2,4,6")

    orc = sub.add_parser("oracle", help="JPALB against exhaustive enumeration on small networks")
    _common(orc)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for infeasible batches here
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, preset=args.preset)
        if args.seed is not None:
            cfg = cfg.replace(master_seed=args.seed)
        workers = default_workers() if args.workers == 0 else args.workers
        if args.command == "run":
            n = 100 if args.setups is None else args.setups
            methods, sweep = args.methods, args.sweep_gamma_db
        else:
            if cfg.K > 10:
                raise ValueError(f"oracle enumeration needs K <= 10 (got K={cfg.K}); set K in --config")
            n = 25 if args.setups is None else args.setups
            methods, sweep = ["JPALB", "NLB", "ORACLE"], None
        if n < 0:
            raise ValueError("--setups must be non-negative")
        records, summary = run_experiment(cfg, n, methods, sweep, workers, out_dir=args.out)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 1

    brief = {m: {k: e[k] for k in ("feasible", "infeasible_count", "mean_total_w", "ap_off_fraction")}
             for m, e in summary["methods"].items()}
    print(json.dumps(brief, indent=2))
    return 2 if records_all_infeasible(records) else 0


if __name__ == "__main__":
    sys.exit(main())
