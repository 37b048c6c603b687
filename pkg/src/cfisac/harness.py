"""Monte-Carlo experiments over random setups, summaries and result files."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import svg
from .config import NetworkConfig, db2lin, lin2db
from .jpalb import INFEASIBLE, SolveReport, certify, enumerate_oracle, run_jpalb, run_nlb
from .metrics import CommStatistics, SensingForms, sensing_matrices, statistics_from_draws
from .propagation import clutter_correlations, draw_channels, draw_symbols, precoders
from .scenario import Scenario, draw_ap_layout, generate_scenario, setup_seed, stream

log = logging.getLogger(__name__)

METHODS = ("JPALB", "NLB", "ORACLE")
_RUNNERS = {"JPALB": run_jpalb, "NLB": run_nlb, "ORACLE": enumerate_oracle}


@dataclass
class SetupInputs:
    seed: int
    scenario: Scenario
    stats: CommStatistics
    forms: SensingForms


@dataclass
class SetupRecord:
    setup_index: int
    seed: int
    method: str
    precoder: str
    gamma_sen_db: float
    status: str
    total_w: float | None = None
    transmit_w: float | None = None
    static_w: float | None = None
    fronthaul_w: float | None = None
    active_ap_count: int | None = None
    iterations: int = 0
    wall_time_seconds: float = 0.0
    achieved_min_rate: float | None = None
    achieved_sensing_sinr: float | None = None
    certified: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SetupRecord":
        return cls(**d)

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE and self.total_w is not None


def _statistics(scn: Scenario, cfg: NetworkConfig, rng: np.random.Generator, symbol_rng: np.random.Generator):
    h = draw_channels(scn, cfg, rng, n_draws=cfg.N_ch)
    w = precoders(h, cfg)
    stats = statistics_from_draws(h, w)
    symbols = draw_symbols(cfg.U, cfg.tau_d, symbol_rng) if cfg.symbol_mode == "realization" else None
    forms = sensing_matrices(scn, w, symbols, cfg, clutter_correlations(scn, cfg))
    return stats, forms


def prepare_setup(cfg: NetworkConfig, seed: int, ap_positions=None) -> SetupInputs:
    """Scenario, communication statistics and sensing forms for one setup seed."""
    scn = generate_scenario(cfg, seed, ap_positions=ap_positions)
    stats, forms = _statistics(scn, cfg, stream(seed, "channels"), stream(seed, "symbols"))
    return SetupInputs(seed, scn, stats, forms)


def verification_inputs(cfg: NetworkConfig, inputs: SetupInputs) -> tuple[CommStatistics, SensingForms]:
    """Independently re-estimated statistics for the same geometry (fresh sub-stream)."""
    rng = stream(inputs.seed, "verify")
    return _statistics(inputs.scenario, cfg, rng, rng)


def _record(idx, seed, method, cfg, rep: SolveReport, wall, cert) -> SetupRecord:
    rec = SetupRecord(
        setup_index=idx,
        seed=seed,
        method=method,
        precoder=cfg.precoder,
        gamma_sen_db=round(lin2db(cfg.gamma_sen), 9),
        status=rep.status,
        iterations=rep.iterations,
        wall_time_seconds=wall,
    )
    if rep.feasible:
        rec.total_w = rep.power.total
        rec.transmit_w = rep.power.transmit
        rec.static_w = rep.power.static
        rec.fronthaul_w = rep.power.fronthaul_traffic
        rec.active_ap_count = len(rep.active_aps)
        rec.achieved_min_rate = cert["min_rate"]
        rec.achieved_sensing_sinr = cert["sensing_sinr"]
        rec.certified = cert["rates_ok"] and cert["sensing_ok"]
    return rec


def run_setup(cfg: NetworkConfig, setup_index: int, methods, gammas_db, ap_positions=None) -> list[SetupRecord]:
    """All methods and threshold values for one setup; failures become status rows."""
    seed = setup_seed(cfg.master_seed, setup_index)
    try:
        inputs = prepare_setup(cfg, seed, ap_positions)
        v_stats, v_forms = verification_inputs(cfg, inputs)
    except Exception as exc:  # one bad draw must not abort the batch
        log.warning("setup %d: preparation failed: %s", setup_index, exc)
        return [
            SetupRecord(setup_index, seed, m, cfg.precoder, g, f"error: {exc}") for g in gammas_db for m in methods
        ]
    out = []
    for g_db in gammas_db:
        c = cfg.replace(gamma_sen=db2lin(g_db))
        for m in methods:
            t0 = time.perf_counter()
            try:
                rep = _RUNNERS[m](inputs.stats, inputs.forms, c)
            except Exception as exc:
                log.warning("setup %d %s: %s", setup_index, m, exc)
                out.append(SetupRecord(setup_index, seed, m, c.precoder, round(g_db, 9), f"error: {exc}"))
                continue
            wall = time.perf_counter() - t0
            cert = certify(rep, v_stats, v_forms, c) if rep.feasible else None
            out.append(_record(setup_index, seed, m, c, rep, wall, cert))
    return out


def _run_setup_args(args):
    return run_setup(*args)


def run_records(
    cfg: NetworkConfig,
    n_setups: int,
    methods=("JPALB", "NLB"),
    sweep_db=None,
    workers: int = 1,
) -> list[SetupRecord]:
    methods = tuple(m.upper() for m in methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    base_db = round(lin2db(cfg.gamma_sen), 9)
    gammas = [base_db]
    for g in sweep_db or ():
        if all(abs(g - x) > 1e-9 for x in gammas):
            gammas.append(float(g))
    ap_positions = None if cfg.redraw_aps else draw_ap_layout(cfg, cfg.master_seed)
    jobs = [(cfg, i, methods, gammas, ap_positions) for i in range(n_setups)]
    if workers > 1 and n_setups > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_setup_args, jobs))
    else:
        chunks = [_run_setup_args(j) for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    gamma_order = {g: n for n, g in enumerate(gammas)}
    method_order = {m: n for n, m in enumerate(methods)}
    records.sort(key=lambda r: (r.setup_index, gamma_order.get(r.gamma_sen_db, 0), method_order[r.method]))
    return records


# ---------------------------------------------------------------------------
# summaries


def empirical_cdf(values) -> list[tuple[float, float]]:
    """Step-function CDF: probability i/n at the i-th order statistic, ties collapsed."""
    v = np.sort(np.asarray(list(values), dtype=float))
    if v.size == 0:
        raise ValueError("empirical_cdf of an empty list")
    n = v.size
    out = []
    for i, x in enumerate(v, start=1):
        if out and out[-1][0] == x:
            out[-1] = (float(x), i / n)
        else:
            out.append((float(x), i / n))
    return out


def _mean(xs):
    return float(np.mean(xs)) if len(xs) else None


def summarize(records: list[SetupRecord], cfg: NetworkConfig, sweep_db=None) -> dict:
    """Figure-facing numbers, computed from the records alone."""
    base_db = round(lin2db(cfg.gamma_sen), 9)
    methods = sorted({r.method for r in records}, key=lambda m: METHODS.index(m) if m in METHODS else 99)
    main = [r for r in records if r.gamma_sen_db == base_db]
    summary: dict = {
        "n_setups": len({r.setup_index for r in records}),
        "K": cfg.K,
        "precoder": cfg.precoder,
        "gamma_sen_db": base_db,
        "methods": {},
        "sweep": {},
    }
    for m in methods:
        rs = [r for r in main if r.method == m]
        ok = [r for r in rs if r.feasible]
        totals = [r.total_w for r in ok]
        entry = {
            "n": len(rs),
            "feasible": len(ok),
            "infeasible_count": len(rs) - len(ok),
            "mean_total_w": _mean(totals),
            "median_total_w": float(np.median(totals)) if totals else None,
            "mean_transmit_w": _mean([r.transmit_w for r in ok]),
            "mean_static_w": _mean([r.static_w for r in ok]),
            "mean_fronthaul_w": _mean([r.fronthaul_w for r in ok]),
            "mean_active_aps": _mean([r.active_ap_count for r in ok]),
            "ap_off_fraction": _mean([(cfg.K - r.active_ap_count) / cfg.K for r in ok]),
            "certified_fraction": _mean([float(r.certified) for r in ok]),
            "cdf": empirical_cdf(totals) if totals else [],
        }
        summary["methods"][m] = entry
    jp, nl = summary["methods"].get("JPALB"), summary["methods"].get("NLB")
    if jp and nl and jp["mean_total_w"] and nl["mean_total_w"]:
        summary["jpalb_over_nlb"] = jp["mean_total_w"] / nl["mean_total_w"]

    gammas = sorted({r.gamma_sen_db for r in records})
    if sweep_db and len(gammas) > 1:
        for m in methods:
            rs = [r for r in records if r.method == m]
            # paired means: only setups feasible at every threshold
            good = {
                i
                for i in {r.setup_index for r in rs}
                if all(r.feasible for r in rs if r.setup_index == i)
                and len([r for r in rs if r.setup_index == i]) == len(gammas)
            }
            summary["sweep"][m] = {
                str(g): _mean([r.total_w for r in rs if r.gamma_sen_db == g and r.setup_index in good]) for g in gammas
            }
            summary["sweep"][m]["paired_setups"] = len(good)
    return summary


def run_experiment(
    cfg: NetworkConfig,
    n_setups: int,
    methods=("JPALB", "NLB"),
    sweep_db=None,
    workers: int = 1,
    out_dir=None,
):
    """Run a batch and (optionally) write every output file; returns (records, summary)."""
    records = run_records(cfg, n_setups, methods, sweep_db, workers)
    summary = summarize(records, cfg, sweep_db)
    if out_dir is not None:
        emit_outputs(records, summary, out_dir)
    return records, summary


# ---------------------------------------------------------------------------
# files


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def read_records(path) -> list[SetupRecord]:
    with open(path) as fh:
        return [SetupRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def emit_outputs(records: list[SetupRecord], summary: dict, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {
        name: out / name
        for name in (
            "records.jsonl",
            "summary.json",
            "cdf.csv",
            "breakdown.csv",
            "sweep.csv",
            "fig_cdf.svg",
            "fig_breakdown.svg",
            "fig_sweep.svg",
        )
    }
    summary = dict(summary)
    if not records:
        summary["n"] = 0
    try:
        with open(paths["records.jsonl"], "w") as fh:
            for r in records:
                fh.write(json.dumps(r.to_dict(), default=_json_default) + "\n")
        with open(paths["summary.json"], "w") as fh:
            json.dump(summary, fh, indent=2, default=_json_default)

        methods = summary.get("methods", {})
        with open(paths["cdf.csv"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "power_w", "cdf"])
            for m, e in methods.items():
                for v, p in e["cdf"]:
                    w.writerow([m, repr(v), repr(p)])
        with open(paths["breakdown.csv"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "transmit_w", "static_w", "fronthaul_w"])
            for m, e in methods.items():
                if e["feasible"]:
                    w.writerow([m, e["mean_transmit_w"], e["mean_static_w"], e["mean_fronthaul_w"]])
        with open(paths["sweep.csv"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma_db", "method", "mean_power_w"])
            for m, e in summary.get("sweep", {}).items():
                for g, v in e.items():
                    if g != "paired_setups" and v is not None:
                        w.writerow([g, m, v])

        svg.write(paths["fig_cdf.svg"], svg.step_chart(
            {m: e["cdf"] for m, e in methods.items()}, "Total power [W]", "CDF", "CDF of total power"))
        svg.write(paths["fig_breakdown.svg"], svg.stacked_bars(
            {m: {"transmit": e["mean_transmit_w"] or 0.0, "static": e["mean_static_w"] or 0.0,
                 "fronthaul": e["mean_fronthaul_w"] or 0.0} for m, e in methods.items()},
            "Power [W]", "Power by component"))
        sweep = {
            m: [(float(g), v) for g, v in e.items() if g != "paired_setups" and v is not None]
            for m, e in summary.get("sweep", {}).items()
        }
        svg.write(paths["fig_sweep.svg"], svg.line_chart(
            sweep, "Sensing SINR threshold [dB]", "Mean total power [W]", "Power vs sensing threshold"))
    except OSError as exc:
        raise OSError(f"writing results to {out}: {exc}") from exc
    return paths


def records_all_infeasible(records: list[SetupRecord]) -> bool:
    """True if some method produced no usable result on any setup."""
    by_method: dict[str, list[SetupRecord]] = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r)
    return any(not any(r.feasible for r in rs) for rs in by_method.values()) if records else False


def default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


def is_finite(x) -> bool:
    return x is not None and math.isfinite(x)
