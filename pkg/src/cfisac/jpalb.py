"""Joint power allocation and AP load balancing (JPALB), the no-load-balancing
baseline, feasible-point initialization and the exhaustive small-K oracle."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import NetworkConfig, lin2db
from .conic import (
    OPTIMAL,
    AllocationState,
    ConicProblem,
    assemble_subproblem,
    power_socs,
    rate_socs,
    solve,
)
from .metrics import (
    CommStatistics,
    PowerBreakdown,
    SensingForms,
    comm_sinr,
    fronthaul_coefficient,
    gamma_threshold,
    sensing_sinr,
    total_power,
    urllc_rate,
)

log = logging.getLogger(__name__)

CONVERGED = "converged"
ITERATION_LIMIT = "iteration_limit"
INFEASIBLE = "infeasible"

# relaxed activities at or below this are treated as exactly off
ALPHA_ZERO = 1e-6


class InfeasibleError(RuntimeError):
    pass


@dataclass
class SolveReport:
    status: str
    iterations: int
    objective_trace: list[float]
    final_state: AllocationState | None
    active_aps: list[int]
    power: PowerBreakdown | None
    achieved_rates: np.ndarray | None
    achieved_sensing_sinr: float
    constraint_slacks: dict = field(default_factory=dict)
    relaxed_alpha: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE and self.final_state is not None


def _infeasible(reason: str, trace=None) -> SolveReport:
    return SolveReport(
        status=INFEASIBLE,
        iterations=0,
        objective_trace=list(trace or []),
        final_state=None,
        active_aps=[],
        power=None,
        achieved_rates=None,
        achieved_sensing_sinr=0.0,
        constraint_slacks={"reason": reason},
    )


def dc_objective(state: AllocationState, stats: CommStatistics, cfg: NetworkConfig, penalty_weight: float = 0.0) -> float:
    """Optimizer objective: transmit + per-AP (static + R_min fronthaul) + binary penalty."""
    U = stats.U
    per_ap = cfg.P0 + fronthaul_coefficient(cfg, np.full(U, cfg.R_min))
    rho = np.asarray(state.rho)
    a = np.asarray(state.alpha)
    f = cfg.eta_pa * float(np.sum(rho**2 * stats.G.reshape(-1) ** 2)) + per_ap * float(np.sum(a))
    return f + penalty_weight * float(np.sum(a - a**2))


def initialize_feasible(stats: CommStatistics, forms: SensingForms, cfg: NetworkConfig, alpha=None) -> AllocationState:
    """Feasible starting point for the CCP.

    Minimizes sum(rho^2) under the rate and per-AP power cones with the given
    activity pattern (all ones by default), then scales rho up by the smallest
    c >= 1 that meets the sensing threshold. Raises InfeasibleError otherwise.
    """
    U, K = stats.b.shape
    KU = K * U
    alpha = np.ones(K) if alpha is None else np.asarray(alpha, dtype=float)
    n = KU + K
    Q = np.zeros((n, n))
    Q[np.arange(KU), np.arange(KU)] = 1.0
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    lo[KU:] = alpha
    hi[KU:] = alpha
    off = alpha <= 0.0
    for k in np.flatnonzero(off):
        hi[k * U : (k + 1) * U] = 0.0
    socs = rate_socs(stats, cfg, gamma_threshold(cfg), n)
    socs += [s for k, s in enumerate(power_socs(stats, cfg, n, KU)) if not off[k]]
    p = ConicProblem(n=n, Q=Q, q=np.zeros(n), socs=socs, lo=lo, hi=hi)
    sol = solve(p)
    if sol.status != OPTIMAL:
        raise InfeasibleError(f"rate constraints cannot be met ({sol.status})")
    rho = sol.x[:KU].copy()

    state = AllocationState(rho, alpha.copy())
    sig = cfg.sigma_rcs2 * float(rho @ forms.A @ rho)
    clut = float(rho @ forms.B @ rho)
    margin = sig - cfg.gamma_sen * clut
    if margin <= 0.0:
        raise InfeasibleError("clutter dominates the target return for every scaling")
    c2 = max(1.0, cfg.gamma_sen * forms.noise_floor / margin)
    per_ap = np.sum((rho.reshape(K, U) * stats.G) ** 2, axis=1)
    if c2 * per_ap.max() > cfg.P_max * (1.0 + 1e-9):
        raise InfeasibleError("sensing threshold needs more than the per-AP power budget")
    if c2 > 1.0:
        # scale a hair past the root so the linearization point is strictly feasible
        state.rho = rho * math.sqrt(c2 * (1.0 + 1e-9))
    return state


def _ccp(stats, forms, cfg, init: AllocationState, alpha_fixed=None, penalty_weight: float = 1.0):
    """Run the convex-concave iterations from ``init``; returns (state, trace, status, iters)."""
    weight = 0.0 if alpha_fixed is not None else penalty_weight
    state = init
    f_prev = dc_objective(state, stats, cfg, weight)
    trace = [f_prev]
    status = ITERATION_LIMIT
    iters = 0
    for c in range(1, cfg.c_max + 1):
        p = assemble_subproblem(stats, forms, state, cfg, alpha_fixed=alpha_fixed, penalty_weight=penalty_weight)
        sol = solve(p)
        if sol.status != OPTIMAL:
            log.debug("subproblem %d returned %s; keeping previous iterate", c, sol.status)
            break
        KU = stats.K * stats.U
        # the previous iterate is feasible for this subproblem; an inexact solve
        # that does worse than it is discarded and the iterations stop there
        x_prev = np.concatenate([state.rho, state.alpha])
        if p.objective(sol.x) > p.objective(x_prev):
            status = CONVERGED
            break
        state = AllocationState(sol.x[:KU].copy(), sol.x[KU:].copy())
        iters = c
        f = dc_objective(state, stats, cfg, weight)
        trace.append(f)
        if abs(f - f_prev) <= cfg.eta_stop:
            status = CONVERGED
            break
        f_prev = f
    return state, trace, status, iters


def _finalize(state, stats, forms, cfg, status, iters, trace, relaxed=None) -> SolveReport:
    K, U = stats.K, stats.U
    gam = comm_sinr(state.rho, state.alpha, stats, cfg.noise_power)
    rates = np.asarray(urllc_rate(gam, cfg), dtype=float).reshape(U)
    sens = sensing_sinr(state.rho, state.alpha, forms, cfg)
    power = total_power(state.rho, state.alpha, rates, cfg, stats)
    per_ap = np.sum((state.rho.reshape(K, U) * stats.G) ** 2, axis=1) * state.alpha
    slacks = {
        "rate": (rates - cfg.R_min).tolist(),
        "sensing_db": lin2db(sens) - lin2db(cfg.gamma_sen),
        "power": (cfg.P_max - per_ap).tolist(),
    }
    return SolveReport(
        status=status,
        iterations=iters,
        objective_trace=trace,
        final_state=state,
        active_aps=[int(k) for k in np.flatnonzero(state.alpha > 0.5)],
        power=power,
        achieved_rates=rates,
        achieved_sensing_sinr=sens,
        constraint_slacks=slacks,
        relaxed_alpha=relaxed,
    )


def run_fixed_alpha(stats: CommStatistics, forms: SensingForms, cfg: NetworkConfig, alpha) -> SolveReport:
    """Power-allocation-only CCP with a fixed binary activity pattern."""
    alpha = np.asarray(alpha, dtype=float)
    try:
        init = initialize_feasible(stats, forms, cfg, alpha)
    except InfeasibleError as exc:
        return _infeasible(str(exc))
    state, trace, status, iters = _ccp(stats, forms, cfg, init, alpha_fixed=alpha)
    return _finalize(state, stats, forms, cfg, status, iters, trace)


def run_nlb(stats: CommStatistics, forms: SensingForms, cfg: NetworkConfig) -> SolveReport:
    """No-load-balancing baseline: every comm AP stays on."""
    return run_fixed_alpha(stats, forms, cfg, np.ones(stats.K))


def round_activity(alpha, threshold: float) -> np.ndarray:
    return (np.asarray(alpha) > threshold).astype(float)


def candidate_patterns(alpha) -> list[np.ndarray]:
    """Nested binary patterns from threshold rounding of the relaxed activities.

    APs are ranked by relaxed activity (ties by index); the n-th pattern keeps
    the n highest-ranked APs, for n = 1 .. number of APs above ALPHA_ZERO.
    """
    alpha = np.asarray(alpha, dtype=float)
    order = sorted(range(len(alpha)), key=lambda k: (-alpha[k], k))
    n_pos = max(1, int(np.sum(alpha > ALPHA_ZERO)))
    out = []
    for n in range(1, n_pos + 1):
        pat = np.zeros(len(alpha))
        pat[order[:n]] = 1.0
        out.append(pat)
    return out


def run_jpalb(
    stats: CommStatistics,
    forms: SensingForms,
    cfg: NetworkConfig,
    penalty_weight: float = 1.0,
) -> SolveReport:
    """JPALB: penalized convex-concave iterations over (rho, alpha), then binary rounding.

    The relaxed activities settle near each AP's used share of its amplitude
    budget, so they rank APs rather than land on {0, 1}. Threshold rounding at
    every level of that ranking gives nested candidate patterns; each is
    certified by a power-allocation-only re-solve and the cheapest is kept.
    A candidate whose static plus minimum fronthaul floor already exceeds the
    best certified total cannot win and ends the scan.
    """
    try:
        init = initialize_feasible(stats, forms, cfg)
    except InfeasibleError as exc:
        return _infeasible(str(exc))
    state, trace, status, iters = _ccp(stats, forms, cfg, init, penalty_weight=penalty_weight)

    per_ap_floor = cfg.P0 + fronthaul_coefficient(cfg, np.full(stats.U, cfg.R_min))
    best = None
    tried = 0
    for pattern in candidate_patterns(state.alpha):
        if best is not None and pattern.sum() * per_ap_floor > best.power.total:
            break
        rep = run_fixed_alpha(stats, forms, cfg, pattern)
        tried += 1
        if rep.feasible and (best is None or rep.power.total < best.power.total - 1e-9):
            best = rep
    if best is None:
        # the relaxed support was not enough; every AP on is the last resort
        best = run_fixed_alpha(stats, forms, cfg, np.ones(stats.K))
        tried += 1
        if not best.feasible:
            return _infeasible("no binary pattern could be certified", trace)

    report = _finalize(best.final_state, stats, forms, cfg, status, iters + best.iterations, trace, state.alpha.copy())
    report.constraint_slacks["binary_gap"] = float(np.max(np.minimum(state.alpha, 1.0 - state.alpha)))
    report.constraint_slacks["final_resolve_status"] = best.status
    report.constraint_slacks["patterns_tried"] = tried
    return report


def enumerate_oracle(stats: CommStatistics, forms: SensingForms, cfg: NetworkConfig, max_k: int = 10) -> SolveReport:
    """Exhaustive search over all 2^K activity patterns with power allocation per pattern."""
    K = stats.K
    if K > max_k:
        raise ValueError(f"enumeration limited to K <= {max_k}")
    best = None
    best_key = None
    for bits in itertools.product((0, 1), repeat=K):
        # all APs off cannot serve any UE (U >= 1 is enforced by the config)
        if not any(bits):
            continue
        pattern = np.array(bits, dtype=float)
        rep = run_fixed_alpha(stats, forms, cfg, pattern)
        if not rep.feasible:
            continue
        active = tuple(int(k) for k in np.flatnonzero(pattern))
        key = (round(rep.power.total, 9), len(active), active)
        if best is None or key < best_key:
            best, best_key = rep, key
    if best is None:
        return _infeasible("every activity pattern is infeasible")
    return best


def certify(report: SolveReport, stats: CommStatistics, forms: SensingForms, cfg: NetworkConfig) -> dict:
    """Re-evaluate a report's operating point under independently drawn statistics."""
    st = report.final_state
    gam = comm_sinr(st.rho, st.alpha, stats, cfg.noise_power)
    rates = np.atleast_1d(urllc_rate(gam, cfg))
    sens = sensing_sinr(st.rho, st.alpha, forms, cfg)
    return {
        "rates": rates,
        "min_rate": float(rates.min()),
        "sensing_sinr": sens,
        "rates_ok": bool(np.all(rates >= cfg.R_min - 0.05)),
        "sensing_ok": bool(lin2db(sens) >= lin2db(cfg.gamma_sen) - 0.1),
    }
