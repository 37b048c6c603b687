"""Conic subproblems of the convex-concave procedure and their solution.

A :class:`ConicProblem` is a plain standard-form container

    minimize    x^T Q x + q^T x + const
    subject to  A_le x <= b_le,  A_eq x = b_eq,
                ||F_j x + g_j|| <= c_j^T x + d_j   for every SOC j,
                lo <= x <= hi,

solved by the Clarabel interior-point solver. Residuals are recomputed on
the original (unscaled) rows so callers never rely on solver-internal
tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.sparse as sp

from .config import NetworkConfig
from .metrics import CommStatistics, SensingForms, fronthaul_coefficient, gamma_threshold

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"
ITERATION_LIMIT = "iteration_limit"

RESIDUAL_TOL = 1e-7
BOUND_TOL = 1e-8
PSD_TOL = 1e-10


@dataclass
class SOC:
    F: np.ndarray
    g: np.ndarray
    c: np.ndarray
    d: float
    name: str = ""

    def residual(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.F @ x + self.g) - (self.c @ x + self.d))


@dataclass
class ConicProblem:
    n: int
    Q: np.ndarray
    q: np.ndarray
    const: float = 0.0
    A_le: np.ndarray = None
    b_le: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    socs: list[SOC] = field(default_factory=list)
    lo: np.ndarray = None
    hi: np.ndarray = None
    le_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = self.n
        if self.A_le is None:
            self.A_le, self.b_le = np.zeros((0, n)), np.zeros(0)
        if self.A_eq is None:
            self.A_eq, self.b_eq = np.zeros((0, n)), np.zeros(0)
        if self.lo is None:
            self.lo = np.full(n, -np.inf)
        if self.hi is None:
            self.hi = np.full(n, np.inf)
        self.Q = np.asarray(self.Q, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.Q.shape != (n, n) or self.q.shape != (n,):
            raise ValueError("objective dimensions do not match n")
        if n and np.any(self.Q) and np.min(np.linalg.eigvalsh(0.5 * (self.Q + self.Q.T))) < -PSD_TOL * np.abs(self.Q).max():
            raise ValueError("objective matrix is not PSD")
        if np.any(self.lo > self.hi):
            raise ValueError("bounds with lo > hi")
        for s in self.socs:
            if s.F.shape[1] != n or s.c.shape != (n,) or s.g.shape != (s.F.shape[0],):
                raise ValueError(f"inconsistent SOC dimensions in {s.name!r}")

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x + self.q @ x + self.const)

    def max_residual(self, x) -> float:
        """Largest primal violation over every row, cone and bound (0 if feasible)."""
        x = np.asarray(x, dtype=float)
        viol = [0.0]
        if len(self.b_le):
            viol.append(float(np.max(self.A_le @ x - self.b_le)))
        if len(self.b_eq):
            viol.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        viol.extend(s.residual(x) for s in self.socs)
        viol.append(float(np.max(self.lo - x)))
        viol.append(float(np.max(x - self.hi)))
        return max(0.0, max(viol))


@dataclass
class ConicSolution:
    status: str
    x: np.ndarray
    objective_value: float
    max_primal_residual: float
    iterations: int = 0
    solve_time: float = 0.0


def _settings(tol: float, max_iter: int):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_gap_abs = tol
    s.tol_gap_rel = tol
    s.tol_feas = tol * 1e-2
    s.max_iter = max_iter
    return s


def solve(p: ConicProblem, tol: float = 1e-8, max_iter: int = 200) -> ConicSolution:
    """Solve ``p``; the status is ``optimal`` only if the recomputed residual is below 1e-7.

    A run that stalls short of ``tol`` is retried once at the 1e-7 contract tolerance.
    """
    sol = _solve_once(p, tol, max_iter)
    if sol.status in (NUMERICAL_FAILURE, ITERATION_LIMIT) and tol < RESIDUAL_TOL:
        retry = _solve_once(p, RESIDUAL_TOL, max_iter)
        if retry.status == OPTIMAL or sol.status == NUMERICAL_FAILURE:
            return retry
    return sol


def _solve_once(p: ConicProblem, tol: float, max_iter: int) -> ConicSolution:
    n = p.n
    rows, rhs, cones = [], [], []
    eye = sp.identity(n, format="csr")
    # variables with lo == hi become equality rows (a nonnegative cone pinned at 0 has no interior)
    pinned = np.isfinite(p.lo) & (p.lo == p.hi)
    pin_idx = np.flatnonzero(pinned)
    eq = []
    eq_rhs = []
    if p.A_eq.shape[0]:
        eq.append(sp.csr_matrix(p.A_eq))
        eq_rhs.append(p.b_eq)
    if len(pin_idx):
        eq.append(eye[pin_idx])
        eq_rhs.append(p.lo[pin_idx])
    if eq:
        block = sp.vstack(eq)
        rows.append(block)
        rhs.append(np.concatenate(eq_rhs))
        cones.append(clarabel.ZeroConeT(block.shape[0]))
    lin = [sp.csr_matrix(p.A_le)] if p.A_le.shape[0] else []
    lin_rhs = [p.b_le] if p.A_le.shape[0] else []
    lo_idx = np.flatnonzero(np.isfinite(p.lo) & ~pinned)
    hi_idx = np.flatnonzero(np.isfinite(p.hi) & ~pinned)
    if len(lo_idx):
        lin.append(-eye[lo_idx])
        lin_rhs.append(-p.lo[lo_idx])
    if len(hi_idx):
        lin.append(eye[hi_idx])
        lin_rhs.append(p.hi[hi_idx])
    if lin:
        block = sp.vstack(lin)
        rows.append(block)
        rhs.append(np.concatenate(lin_rhs))
        cones.append(clarabel.NonnegativeConeT(block.shape[0]))
    for s in p.socs:
        # s = [c^T x + d; F x + g] in SOC  <=>  A x + s = b with A = -[c^T; F], b = [d; g]
        rows.append(-sp.vstack([sp.csr_matrix(s.c[None, :]), sp.csr_matrix(s.F)]))
        rhs.append(np.concatenate([[s.d], s.g]))
        cones.append(clarabel.SecondOrderConeT(s.F.shape[0] + 1))

    A = sp.vstack(rows, format="csc") if rows else sp.csc_matrix((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    P = sp.triu(sp.csc_matrix(2.0 * p.Q), format="csc")
    solver = clarabel.DefaultSolver(P, p.q, A, b, cones, _settings(tol, max_iter))
    sol = solver.solve()
    status = str(sol.status)
    x = np.asarray(sol.x, dtype=float)
    if x.shape != (n,) or not np.all(np.isfinite(x)):
        x = np.zeros(n)
    iters = int(getattr(sol, "iterations", 0))
    t = float(getattr(sol, "solve_time", 0.0))

    if status.endswith("PrimalInfeasible") and not status.startswith("Almost"):
        return ConicSolution(INFEASIBLE, x, math.inf, p.max_residual(x), iters, t)
    if status.endswith("DualInfeasible") and not status.startswith("Almost"):
        return ConicSolution(UNBOUNDED, x, -math.inf, p.max_residual(x), iters, t)

    x = np.clip(x, p.lo, p.hi)
    resid = p.max_residual(x)
    obj = p.objective(x)
    if status in ("Solved", "AlmostSolved") and resid <= RESIDUAL_TOL:
        return ConicSolution(OPTIMAL, x, obj, resid, iters, t)
    if status in ("MaxIterations", "MaxTime"):
        return ConicSolution(ITERATION_LIMIT, x, obj, resid, iters, t)
    return ConicSolution(NUMERICAL_FAILURE, x, obj, resid, iters, t)


# ---------------------------------------------------------------------------
# CCP subproblem assembly


@dataclass
class AllocationState:
    rho: np.ndarray  # (K*U,) amplitudes sqrt(rho_{i,k}), AP-major
    alpha: np.ndarray  # (K,) activity in [0, 1]

    def copy(self) -> "AllocationState":
        return AllocationState(self.rho.copy(), self.alpha.copy())


def binary_penalty(alpha, alpha_prev) -> np.ndarray:
    """alpha minus the tangent of alpha^2 at alpha_prev (elementwise)."""
    alpha = np.asarray(alpha, dtype=float)
    a = np.asarray(alpha_prev, dtype=float)
    return alpha - (a**2 + 2.0 * a * (alpha - a))


def _check_psd(stats: CommStatistics, forms: SensingForms) -> None:
    def min_eig(S):
        S = np.asarray(S)
        vals = np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        return float(np.min(vals)) / scale

    if min_eig(stats.C_real) < -PSD_TOL or min_eig(forms.A_blocks) < -PSD_TOL or min_eig(forms.B_blocks) < -PSD_TOL:
        raise ValueError("statistics not PSD-projected")


def rate_socs(stats: CommStatistics, cfg: NetworkConfig, gamma_th: float, n: int) -> list[SOC]:
    """One SOC per UE: ||[C_{i,j}^{1/2} rho_j ..., sigma_n]|| <= b_i^T rho_i / sqrt(gamma_th).

    Rows are divided by sigma_n for conditioning.
    """
    U, K = stats.b.shape
    sig = math.sqrt(cfg.noise_power)
    out = []
    for i in range(U):
        F = np.zeros((U * K + 1, n))
        for j in range(U):
            cols = np.arange(K) * U + j
            F[j * K : (j + 1) * K, cols] = stats.sqrtC[i, j] / sig
        g = np.zeros(U * K + 1)
        g[-1] = 1.0
        c = np.zeros(n)
        c[np.arange(K) * U + i] = stats.b[i] / (sig * math.sqrt(gamma_th))
        out.append(SOC(F, g, c, 0.0, name=f"rate[{i}]"))
    return out


def power_socs(stats: CommStatistics, cfg: NetworkConfig, n: int, alpha_col0: int) -> list[SOC]:
    """||G_k rho_k'|| <= alpha_k sqrt(P_max), scaled by 1/sqrt(P_max)."""
    K, U = stats.G.shape
    sq = math.sqrt(cfg.P_max)
    out = []
    for k in range(K):
        F = np.zeros((U, n))
        F[np.arange(U), k * U + np.arange(U)] = stats.G[k] / sq
        c = np.zeros(n)
        c[alpha_col0 + k] = 1.0
        out.append(SOC(F, np.zeros(U), c, 0.0, name=f"power[{k}]"))
    return out


def sensing_soc(forms: SensingForms, cfg: NetworkConfig, rho_prev: np.ndarray, n: int) -> SOC:
    """Restriction of the sensing constraint around rho_prev, lifted to a rotated cone.

    Gamma rho^T B rho - 2 rho_prev^T A rho <= -Gamma nf - rho_prev^T A rho_prev,
    divided by s = rho_prev^T A rho_prev and written as x^T Q x <= t with
    t affine, i.e. ||[2 L^T x; t - 1]|| <= t + 1.
    """
    K, U, _ = forms.A_blocks.shape
    KU = K * U
    A = forms.A
    Arp = A @ rho_prev[:KU]
    s = float(rho_prev[:KU] @ Arp)
    if s <= 0.0:
        raise ValueError("linearization point has zero target return; sensing restriction infeasible")
    gam = cfg.gamma_sen
    rows = []
    for k in range(K):
        vals, vecs = np.linalg.eigh(gam * forms.B_blocks[k] / s)
        keep = vals > PSD_TOL * max(float(np.max(np.abs(vals))), 1e-300)
        for v, e in zip(vals[keep], vecs[:, keep].T):
            r = np.zeros(n)
            r[k * U : (k + 1) * U] = math.sqrt(v) * e
            rows.append(r)
    # t = l^T x + d0
    l = np.zeros(n)
    l[:KU] = 2.0 * Arp / s
    d0 = -gam * forms.noise_floor / s - 1.0
    F = np.vstack([2.0 * np.array(rows).reshape(-1, n), l[None, :]])
    g = np.zeros(F.shape[0])
    g[-1] = d0 - 1.0
    return SOC(F, g, l.copy(), d0 + 1.0, name="sensing")


def assemble_subproblem(
    stats: CommStatistics,
    forms: SensingForms,
    prev: AllocationState,
    cfg: NetworkConfig,
    alpha_fixed=None,
    binary_restriction: bool = False,
    penalty_weight: float = 1.0,
) -> ConicProblem:
    """Convex subproblem of one CCP iteration over x = [rho; alpha].

    With ``alpha_fixed`` the activities are pinned (bounds lo = hi) and the
    binary penalty is dropped. ``binary_restriction`` adds the linearized
    binary rows alpha_k (1 - 2 a_k) <= -a_k^2 as hard constraints.
    """
    _check_psd(stats, forms)
    U, K = stats.b.shape
    KU = K * U
    n = KU + K
    gamma_th = gamma_threshold(cfg)

    Q = np.zeros((n, n))
    Q[np.arange(KU), np.arange(KU)] = cfg.eta_pa * (stats.G.reshape(-1) ** 2)
    per_ap = cfg.P0 + fronthaul_coefficient(cfg, np.full(U, cfg.R_min))
    q = np.zeros(n)
    q[KU:] = per_ap
    const = 0.0
    a_prev = np.asarray(prev.alpha, dtype=float)

    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    hi[KU:] = 1.0
    off = np.zeros(K, dtype=bool)
    if alpha_fixed is not None:
        af = np.asarray(alpha_fixed, dtype=float)
        lo[KU:] = af
        hi[KU:] = af
        off = af <= 0.0
        for k in np.flatnonzero(off):
            hi[k * U : (k + 1) * U] = 0.0
    else:
        q[KU:] += penalty_weight * (1.0 - 2.0 * a_prev)
        const += penalty_weight * float(np.sum(a_prev**2))

    socs = rate_socs(stats, cfg, gamma_th, n)
    socs.append(sensing_soc(forms, cfg, np.asarray(prev.rho, dtype=float), n))
    socs.extend(soc for k, soc in enumerate(power_socs(stats, cfg, n, KU)) if not off[k])

    le_rows, le_rhs, names = [], [], []
    for i in range(U):
        r = np.zeros(n)
        r[np.arange(K) * U + i] = -stats.b[i]
        le_rows.append(r)
        le_rhs.append(0.0)
        names.append(f"desired_sign[{i}]")
    if binary_restriction and alpha_fixed is None:
        for k in range(K):
            r = np.zeros(n)
            r[KU + k] = 1.0 - 2.0 * a_prev[k]
            le_rows.append(r)
            le_rhs.append(-(a_prev[k] ** 2))
            names.append(f"binary[{k}]")
    return ConicProblem(
        n=n,
        Q=Q,
        q=q,
        const=const,
        A_le=np.array(le_rows).reshape(-1, n),
        b_le=np.array(le_rhs),
        socs=socs,
        lo=lo,
        hi=hi,
        le_names=names,
    )


def dump_problem(p: ConicProblem, path) -> None:
    """Write ``p`` as sparse (row, col, value) triplets, one section per block."""

    def triplets(fh, M):
        M = sp.coo_matrix(np.atleast_2d(M))
        for r, c, v in zip(M.row, M.col, M.data):
            fh.write(f"{r} {c} {v:.17g}\n")

    with open(path, "w") as fh:
        fh.write(f"# n {p.n}\n[objective_Q]\n")
        triplets(fh, p.Q)
        fh.write("[objective_q]\n")
        triplets(fh, p.q[None, :])
        fh.write(f"[objective_const]\n{p.const:.17g}\n[linear_le]\n")
        triplets(fh, np.hstack([p.A_le, p.b_le[:, None]]) if len(p.b_le) else np.zeros((0, p.n + 1)))
        fh.write("[linear_eq]\n")
        triplets(fh, np.hstack([p.A_eq, p.b_eq[:, None]]) if len(p.b_eq) else np.zeros((0, p.n + 1)))
        for j, s in enumerate(p.socs):
            # row 0 is the cone head (c, d); rows 1.. are (F, g)
            fh.write(f"[soc {j} {s.name}]\n")
            triplets(fh, np.vstack([np.append(s.c, s.d), np.hstack([s.F, s.g[:, None]])]))
        fh.write("[bounds]\n")
        for i, (a, b) in enumerate(zip(p.lo, p.hi)):
            fh.write(f"{i} {a:.17g} {b:.17g}\n")
