"""Closed-form communication/sensing quantities and the network power model.

Power-allocation vectors are stored AP-major: the flat amplitude vector of
length K*U has entry ``k*U + i`` equal to sqrt(rho_{i,k}); ``rho.reshape(K, U)``
gives the per-AP vectors rho_k'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .config import NetworkConfig
from .propagation import draw_channels, precoders, psd_project, psd_sqrt, steering
from .scenario import Scenario


@dataclass
class CommStatistics:
    b: np.ndarray  # (U, K) real, E[h_{i,k}^H w_{i,k}]
    C: np.ndarray  # (U, U, K, K) complex Hermitian
    C_real: np.ndarray  # (U, U, K, K) real PSD part acting on real rho
    sqrtC: np.ndarray  # (U, U, K, K) real symmetric square roots of C_real
    G: np.ndarray  # (K, U) sqrt(E||w_{i,k}||^2)

    @property
    def U(self) -> int:
        return self.b.shape[0]

    @property
    def K(self) -> int:
        return self.b.shape[1]


@dataclass
class SensingForms:
    A_blocks: np.ndarray  # (K, U, U) real symmetric PSD
    B_blocks: np.ndarray  # (K, U, U)
    noise_floor: float

    @property
    def A(self) -> np.ndarray:
        return _blkdiag(self.A_blocks)

    @property
    def B(self) -> np.ndarray:
        return _blkdiag(self.B_blocks)


@dataclass
class PowerBreakdown:
    transmit: float
    static: float
    fronthaul_traffic: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {
            "transmit": self.transmit,
            "static": self.static,
            "fronthaul_traffic": self.fronthaul_traffic,
            "total": self.total,
        }


def _blkdiag(blocks: np.ndarray) -> np.ndarray:
    K, U, _ = blocks.shape
    out = np.zeros((K * U, K * U), dtype=blocks.dtype)
    for k in range(K):
        out[k * U : (k + 1) * U, k * U : (k + 1) * U] = blocks[k]
    return out


def fold_alpha(rho, alpha) -> np.ndarray:
    """Return the (K, U) amplitude matrix with AP k's row scaled by alpha_k."""
    alpha = np.asarray(alpha, dtype=float)
    return np.asarray(rho, dtype=float).reshape(len(alpha), -1) * alpha[:, None]


# ---------------------------------------------------------------------------
# communication statistics


def statistics_from_draws(h: np.ndarray, w: np.ndarray, project: bool = True) -> CommStatistics:
    """Sample estimates of b, C and G from paired channel/precoder draws (N, U, K, M)."""
    N = h.shape[0]
    # z[n, i, j, k] = h_{i,k}^H w_{j,k}
    z = np.einsum("nikm,njkm->nijk", h.conj(), w)
    zt = np.moveaxis(z, 0, -1)  # (U, U, K, N)
    C = zt @ np.swapaxes(zt.conj(), -1, -2) / N
    mean = z.mean(axis=0)  # (U, U, K)
    U = h.shape[1]
    bc = np.stack([mean[i, i] for i in range(U)])  # (U, K) complex
    for i in range(U):
        C[i, i] -= np.outer(bc[i], bc[i].conj())
    b = bc.real
    resid = np.abs(bc.imag)
    if np.any(resid > 1e-3 * np.abs(bc) + 1e-300):
        raise ValueError("mean effective channel has a non-negligible imaginary part")
    C = 0.5 * (C + np.swapaxes(C.conj(), -1, -2))
    C_real = C.real.copy()
    if project:
        C = psd_project(C)
        C_real = psd_project(C.real)
    sqrtC = psd_sqrt(C_real)
    G = np.sqrt(np.mean(np.sum(np.abs(w) ** 2, axis=-1), axis=0)).T  # (K, U)
    return CommStatistics(b=b, C=C, C_real=C_real, sqrtC=sqrtC, G=G)


def comm_statistics(scn: Scenario, cfg: NetworkConfig, seed, n_draws: int | None = None) -> CommStatistics:
    """Monte-Carlo estimate of b, C and G over ``cfg.N_ch`` channel draws."""
    h = draw_channels(scn, cfg, seed, n_draws=n_draws or cfg.N_ch)
    return statistics_from_draws(h, precoders(h, cfg))


def comm_sinr(rho, alpha, stats: CommStatistics, noise_power: float) -> np.ndarray:
    """Per-UE SINR from the quadratic-form expression."""
    X = fold_alpha(rho, alpha)  # (K, U)
    desired = np.einsum("ik,ki->i", stats.b, X) ** 2
    interf = np.einsum("xj,ijxy,yj->i", X, stats.C_real, X)
    return desired / (interf + noise_power)


# ---------------------------------------------------------------------------
# finite-blocklength rate


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def qinv(eps: float) -> float:
    """Inverse Gaussian Q-function."""
    if not 0.0 < eps < 1.0:
        raise ValueError("qinv requires 0 < eps < 1")
    return float(-ndtri(eps))


def urllc_rate(gamma, cfg: NetworkConfig):
    """Normal-approximation achievable rate in b/s/Hz for linear SINR ``gamma``."""
    g = np.asarray(gamma, dtype=float)
    V = 1.0 - 1.0 / (1.0 + g)
    ln2 = math.log(2.0)
    out = cfg.tau_d / (cfg.tau * ln2) * np.log1p(g) - qinv(cfg.epsilon) / (cfg.tau * ln2) * np.sqrt(cfg.tau_d * V)
    return float(out) if out.ndim == 0 else out


def rate_lower_bound(gamma, cfg: NetworkConfig):
    """Rate bound obtained by replacing the dispersion with its upper value 1."""
    g = np.asarray(gamma, dtype=float)
    ln2 = math.log(2.0)
    out = cfg.tau_d / (cfg.tau * ln2) * np.log1p(g) - math.sqrt(cfg.tau_d) * qinv(cfg.epsilon) / (cfg.tau * ln2)
    return float(out) if out.ndim == 0 else out


def gamma_threshold(cfg: NetworkConfig) -> float:
    """SINR at which the rate lower bound equals R_min."""
    sq = math.sqrt(cfg.tau_d)
    expo = (cfg.tau * math.log(2.0) / sq * cfg.R_min + qinv(cfg.epsilon)) / sq
    return math.expm1(expo)


# ---------------------------------------------------------------------------
# sensing


def sensing_matrices(
    scn: Scenario,
    w: np.ndarray,
    symbols: np.ndarray | None,
    cfg: NetworkConfig,
    clutter: tuple[np.ndarray, np.ndarray],
    mode: str | None = None,
) -> SensingForms:
    """Block matrices A_k, B_k of the sensing SINR quadratic forms.

    ``w`` is one precoder set (U, K, M) or a batch (N, U, K, M); a batch is
    averaged over its leading axis. In ``realization`` mode the symbol sum
    over l = 1..tau_d is evaluated exactly with ``symbols`` (tau_d, U); in
    ``expectation`` mode it is replaced by tau_d times the diagonal.
    """
    mode = mode or cfg.symbol_mode
    R_rx, R_tx = clutter
    w = np.asarray(w)
    if w.ndim == 3:
        w = w[None]
    N, U, K, M = w.shape
    if scn.tx_angles.shape[0] != K or R_tx.shape[:2] != (K, len(scn.sensing_set)) or M != cfg.M:
        raise ValueError("dimension mismatch between precoders, scenario and clutter model")

    a_tx = np.stack([steering(az, el, M) for az, el in scn.tx_angles])  # (K, M)
    a_rx = np.stack([steering(az, el, M) for az, el in scn.rx_angles])  # (R, M)
    rx_gain = np.sum(np.abs(a_rx) ** 2)  # sum_r a_r^H a_r

    # u[n, i, k] = a_k^T w_{i,k};  inner target matrix = rx_gain * conj(u) u^T
    u = np.einsum("km,nikm->nki", a_tx, w)
    T = rx_gain * np.einsum("nki,nkj->kij", u.conj(), u) / N

    # clutter: sum_r tr(R_rx,(r,k)) W_k^H R_tx,(k,r)^T W_k
    tr_rx = np.real(np.trace(R_rx, axis1=-2, axis2=-1))  # (R, K)
    Rt = np.einsum("rk,krmn->kmn", tr_rx, np.swapaxes(R_tx, -1, -2))
    Cl = np.einsum("nikm,kmp,njkp->kij", w.conj(), Rt, w) / N

    if mode == "expectation":
        S = cfg.tau_d * np.eye(U)
    elif mode == "realization":
        if symbols is None:
            raise ValueError("realization mode needs a symbol block")
        symbols = np.asarray(symbols)
        if symbols.shape != (cfg.tau_d, U):
            raise ValueError("dimension mismatch: symbols must be (tau_d, U)")
        S = symbols.conj().T @ symbols  # S_ij = sum_l conj(s_i) s_j
    else:
        raise ValueError(f"unknown symbol mode {mode!r}")

    A = psd_project((T * S[None]).real)
    B = psd_project((Cl * S[None]).real)
    return SensingForms(A_blocks=A, B_blocks=B, noise_floor=cfg.noise_floor)


def sensing_sinr(rho, alpha, forms: SensingForms, cfg: NetworkConfig) -> float:
    X = fold_alpha(rho, alpha)
    sig = np.einsum("ki,kij,kj->", X, forms.A_blocks, X)
    clut = np.einsum("ki,kij,kj->", X, forms.B_blocks, X)
    return float(cfg.sigma_rcs2 * sig / (clut + forms.noise_floor))


# ---------------------------------------------------------------------------
# power model


def fronthaul_coefficient(cfg: NetworkConfig, rates) -> float:
    """Traffic-dependent fronthaul watts per active AP for the given UE rates."""
    return cfg.bandwidth * cfg.P_tra_per_bps * float(np.sum(rates))


def total_power(rho, alpha, rates, cfg: NetworkConfig, stats: CommStatistics | None = None) -> PowerBreakdown:
    """Network power: amplifier-scaled transmit + static + traffic fronthaul."""
    alpha = np.asarray(alpha, dtype=float)
    K = len(alpha)
    amp = np.asarray(rho, dtype=float).reshape(K, -1)
    G = np.ones_like(amp) if stats is None else stats.G
    transmit = cfg.eta_pa * float(np.sum(alpha[:, None] * amp**2 * G**2))
    static = cfg.P0 * float(np.sum(alpha))
    fronthaul = fronthaul_coefficient(cfg, rates) * float(np.sum(alpha))
    return PowerBreakdown(transmit, static, fronthaul, transmit + static + fronthaul)
