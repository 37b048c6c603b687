"""Small-scale channels, steering vectors, clutter statistics and precoders.

Array layout used throughout the package:

* channels ``h`` and precoders ``w``: ``(..., U, K, M)``, so ``h[..., i, k, :]``
  is the M-vector between comm AP k and UE i;
* clutter correlations ``R_rx``: ``(R, K, M, M)`` and ``R_tx``: ``(K, R, M, M)``;
* symbols: ``(tau_d, U)``, row l holding the diagonal of ``D_s[l]``.
"""

from __future__ import annotations

import numpy as np

from .config import NetworkConfig
from .scenario import Scenario, pathloss, stream


def complex_normal(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, var) samples."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def steering(azimuth: float, elevation: float, M: int) -> np.ndarray:
    """Half-wavelength ULA response along the x-axis."""
    m = np.arange(M)
    return np.exp(1j * np.pi * m * np.sin(azimuth) * np.cos(elevation))


def draw_channels(scn: Scenario, cfg: NetworkConfig, seed, n_draws: int | None = None) -> np.ndarray:
    """Rayleigh channels h_{i,k} ~ CN(0, beta_{i,k} I_M).

    Returns shape (U, K, M), or (n_draws, U, K, M) when ``n_draws`` is given.
    ``seed`` may be an int (the channel sub-stream of that setup seed) or a Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "channels")
    U, K = scn.beta.shape
    lead = () if n_draws is None else (n_draws,)
    var = scn.beta[..., None]
    return complex_normal(rng, lead + (U, K, cfg.M), var)


def _check_nonzero(norms: np.ndarray) -> None:
    if np.any(norms <= 0.0):
        raise ValueError("degenerate channel")


def precode(h_k: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Unit-norm precoder matrix (M x U) for one AP from its local channels (M x U)."""
    h_k = np.asarray(h_k, dtype=complex)
    if h_k.ndim == 1:
        h_k = h_k[:, None]
    norms = np.linalg.norm(h_k, axis=0)
    _check_nonzero(norms)
    if cfg.precoder == "MRT":
        return h_k / norms
    U = h_k.shape[1]
    lam = U * cfg.noise_power / cfg.P_max
    gram = h_k.conj().T @ h_k + lam * np.eye(U)
    W = h_k @ np.linalg.inv(gram)
    return W / np.linalg.norm(W, axis=0)


def precoders(h: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Vectorized :func:`precode` over every AP (and every draw) in ``h`` (..., U, K, M)."""
    norms = np.linalg.norm(h, axis=-1, keepdims=True)
    _check_nonzero(norms)
    if cfg.precoder == "MRT":
        return h / norms
    U = h.shape[-3]
    lam = U * cfg.noise_power / cfg.P_max
    Hk = np.moveaxis(h, -3, -1)  # (..., K, M, U)
    gram = np.swapaxes(Hk.conj(), -1, -2) @ Hk + lam * np.eye(U)
    # X = H gram^{-1}  <=>  X^H = gram^{-1} H^H  (gram Hermitian)
    Xh = np.linalg.solve(gram, np.swapaxes(Hk.conj(), -1, -2))
    X = np.swapaxes(Xh.conj(), -1, -2)
    X = X / np.linalg.norm(X, axis=-2, keepdims=True)
    return np.moveaxis(X, -1, -3)


def psd_project(S: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Hermitian part of S with eigenvalues below tol * max|eig| clipped to zero."""
    S = 0.5 * (S + np.swapaxes(S.conj(), -1, -2))
    vals, vecs = np.linalg.eigh(S)
    scale = np.max(np.abs(vals), axis=-1, keepdims=True)
    vals = np.where(vals < tol * scale, 0.0, vals)
    out = (vecs * vals[..., None, :]) @ np.swapaxes(vecs.conj(), -1, -2)
    if not np.iscomplexobj(S):
        out = out.real
    return 0.5 * (out + np.swapaxes(out.conj(), -1, -2))


def psd_sqrt(S: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (batched)."""
    vals, vecs = np.linalg.eigh(0.5 * (S + np.swapaxes(S.conj(), -1, -2)))
    vals = np.sqrt(np.clip(vals, 0.0, None))
    out = (vecs * vals[..., None, :]) @ np.swapaxes(vecs.conj(), -1, -2)
    return out if np.iscomplexobj(S) else out.real


def local_scattering(psi: float, M: int, spread_rad: float, gain: float = 1.0) -> np.ndarray:
    """Gaussian local-scattering correlation matrix around azimuth ``psi``."""
    dm = np.subtract.outer(np.arange(M), np.arange(M))
    phase = np.exp(1j * np.pi * dm * np.sin(psi))
    spread = np.exp(-0.5 * (np.pi * dm * np.cos(psi) * spread_rad) ** 2)
    return gain * phase * spread


def clutter_correlations(scn: Scenario, cfg: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Clutter correlation matrices (R_rx, R_tx) with shapes (R, K, M, M) and (K, R, M, M)."""
    K, R = scn.ap_pair_distances.shape
    spread = np.deg2rad(cfg.clutter_spread_deg)
    atten = 10.0 ** (-cfg.clutter_attenuation_db / 10.0)
    R_rx = np.zeros((R, K, cfg.M, cfg.M), dtype=complex)
    R_tx = np.zeros((K, R, cfg.M, cfg.M), dtype=complex)
    for k in range(K):
        for r in range(R):
            g = pathloss(scn.ap_pair_distances[k, r]) * atten
            psi_tx = scn.ap_pair_angles[k, r, 0]
            R_tx[k, r] = local_scattering(psi_tx, cfg.M, spread, g)
            R_rx[r, k] = local_scattering(psi_tx + np.pi, cfg.M, spread, g)
    return psd_project(R_rx), psd_project(R_tx)


def clutter_realization(R_rx: np.ndarray, R_tx: np.ndarray, seed) -> np.ndarray:
    """Kronecker clutter channels H_{r,k} = R_rx^{1/2} G (R_tx^{1/2})^T, shape (R, K, M, M).

    G has i.i.d. CN(0, 1) entries, so E||H x||^2 = tr(R_rx) x^H R_tx^T x.
    """
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "clutter")
    Rn, K, M, _ = R_rx.shape
    G = complex_normal(rng, (Rn, K, M, M))
    sq_rx = psd_sqrt(R_rx)
    sq_tx = np.swapaxes(psd_sqrt(R_tx), 0, 1)  # (R, K, M, M)
    return sq_rx @ G @ np.swapaxes(sq_tx, -1, -2)


def draw_symbols(U: int, tau_d: int, seed) -> np.ndarray:
    """i.i.d. unit-modulus QPSK symbols, shape (tau_d, U)."""
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, "symbols")
    idx = rng.integers(0, 4, size=(tau_d, U))
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * idx))
