"""Network geometry, large-scale fading and seed plumbing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig

AP_HEIGHT = 10.0
UE_HEIGHT = 1.5
TARGET_HEIGHT = 1.5

# sub-stream tags, fixed so that adding a purpose never shifts the others
STREAM_TAGS = {
    "geometry": 0,
    "channels": 1,
    "symbols": 2,
    "clutter": 3,
    "verify": 4,
    "ap_layout": 5,
    "shadowing": 6,
}


def setup_seed(master_seed: int, setup_index: int) -> int:
    """Deterministic per-setup seed mixed from (master_seed, setup_index)."""
    ss = np.random.SeedSequence([int(master_seed), int(setup_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Independent generator for one purpose (geometry, channels, ...) of a setup."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAM_TAGS[purpose]]))


def pathloss(d) -> np.ndarray | float:
    """Linear large-scale gain of the log-distance model, -30.5 - 36.7 log10(d) dB.

    Distances below 1 m are clamped to 1 m.
    """
    d = np.maximum(np.asarray(d, dtype=float), 1.0)
    out = 10.0 ** ((-30.5 - 36.7 * np.log10(d)) / 10.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class Scenario:
    ap_positions: np.ndarray  # (K+R, 2), all APs
    ue_positions: np.ndarray  # (U, 2)
    target_position: np.ndarray  # (2,)
    sensing_set: np.ndarray  # (R,) indices into ap_positions
    comm_set: np.ndarray  # (K,) indices into ap_positions, ascending
    beta: np.ndarray  # (U, K)
    tx_angles: np.ndarray  # (K, 2) azimuth, elevation from comm AP toward target
    rx_angles: np.ndarray  # (R, 2) azimuth, elevation from target toward sensing AP
    ap_pair_angles: np.ndarray  # (K, R, 2) from comm AP k toward sensing AP r
    ap_pair_distances: np.ndarray  # (K, R) metres

    @property
    def comm_positions(self) -> np.ndarray:
        return self.ap_positions[self.comm_set]

    @property
    def sensing_positions(self) -> np.ndarray:
        return self.ap_positions[self.sensing_set]


def _angles(src: np.ndarray, dst: np.ndarray, dz: float) -> np.ndarray:
    """Azimuth/elevation from src points toward dst points, dz = h_dst - h_src."""
    diff = np.asarray(dst, float) - np.asarray(src, float)
    horiz = np.hypot(diff[..., 0], diff[..., 1])
    # coincident points: nudge by 0.1 m along x
    degenerate = horiz < 1e-9
    if np.any(degenerate):
        diff = diff.copy()
        diff[degenerate, 0] += 0.1
        horiz = np.hypot(diff[..., 0], diff[..., 1])
    az = np.arctan2(diff[..., 1], diff[..., 0])
    el = np.arctan2(dz, horiz)
    return np.stack([az, el], axis=-1)


def build_scenario(
    cfg: NetworkConfig,
    ap_positions,
    ue_positions,
    target_position=None,
    shadowing_rng: np.random.Generator | None = None,
) -> Scenario:
    """Designate sensing APs and derive fading and angles for explicit positions."""
    aps = np.asarray(ap_positions, dtype=float).reshape(-1, 2)
    ues = np.asarray(ue_positions, dtype=float).reshape(-1, 2)
    if target_position is None:
        target_position = (cfg.area_side / 2.0, cfg.area_side / 2.0)
    target = np.asarray(target_position, dtype=float).reshape(2)
    if len(aps) != cfg.K + cfg.R:
        raise ValueError(f"expected {cfg.K + cfg.R} AP positions, got {len(aps)}")
    if len(ues) != cfg.U:
        raise ValueError(f"expected {cfg.U} UE positions, got {len(ues)}")

    dist_t = np.linalg.norm(aps - target, axis=1)
    order = np.argsort(dist_t, kind="stable")
    sensing = np.sort(order[: cfg.R])
    comm = np.sort(order[cfg.R :])
    comm_xy = aps[comm]
    sens_xy = aps[sensing]

    d2 = np.linalg.norm(ues[:, None, :] - comm_xy[None, :, :], axis=-1)
    d3 = np.sqrt(d2**2 + (AP_HEIGHT - UE_HEIGHT) ** 2)
    beta = pathloss(d3)
    if cfg.shadowing:
        if shadowing_rng is None:
            raise ValueError("shadowing enabled but no generator supplied")
        beta = beta * 10.0 ** (cfg.shadowing_std_db * shadowing_rng.standard_normal(beta.shape) / 10.0)

    tx = _angles(comm_xy, target[None, :], TARGET_HEIGHT - AP_HEIGHT)
    rx = _angles(target[None, :], sens_xy, AP_HEIGHT - TARGET_HEIGHT)
    pair = _angles(comm_xy[:, None, :], sens_xy[None, :, :], 0.0)
    pair_d = np.linalg.norm(comm_xy[:, None, :] - sens_xy[None, :, :], axis=-1)

    return Scenario(
        ap_positions=aps,
        ue_positions=ues,
        target_position=target,
        sensing_set=sensing,
        comm_set=comm,
        beta=np.atleast_2d(beta),
        tx_angles=tx,
        rx_angles=rx,
        ap_pair_angles=pair,
        ap_pair_distances=pair_d,
    )


def draw_ap_layout(cfg: NetworkConfig, seed: int) -> np.ndarray:
    rng = stream(seed, "ap_layout")
    return rng.uniform(0.0, cfg.area_side, size=(cfg.K + cfg.R, 2))


def generate_scenario(cfg: NetworkConfig, seed: int, ap_positions=None) -> Scenario:
    """Random scenario: APs and UEs uniform over the square, target at the centre.

    If ``ap_positions`` is given the AP layout is kept and only UEs are drawn.
    """
    rng = stream(seed, "geometry")
    if ap_positions is None:
        ap_positions = rng.uniform(0.0, cfg.area_side, size=(cfg.K + cfg.R, 2))
    ues = rng.uniform(0.0, cfg.area_side, size=(cfg.U, 2))
    shadow = stream(seed, "shadowing") if cfg.shadowing else None
    return build_scenario(cfg, ap_positions, ues, shadowing_rng=shadow)
