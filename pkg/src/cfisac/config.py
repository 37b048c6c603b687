"""Network and algorithm parameters, JSON ingestion and named presets."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

PRECODERS = ("MRT", "RZF")
SYMBOL_MODES = ("realization", "expectation")


def db2lin(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def lin2db(x: float) -> float:
    return 10.0 * math.log10(max(x, 1e-300))


@dataclass(frozen=True)
class NetworkConfig:
    # geometry / counts
    K: int = 32
    R: int = 2
    U: int = 8
    M: int = 4
    area_side: float = 500.0
    # radio
    P_max: float = 1.0
    carrier_freq: float = 1.9e9
    bandwidth: float = 20e6
    noise_power: float = 10.0 ** (-9.4 - 3.0)
    tau: int = 200
    tau_d: int = 190
    epsilon: float = 1e-5
    R_min: float = 1.0
    gamma_sen: float = db2lin(6.0)
    sigma_rcs2: float = db2lin(2.0)
    # power model
    eta_pa: float = 2.5
    P_fixed_fh: float = 0.825
    P_hw: float = 0.2
    P_tra: float = 0.25  # W per Gbps
    P0_override: float | None = None
    # statistics / algorithm
    N_ch: int = 2000
    c_max: int = 50
    eta_stop: float = 1e-3
    master_seed: int = 0
    precoder: str = "MRT"
    symbol_mode: str = "expectation"
    # clutter
    clutter_spread_deg: float = 15.0
    clutter_attenuation_db: float = 20.0
    # optional log-normal shadowing (off by default)
    shadowing: bool = False
    shadowing_std_db: float = 4.0
    # experiment layout: redraw APs per setup or keep one layout per experiment
    redraw_aps: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("K", "R", "U", "M"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.tau_d <= self.tau:
            raise ValueError("need 0 < tau_d <= tau")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if self.gamma_sen <= 0:
            raise ValueError("gamma_sen must be positive")
        if self.R_min < 0:
            raise ValueError("R_min must be non-negative")
        powers = (self.P_max, self.noise_power, self.P_fixed_fh, self.P_hw, self.P_tra, self.sigma_rcs2)
        if any(p < 0 for p in powers) or (self.P0_override is not None and self.P0_override < 0):
            raise ValueError("powers must be non-negative")
        if self.eta_pa < 1.0:
            raise ValueError("eta_pa is an inefficiency multiplier and must be >= 1")
        if self.N_ch < 2:
            raise ValueError("N_ch must be >= 2")
        if self.precoder not in PRECODERS:
            raise ValueError(f"precoder must be one of {PRECODERS}")
        if self.symbol_mode not in SYMBOL_MODES:
            raise ValueError(f"symbol_mode must be one of {SYMBOL_MODES}")
        if self.area_side <= 0:
            raise ValueError("area_side must be positive")

    @property
    def P0(self) -> float:
        """Static power per active AP in watts."""
        if self.P0_override is not None:
            return self.P0_override
        return self.P_fixed_fh + self.P_hw * self.M

    @property
    def P_tra_per_bps(self) -> float:
        return self.P_tra * 1e-9

    @property
    def noise_floor(self) -> float:
        """Aggregate sensing noise energy tau_d * M * R * sigma_n^2."""
        return self.tau_d * self.M * self.R * self.noise_power

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


PRESETS: dict[str, dict[str, Any]] = {
    "text-defaults": {"R_min": 1.0, "gamma_sen": db2lin(6.0), "sigma_rcs2": db2lin(2.0)},
    "figure-defaults": {"R_min": 2.0, "gamma_sen": db2lin(2.0), "sigma_rcs2": db2lin(2.0)},
}

# keys accepted in dB and converted to the linear fields
_DB_ALIASES = {
    "gamma_sen_db": "gamma_sen",
    "sigma_rcs2_dbsm": "sigma_rcs2",
    "sigma_rcs2_db": "sigma_rcs2",
    "noise_power_dbm": "noise_power",
}


def config_from_dict(data: dict[str, Any], preset: str | None = None) -> NetworkConfig:
    """Build a config from a (possibly partial) mapping on top of an optional preset.

    Unknown keys raise; dB aliases such as ``gamma_sen_db`` are linearized.
    """
    values: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    known = {f.name for f in dataclasses.fields(NetworkConfig)}
    for key, val in data.items():
        if key in _DB_ALIASES:
            target = _DB_ALIASES[key]
            if key == "noise_power_dbm":
                values[target] = db2lin(val - 30.0)
            else:
                values[target] = db2lin(val)
        elif key in known:
            values[key] = val
        else:
            raise ValueError(f"unknown config field {key!r}")
    return NetworkConfig(**values)


def load_config(path: str | Path | None = None, preset: str | None = None) -> NetworkConfig:
    data: dict[str, Any] = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
    return config_from_dict(data, preset=preset)


__all__ = [
    "NetworkConfig",
    "PRESETS",
    "config_from_dict",
    "load_config",
    "db2lin",
    "lin2db",
]
