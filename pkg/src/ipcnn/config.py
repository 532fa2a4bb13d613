"""Experiment configuration: defaults, strict JSON loading, hashing.

The config file is plain JSON mirroring DEFAULT_CONFIG below.  Every
physical quantity carries its unit in the key name.  Unknown keys are
rejected rather than ignored: a typo that silently fell back to a default
would corrupt a sweep.  A null ``faults.neop_dbc`` means noise off.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .design_space import HardwareConfig
from .errors import ConfigError
from .optics import SPEED_OF_LIGHT, dbm_to_watts

SCHEMA_VERSION = 1

DEFAULT_CONFIG: dict = {
    "hardware": {
        "c_in": 64,
        "c_out": 32,
        "q": 9,
        "f_m_hz": 5.0e9,
        "neop_w": 6.3e-6,
        "snr_target": 10.0,
        "power_cap_dbm": 20.0,
        "loss_wdm_to_pd_db": 6.4,
        "loss_modulator_db": 4.0,
        "loss_input_port_db": 2.0,
        "loss_wdm_stage_db": 1.0,
        "loss_delay_per_meter_db": 0.5,
        "group_index": 2.0,
        "p_mrr_w": 0.0195,
        "p_tia_w": 0.0022,
        "p_mod_w": 0.09,
        "e_adc_j_per_sample": 1.0e-12,
        "wall_plug_efficiency": 0.05,
    },
    "noise_budget": {
        "pd_noise_w_per_rthz": 30.0e-12,
        "pd_responsivity_a_per_w": 0.9,
        "tia_noise_a_per_rthz": 50.0e-12,
        "bandwidth_hz": 10.0e9,
    },
    "network": {
        "epochs": 5,
        "learning_rate": 0.01,
        "momentum": 0.9,
        "batch_size": 64,
        "seed": 0,
    },
    "dataset": {
        "kind": "mnist",          # "mnist" | "synthetic"
        "directory": None,        # None -> $IPCNN_DATA_DIR or ./data
        "subset": 1000,           # samples used by fault sweeps
        "synthetic_train": 4000,
        "synthetic_test": 1000,
        "synthetic_seed": 1234,
    },
    "faults": {
        "neop_dbc": None,         # null -> noise off
        "imbalance_db": 0.0,
        "calibration": False,
        "probe_repeats": 1,
    },
    "sweep": {
        "noise_levels_dbc": [-25.0, -20.0, -15.0, -10.0, -5.0, 0.0],
        "noise_seeds": [0, 1, 2, 3, 4],
        "imbalance_levels_db": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
        "trials": 100,
    },
    "equivalence": {
        "instances": 200,
        "seed": 0,
        "max_channels": 8,
        "sigmas": [1, 2, 3, 5],
        "max_width": 16,
        "corrupt_delay_offsets": False,
    },
    "design_space": {
        "neop_grid_w": [1.0e-6, 2.0e-6, 6.3e-6, 1.0e-5, 2.0e-5, 6.3e-5],
        "loss_grid_db": [0.0, 2.0, 4.0, 6.4, 7.4, 10.0, 14.0, 20.0],
        "f_m_grid_hz": [0.5e9 * k for k in range(1, 21)],
        "loss_per_meter_levels_db": [0.05, 0.5, 5.0],
        "image_width": 28,
        "sigma": 3,
    },
    "paths": {
        "checkpoint": "model.npz",
    },
}

# keys whose value may be JSON null
_NULLABLE = {"dataset.directory", "faults.neop_dbc"}


def _merge(defaults: dict, overrides: dict, prefix: str = "") -> dict:
    merged = {}
    for key, value in overrides.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key: {path!r}")
        default = defaults[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path!r} must be a section (object)")
            merged[key] = _merge(default, value, prefix=f"{path}.")
            continue
        if value is None:
            if path not in _NULLABLE:
                raise ConfigError(f"{path!r} may not be null")
        elif isinstance(default, bool) != isinstance(value, bool):
            raise ConfigError(f"{path!r} must be a boolean")
        elif isinstance(default, (int, float)) and not isinstance(
                value, (int, float)):
            raise ConfigError(f"{path!r} must be a number")
        elif isinstance(default, str) and not isinstance(value, str):
            raise ConfigError(f"{path!r} must be a string")
        elif isinstance(default, list) and not isinstance(value, list):
            raise ConfigError(f"{path!r} must be a list")
        merged[key] = value
    for key, default in defaults.items():
        if key not in merged:
            merged[key] = json.loads(json.dumps(default)) \
                if isinstance(default, (dict, list)) else default
    return merged


def load_config(path=None) -> dict:
    """Load and validate a JSON config; missing path -> pure defaults."""
    if path is None:
        return _merge(DEFAULT_CONFIG, {})
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return _merge(DEFAULT_CONFIG, user)


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def to_hardware_config(config: dict) -> HardwareConfig:
    hw = config["hardware"]
    return HardwareConfig(
        c_in=int(hw["c_in"]),
        c_out=int(hw["c_out"]),
        q=int(hw["q"]),
        f_m=hw["f_m_hz"],
        neop=hw["neop_w"],
        snr_target=hw["snr_target"],
        power_cap=dbm_to_watts(hw["power_cap_dbm"]),
        loss_wdm_to_pd_db=hw["loss_wdm_to_pd_db"],
        loss_modulator_db=hw["loss_modulator_db"],
        loss_input_port_db=hw["loss_input_port_db"],
        loss_wdm_stage_db=hw["loss_wdm_stage_db"],
        loss_delay_per_meter_db=hw["loss_delay_per_meter_db"],
        group_velocity=SPEED_OF_LIGHT / hw["group_index"],
        p_mrr=hw["p_mrr_w"],
        p_tia=hw["p_tia_w"],
        p_mod=hw["p_mod_w"],
        e_adc=hw["e_adc_j_per_sample"],
        wall_plug_efficiency=hw["wall_plug_efficiency"],
    )


def fault_neop_dbc(config: dict) -> float:
    """faults.neop_dbc with null mapped to -inf (noise off)."""
    value = config["faults"]["neop_dbc"]
    return -np.inf if value is None else float(value)
