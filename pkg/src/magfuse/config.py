"""Flat key-value configuration files and their mapping onto module configs.

Format: one ``key = value`` pair per line, ``#`` starts a comment,
blank lines ignored. Keys are case-sensitive and mirror the CLI flags.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .baselines import AvoidConfig
from .cfilter import FilterConfig
from .detector import DetectorConfig
from .pfilter import ArmModel, PfConfig
from .pipeline import ConfigError, RunConfig
from .simgen import FieldModel, MotionScript, NoiseModel, north_with_dip

__all__ = [
    "parse_config_file",
    "build_run_config",
    "build_scenario_models",
]


def parse_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _get_float(m: Mapping[str, str], key: str, default: float) -> float:
    if key not in m:
        return default
    try:
        return float(m[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {m[key]!r} as a number")


def _get_int(m: Mapping[str, str], key: str, default: int) -> int:
    if key not in m:
        return default
    try:
        return int(m[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {m[key]!r} as an integer")


def _get_str(m: Mapping[str, str], key: str, default: str) -> str:
    return m.get(key, default)


def _get_bool(m: Mapping[str, str], key: str, default: bool) -> bool:
    if key not in m:
        return default
    v = m[key].lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"config key {key!r}: cannot parse {m[key]!r} as a boolean")


def build_run_config(m: Mapping[str, str], seed: Optional[int] = None) -> RunConfig:
    """RunConfig from a flat mapping; unknown keys are rejected."""
    known = {
        "estimator", "database", "l_db", "adaptive", "detect_window_s",
        "double_filter", "seed", "dip_deg",
        "k_a", "k_m", "static_boundary", "K_c", "K_g", "init_window",
        "mag_lo", "mag_hi", "rel_var_max",
        "n_particles", "K_pf", "sigma_accel", "elbow_jitter", "resample_fraction",
        "arm.upper", "arm.forearm",
        "avoid.m0", "avoid.theta0_deg", "avoid.dip_threshold_deg",
    }
    scenario_prefixes = ("field.", "motion.", "noise.")
    for key in m:
        if key not in known and not key.startswith(scenario_prefixes):
            raise ConfigError(f"unknown config key {key!r}")
    try:
        filter_cfg = FilterConfig(
            k_a=_get_float(m, "k_a", 0.1),
            k_m=_get_float(m, "k_m", 0.1),
            static_boundary=_get_float(m, "static_boundary", 1.3),
            k_c=_get_int(m, "K_c", 24),
            k_g=_get_int(m, "K_g", 1),
            init_window=_get_float(m, "init_window", 10.0),
        )
        detector_cfg = DetectorConfig(
            mag_lo=_get_float(m, "mag_lo", 40.0),
            mag_hi=_get_float(m, "mag_hi", 60.0),
            rel_var_max=_get_float(m, "rel_var_max", 0.135),
        )
        pf_cfg = PfConfig(
            n_particles=_get_int(m, "n_particles", 500),
            k_pf=_get_int(m, "K_pf", 5),
            sigma_accel=_get_float(m, "sigma_accel", 1.0),
            elbow_jitter=_get_float(m, "elbow_jitter", 0.05),
            resample_fraction=_get_float(m, "resample_fraction", 0.5),
        )
        arm = ArmModel(
            upper_arm_len=_get_float(m, "arm.upper", 0.30),
            forearm_len=_get_float(m, "arm.forearm", 0.27),
        )
        avoid_cfg = AvoidConfig(
            m0=_get_float(m, "avoid.m0", 50.0),
            theta0_deg=_get_float(m, "avoid.theta0_deg", _get_float(m, "dip_deg", 60.0)),
            dip_threshold_deg=_get_float(m, "avoid.dip_threshold_deg", 20.0),
        )
        cfg_seed = seed if seed is not None else _get_int(m, "seed", 0)
        return RunConfig(
            estimator=_get_str(m, "estimator", "mdr"),
            seed=cfg_seed,
            database=_get_str(m, "database", "auto"),
            adaptive=_get_bool(m, "adaptive", True),
            l_db=_get_float(m, "l_db", 0.1),
            detect_window_s=_get_float(m, "detect_window_s", 30.0),
            double_filter=_get_bool(m, "double_filter", False),
            nominal_anchor=north_with_dip(_get_float(m, "dip_deg", 60.0)),
            filter_cfg=filter_cfg,
            detector_cfg=detector_cfg,
            pf_cfg=pf_cfg,
            arm=arm,
            avoid_cfg=avoid_cfg,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))


def build_scenario_models(
    m: Mapping[str, str], seed: int
) -> tuple[FieldModel, MotionScript, NoiseModel]:
    """Field, motion, and noise models from scenario config keys."""
    try:
        field = FieldModel(
            variant=_get_str(m, "field.variant", "uniform"),
            base_direction=north_with_dip(_get_float(m, "dip_deg", 60.0)),
            base_magnitude=_get_float(m, "field.base_magnitude", 50.0),
            distortion_amplitude=_get_float(m, "field.distortion_deg", 20.0),
            spatial_scale=_get_float(m, "field.spatial_scale", 0.8),
            magnitude_jitter=_get_float(m, "field.magnitude_jitter", 0.0),
            seed=seed,
        )
        motion = MotionScript(
            variant=_get_str(m, "motion.variant", "static"),
            duration=_get_float(m, "motion.duration", 60.0),
            speed_scale=_get_float(m, "motion.speed_scale", 1.0),
            seed=seed,
        )
        bias = np.array(
            [
                _get_float(m, "noise.gyro_bias_x", 0.0),
                _get_float(m, "noise.gyro_bias_y", 0.0),
                _get_float(m, "noise.gyro_bias_z", 0.0),
            ]
        )
        noise = NoiseModel(
            gyro_noise_std=_get_float(m, "noise.gyro_std", 0.0),
            gyro_bias=bias,
            accel_noise_std=_get_float(m, "noise.accel_std", 0.0),
            mag_noise_std=_get_float(m, "noise.mag_std", 0.0),
        )
        return field, motion, noise
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))
