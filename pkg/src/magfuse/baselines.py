"""Reference estimators sharing the complementary-filter core.

The constant-anchor baseline always calibrates toward the scenario's
nominal field direction. The adaptive-weight baseline uses the same
anchor but scales the magnetometer weight by (1 - lambda), where lambda
grades the distortion intensity from the field magnitude anomaly and
the dip-angle anomaly, each clamped to [0, 1] and averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geom import Rotation

__all__ = [
    "AvoidConfig",
    "muse_anchor_source",
    "avoid_lambda",
    "avoid_weight",
    "ZeroFieldError",
]


class ZeroFieldError(ValueError):
    pass


@dataclass
class AvoidConfig:
    m0: float = 50.0  # uT, nominal local field magnitude
    theta0_deg: float = 60.0  # nominal dip angle, positive downward
    dip_threshold_deg: float = 20.0  # dip anomaly that saturates lambda_2

    def __post_init__(self) -> None:
        if self.m0 <= 0:
            raise ValueError("m0 must be positive")
        if self.dip_threshold_deg <= 0:
            raise ValueError("dip_threshold_deg must be positive")


def muse_anchor_source(nominal_direction: np.ndarray) -> Callable[..., np.ndarray]:
    """Anchor provider that returns the nominal field direction everywhere."""
    anchor = np.asarray(nominal_direction, dtype=float).copy()
    n = float(np.linalg.norm(anchor))
    if n < 1e-12:
        raise ZeroFieldError("nominal direction must be nonzero")
    anchor /= n

    def provider(*_args, **_kwargs) -> np.ndarray:
        return anchor

    return provider


def dip_angle_deg(mag_grf: np.ndarray) -> float:
    """Angle of a GRF field vector below the horizontal plane (positive down)."""
    m = np.asarray(mag_grf, dtype=float)
    n = float(np.linalg.norm(m))
    if n < 1e-12:
        raise ZeroFieldError("zero field has no dip angle")
    return math.degrees(math.asin(max(-1.0, min(1.0, -m[2] / n))))


def avoid_lambda(mag: np.ndarray, theta_hat: Rotation, cfg: AvoidConfig) -> float:
    """Distortion intensity in [0, 1] from magnitude and dip anomalies."""
    m = np.asarray(mag, dtype=float)
    norm = float(np.linalg.norm(m))
    if norm < 1e-12:
        raise ZeroFieldError("zero magnetometer reading")
    lam1 = min(1.0, abs(norm - cfg.m0) / cfg.m0)
    dip = dip_angle_deg(theta_hat.apply(m))
    lam2 = min(1.0, abs(dip - cfg.theta0_deg) / cfg.dip_threshold_deg)
    return 0.5 * (lam1 + lam2)


def avoid_weight(lam: float, k_m: float = 0.1) -> float:
    """Effective magnetometer weight k_m * (1 - lambda)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return k_m * (1.0 - lam)
