"""Complementary-filter orientation estimator.

State is the rotation mapping watch-frame vectors into the global frame.
Each step integrates the gyro increment in the sensor frame, then (on
calibration steps) composes two small global-frame corrections: one
pulling the transformed accelerometer direction toward straight up, one
pulling the transformed magnetometer direction toward the supplied
magnetic anchor. Corrections are fractional rotations: same axis as the
full correction, angle scaled by the weights ``k_a`` / ``k_m``.

Sign convention: an accelerometer at rest reads the +9.8 m/s^2 support
reaction, i.e. the reading points up, opposite gravity. The calibration
target for the transformed reading is therefore (0, 0, 1).

Scheduling: the gyro increment is applied on every ``k_g``-th step and
the two calibrations on every ``k_c``-th step (step indices count from
1). Gravity calibration is additionally gated to near-static moments:
it is skipped whenever the accel magnitude is outside
9.8 +- ``static_boundary``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geom import (
    AntiparallelInputError,
    Rotation,
    fractional_rotation,
    normalize,
    rotation_from_two_directions,
)
from .traces import NOMINAL_DT, ImuSample

__all__ = [
    "GRAVITY",
    "UP",
    "NotStaticError",
    "DegenerateFieldError",
    "FilterConfig",
    "FilterState",
    "initialize",
    "gyro_step",
    "gravity_calibration",
    "magnetic_calibration",
    "fuse_step",
]

GRAVITY = 9.8  # m/s^2
UP = np.array([0.0, 0.0, 1.0])  # GRF up; target for the transformed accel reading

_INIT_ACCEL_TOL = 0.3  # m/s^2 around GRAVITY accepted during initialization
_MIN_VERTICAL_SEP_DEG = 1.0  # field too close to vertical for initialization


class NotStaticError(ValueError):
    pass


class DegenerateFieldError(ValueError):
    pass


@dataclass
class FilterConfig:
    k_a: float = 0.1
    k_m: float = 0.1
    static_boundary: float = 1.3  # m/s^2
    k_c: int = 24  # calibration every k_c-th step
    k_g: int = 1  # gyro integration every k_g-th step
    init_window: float = 10.0  # seconds of static data for initialization

    def __post_init__(self) -> None:
        if not (0.0 <= self.k_a <= 1.0 and 0.0 <= self.k_m <= 1.0):
            raise ValueError("k_a and k_m must lie in [0, 1]")
        if self.k_c < 1 or self.k_g < 1:
            raise ValueError("k_c and k_g must be positive integers")


@dataclass
class FilterState:
    theta: Rotation
    step_index: int = 0
    initialized: bool = True


def initialize(static_samples: Sequence[ImuSample], cfg: FilterConfig) -> FilterState:
    """Build the initial orientation from a static window.

    The mean accel direction is mapped to up and the horizontal part of
    the mean magnetometer direction to north; the frame is completed
    right-handedly (north x west = up).
    """
    if not static_samples:
        raise NotStaticError("empty initialization window")
    span = static_samples[-1].t - static_samples[0].t
    if span + NOMINAL_DT < cfg.init_window:
        raise ValueError(
            f"initialization window spans {span:.3f}s, need {cfg.init_window}s"
        )
    accels = np.array([s.accel for s in static_samples])
    mags = np.array([s.mag for s in static_samples])
    norms = np.linalg.norm(accels, axis=1)
    if np.any(np.abs(norms - GRAVITY) > _INIT_ACCEL_TOL):
        worst = float(norms[np.argmax(np.abs(norms - GRAVITY))])
        raise NotStaticError(
            f"accel magnitude {worst:.3f} outside {GRAVITY}+-{_INIT_ACCEL_TOL}"
        )
    up_w = normalize(accels.mean(axis=0))
    mag_mean = mags.mean(axis=0)
    mag_dir = normalize(mag_mean)
    vertical_cos = abs(float(mag_dir @ up_w))
    if vertical_cos >= math.cos(math.radians(_MIN_VERTICAL_SEP_DEG)):
        raise DegenerateFieldError("magnetic field within 1 degree of vertical")
    horiz = mag_mean - float(mag_mean @ up_w) * up_w
    north_w = normalize(horiz)
    west_w = np.cross(up_w, north_w)
    theta = Rotation.from_matrix(np.column_stack([north_w, west_w, up_w]))
    return FilterState(theta=theta, step_index=0, initialized=True)


def gyro_step(omega: np.ndarray, dt: float) -> Rotation:
    """Sensor-frame increment: |omega|*dt radians about omega's direction."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    w = np.asarray(omega, dtype=float)
    return Rotation.from_rotvec(w * dt)


def gravity_calibration(theta: Rotation, accel: np.ndarray, cfg: FilterConfig) -> Rotation:
    """Fractional correction aligning the transformed accel direction with up.

    Identity when the accel magnitude falls outside the near-static band,
    or in the degenerate antiparallel case.
    """
    a = np.asarray(accel, dtype=float)
    mag = float(np.linalg.norm(a))
    if abs(mag - GRAVITY) > cfg.static_boundary or mag < 1e-12:
        return Rotation.identity()
    measured = theta.apply(a / mag)
    try:
        full = rotation_from_two_directions(measured, UP)
    except AntiparallelInputError:
        return Rotation.identity()
    return fractional_rotation(full, cfg.k_a)


def magnetic_calibration(
    theta: Rotation,
    mag: np.ndarray,
    anchor: Optional[np.ndarray],
    cfg: FilterConfig,
    k_m: Optional[float] = None,
) -> Rotation:
    """Fractional correction aligning the transformed magnetometer direction
    with the anchor; identity when no anchor is available.

    ``k_m`` overrides the configured weight (used by estimators that
    modulate magnetometer trust per step).
    """
    if anchor is None:
        return Rotation.identity()
    m = np.asarray(mag, dtype=float)
    n = float(np.linalg.norm(m))
    if n < 1e-12:
        return Rotation.identity()
    measured = theta.apply(m / n)
    try:
        full = rotation_from_two_directions(measured, np.asarray(anchor, dtype=float))
    except AntiparallelInputError:
        return Rotation.identity()
    return fractional_rotation(full, cfg.k_m if k_m is None else k_m)


def fuse_step(
    state: FilterState,
    sample: ImuSample,
    anchor: Optional[np.ndarray],
    cfg: FilterConfig,
    dt: float = NOMINAL_DT,
    k_m: Optional[float] = None,
) -> FilterState:
    """Advance the filter by one sample.

    The gyro increment composes in the sensor frame; the calibration
    corrections compose in the global frame, gravity first, each
    computed against the orientation produced by the previous factor.
    """
    if not state.initialized:
        raise ValueError("filter state is not initialized")
    idx = state.step_index + 1
    theta = state.theta
    if idx % cfg.k_g == 0:
        theta = theta.compose_sensor(gyro_step(sample.gyro, dt))
    if idx % cfg.k_c == 0:
        theta = theta @ gravity_calibration(theta, sample.accel, cfg)
        theta = theta @ magnetic_calibration(theta, sample.mag, anchor, cfg, k_m=k_m)
    return FilterState(theta=theta, step_index=idx, initialized=True)
