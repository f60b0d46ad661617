"""Synthetic world generation: magnetic field models, arm motion
scripts, IMU trace synthesis, distortion mixing, and a seeded star
catalog.

Field models are deterministic functions of position only (the field is
time-invariant by construction). Motion scripts drive the same hinge
arm model the particle filter assumes, so synthesized wrist locations
always lie on the filter's reachable arc for the true orientation.

Conventions for the synthesized sensor streams:

- gyro at sample k is the mean body rate over the preceding interval
  (exact discrete log-map of the truth orientation increment), so
  noise-free gyro integration reproduces the truth orientation exactly;
- accel is the support reaction plus wrist linear acceleration,
  expressed in the watch frame: at rest it reads +9.8 m/s^2 pointing up;
- mag is the local field vector expressed in the watch frame.

The first 10 seconds of every trace hold the script's starting pose so
the orientation filter can initialize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .detector import distortion_magnitude
from .geom import Rotation, normalize
from .pfilter import ArmModel
from .traces import GroundTruth, ImuSample, ImuTrace, TraceMeta

__all__ = [
    "MissingGroundTruthError",
    "FieldModel",
    "MotionScript",
    "NoiseModel",
    "north_with_dip",
    "field_at",
    "field_direction_fn",
    "pose_series",
    "synthesize_trace",
    "mix_distortion",
    "star_catalog",
    "STATIC_LEAD",
    "WORKSPACE_CENTER",
]

STATIC_LEAD = 10.0  # seconds of held start pose prepended to every trace
WORKSPACE_CENTER = np.array([0.35, 0.0, 1.4])  # nominal arm workspace, GRF
_WORKSPACE_HALF = 0.35


class MissingGroundTruthError(ValueError):
    pass


def north_with_dip(dip_deg: float) -> np.ndarray:
    """Unit field direction pointing north, dipping below the horizon."""
    d = math.radians(dip_deg)
    return np.array([math.cos(d), 0.0, -math.sin(d)])


def _smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic ease 6u^5 - 15u^4 + 10u^3; zero velocity and curvature at 0 and 1."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


class _SinusoidBank:
    """A seeded sum of spatial sinusoids with (approximately) unit variance."""

    def __init__(self, rng: np.random.Generator, spatial_scale: float, n: int = 6):
        dirs = rng.normal(size=(n, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        k_mag = (2.0 * math.pi / spatial_scale) * rng.uniform(0.6, 1.4, size=n)
        self.k = dirs * k_mag[:, None]  # (n, 3)
        self.phase = rng.uniform(0.0, 2.0 * math.pi, size=n)
        self.amp = math.sqrt(2.0 / n)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.amp * np.sin(x @ self.k.T + self.phase).sum(axis=-1)


def _perp_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0])
    if abs(float(direction @ helper)) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = normalize(np.cross(direction, helper))
    e2 = np.cross(direction, e1)
    return e1, e2


@dataclass
class FieldModel:
    """Deterministic magnetic field over GRF positions.

    Variants: ``uniform`` (exact base field everywhere), ``smooth``
    (direction tilted by seeded smooth spatial noise whose mean angular
    deviation matches ``distortion_amplitude``), ``corridor`` (a strong
    localized bend plus a covarying magnitude swing, calibrated so the
    workspace-average deviation matches ``distortion_amplitude``).
    """

    variant: str = "uniform"
    base_direction: np.ndarray = dc_field(default_factory=lambda: north_with_dip(60.0))
    base_magnitude: float = 50.0  # uT
    distortion_amplitude: float = 20.0  # degrees
    spatial_scale: float = 0.8  # metres
    magnitude_jitter: float = 0.0  # uT
    seed: int = 0
    center: np.ndarray = dc_field(default_factory=lambda: WORKSPACE_CENTER.copy())

    def __post_init__(self) -> None:
        if self.variant not in ("uniform", "smooth", "corridor"):
            raise ValueError(f"unknown field variant {self.variant!r}")
        if self.base_magnitude <= 0:
            raise ValueError("base_magnitude must be positive")
        self.base_direction = normalize(self.base_direction)
        self.center = np.asarray(self.center, dtype=float)
        self._e1, self._e2 = _perp_basis(self.base_direction)
        rng = np.random.default_rng(self.seed)
        if self.variant != "uniform":
            self._u = _SinusoidBank(rng, self.spatial_scale)
            self._v = _SinusoidBank(rng, self.spatial_scale)
            self._w = _SinusoidBank(rng, self.spatial_scale)
        if self.variant == "corridor":
            self._calibrate_corridor()

    # -- internals -------------------------------------------------------

    def _bump(self, x: np.ndarray) -> np.ndarray:
        rel = (x - self.center) / self.spatial_scale
        return np.exp(-0.5 * np.einsum("...i,...i->...", rel, rel))

    def _reference_grid(self) -> np.ndarray:
        ax = np.linspace(-_WORKSPACE_HALF, _WORKSPACE_HALF, 7)
        gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
        return self.center + np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    def _corridor_dirs(self, x: np.ndarray, gain: float) -> np.ndarray:
        theta = np.minimum(gain * self._bump(x), math.radians(80.0))
        return (
            np.cos(theta)[..., None] * self.base_direction
            + np.sin(theta)[..., None] * self._e1
        )

    def _calibrate_corridor(self) -> None:
        # Scale the bend so the workspace-average angular deviation from the
        # mean direction matches the configured amplitude.
        grid = self._reference_grid()
        gain = math.radians(max(self.distortion_amplitude, 1e-6))
        for _ in range(4):
            dm = distortion_magnitude(self._corridor_dirs(grid, gain))
            if dm < 1e-9:
                break
            gain *= self.distortion_amplitude / dm
        self._corridor_gain = gain

    # -- public ------------------------------------------------------------

    def direction(self, x: np.ndarray) -> np.ndarray:
        """Unit field direction at one position (3,) or many (n, 3)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if self.variant == "uniform":
            out = np.broadcast_to(self.base_direction, pts.shape).copy()
        elif self.variant == "corridor":
            out = self._corridor_dirs(pts, self._corridor_gain)
        else:
            amp = math.radians(self.distortion_amplitude)
            beta = amp / math.sqrt(math.pi / 2.0)
            u = self._u(pts)
            v = self._v(pts)
            theta = np.minimum(beta * np.hypot(u, v), math.radians(85.0))
            phi = np.arctan2(v, u)
            tilt_dir = np.cos(phi)[:, None] * self._e1 + np.sin(phi)[:, None] * self._e2
            out = np.cos(theta)[:, None] * self.base_direction + np.sin(theta)[:, None] * tilt_dir
        return out[0] if np.asarray(x).ndim == 1 else out

    def magnitude(self, x: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if self.variant == "uniform":
            out = np.full(pts.shape[0], self.base_magnitude)
        else:
            out = np.full(pts.shape[0], self.base_magnitude, dtype=float)
            if self.variant == "corridor":
                swing = self.base_magnitude * self.distortion_amplitude / 60.0
                out = out + swing * (2.0 * self._bump(pts) - 1.0)
            if self.magnitude_jitter > 0.0:
                out = out + self.magnitude_jitter * self._w(pts)
            out = np.maximum(out, 1.0)
        return out[0] if np.asarray(x).ndim == 1 else out

    def field(self, x: np.ndarray) -> np.ndarray:
        d = self.direction(x)
        m = self.magnitude(x)
        if d.ndim == 1:
            return float(m) * d
        return m[:, None] * d


def field_at(model: FieldModel, x: np.ndarray) -> np.ndarray:
    """Field vector in uT at a GRF position; deterministic and time-invariant."""
    return model.field(x)


def field_direction_fn(model: FieldModel) -> Callable[[np.ndarray], np.ndarray]:
    """Adapter: position -> unit direction, e.g. for database error metrics."""
    return lambda x: model.direction(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Motion scripts
# ---------------------------------------------------------------------------

_VARIANTS = ("static", "point_directions", "draw_lines", "write_letters", "exercise")

# Single-stroke glyphs on the unit square, used by the writing script.
_GLYPHS: dict[str, list[tuple[float, float]]] = {
    "A": [(0, 0), (0.5, 1), (1, 0), (0.75, 0.5), (0.25, 0.5)],
    "B": [(0, 0), (0, 1), (0.8, 0.85), (0.05, 0.5), (0.9, 0.3), (0, 0)],
    "C": [(1, 0.85), (0.5, 1), (0, 0.7), (0, 0.3), (0.5, 0), (1, 0.15)],
    "D": [(0, 0), (0, 1), (0.7, 0.9), (1, 0.5), (0.7, 0.1), (0, 0)],
    "E": [(1, 1), (0, 1), (0, 0.5), (0.7, 0.5), (0, 0.5), (0, 0), (1, 0)],
    "F": [(1, 1), (0, 1), (0, 0.5), (0.7, 0.5), (0, 0.5), (0, 0)],
    "G": [(1, 0.85), (0.5, 1), (0, 0.7), (0, 0.3), (0.5, 0), (1, 0.2), (1, 0.5), (0.6, 0.5)],
    "H": [(0, 1), (0, 0), (0, 0.5), (1, 0.5), (1, 1), (1, 0)],
    "I": [(0.3, 1), (0.7, 1), (0.5, 1), (0.5, 0), (0.3, 0), (0.7, 0)],
    "J": [(0.8, 1), (0.8, 0.25), (0.5, 0), (0.2, 0.1), (0.1, 0.35)],
    "K": [(0, 1), (0, 0), (0, 0.5), (1, 1), (0.35, 0.65), (1, 0)],
    "L": [(0, 1), (0, 0), (1, 0)],
    "M": [(0, 0), (0, 1), (0.5, 0.4), (1, 1), (1, 0)],
    "N": [(0, 0), (0, 1), (1, 0), (1, 1)],
    "O": [(0.5, 1), (0, 0.7), (0, 0.3), (0.5, 0), (1, 0.3), (1, 0.7), (0.5, 1)],
    "P": [(0, 0), (0, 1), (0.9, 0.8), (0, 0.55)],
    "Q": [(0.5, 1), (0, 0.7), (0, 0.3), (0.5, 0), (1, 0.3), (1, 0.7), (0.5, 1), (0.6, 0.4), (1, 0)],
    "R": [(0, 0), (0, 1), (0.9, 0.8), (0, 0.55), (1, 0)],
    "S": [(1, 0.85), (0.5, 1), (0, 0.8), (1, 0.25), (0.5, 0), (0, 0.15)],
    "T": [(0, 1), (1, 1), (0.5, 1), (0.5, 0)],
    "U": [(0, 1), (0, 0.25), (0.5, 0), (1, 0.25), (1, 1)],
    "V": [(0, 1), (0.5, 0), (1, 1)],
    "W": [(0, 1), (0.25, 0), (0.5, 0.6), (0.75, 0), (1, 1)],
    "X": [(0, 1), (1, 0), (0.5, 0.5), (0, 0), (1, 1)],
    "Y": [(0, 1), (0.5, 0.5), (1, 1), (0.5, 0.5), (0.5, 0)],
    "Z": [(0, 1), (1, 1), (0, 0), (1, 0)],
}

_WRITE_BOX = 0.30  # metres, side of the in-air writing square
_WRITE_PLANE_X = 0.33  # metres in front of the shoulder
_PEN_SPEED = 0.25  # m/s nominal stroke speed


@dataclass
class MotionScript:
    """Seeded description of an arm motion, C2-continuous by construction."""

    variant: str = "static"
    duration: float = 60.0  # seconds of scripted motion (static lead excluded)
    speed_scale: float = 1.0
    seed: int = 0
    alpha0: float = 0.0  # start pose: upper-arm azimuth (rad)
    psi0: float = 0.0  # start pose: upper-arm polar angle from straight down (rad)
    chi0: float = math.radians(90.0)  # start pose: elbow flexion (rad)

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown motion variant {self.variant!r}")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.speed_scale <= 0:
            raise ValueError("speed_scale must be positive")


def _keyframe_eval(times: np.ndarray, knot_t: np.ndarray, knot_v: np.ndarray) -> np.ndarray:
    """Piecewise-quintic interpolation through knots; rests at each knot."""
    times = np.clip(times, knot_t[0], knot_t[-1])
    seg = np.clip(np.searchsorted(knot_t, times, side="right") - 1, 0, len(knot_t) - 2)
    t0 = knot_t[seg]
    t1 = knot_t[seg + 1]
    frac = _smoothstep((times - t0) / np.maximum(t1 - t0, 1e-12))
    return knot_v[seg] + (knot_v[seg + 1] - knot_v[seg]) * frac


def _joint_curves(script: MotionScript, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = tau.shape[0]
    if script.variant == "static":
        return (
            np.full(n, script.alpha0),
            np.full(n, script.psi0),
            np.full(n, script.chi0),
        )
    if script.variant == "point_directions":
        rng = np.random.default_rng(script.seed)
        hold = 2.5 / script.speed_scale
        n_knots = max(2, int(script.duration / hold) + 2)
        kt = np.linspace(0.0, max(script.duration, hold), n_knots)
        ka = np.concatenate([[script.alpha0], rng.uniform(-1.05, 1.05, n_knots - 1)])
        kp = np.concatenate([[script.psi0], rng.uniform(0.17, 1.22, n_knots - 1)])
        kc = np.concatenate([[script.chi0], rng.uniform(0.52, 2.27, n_knots - 1)])
        return (
            _keyframe_eval(tau, kt, ka),
            _keyframe_eval(tau, kt, kp),
            _keyframe_eval(tau, kt, kc),
        )
    if script.variant == "exercise":
        rng = np.random.default_rng(script.seed)
        base = np.array([0.0, math.radians(40.0), math.radians(85.0)])
        amp = np.array([math.radians(50.0), math.radians(25.0), math.radians(40.0)])
        amp = amp * min(script.speed_scale, 1.5)
        ramp = _smoothstep(tau / 2.0)
        out = []
        for j in range(3):
            periods = rng.uniform(3.0, 10.0, size=3) / script.speed_scale
            phases = rng.uniform(0.0, 2.0 * math.pi, size=3)
            coeff = rng.uniform(0.4, 1.0, size=3)
            coeff = coeff / coeff.sum()
            wave = sum(
                c * np.sin(2.0 * math.pi * tau / p + ph)
                for c, p, ph in zip(coeff, periods, phases)
            )
            wave0 = sum(
                c * math.sin(ph) for c, ph in zip(coeff, phases)
            )
            out.append(base[j] + amp[j] * ramp * (wave - wave0))
        return out[0], out[1], out[2]
    raise ValueError(f"{script.variant} is a path-driven variant")


def _path_waypoints(script: MotionScript) -> np.ndarray:
    """Waypoints in the writing plane for the path-driven variants."""
    rng = np.random.default_rng(script.seed)
    pts: list[tuple[float, float]] = []
    if script.variant == "write_letters":
        letters = [chr(ord("A") + i) for i in range(26)]
        start = int(rng.integers(0, 26))
        order = letters[start:] + letters[:start]
        for letter in order * 10:  # enough strokes for ten-minute traces
            pts.extend(_GLYPHS[letter])
    else:  # draw_lines
        grid = np.linspace(0.0, 1.0, 5)
        x, y = 0.5, 0.5
        pts.append((x, y))
        for _ in range(900):
            if rng.random() < 0.5:
                x = float(grid[rng.integers(0, 5)])
            else:
                y = float(grid[rng.integers(0, 5)])
            pts.append((x, y))
    box = np.asarray(pts, dtype=float)
    wrist = np.empty((box.shape[0], 3))
    wrist[:, 0] = _WRITE_PLANE_X
    wrist[:, 1] = (box[:, 0] - 0.5) * _WRITE_BOX
    wrist[:, 2] = 1.4 + (box[:, 1] - 0.5) * _WRITE_BOX
    return wrist


def _path_curve(script: MotionScript, tau: np.ndarray) -> np.ndarray:
    wp = _path_waypoints(script)
    seg_len = np.linalg.norm(np.diff(wp, axis=0), axis=1)
    speed = _PEN_SPEED * script.speed_scale
    seg_dt = np.maximum(seg_len / speed, 0.12)
    knot_t = np.concatenate([[0.0], np.cumsum(seg_dt)])
    # Keep only as much path as the scripted duration needs.
    last = int(np.searchsorted(knot_t, script.duration)) + 1
    knot_t = knot_t[: last + 1]
    wp = wp[: last + 1]
    cols = [_keyframe_eval(tau, knot_t, wp[:, j]) for j in range(3)]
    return np.stack(cols, axis=1)


def _fk_from_joints(
    alpha: np.ndarray, psi: np.ndarray, chi: np.ndarray, arm: ArmModel
) -> tuple[np.ndarray, np.ndarray]:
    """(orientation row-matrices (n,3,3), wrist positions (n,3)) from joint angles."""
    sa, ca = np.sin(alpha), np.cos(alpha)
    sp, cp = np.sin(psi), np.cos(psi)
    u = np.stack([sp * ca, sp * sa, -cp], axis=1)  # upper-arm direction
    a = np.stack([-sa, ca, np.zeros_like(sa)], axis=1)  # hinge axis (horizontal)
    axu = np.cross(a, u)
    f = u * np.cos(chi)[:, None] - axu * np.sin(chi)[:, None]  # forearm direction
    wrist = arm.shoulder + arm.upper_arm_len * u + arm.forearm_len * f
    zrow = np.cross(f, a)
    mats = np.stack([f, a, zrow], axis=1)
    return mats, wrist


def _ik_from_wrist(wrist: np.ndarray, arm: ArmModel) -> tuple[np.ndarray, np.ndarray]:
    """(orientation row-matrices, wrist) for a wrist path, elbow-down swivel."""
    lu, lf = arm.upper_arm_len, arm.forearm_len
    dvec = wrist - arm.shoulder
    d = np.linalg.norm(dvec, axis=1)
    d = np.clip(d, 0.05, lu + lf - 1e-3)
    dhat = dvec / d[:, None]
    cos_sigma = np.clip((lu * lu + d * d - lf * lf) / (2.0 * lu * d), -1.0, 1.0)
    sin_sigma = np.sqrt(1.0 - cos_sigma**2)
    down = np.array([0.0, 0.0, -1.0])
    perp = down - (dhat @ down)[:, None] * dhat
    perp_norm = np.linalg.norm(perp, axis=1)
    if np.any(perp_norm < 1e-9):
        raise ValueError("wrist path passes directly above/below the shoulder")
    perp = perp / perp_norm[:, None]
    u = cos_sigma[:, None] * dhat + sin_sigma[:, None] * perp
    elbow = arm.shoulder + lu * u
    f = wrist - elbow
    f = f / np.linalg.norm(f, axis=1, keepdims=True)
    a = np.cross(f, u)
    a_norm = np.linalg.norm(a, axis=1)
    if np.any(a_norm < 1e-9):
        raise ValueError("wrist path reaches a straight-arm singularity")
    a = a / a_norm[:, None]
    zrow = np.cross(f, a)
    mats = np.stack([f, a, zrow], axis=1)
    return mats, wrist


def pose_series(
    script: MotionScript, arm: ArmModel, tau: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Truth orientation matrices and wrist positions at script times tau."""
    if script.variant in ("write_letters", "draw_lines"):
        wrist = _path_curve(script, tau)
        return _ik_from_wrist(wrist, arm)
    alpha, psi, chi = _joint_curves(script, tau)
    return _fk_from_joints(alpha, psi, chi, arm)


# ---------------------------------------------------------------------------
# Trace synthesis
# ---------------------------------------------------------------------------


@dataclass
class NoiseModel:
    gyro_noise_std: float = 0.0  # rad/s per axis
    gyro_bias: np.ndarray = dc_field(default_factory=lambda: np.zeros(3))  # rad/s
    accel_noise_std: float = 0.0  # m/s^2 per axis
    mag_noise_std: float = 0.0  # uT per axis

    def __post_init__(self) -> None:
        if min(self.gyro_noise_std, self.accel_noise_std, self.mag_noise_std) < 0:
            raise ValueError("noise standard deviations must be non-negative")
        self.gyro_bias = np.asarray(self.gyro_bias, dtype=float)


GRAVITY_VEC = np.array([0.0, 0.0, 9.8])


def synthesize_trace(
    field: FieldModel,
    motion: MotionScript,
    arm: Optional[ArmModel] = None,
    noise: Optional[NoiseModel] = None,
    rate_hz: float = 50.0,
    label: str = "",
) -> ImuTrace:
    """Generate a ground-truthed IMU trace for a scripted scenario."""
    arm = arm or ArmModel()
    noise = noise or NoiseModel()
    dt = 1.0 / rate_hz
    n = int(round((STATIC_LEAD + motion.duration) * rate_hz)) + 1
    t = np.arange(n) * dt
    tau = np.maximum(t - STATIC_LEAD, 0.0)
    mats, wrist = pose_series(motion, arm, tau)

    rotations = [Rotation.from_matrix(m) for m in mats]

    # Gyro: exact body-frame increment over each preceding interval.
    gyro = np.zeros((n, 3))
    for k in range(1, n):
        gyro[k] = rotations[k - 1].sensor_delta_to(rotations[k]) / dt

    # Linear acceleration of the wrist (central second difference).
    lin = np.zeros((n, 3))
    if n >= 3:
        lin[1:-1] = (wrist[2:] - 2.0 * wrist[1:-1] + wrist[:-2]) / (dt * dt)
        lin[0] = lin[1]
        lin[-1] = lin[-2]

    # Express specific force and field in the watch frame: v_wrf = M @ v_grf.
    accel_grf = lin + GRAVITY_VEC
    accel_wrf = np.einsum("nij,nj->ni", mats, accel_grf)
    field_grf = field.field(wrist)
    mag_wrf = np.einsum("nij,nj->ni", mats, field_grf)

    rng = np.random.default_rng(motion.seed + 0x5EED)
    gyro_out = gyro + noise.gyro_bias
    if noise.gyro_noise_std > 0:
        gyro_out = gyro_out + rng.normal(0.0, noise.gyro_noise_std, size=(n, 3))
    if noise.accel_noise_std > 0:
        accel_wrf = accel_wrf + rng.normal(0.0, noise.accel_noise_std, size=(n, 3))
    if noise.mag_noise_std > 0:
        mag_wrf = mag_wrf + rng.normal(0.0, noise.mag_noise_std, size=(n, 3))

    samples = [
        ImuSample(t=float(t[k]), gyro=gyro_out[k], accel=accel_wrf[k], mag=mag_wrf[k])
        for k in range(n)
    ]
    truth = [
        GroundTruth(t=float(t[k]), orientation=rotations[k], location=wrist[k])
        for k in range(n)
    ]
    name = label or f"{field.variant}+{motion.variant}"
    return ImuTrace(samples=samples, truth=truth, meta=TraceMeta(scenario=name, seed=motion.seed))


def mix_distortion(trace: ImuTrace, k_c: float, reference_dir: np.ndarray) -> ImuTrace:
    """Blend each magnetometer direction toward a reference GRF direction.

    Each reading becomes |mag| * unit(k_c * unit(mag) + (1 - k_c) * r_wrf)
    where r_wrf is the reference direction carried into the watch frame
    by the true orientation; magnitudes are preserved. k_c = 1 keeps the
    original directions, k_c = 0 aligns every reading with the reference.
    """
    if trace.truth is None:
        raise MissingGroundTruthError("distortion mixing needs ground-truth orientation")
    if not 0.0 <= k_c <= 1.0:
        raise ValueError("k_c must lie in [0, 1]")
    ref = normalize(reference_dir)
    samples = []
    for s, g in zip(trace.samples, trace.truth):
        m = s.mag
        norm = float(np.linalg.norm(m))
        if norm < 1e-12:
            samples.append(ImuSample(t=s.t, gyro=s.gyro, accel=s.accel, mag=m.copy()))
            continue
        ref_wrf = g.orientation.apply_inverse(ref)
        blend = k_c * (m / norm) + (1.0 - k_c) * ref_wrf
        bn = float(np.linalg.norm(blend))
        direction = blend / bn if bn > 1e-12 else m / norm
        samples.append(ImuSample(t=s.t, gyro=s.gyro, accel=s.accel, mag=norm * direction))
    return ImuTrace(samples=samples, truth=list(trace.truth), meta=trace.meta)


def star_catalog(n: int, seed: int) -> np.ndarray:
    """n unit directions uniform on the sphere, deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    norms = np.linalg.norm(v, axis=1)
    norms[norms < 1e-12] = 1.0
    return v / norms[:, None]
