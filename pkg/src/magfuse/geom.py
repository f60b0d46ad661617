"""Rotation and direction math shared by every other module.

Conventions used across the package:

- Vectors are plain numpy arrays of shape (3,), dtype float64.
- A "direction" is a unit vector (Euclidean norm within 1e-9 of 1).
- The global frame (GRF) is fixed: X = north, Y = west, Z = up.
- A :class:`Rotation` maps sensor-frame (WRF) vectors into the global
  frame by right multiplication with its 3x3 matrix::

      v_grf = v_wrf @ rot.matrix

  Composition with ``@`` follows the same row-vector reading:
  ``(a @ b).matrix == a.matrix @ b.matrix``, i.e. ``a`` acts first and
  ``b`` acts on the result, both expressed in the global frame.
  :meth:`Rotation.compose_sensor` instead composes an increment that is
  expressed in the rotating sensor frame (the natural frame for a rate
  gyro increment).

Rotations are stored as unit quaternions and renormalized after every
composition so that hour-long 50 Hz integrations stay orthonormal.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

__all__ = [
    "AntiparallelInputError",
    "ZeroVectorError",
    "Rotation",
    "vec3",
    "normalize",
    "is_unit",
    "angle_between",
    "rotation_from_two_directions",
    "fractional_rotation",
    "orientation_error",
]


class ZeroVectorError(ValueError):
    """A vector with (near-)zero norm was used where a direction is required."""


class AntiparallelInputError(ValueError):
    """The two input directions are antiparallel; the minimal rotation axis is undefined."""


def vec3(x: float, y: float, z: float) -> np.ndarray:
    """Build a float64 3-vector, rejecting non-finite components."""
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector component in {v!r}")
    return v


def normalize(v: Iterable[float]) -> np.ndarray:
    """Return ``v`` scaled to unit norm.

    Raises :class:`ZeroVectorError` when the norm is below 1e-12.
    """
    a = np.asarray(v, dtype=float)
    n = math.sqrt(float(a @ a))
    if n < 1e-12:
        raise ZeroVectorError("cannot normalize a (near-)zero vector")
    return a / n


def is_unit(v: np.ndarray, tol: float = 1e-9) -> bool:
    return abs(math.sqrt(float(v @ v)) - 1.0) <= tol


def _quat_mul(a: tuple, b: tuple) -> tuple:
    """Hamilton product a*b (apply b first, then a, as active rotations)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _quat_normalize(q: tuple) -> tuple:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n < 1e-12:
        raise ZeroVectorError("degenerate quaternion")
    return (w / n, x / n, y / n, z / n)


_ID_Q = (1.0, 0.0, 0.0, 0.0)


class Rotation:
    """A proper rotation, stored as a unit quaternion.

    Immutable. The ``matrix`` property returns the 3x3 row-convention
    matrix (``v_grf = v_wrf @ matrix``); it is computed lazily and cached.
    """

    __slots__ = ("_q", "_mat")

    def __init__(self, q: tuple):
        self._q = _quat_normalize(q)
        self._mat = None

    # -- constructors ----------------------------------------------------

    @classmethod
    def identity(cls) -> "Rotation":
        return _IDENTITY

    @classmethod
    def from_quat(cls, w: float, x: float, y: float, z: float) -> "Rotation":
        return cls((float(w), float(x), float(y), float(z)))

    @classmethod
    def from_axis_angle(cls, axis: Iterable[float], angle_rad: float) -> "Rotation":
        ax = normalize(axis)
        half = 0.5 * float(angle_rad)
        s = math.sin(half)
        return cls((math.cos(half), s * ax[0], s * ax[1], s * ax[2]))

    @classmethod
    def from_rotvec(cls, rotvec: Iterable[float]) -> "Rotation":
        """Rotation by |rotvec| radians about rotvec's direction; zero vector gives identity."""
        v = np.asarray(rotvec, dtype=float)
        angle = math.sqrt(float(v @ v))
        if angle < 1e-15:
            return _IDENTITY
        return cls.from_axis_angle(v / angle, angle)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Rotation":
        """Build from a row-convention matrix (``v_grf = v_wrf @ m``)."""
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        # Shepperd's method on the column-convention matrix (the transpose).
        r = m.T
        tr = r[0, 0] + r[1, 1] + r[2, 2]
        if tr > 0.0:
            s = math.sqrt(tr + 1.0) * 2.0
            w = 0.25 * s
            x = (r[2, 1] - r[1, 2]) / s
            y = (r[0, 2] - r[2, 0]) / s
            z = (r[1, 0] - r[0, 1]) / s
        elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
            s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
            w = (r[2, 1] - r[1, 2]) / s
            x = 0.25 * s
            y = (r[0, 1] + r[1, 0]) / s
            z = (r[0, 2] + r[2, 0]) / s
        elif r[1, 1] > r[2, 2]:
            s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
            w = (r[0, 2] - r[2, 0]) / s
            x = (r[0, 1] + r[1, 0]) / s
            y = 0.25 * s
            z = (r[1, 2] + r[2, 1]) / s
        else:
            s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
            w = (r[1, 0] - r[0, 1]) / s
            x = (r[0, 2] + r[2, 0]) / s
            y = (r[1, 2] + r[2, 1]) / s
            z = 0.25 * s
        return cls((w, x, y, z))

    # -- accessors -------------------------------------------------------

    @property
    def quat(self) -> np.ndarray:
        """Quaternion as array [w, x, y, z]."""
        return np.array(self._q)

    @property
    def quat_tuple(self) -> tuple:
        return self._q

    @property
    def matrix(self) -> np.ndarray:
        if self._mat is None:
            w, x, y, z = self._q
            xx, yy, zz = x * x, y * y, z * z
            wx, wy, wz = w * x, w * y, w * z
            xy, xz, yz = x * y, x * z, y * z
            # Transpose of the standard column-convention matrix.
            self._mat = np.array(
                [
                    [1.0 - 2.0 * (yy + zz), 2.0 * (xy + wz), 2.0 * (xz - wy)],
                    [2.0 * (xy - wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz + wx)],
                    [2.0 * (xz + wy), 2.0 * (yz - wx), 1.0 - 2.0 * (xx + yy)],
                ]
            )
        return self._mat

    def axis_angle(self) -> tuple[np.ndarray, float]:
        """(unit axis, angle in radians), angle in [0, pi]; identity gives ((1,0,0), 0)."""
        w, x, y, z = self._q
        if w < 0.0:
            w, x, y, z = -w, -x, -y, -z
        s = math.sqrt(x * x + y * y + z * z)
        if s < 1e-15:
            return np.array([1.0, 0.0, 0.0]), 0.0
        angle = 2.0 * math.atan2(s, w)
        return np.array([x / s, y / s, z / s]), angle

    def as_rotvec(self) -> np.ndarray:
        axis, angle = self.axis_angle()
        return axis * angle

    @property
    def angle_deg(self) -> float:
        """Total rotation angle in degrees, in [0, 180]."""
        w, x, y, z = self._q
        s = math.sqrt(x * x + y * y + z * z)
        return math.degrees(2.0 * math.atan2(s, abs(w)))

    # -- operations ------------------------------------------------------

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Map a WRF vector into GRF (``v @ matrix``)."""
        return np.asarray(v, dtype=float) @ self.matrix

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        """Map a GRF vector into WRF."""
        return np.asarray(v, dtype=float) @ self.matrix.T

    def __matmul__(self, other: "Rotation") -> "Rotation":
        """Row-matrix composition: self acts first, then ``other`` (global frame)."""
        if other._q == _ID_Q:
            return self
        if self._q == _ID_Q:
            return other
        return Rotation(_quat_mul(other._q, self._q))

    def compose_sensor(self, delta: "Rotation") -> "Rotation":
        """Compose with an increment expressed in this rotation's sensor frame."""
        if delta._q == _ID_Q:
            return self
        return Rotation(_quat_mul(self._q, delta._q))

    def sensor_delta_to(self, other: "Rotation") -> np.ndarray:
        """Sensor-frame rotation vector delta with other == self.compose_sensor(delta)."""
        w, x, y, z = self._q
        return Rotation(_quat_mul((w, -x, -y, -z), other._q)).as_rotvec()

    @property
    def inverse(self) -> "Rotation":
        w, x, y, z = self._q
        return Rotation((w, -x, -y, -z))

    def fractional(self, k: float) -> "Rotation":
        return fractional_rotation(self, k)

    def is_identity(self, tol_deg: float = 0.0) -> bool:
        if tol_deg == 0.0:
            return self._q == _ID_Q
        return self.angle_deg <= tol_deg

    def __repr__(self) -> str:
        w, x, y, z = self._q
        return f"Rotation(w={w:.6f}, x={x:.6f}, y={y:.6f}, z={z:.6f})"


_IDENTITY = Rotation(_ID_Q)


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two unit directions, in degrees, in [0, 180].

    The dot product is clamped to [-1, 1] before the arccos.
    """
    d = float(np.asarray(a, dtype=float) @ np.asarray(b, dtype=float))
    d = max(-1.0, min(1.0, d))
    return math.degrees(math.acos(d))


def rotation_from_two_directions(measured: np.ndarray, target: np.ndarray) -> Rotation:
    """Minimal rotation carrying the unit direction ``measured`` onto ``target``.

    Axis is measured x target, angle the angle between them. Raises
    :class:`AntiparallelInputError` when the inputs are antiparallel
    (dot <= -1 + 1e-12) since the axis is then undefined.
    """
    m = np.asarray(measured, dtype=float)
    t = np.asarray(target, dtype=float)
    d = float(m @ t)
    if d <= -1.0 + 1e-12:
        raise AntiparallelInputError("directions are antiparallel; no unique minimal rotation")
    c = np.cross(m, t)
    s = math.sqrt(float(c @ c))
    if s < 1e-15:
        return _IDENTITY
    angle = math.atan2(s, d)
    return Rotation.from_axis_angle(c / s, angle)


def fractional_rotation(r: Rotation, k: float) -> Rotation:
    """Rotation about r's axis by k times r's angle, k in [0, 1]."""
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"fraction k must be in [0, 1], got {k}")
    if k == 0.0:
        return _IDENTITY
    if k == 1.0:
        return r
    axis, angle = r.axis_angle()
    if angle == 0.0:
        return _IDENTITY
    return Rotation.from_axis_angle(axis, k * angle)


def orientation_error(estimate: Rotation, truth: Rotation) -> float:
    """Minimum rotation angle (degrees) aligning the estimate with the truth."""
    return (truth.inverse @ estimate).angle_deg
