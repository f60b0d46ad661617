"""Timestamped IMU samples, traces, ground truth, and their CSV format.

Trace CSV layout (one row per sample, ``\\n`` line endings, ``.`` radix):

    t,gx,gy,gz,ax,ay,az,mx,my,mz[,qw,qx,qy,qz,px,py,pz]

The seven optional columns carry ground truth: orientation as a unit
quaternion (w, x, y, z) in the package's row-vector convention, then the
GRF location in metres. A file has either 10 or 17 columns, never mixed.
An optional leading ``# scenario=...,seed=...`` comment preserves trace
metadata across round trips; readers tolerate its absence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geom import Rotation

__all__ = [
    "ParseError",
    "MonotonicityError",
    "ImuSample",
    "GroundTruth",
    "TraceMeta",
    "ImuTrace",
    "read_trace",
    "write_trace",
]

NOMINAL_DT = 0.020  # seconds; 50 Hz sampling
_JITTER_TOL = 1e-6  # max deviation from the trace's own sample spacing


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MonotonicityError(ValueError):
    def __init__(self, t_prev: float, t: float):
        super().__init__(f"timestamps must strictly increase: {t_prev} -> {t}")
        self.t_prev = t_prev
        self.t = t


@dataclass
class ImuSample:
    t: float
    gyro: np.ndarray  # rad/s, WRF
    accel: np.ndarray  # m/s^2, WRF
    mag: np.ndarray  # uT, WRF


@dataclass
class GroundTruth:
    t: float
    orientation: Rotation  # WRF -> GRF
    location: np.ndarray  # m, GRF


@dataclass
class TraceMeta:
    scenario: str = ""
    seed: int = 0


@dataclass
class ImuTrace:
    samples: list[ImuSample]
    truth: Optional[list[GroundTruth]] = None
    meta: TraceMeta = field(default_factory=TraceMeta)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        if not self.samples:
            return 0.0
        return self.samples[-1].t - self.samples[0].t

    def validate(self) -> None:
        """Check timestamp monotonicity, rate stability, finiteness, truth pairing."""
        if self.truth is not None and len(self.truth) != len(self.samples):
            raise ValueError(
                f"truth length {len(self.truth)} != sample length {len(self.samples)}"
            )
        prev_t = None
        dt0 = None
        for i, s in enumerate(self.samples):
            for name, v in (("gyro", s.gyro), ("accel", s.accel), ("mag", s.mag)):
                if v.shape != (3,) or not np.all(np.isfinite(v)):
                    raise ValueError(f"sample {i}: non-finite or misshapen {name}")
            if not math.isfinite(s.t):
                raise ValueError(f"sample {i}: non-finite timestamp")
            if prev_t is not None:
                if s.t <= prev_t:
                    raise MonotonicityError(prev_t, s.t)
                dt = s.t - prev_t
                if dt0 is None:
                    dt0 = dt
                elif abs(dt - dt0) > _JITTER_TOL:
                    raise ValueError(
                        f"sample {i}: spacing {dt:.9f} deviates from {dt0:.9f}"
                    )
            prev_t = s.t
        if self.truth is not None:
            for i, (s, g) in enumerate(zip(self.samples, self.truth)):
                if abs(s.t - g.t) > _JITTER_TOL:
                    raise ValueError(f"truth {i}: timestamp mismatch {g.t} vs {s.t}")

    def truncated(self, n: int) -> "ImuTrace":
        """First n samples (and paired truth) as a new trace; meta preserved."""
        return ImuTrace(
            samples=self.samples[:n],
            truth=None if self.truth is None else self.truth[:n],
            meta=self.meta,
        )


_HEADER_PLAIN = "t,gx,gy,gz,ax,ay,az,mx,my,mz"
_HEADER_TRUTH = _HEADER_PLAIN + ",qw,qx,qy,qz,px,py,pz"


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_trace(trace: ImuTrace, path: str | Path) -> None:
    """Write a validated trace; 9 significant digits per value."""
    trace.validate()
    with_truth = trace.truth is not None
    lines = [f"# scenario={trace.meta.scenario},seed={trace.meta.seed}"]
    lines.append(_HEADER_TRUTH if with_truth else _HEADER_PLAIN)
    for i, s in enumerate(trace.samples):
        vals = [s.t, *s.gyro, *s.accel, *s.mag]
        if with_truth:
            g = trace.truth[i]
            vals.extend(g.orientation.quat_tuple)
            vals.extend(g.location)
        lines.append(",".join(_fmt(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> ImuTrace:
    """Parse and validate a trace CSV; see the module docstring for the format."""
    text = Path(path).read_text()
    meta = TraceMeta()
    lines = text.splitlines()
    lineno = 0
    if lines and lines[0].startswith("#"):
        body = lines[0][1:].strip()
        for part in body.split(","):
            if "=" in part:
                k, v = part.split("=", 1)
                if k.strip() == "scenario":
                    meta.scenario = v.strip()
                elif k.strip() == "seed":
                    try:
                        meta.seed = int(v.strip())
                    except ValueError:
                        raise ParseError(1, f"bad seed value {v!r}")
        lines = lines[1:]
        lineno = 1
    if not lines:
        raise ParseError(lineno + 1, "missing header line")
    header = lines[0].strip()
    lineno += 1
    if header == _HEADER_TRUTH:
        with_truth = True
    elif header == _HEADER_PLAIN:
        with_truth = False
    else:
        raise ParseError(lineno, f"unrecognized header {header!r}")
    ncols = 17 if with_truth else 10

    samples: list[ImuSample] = []
    truth: Optional[list[GroundTruth]] = [] if with_truth else None
    prev_t = None
    for raw in lines[1:]:
        lineno += 1
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != ncols:
            raise ParseError(lineno, f"expected {ncols} columns, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(lineno, str(exc))
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(lineno, "non-finite value")
        t = vals[0]
        if prev_t is not None and t <= prev_t:
            raise MonotonicityError(prev_t, t)
        prev_t = t
        samples.append(
            ImuSample(
                t=t,
                gyro=np.array(vals[1:4]),
                accel=np.array(vals[4:7]),
                mag=np.array(vals[7:10]),
            )
        )
        if with_truth:
            truth.append(
                GroundTruth(
                    t=t,
                    orientation=Rotation.from_quat(*vals[10:14]),
                    location=np.array(vals[14:17]),
                )
            )
    trace = ImuTrace(samples=samples, truth=truth, meta=meta)
    trace.validate()
    return trace


def as_arrays(trace: ImuTrace) -> dict[str, np.ndarray]:
    """Column-major views of a trace for vectorized metric work."""
    n = len(trace.samples)
    out = {
        "t": np.array([s.t for s in trace.samples]),
        "gyro": np.array([s.gyro for s in trace.samples]).reshape(n, 3),
        "accel": np.array([s.accel for s in trace.samples]).reshape(n, 3),
        "mag": np.array([s.mag for s in trace.samples]).reshape(n, 3),
    }
    return out
