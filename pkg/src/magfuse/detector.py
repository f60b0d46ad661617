"""Distortion-free detection from magnetometer magnitudes, and the
angular distortion-magnitude metric.

A place is classified distortion-free when both criteria hold:

- criterion A: every magnitude lies inside [mag_lo, mag_hi] (inclusive);
- criterion B: the relative variance sigma/mean of the magnitudes is
  below ``rel_var_max`` (population standard deviation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geom import angle_between, normalize

__all__ = [
    "DetectorConfig",
    "EmptyInputError",
    "NonPositiveMeanError",
    "TooFewSamplesError",
    "DegenerateMeanError",
    "criterion_a",
    "criterion_b",
    "is_distortion_free",
    "distortion_magnitude",
]


class EmptyInputError(ValueError):
    pass


class NonPositiveMeanError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


class DegenerateMeanError(ValueError):
    pass


@dataclass
class DetectorConfig:
    mag_lo: float = 40.0  # uT
    mag_hi: float = 60.0  # uT
    rel_var_max: float = 0.135
    distortion_free_threshold: float = 10.0  # degrees; labels "free" fields

    def __post_init__(self) -> None:
        if not self.mag_lo < self.mag_hi:
            raise ValueError("mag_lo must be below mag_hi")
        if self.rel_var_max <= 0:
            raise ValueError("rel_var_max must be positive")


def criterion_a(magnitudes: Sequence[float], cfg: DetectorConfig) -> bool:
    """True iff every magnitude is inside [mag_lo, mag_hi] (bounds inclusive)."""
    m = np.asarray(magnitudes, dtype=float)
    if m.size == 0:
        raise EmptyInputError("criterion A needs at least one magnitude")
    return bool(np.all((m >= cfg.mag_lo) & (m <= cfg.mag_hi)))


def criterion_b(magnitudes: Sequence[float], cfg: DetectorConfig) -> bool:
    """True iff population std / mean is below rel_var_max."""
    m = np.asarray(magnitudes, dtype=float)
    if m.size == 0:
        raise EmptyInputError("criterion B needs at least one magnitude")
    mean = float(m.mean())
    if mean <= 0:
        raise NonPositiveMeanError(f"mean magnitude {mean} is not positive")
    return float(m.std()) / mean < cfg.rel_var_max


def is_distortion_free(magnitudes: Sequence[float], cfg: DetectorConfig) -> bool:
    return criterion_a(magnitudes, cfg) and criterion_b(magnitudes, cfg)


def distortion_magnitude(field_samples: Sequence[np.ndarray]) -> float:
    """Mean angular deviation (degrees) of unit field directions from their mean direction."""
    dirs = np.asarray(field_samples, dtype=float)
    if dirs.ndim != 2 or dirs.shape[0] < 2 or dirs.shape[1] != 3:
        raise TooFewSamplesError("need at least two 3-vector samples")
    total = dirs.sum(axis=0)
    norm = float(np.linalg.norm(total))
    if norm < 1e-9:
        raise DegenerateMeanError("sample directions cancel; mean direction undefined")
    mean_dir = total / norm
    cosines = np.clip(dirs @ mean_dir, -1.0, 1.0)
    return float(np.degrees(np.arccos(cosines)).mean())
