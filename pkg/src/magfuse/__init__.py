"""Magnetic-distortion-resistant IMU orientation estimation.

A complementary-filter estimator whose magnetic calibration anchors come
from a self-building voxel database of observed field directions, plus
the baselines, synthetic scenario generator, and evaluation harness
needed to exercise it end to end.
"""

from .geom import Rotation, angle_between, fractional_rotation, orientation_error
from .pipeline import RunConfig, run_pipeline, star_coverage
from .simgen import FieldModel, MotionScript, NoiseModel, synthesize_trace
from .traces import ImuSample, ImuTrace, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "Rotation",
    "angle_between",
    "fractional_rotation",
    "orientation_error",
    "RunConfig",
    "run_pipeline",
    "star_coverage",
    "FieldModel",
    "MotionScript",
    "NoiseModel",
    "synthesize_trace",
    "ImuSample",
    "ImuTrace",
    "read_trace",
    "write_trace",
    "__version__",
]
