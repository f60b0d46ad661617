"""Experiment procedures built on the pipeline: distortion-level
comparisons, database convergence, adaptive-vs-naive updating, the
spatial-resolution sweep, the detection benchmark, and the
particle-filter interval study.

The scenario builders here define the package's standard synthetic
suites: sensor noise plus a per-seed gyro bias of 0.2 deg/s in a random
direction, an exercise-style motion that keeps revisiting the arm
workspace, and field models whose distortion level is the controlled
variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .detector import DetectorConfig, criterion_a, criterion_b, distortion_magnitude
from .magdb import AnchorVoxelGrid, IaiTracker, database_error, iai_step, update
from .pipeline import MetricsReport, RunConfig, run_pipeline
from .simgen import (
    STATIC_LEAD,
    WORKSPACE_CENTER,
    FieldModel,
    MotionScript,
    NoiseModel,
    field_direction_fn,
    north_with_dip,
    synthesize_trace,
)
from .traces import ImuTrace

__all__ = [
    "Scenario",
    "build_scenario",
    "standard_noise",
    "distortion_level_benchmark",
    "convergence_run",
    "adaptive_vs_naive",
    "resolution_sweep",
    "DetectionStats",
    "detection_benchmark",
    "pf_interval_study",
    "compare_estimators",
]

GYRO_BIAS_RATE = math.radians(0.2)  # rad/s, magnitude of the per-seed bias


@dataclass
class Scenario:
    """A generated trace bundled with what the generator knows about it."""

    trace: ImuTrace
    field: FieldModel
    nominal_anchor: np.ndarray
    label: str

    @property
    def true_field(self) -> Callable[[np.ndarray], np.ndarray]:
        return field_direction_fn(self.field)


def standard_noise(seed: int, bias_rate: float = GYRO_BIAS_RATE) -> NoiseModel:
    """Sensor noise with a random-direction gyro bias of fixed magnitude."""
    rng = np.random.default_rng([seed, 77])
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return NoiseModel(
        gyro_noise_std=0.002,
        gyro_bias=bias_rate * axis,
        accel_noise_std=0.05,
        mag_noise_std=0.5,
    )


def build_scenario(
    field_variant: str,
    distortion_deg: float,
    seed: int,
    duration: float = 300.0,
    motion_variant: str = "exercise",
    noise: Optional[NoiseModel] = None,
    zero_noise: bool = False,
) -> Scenario:
    """One standard scenario: a field at a distortion level plus arm motion."""
    if field_variant == "uniform":
        field = FieldModel(variant="uniform", seed=seed)
    elif field_variant == "smooth":
        field = FieldModel(
            variant="smooth",
            distortion_amplitude=distortion_deg,
            spatial_scale=0.5,
            magnitude_jitter=0.15 * distortion_deg,
            seed=seed,
        )
    elif field_variant == "corridor":
        field = FieldModel(
            variant="corridor",
            distortion_amplitude=distortion_deg,
            spatial_scale=0.35,
            magnitude_jitter=1.0,
            seed=seed,
        )
    else:
        raise ValueError(f"unknown field variant {field_variant!r}")
    motion = MotionScript(variant=motion_variant, duration=duration, seed=seed)
    if zero_noise:
        noise = NoiseModel()
    elif noise is None:
        noise = standard_noise(seed)
    label = f"{field_variant}-{distortion_deg:g}deg-{motion_variant}"
    trace = synthesize_trace(field, motion, noise=noise, label=label)
    return Scenario(trace=trace, field=field, nominal_anchor=field.base_direction.copy(), label=label)


def _run(scenario: Scenario, cfg: RunConfig, **kwargs) -> MetricsReport:
    cfg = replace(cfg, nominal_anchor=scenario.nominal_anchor)
    return run_pipeline(scenario.trace, cfg, true_field=scenario.true_field, **kwargs)


def post_warmup_mean_error(report: MetricsReport, warmup_s: float) -> float:
    """Mean orientation error over rows at least warmup_s into the trace."""
    t = report.column("t")
    err = report.column("ori_err_deg")
    mask = t - t[0] >= warmup_s
    return float(err[mask].mean())


def distortion_level_benchmark(
    levels: Sequence[float] = (10.0, 20.0, 30.0),
    seeds: Sequence[int] = tuple(range(10)),
    estimators: Sequence[str] = ("mdr", "muse", "avoid"),
    duration: float = 300.0,
    warmup_s: float = 120.0,
    field_variant: str = "smooth",
) -> dict:
    """Mean post-warmup orientation error per (level, estimator).

    The database estimator runs with the database forced on so the
    warm-up window genuinely builds it.
    """
    results: dict = {}
    for level in levels:
        per_est: dict[str, list[float]] = {e: [] for e in estimators}
        for seed in seeds:
            scenario = build_scenario(field_variant, level, seed, duration=duration)
            for est in estimators:
                cfg = RunConfig(
                    estimator=est,
                    seed=seed,
                    database="on" if est == "mdr" else "off",
                )
                report = _run(scenario, cfg)
                per_est[est].append(post_warmup_mean_error(report, warmup_s))
        results[level] = {e: float(np.mean(v)) for e, v in per_est.items()}
    return results


def convergence_run(
    seed: int = 0,
    duration: float = 600.0,
    distortion_deg: float = 30.0,
) -> MetricsReport:
    """A long corridor run with database-error snapshots for convergence checks."""
    scenario = build_scenario("corridor", distortion_deg, seed, duration=duration)
    cfg = RunConfig(estimator="mdr", seed=seed, database="on", db_error_stride=250)
    return _run(scenario, cfg)


def adaptive_vs_naive(seed: int, n_steps: int = 4000) -> tuple[float, float]:
    """(adaptive error, naive error) for one seed of the updating experiment.

    A scripted walk revisits a small voxel neighbourhood while the gyro
    magnitude alternates between calm and vigorous phases; injected
    anchor noise grows with the motion-intensity index, so updates made
    during fast motion are the unreliable ones.
    """
    rng = np.random.default_rng([seed, 11])
    field = FieldModel(variant="smooth", distortion_amplitude=25.0, seed=seed)
    grid_a = AnchorVoxelGrid()
    grid_n = AnchorVoxelGrid()
    tracker = IaiTracker()
    # Random walk over a 5x5x5 voxel block.
    loc = WORKSPACE_CENTER.copy()
    half = 0.25
    phase_len = 150
    for step in range(n_steps):
        vigorous = (step // phase_len) % 2 == 1
        omega_mag = rng.uniform(2.0, 4.0) if vigorous else rng.uniform(0.0, 0.3)
        tracker = iai_step(tracker, np.array([omega_mag, 0.0, 0.0]))
        loc = loc + rng.normal(0.0, 0.035, size=3)
        loc = np.clip(loc, WORKSPACE_CENTER - half, WORKSPACE_CENTER + half)
        true_dir = field.direction(loc)
        err_deg = 2.0 + 10.0 * tracker.iai + abs(rng.normal(0.0, 1.0))
        axis = np.cross(true_dir, rng.normal(size=3))
        axis /= np.linalg.norm(axis)
        c, s = math.cos(math.radians(err_deg)), math.sin(math.radians(err_deg))
        observed = c * true_dir + s * np.cross(axis, true_dir)
        observed /= np.linalg.norm(observed)
        update(grid_a, loc, observed, tracker, adaptive=True)
        update(grid_n, loc, observed, tracker, adaptive=False)
    fn = field_direction_fn(field)
    return database_error(grid_a, fn), database_error(grid_n, fn)


def resolution_sweep(
    l_db_values: Sequence[float] = (0.025, 0.05, 0.1, 0.2, 0.4),
    seeds: Sequence[int] = (0, 1, 2),
    distortion_deg: float = 30.0,
    duration: float = 300.0,
    warmup_s: float = 120.0,
) -> list[tuple[float, float]]:
    """(l_db, mean post-warmup orientation error) rows, in input order."""
    out = []
    scenarios = [
        build_scenario("corridor", distortion_deg, seed, duration=duration)
        for seed in seeds
    ]
    for l_db in l_db_values:
        errs = []
        for seed, scenario in zip(seeds, scenarios):
            cfg = RunConfig(estimator="mdr", seed=seed, database="on", l_db=l_db)
            report = _run(scenario, cfg)
            errs.append(post_warmup_mean_error(report, warmup_s))
        out.append((float(l_db), float(np.mean(errs))))
    return out


@dataclass
class DetectionStats:
    precision: float
    recall: float
    f1: float


def _stats(tp: int, fp: int, fn: int) -> DetectionStats:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return DetectionStats(precision, recall, f1)


def detection_benchmark(
    n_scenarios: int = 200,
    seed: int = 0,
    cfg: Optional[DetectorConfig] = None,
) -> dict[str, DetectionStats]:
    """Precision/recall/F1 of the two criteria and their conjunction.

    Scenarios are labeled by the true field's distortion magnitude over
    the workspace (below the threshold means distortion-free, the
    positive class). The detector sees magnitudes sampled along a
    scripted walk with mild sensor noise.
    """
    cfg = cfg or DetectorConfig()
    rng = np.random.default_rng(seed)
    grid_ax = np.linspace(-0.35, 0.35, 7)
    gx, gy, gz = np.meshgrid(grid_ax, grid_ax, grid_ax, indexing="ij")
    label_grid = WORKSPACE_CENTER + np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    counts = {name: [0, 0, 0] for name in ("A", "B", "AB")}  # tp, fp, fn
    for i in range(n_scenarios):
        sub = int(rng.integers(0, 2**31 - 1))
        if i % 2 == 0:
            # Intended distortion-free flavors.
            if rng.random() < 0.3:
                field = FieldModel(variant="uniform", base_magnitude=rng.uniform(45, 55), seed=sub)
            else:
                field = FieldModel(
                    variant="smooth",
                    distortion_amplitude=rng.uniform(2.0, 9.0),
                    magnitude_jitter=rng.uniform(0.5, 2.5),
                    base_magnitude=rng.uniform(45, 55),
                    spatial_scale=0.6,
                    seed=sub,
                )
        else:
            # Intended distorted flavors, including borderline amplitudes.
            roll = rng.random()
            if roll < 0.45:
                field = FieldModel(
                    variant="corridor",
                    distortion_amplitude=rng.uniform(14.0, 45.0),
                    spatial_scale=0.35,
                    magnitude_jitter=1.0,
                    seed=sub,
                )
            elif roll < 0.85:
                field = FieldModel(
                    variant="smooth",
                    distortion_amplitude=rng.uniform(12.0, 40.0),
                    magnitude_jitter=rng.uniform(3.0, 10.0),
                    base_magnitude=rng.uniform(44, 56),
                    spatial_scale=0.5,
                    seed=sub,
                )
            else:
                field = FieldModel(
                    variant="smooth",
                    distortion_amplitude=rng.uniform(8.0, 14.0),
                    magnitude_jitter=rng.uniform(2.0, 5.0),
                    base_magnitude=rng.uniform(44, 56),
                    spatial_scale=0.5,
                    seed=sub,
                )
        label_free = (
            distortion_magnitude(field.direction(label_grid))
            < cfg.distortion_free_threshold
        )
        # A smooth scripted walk standing in for the first 30 s of data.
        steps = rng.normal(0.0, 0.02, size=(300, 3))
        walk = WORKSPACE_CENTER + np.clip(np.cumsum(steps, axis=0), -0.35, 0.35)
        mags = field.magnitude(walk) + rng.normal(0.0, 0.3, size=300)
        pred = {
            "A": criterion_a(mags, cfg),
            "B": criterion_b(mags, cfg),
        }
        pred["AB"] = pred["A"] and pred["B"]
        for name, p in pred.items():
            tp, fp, fn = counts[name]
            if p and label_free:
                tp += 1
            elif p and not label_free:
                fp += 1
            elif not p and label_free:
                fn += 1
            counts[name] = [tp, fp, fn]
    return {name: _stats(*c) for name, c in counts.items()}


def pf_interval_study(
    seeds: Sequence[int] = tuple(range(50)),
    noise_std: float = 0.005,
    duration: float = 30.0,
) -> list[float]:
    """Per-seed ratio of mean predicted-acceleration error at the
    aggregated interval versus the raw interval (expected near 1/25)."""
    dt = 0.02
    ratios = []
    for seed in seeds:
        script = MotionScript(variant="exercise", duration=duration, seed=seed)
        from .pfilter import ArmModel
        from .simgen import pose_series

        n = int(round(duration / dt)) + 1
        tau = np.arange(n) * dt
        _, wrist = pose_series(script, ArmModel(), tau)
        rng = np.random.default_rng([seed, 5])
        observed = wrist + rng.normal(0.0, noise_std, size=wrist.shape)
        errs = {}
        for k_pf in (1, 5):
            dt_eff = k_pf * dt
            w = wrist[::k_pf]
            o = observed[::k_pf]
            true_acc = (w[2:] - 2 * w[1:-1] + w[:-2]) / (dt_eff**2)
            pred_acc = (o[2:] - 2 * o[1:-1] + o[:-2]) / (dt_eff**2)
            errs[k_pf] = float(np.linalg.norm(pred_acc - true_acc, axis=1).mean())
        ratios.append(errs[5] / errs[1])
    return ratios


def compare_estimators(
    scenario: Scenario,
    estimators: Sequence[str] = ("mdr", "muse", "avoid", "gyro-acc"),
    seed: int = 0,
    database: str = "on",
) -> dict[str, MetricsReport]:
    out = {}
    for est in estimators:
        cfg = RunConfig(
            estimator=est,
            seed=seed,
            database=database if est == "mdr" else "off",
        )
        out[est] = _run(scenario, cfg)
    return out
