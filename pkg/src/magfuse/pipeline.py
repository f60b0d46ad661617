"""End-to-end estimation pipeline and its metrics.

Per sample the pipeline: updates the motion-intensity index, queries the
anchor database at the latest available location (the previous filter
output, linearly extended over blank steps), fuses one filter step with
whatever anchor is available, runs the particle filter every ``k_pf``-th
step, and feeds the database an anchor computed from the fused
orientation at the freshest location estimate.

Estimators share this loop and differ only in their anchor policy:

- ``mdr``: database anchors (when the database is active; otherwise the
  constant nominal anchor);
- ``muse``: constant nominal anchor;
- ``avoid``: constant nominal anchor with the magnetometer weight scaled
  by (1 - lambda) each step;
- ``gyro-acc``: no magnetic calibration at all.

With ``database="auto"`` the detector sees the magnitudes of the first
``detect_window_s`` seconds and the database is enabled only when they
look distorted; the decision is taken once, at the step where the
window elapses, using only samples before that step (no lookahead).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .baselines import AvoidConfig, avoid_lambda, avoid_weight
from .cfilter import FilterConfig, FilterState, fuse_step, initialize
from .detector import DetectorConfig, is_distortion_free
from .geom import Rotation, orientation_error
from .magdb import (
    AnchorVoxelGrid,
    IaiTracker,
    ZeroFieldError,
    compute_anchor,
    database_error,
    iai_step,
    memory_footprint,
    query,
    update,
)
from .pfilter import (
    ArmModel,
    PfConfig,
    estimate_location,
    init_particle_set,
    interpolate_blank_steps,
    pf_step,
)
from .simgen import GRAVITY_VEC, north_with_dip
from .traces import ImuTrace

__all__ = [
    "ConfigError",
    "ESTIMATORS",
    "RunConfig",
    "MetricsReport",
    "run_pipeline",
    "star_coverage",
    "write_metrics_csv",
]

ESTIMATORS = ("mdr", "muse", "avoid", "gyro-acc")

ROW_COLUMNS = (
    "t",
    "ori_err_deg",
    "loc_err_m",
    "iai",
    "lam",
    "db_voxels",
    "anchor_used",
)

_FRUSTUM_TAN_H = math.tan(math.radians(60.0))  # 120 deg horizontal range
_FRUSTUM_TAN_V = math.tan(math.radians(30.0))  # 60 deg vertical range


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    estimator: str = "mdr"
    seed: int = 0
    database: str = "auto"  # auto | on | off
    adaptive: bool = True
    l_db: float = 0.1
    detect_window_s: float = 30.0
    double_filter: bool = False
    nominal_anchor: np.ndarray = dc_field(default_factory=lambda: north_with_dip(60.0))
    filter_cfg: FilterConfig = dc_field(default_factory=FilterConfig)
    detector_cfg: DetectorConfig = dc_field(default_factory=DetectorConfig)
    pf_cfg: PfConfig = dc_field(default_factory=PfConfig)
    arm: ArmModel = dc_field(default_factory=ArmModel)
    avoid_cfg: AvoidConfig = dc_field(default_factory=AvoidConfig)
    db_error_stride: int = 250  # samples between database-error snapshots
    star_stride: int = 0  # 0 disables per-step star coverage

    def __post_init__(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.database not in ("auto", "on", "off"):
            raise ConfigError(f"database must be auto/on/off, not {self.database!r}")
        if self.l_db <= 0:
            raise ConfigError("l_db must be positive")
        self.nominal_anchor = np.asarray(self.nominal_anchor, dtype=float)


@dataclass
class MetricsReport:
    estimator: str
    rows: np.ndarray  # (n, len(ROW_COLUMNS))
    aggregates: dict
    db_error_series: list  # (t, degrees) tuples
    star_series: list  # (t, percent) tuples
    wall_seconds: float
    sim_seconds: float

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, ROW_COLUMNS.index(name)]

    @property
    def wall_per_sim_second(self) -> float:
        return self.wall_seconds / self.sim_seconds if self.sim_seconds > 0 else 0.0


def _compute_aggregates(
    rows: np.ndarray,
    grid: Optional[AnchorVoxelGrid],
    db_error_series: list,
    star_series: list,
) -> dict:
    def col(name: str) -> np.ndarray:
        return rows[:, ROW_COLUMNS.index(name)]

    agg: dict = {}
    if rows.shape[0]:
        ori = col("ori_err_deg")
        loc = col("loc_err_m")
        agg["mean_ori_err_deg"] = float(np.nanmean(ori)) if np.any(np.isfinite(ori)) else math.nan
        agg["mean_loc_err_m"] = float(np.nanmean(loc)) if np.any(np.isfinite(loc)) else math.nan
        agg["mean_iai"] = float(col("iai").mean())
        agg["mean_lambda"] = float(col("lam").mean())
        agg["final_db_voxels"] = float(col("db_voxels")[-1])
        agg["anchor_used_fraction"] = float(col("anchor_used").mean())
    if grid is not None and len(grid):
        agg["db_mean_visits_per_voxel"] = grid.mean_visits
        agg["db_memory_bytes"] = float(memory_footprint(grid))
    if db_error_series:
        agg["final_db_error_deg"] = float(db_error_series[-1][1])
    if star_series:
        agg["mean_star_coverage_pct"] = float(np.mean([v for _, v in star_series]))
    return agg


def star_coverage(est: Rotation, truth: Rotation, stars: np.ndarray) -> float:
    """Percentage of truth-viewport stars also inside the estimated viewport.

    Viewport: camera axis along watch X, up along watch Y, right along
    watch Z; 120 degrees horizontal field, 60 vertical. An empty truth
    viewport counts as full coverage.
    """
    stars = np.asarray(stars, dtype=float)
    if stars.ndim != 2 or stars.shape[0] == 0:
        raise ValueError("star catalog must be a nonempty (n, 3) array")
    in_truth = _in_frustum(stars, truth)
    n_truth = int(in_truth.sum())
    if n_truth == 0:
        return 100.0
    in_both = in_truth & _in_frustum(stars, est)
    return 100.0 * float(in_both.sum()) / n_truth


def _in_frustum(stars: np.ndarray, rot: Rotation) -> np.ndarray:
    m = rot.matrix
    forward = stars @ m[0]
    up = stars @ m[1]
    right = stars @ m[2]
    return (
        (forward > 0.0)
        & (np.abs(right) <= forward * _FRUSTUM_TAN_H)
        & (np.abs(up) <= forward * _FRUSTUM_TAN_V)
    )


def run_pipeline(
    trace: ImuTrace,
    cfg: RunConfig,
    true_field: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    stars: Optional[np.ndarray] = None,
) -> MetricsReport:
    """Run one estimator over one trace and collect per-step metrics."""
    start_wall = time.perf_counter()
    trace.validate()
    samples = trace.samples
    if len(samples) < 3:
        raise ConfigError("trace too short")
    fcfg = cfg.filter_cfg
    dt = samples[1].t - samples[0].t
    t0 = samples[0].t
    n_init = int(round(fcfg.init_window / dt)) + 1
    if len(samples) <= n_init:
        raise ConfigError(
            f"trace has {len(samples)} samples, needs more than the "
            f"{n_init}-sample initialization window"
        )
    state = initialize(samples[:n_init], fcfg)

    rng_pf = np.random.default_rng([cfg.seed, 1])
    rng_tent = np.random.default_rng([cfg.seed, 2])
    pset = init_particle_set(state.theta, cfg.arm, cfg.pf_cfg, rng_pf)
    x0 = estimate_location(pset)
    pf_outputs: list[tuple[float, np.ndarray]] = [(samples[n_init - 1].t, x0)]
    dt_eff = cfg.pf_cfg.k_pf * dt

    grid: Optional[AnchorVoxelGrid] = None
    db_active = False
    if cfg.estimator == "mdr" and cfg.database == "on":
        grid = AnchorVoxelGrid(l_db=cfg.l_db)
        db_active = True
    auto_mode = cfg.estimator == "mdr" and cfg.database == "auto"
    # The decision step cannot precede the initialization window's end.
    decision_step = max(int(round(cfg.detect_window_s / dt)), n_init)
    detect_mags: list[float] = []
    if auto_mode:
        detect_mags = [float(np.linalg.norm(s.mag)) for s in samples[:n_init]]

    iai = IaiTracker()
    rows = []
    db_error_series: list[tuple[float, float]] = []
    star_series: list[tuple[float, float]] = []
    truth = trace.truth

    for k in range(n_init, len(samples)):
        s = samples[k]
        dt_k = s.t - samples[k - 1].t

        if auto_mode and grid is None and k == decision_step:
            if not is_distortion_free(detect_mags, cfg.detector_cfg):
                grid = AnchorVoxelGrid(l_db=cfg.l_db)
                db_active = True
        if auto_mode and k < decision_step:
            detect_mags.append(float(np.linalg.norm(s.mag)))

        iai = iai_step(iai, s.gyro)

        # Location available before this step's inference.
        if len(pf_outputs) == 1:
            x_query = pf_outputs[0][1]
        else:
            (t1, x1), (t2, x2) = pf_outputs[-2], pf_outputs[-1]
            x_query = interpolate_blank_steps(x1, t1, x2, t2, s.t)

        anchor = None
        if db_active:
            if cfg.double_filter:
                anchor = None  # resolved below via the two-pass scheme
            else:
                anchor = query(grid, x_query)
        elif cfg.estimator != "gyro-acc":
            anchor = cfg.nominal_anchor

        lam = 0.0
        k_m_eff = None
        if cfg.estimator == "avoid":
            lam = avoid_lambda(s.mag, state.theta, cfg.avoid_cfg)
            k_m_eff = avoid_weight(lam, fcfg.k_m)

        pf_due = (k - n_init + 1) % cfg.pf_cfg.k_pf == 0

        if db_active and cfg.double_filter:
            tentative = fuse_step(state, s, None, fcfg, dt_k)
            if pf_due:
                lin_t = tentative.theta.apply(s.accel) - GRAVITY_VEC
                tent_set = pf_step(
                    _copy_particles(pset), tentative.theta, lin_t,
                    cfg.arm, cfg.pf_cfg, rng_tent, dt_eff,
                )
                x_tent = estimate_location(tent_set)
            else:
                x_tent = x_query
            anchor = query(grid, x_tent)

        state = fuse_step(state, s, anchor, fcfg, dt_k, k_m=k_m_eff)

        if pf_due:
            lin = state.theta.apply(s.accel) - GRAVITY_VEC
            pset = pf_step(pset, state.theta, lin, cfg.arm, cfg.pf_cfg, rng_pf, dt_eff)
            x_loc = estimate_location(pset)
            pf_outputs.append((s.t, x_loc))
            if len(pf_outputs) > 2:
                pf_outputs = pf_outputs[-2:]
        else:
            x_loc = x_query

        if db_active:
            try:
                anchor_n = compute_anchor(s.mag, state.theta)
            except ZeroFieldError:
                anchor_n = None
            if anchor_n is not None:
                update(grid, x_loc, anchor_n, iai, cfg.adaptive)

        if truth is not None:
            g = truth[k]
            ori_err = orientation_error(state.theta, g.orientation)
            loc_err = float(np.linalg.norm(x_loc - g.location))
        else:
            ori_err = math.nan
            loc_err = math.nan
        rows.append(
            (
                s.t,
                ori_err,
                loc_err,
                iai.iai,
                lam,
                float(len(grid)) if grid is not None else 0.0,
                1.0 if anchor is not None else 0.0,
            )
        )

        idx = k - n_init
        if (
            true_field is not None
            and grid is not None
            and len(grid)
            and idx % cfg.db_error_stride == 0
        ):
            db_error_series.append((s.t, database_error(grid, true_field)))
        if (
            stars is not None
            and truth is not None
            and cfg.star_stride > 0
            and idx % cfg.star_stride == 0
        ):
            star_series.append((s.t, star_coverage(state.theta, truth[k].orientation, stars)))

    rows_arr = np.array(rows, dtype=float) if rows else np.empty((0, len(ROW_COLUMNS)))
    agg = _compute_aggregates(rows_arr, grid, db_error_series, star_series)
    wall = time.perf_counter() - start_wall
    sim_seconds = samples[-1].t - t0
    return MetricsReport(
        estimator=cfg.estimator,
        rows=rows_arr,
        aggregates=agg,
        db_error_series=db_error_series,
        star_series=star_series,
        wall_seconds=wall,
        sim_seconds=sim_seconds,
    )


def _copy_particles(pset):
    from .pfilter import ParticleSet

    return ParticleSet(
        flexion=pset.flexion.copy(),
        loc_prev=pset.loc_prev.copy(),
        loc_curr=pset.loc_curr.copy(),
        loc_next=pset.loc_next.copy(),
        weights=pset.weights.copy(),
    )


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_metrics_csv(report: MetricsReport, path: str | Path) -> None:
    """Per-step rows, then aggregate and series footers as comments.

    Wall-clock timing deliberately stays out of the file so identical
    seeds produce byte-identical output.
    """
    lines = [",".join(ROW_COLUMNS)]
    for row in report.rows:
        lines.append(",".join(_fmt(v) for v in row))
    lines.append(f"# meta estimator={report.estimator}")
    for key in sorted(report.aggregates):
        lines.append(f"# agg {key}={_fmt(report.aggregates[key])}")
    for t, v in report.db_error_series:
        lines.append(f"# db_error {_fmt(t)}={_fmt(v)}")
    for t, v in report.star_series:
        lines.append(f"# star {_fmt(t)}={_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")
