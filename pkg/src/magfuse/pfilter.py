"""Skeletal-constraint particle filter for wrist location.

Arm model: a fixed shoulder, an upper arm of configurable length ending
at a hinge elbow, and a forearm carrying the watch. The watch's X axis
points along the forearm and its Y axis is the elbow hinge axis, so a
watch orientation pins the forearm direction and the plane the upper
arm can move in. What remains free is one angle: the elbow flexion
``chi`` (0 = straight arm, positive = bent), limited to
[0, max_flexion]. Candidate wrist locations therefore live on a
one-parameter arc

    wrist(chi) = shoulder + L_u * rot(hinge, chi) @ forearm_dir * ... + L_f * forearm_dir

evaluated per particle; see :func:`arc_points`.

Each particle keeps its flexion angle and its last three wrist
locations. A step proposes a small random walk in flexion, scores each
particle by how well the second difference of its location history
matches the measured gravity-free acceleration, and replaces the
worst-scoring fraction with jittered copies of survivors. Resampling is
skipped while the weights are uninformative (high effective sample
size) so an idle filter does not random-walk away.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geom import Rotation, normalize

__all__ = [
    "InfeasiblePoseError",
    "IncompleteHistoryError",
    "DegenerateIntervalError",
    "ArmModel",
    "PfConfig",
    "Particle",
    "ParticleSet",
    "arc_frame",
    "arc_points",
    "reachable_set",
    "init_particle_set",
    "predicted_acceleration",
    "pf_step",
    "estimate_location",
    "interpolate_blank_steps",
]

log = logging.getLogger(__name__)

HINGE_AXIS_WRF = np.array([0.0, 1.0, 0.0])
_POSE_SLACK_M = 0.01  # tolerated wrist displacement when projecting an off-hinge forearm


class InfeasiblePoseError(ValueError):
    pass


class IncompleteHistoryError(ValueError):
    pass


class DegenerateIntervalError(ValueError):
    pass


@dataclass
class ArmModel:
    shoulder: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.4]))
    upper_arm_len: float = 0.30
    forearm_len: float = 0.27
    forearm_axis_in_wrf: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    max_flexion: float = math.radians(150.0)

    def __post_init__(self) -> None:
        if self.upper_arm_len <= 0 or self.forearm_len <= 0:
            raise ValueError("arm segment lengths must be positive")
        self.shoulder = np.asarray(self.shoulder, dtype=float)
        self.forearm_axis_in_wrf = normalize(self.forearm_axis_in_wrf)

    @property
    def max_reach(self) -> float:
        return self.upper_arm_len + self.forearm_len


@dataclass
class PfConfig:
    n_particles: int = 500
    k_pf: int = 5  # filter runs every k_pf-th sample
    resample_fraction: float = 0.5
    elbow_jitter: float = 0.05  # radians, flexion random-walk scale
    sigma_accel: float = 1.0  # m/s^2, acceleration likelihood scale
    ess_fraction: float = 0.5  # resample only when ESS drops below this share

    def __post_init__(self) -> None:
        if self.n_particles < 10:
            raise ValueError("need at least 10 particles")
        if self.k_pf < 1:
            raise ValueError("k_pf must be >= 1")
        if not 0.0 < self.resample_fraction < 1.0:
            raise ValueError("resample_fraction must be in (0, 1)")


@dataclass
class Particle:
    history: list  # up to three wrist locations, oldest first
    weight: float


@dataclass
class ParticleSet:
    """Structure-of-arrays particle storage; ``loc_next`` is the newest point."""

    flexion: np.ndarray  # (n,)
    loc_prev: np.ndarray  # (n, 3)
    loc_curr: np.ndarray  # (n, 3)
    loc_next: np.ndarray  # (n, 3)
    weights: np.ndarray  # (n,), sums to 1

    def __len__(self) -> int:
        return self.flexion.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(
            history=[self.loc_prev[i].copy(), self.loc_curr[i].copy(), self.loc_next[i].copy()],
            weight=float(self.weights[i]),
        )


def arc_frame(theta_hat: Rotation, model: ArmModel) -> tuple[np.ndarray, np.ndarray]:
    """(forearm direction, hinge axis) in GRF for a watch orientation.

    The configured forearm axis must be perpendicular to the hinge
    (watch Y). A small violation is projected out when the implied
    wrist displacement stays within 1 cm; beyond that the pose is
    rejected as infeasible.
    """
    f = theta_hat.apply(model.forearm_axis_in_wrf)
    a = theta_hat.apply(HINGE_AXIS_WRF)
    resid = float(f @ a)
    if abs(resid) > 1e-12:
        if model.forearm_len * abs(resid) > _POSE_SLACK_M:
            raise InfeasiblePoseError(
                f"forearm axis is {math.degrees(math.asin(min(1.0, abs(resid)))):.2f} deg "
                "off the hinge plane"
            )
        f = normalize(f - resid * a)
    return f, a


def arc_points(
    theta_hat: Rotation, model: ArmModel, flexion: np.ndarray
) -> np.ndarray:
    """Wrist locations for an array of flexion angles (vectorized)."""
    f, a = arc_frame(theta_hat, model)
    chi = np.atleast_1d(np.asarray(flexion, dtype=float))
    axf = np.cross(a, f)
    upper = np.outer(np.cos(chi), f) + np.outer(np.sin(chi), axf)
    return model.shoulder + model.upper_arm_len * upper + model.forearm_len * f


def reachable_set(
    theta_hat: Rotation, model: ArmModel, n: int, rng_seed: int | np.random.Generator
) -> np.ndarray:
    """n wrist locations sampled uniformly over the feasible elbow arc."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = (
        rng_seed
        if isinstance(rng_seed, np.random.Generator)
        else np.random.default_rng(rng_seed)
    )
    chi = rng.uniform(0.0, model.max_flexion, size=n)
    return arc_points(theta_hat, model, chi)


def init_particle_set(
    theta_hat: Rotation, model: ArmModel, cfg: PfConfig, rng: np.random.Generator
) -> ParticleSet:
    """Uniform particle cloud over the feasible arc; histories start collinear."""
    chi = rng.uniform(0.0, model.max_flexion, size=cfg.n_particles)
    pts = arc_points(theta_hat, model, chi)
    return ParticleSet(
        flexion=chi,
        loc_prev=pts.copy(),
        loc_curr=pts.copy(),
        loc_next=pts.copy(),
        weights=np.full(cfg.n_particles, 1.0 / cfg.n_particles),
    )


def predicted_acceleration(p: Particle, dt_eff: float) -> np.ndarray:
    """Second difference of the particle's 3-point history over dt_eff."""
    if len(p.history) != 3 or any(h is None for h in p.history):
        raise IncompleteHistoryError("particle needs three recorded locations")
    x_prev, x_curr, x_next = (np.asarray(h, dtype=float) for h in p.history)
    return (x_next - 2.0 * x_curr + x_prev) / (dt_eff * dt_eff)


def _predicted_accelerations(pset: ParticleSet, dt_eff: float) -> np.ndarray:
    return (pset.loc_next - 2.0 * pset.loc_curr + pset.loc_prev) / (dt_eff * dt_eff)


def pf_step(
    pset: ParticleSet,
    theta_hat: Rotation,
    linear_accel_grf: np.ndarray,
    model: ArmModel,
    cfg: PfConfig,
    rng: np.random.Generator,
    dt_eff: float,
) -> ParticleSet:
    """One propose / weight / resample cycle.

    ``linear_accel_grf`` is the measured acceleration with gravity
    already removed in the global frame.
    """
    n = len(pset)
    chi = np.clip(
        pset.flexion + rng.normal(0.0, cfg.elbow_jitter, size=n),
        0.0,
        model.max_flexion,
    )
    new_pts = arc_points(theta_hat, model, chi)
    loc_prev = pset.loc_curr
    loc_curr = pset.loc_next
    loc_next = new_pts
    pred = (loc_next - 2.0 * loc_curr + loc_prev) / (dt_eff * dt_eff)
    err = pred - np.asarray(linear_accel_grf, dtype=float)
    sq = np.einsum("ij,ij->i", err, err)
    # Subtract the minimum before exponentiating to dodge underflow.
    logw = -sq / (2.0 * cfg.sigma_accel * cfg.sigma_accel)
    weights = np.exp(logw - logw.max())
    total = float(weights.sum())
    if total <= 0.0 or not math.isfinite(total):
        log.warning("particle weights collapsed; resetting uniformly over the arc")
        chi = rng.uniform(0.0, model.max_flexion, size=n)
        pts = arc_points(theta_hat, model, chi)
        return ParticleSet(
            flexion=chi,
            loc_prev=pts.copy(),
            loc_curr=pts.copy(),
            loc_next=pts.copy(),
            weights=np.full(n, 1.0 / n),
        )
    weights = weights / total

    ess = 1.0 / float(weights @ weights)
    if ess < cfg.ess_fraction * n:
        k = int(round(cfg.resample_fraction * n))
        if k > 0:
            order = np.argsort(weights, kind="stable")
            doomed = order[:k]
            survivors = order[k:]
            surv_w = weights[survivors]
            surv_w = surv_w / surv_w.sum()
            donors = survivors[
                rng.choice(survivors.size, size=k, replace=True, p=surv_w)
            ]
            chi[doomed] = np.clip(
                chi[donors] + rng.normal(0.0, cfg.elbow_jitter, size=k),
                0.0,
                model.max_flexion,
            )
            loc_prev = loc_prev.copy()
            loc_curr = loc_curr.copy()
            loc_next = loc_next.copy()
            loc_prev[doomed] = loc_prev[donors]
            loc_curr[doomed] = loc_curr[donors]
            loc_next[doomed] = arc_points(theta_hat, model, chi[doomed])
            weights = weights.copy()
            weights[doomed] = weights[donors]
            weights = weights / weights.sum()
    return ParticleSet(
        flexion=chi,
        loc_prev=loc_prev,
        loc_curr=loc_curr,
        loc_next=loc_next,
        weights=weights,
    )


def estimate_location(pset: ParticleSet) -> np.ndarray:
    """Weight-averaged newest location."""
    return pset.weights @ pset.loc_next


def interpolate_blank_steps(
    x1: np.ndarray, t1: float, x2: np.ndarray, t2: float, t: float
) -> np.ndarray:
    """Location at time t on the line through (t1, x1) and (t2, x2).

    Used to fill the sample steps between two filter inferences, with t
    at or after t2 (forward extension of the latest segment).
    """
    if t2 <= t1:
        raise DegenerateIntervalError(f"need t1 < t2, got {t1} >= {t2}")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return (x2 * (t - t1) - x1 * (t - t2)) / (t2 - t1)
