"""Resource model: centroid weights, per-resource value functions, states.

Each candidate maneuver is scored on six resources, every value normalized to
[0, 1]. Profiles rank the resources and the ranks are converted to weights by
the rank-order centroid, so the profit of a candidate is a weighted sum the
planner can compare across maneuvers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import PlannerConfig
from .identification import ManeuverCandidate, PlanContext
from .kernels import any_overlap


class ResourceType(Enum):
    SAFETY = "safety"
    COMFORT = "comfort"
    OBJECTIVE = "objective"
    APRIORI_LANE = "apriori_lane"
    ENERGY = "energy"
    CROWDEDNESS = "crowdedness"


class ResourceState(Enum):
    DESIRED = "desired"
    ACQUIRED = "acquired"
    THREATENED = "threatened"
    LOSS = "loss"


RESOURCES = tuple(ResourceType)

# profile name -> resource ranking (1 = most important)
PROFILE_RANKINGS = {
    "regular": {
        ResourceType.SAFETY: 1,
        ResourceType.COMFORT: 2,
        ResourceType.OBJECTIVE: 3,
        ResourceType.APRIORI_LANE: 4,
        ResourceType.ENERGY: 5,
        ResourceType.CROWDEDNESS: 6,
    },
    "aggressive": {
        ResourceType.OBJECTIVE: 1,
        ResourceType.SAFETY: 2,
        ResourceType.COMFORT: 3,
        ResourceType.APRIORI_LANE: 4,
        ResourceType.ENERGY: 5,
        ResourceType.CROWDEDNESS: 6,
    },
    "fuel_efficient": {
        ResourceType.ENERGY: 1,
        ResourceType.SAFETY: 2,
        ResourceType.COMFORT: 3,
        ResourceType.APRIORI_LANE: 4,
        ResourceType.OBJECTIVE: 5,
        ResourceType.CROWDEDNESS: 6,
    },
}


def clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def rank_order_centroid(ranking: dict) -> dict:
    """Rank-order-centroid weights: w(k) = (1/n) * sum_{j=k..n} 1/j.

    `ranking` maps each resource to its rank 1..n (a permutation). Weights are
    strictly decreasing in rank and sum to 1.
    """
    n = len(ranking)
    ranks = sorted(ranking.values())
    if ranks != list(range(1, n + 1)):
        raise ValueError(f"ranking must be a permutation of 1..{n}, got {ranks}")
    return {
        res: sum(1.0 / j for j in range(rank, n + 1)) / n
        for res, rank in ranking.items()
    }


@dataclass(frozen=True)
class WeightTable:
    profile: str
    ranks: dict
    weights: dict

    @classmethod
    def for_profile(cls, profile: str) -> "WeightTable":
        if profile not in PROFILE_RANKINGS:
            raise ValueError(f"unknown profile {profile!r}")
        ranks = dict(PROFILE_RANKINGS[profile])
        return cls(profile=profile, ranks=ranks, weights=rank_order_centroid(ranks))


def kinetic_energy_delta_kj(mass_kg: float, v_a: float, v_b: float) -> float:
    """Kinetic energy spent accelerating from v_a to v_b (kJ).

    Deceleration consumes nothing: the delta is zero unless v_b > v_a.
    """
    if v_b <= v_a:
        return 0.0
    dv = v_b - v_a
    return 0.5 * mass_kg * dv * dv / 1000.0


def safety_value(cand: ManeuverCandidate, predictions: list,
                 ego_length: float, ego_width: float, cfg: PlannerConfig) -> float:
    """Worst clearance ratio to any interacting road user over the trajectory.

    Per sample, the object is expressed in the ego frame; the score is the
    better of the longitudinal bumper-gap ratio (required gap grows with ego
    speed) and the lateral center-distance ratio, clamped to [0, 1]. The
    resource value is the minimum over objects and samples.
    """
    traj = cand.trajectory
    n = len(traj)
    if n == 0 or not predictions:
        return 1.0
    cos_h = np.cos(traj.heading)
    sin_h = np.sin(traj.heading)
    req_lon = traj.speed * cfg.t_headway_s + cfg.d_min_m
    mu = 1.0
    for pred in predictions:
        m = len(pred.trajectory)
        idx = np.minimum(np.arange(n), m - 1)
        dx = pred.trajectory.x[idx] - traj.x
        dy = pred.trajectory.y[idx] - traj.y
        lon = dx * cos_h + dy * sin_h
        lat = -dx * sin_h + dy * cos_h
        lon_gap = np.maximum(np.abs(lon) - (ego_length + pred.length) / 2.0, 0.0)
        req_lat = (ego_width + pred.width) / 2.0 + cfg.lateral_clearance_m
        r = np.maximum(lon_gap / req_lon, np.abs(lat) / req_lat)
        mu = min(mu, float(np.min(np.clip(r, 0.0, 1.0))))
        if mu == 0.0:
            break
    return mu


def comfort_value(cand: ManeuverCandidate, cfg: PlannerConfig) -> float:
    """1 inside the comfort box, linear falloff to 0 at the axis maxima."""
    traj = cand.trajectory
    if len(traj) == 0:
        return 1.0

    def axis(acc: np.ndarray, comf: float, amax: float) -> float:
        worst = float(np.max(np.abs(acc)))
        if worst <= comf:
            return 1.0
        return clamp01((amax - worst) / (amax - comf))

    return min(axis(traj.a_lon, cfg.a_lon_comfort, cfg.a_lon_max),
               axis(traj.a_lat, cfg.a_lat_comfort, cfg.a_lat_max))


def objective_value(cand: ManeuverCandidate, speed_limit: float, horizon_s: float) -> float:
    """Distance covered relative to full-speed travel over the horizon."""
    return clamp01(cand.trajectory.path_length() / (speed_limit * horizon_s))


def apriori_lane_value(cand: ManeuverCandidate, apriori_lane) -> float:
    """1 on the a-priori lane centerline, 0 two lane widths away."""
    traj = cand.trajectory
    if len(traj) == 0:
        return 1.0
    _, lateral, _ = apriori_lane.centerline.project((traj.x[-1], traj.y[-1]))
    return clamp01(1.0 - abs(lateral) / (2.0 * apriori_lane.width))


def energy_value(cand: ManeuverCandidate, mass_kg: float, e_ref_kj: float) -> float:
    delta = kinetic_energy_delta_kj(mass_kg, cand.v_begin, cand.v_end)
    return 1.0 - clamp01(delta / e_ref_kj)


def crowdedness_value(cand: ManeuverCandidate, predictions: list,
                      ego_length: float, ego_width: float, cfg: PlannerConfig) -> float:
    """1 minus the (normalized) count of corridors crossing the candidate's."""
    traj = cand.trajectory
    if len(traj) == 0 or not predictions:
        return 1.0
    stride = max(1, int(round(cfg.crowd_sample_stride_s / cfg.dt)))
    idx = np.arange(0, len(traj), stride)
    count = 0
    for pred in predictions:
        jdx = np.arange(0, len(pred.trajectory), stride)
        if any_overlap(
            traj.x[idx], traj.y[idx], traj.heading[idx], ego_length / 2.0, ego_width / 2.0,
            pred.trajectory.x[jdx], pred.trajectory.y[jdx], pred.trajectory.heading[jdx],
            pred.length / 2.0, pred.width / 2.0,
        ):
            count += 1
    return 1.0 - clamp01(count / float(cfg.crowd_reference_count))


def classify_state(mu: float, cfg: PlannerConfig, mu_current: float | None = None) -> ResourceState:
    """State of a resource given its value (and the currently-held value)."""
    if mu < cfg.theta_loss:
        return ResourceState.LOSS
    if mu < cfg.theta_acquired:
        return ResourceState.THREATENED
    if mu_current is not None and mu_current < cfg.theta_acquired <= mu:
        return ResourceState.DESIRED
    return ResourceState.ACQUIRED


@dataclass
class ResourceAssessment:
    values: dict   # ResourceType -> float in [0, 1]
    states: dict   # ResourceType -> ResourceState

    def vector(self) -> np.ndarray:
        return np.array([self.values[r] for r in RESOURCES])


def assess_candidate(ctx: PlanContext, cand: ManeuverCandidate,
                     current_values: dict | None = None) -> ResourceAssessment:
    """Evaluate all six resources for one candidate."""
    cfg = ctx.config
    ego = ctx.ego
    apriori = ctx.scenario.lanes[ctx.scenario.apriori_lane]
    values = {
        ResourceType.SAFETY: safety_value(cand, ctx.predictions, ego.length, ego.width, cfg),
        ResourceType.COMFORT: comfort_value(cand, cfg),
        ResourceType.OBJECTIVE: objective_value(cand, ctx.lane.speed_limit, cfg.planning_horizon_s),
        ResourceType.APRIORI_LANE: apriori_lane_value(cand, apriori),
        ResourceType.ENERGY: energy_value(cand, ego.mass, cfg.energy_reference_kj(ego.mass)),
        ResourceType.CROWDEDNESS: crowdedness_value(cand, ctx.predictions, ego.length, ego.width, cfg),
    }
    states = {
        res: classify_state(
            values[res], cfg,
            None if current_values is None else current_values.get(res),
        )
        for res in RESOURCES
    }
    return ResourceAssessment(values=values, states=states)
