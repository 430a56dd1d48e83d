"""Maneuver identification: candidate generation, prediction, feasibility.

Six discrete maneuvers are turned into tick-sampled trajectory candidates from
the ego's current state. Other road users get constant-velocity predictions on
the same tick grid. The feasibility filter removes candidates that risk
collision (footprint time-to-collision below the threshold) or break traffic
rules (speeding, solid boundaries, red lights, occupied crosswalks); if
everything is filtered out, Stop is retained as the fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bezier import CubicBezier, SpeedProfile, TimedTrajectory, sample_trajectory
from .config import PlannerConfig
from .kernels import any_overlap, pose_gaps, rect_gap
from .scenario import AgentState, Crosswalk, Lane, Scenario, TrafficLight


class Maneuver(Enum):
    CHANGE_LANE_LEFT = "change_lane_left"
    CHANGE_LANE_RIGHT = "change_lane_right"
    KEEP_LANE_ACCELERATE = "keep_lane_accelerate"
    KEEP_LANE_SAME_SPEED = "keep_lane_same_speed"
    KEEP_LANE_DECELERATE = "keep_lane_decelerate"
    STOP = "stop"


LANE_CHANGES = (Maneuver.CHANGE_LANE_LEFT, Maneuver.CHANGE_LANE_RIGHT)

# reject reasons
NO_LANE = "no_lane"
RULE_VIOLATION = "rule_violation"
COLLISION_RISK = "collision_risk"


@dataclass
class Prediction:
    """Constant-velocity forecast for one road user."""

    agent_id: str
    kind: str
    trajectory: TimedTrajectory
    length: float
    width: float

    def pose_at(self, i: int) -> tuple[float, float, float]:
        """Pose at sample i, clamped to the last sample (objects persist)."""
        j = min(i, len(self.trajectory) - 1)
        return self.trajectory.pose(j)


@dataclass
class ManeuverCandidate:
    maneuver: Maneuver
    trajectory: TimedTrajectory
    target_lane: str | None
    v_begin: float
    v_end: float
    feasible: bool = True
    reason: str | None = None
    fallback: bool = False
    min_ttc: float = math.inf
    stretched: bool = False


@dataclass
class PlanContext:
    """Everything one planning call needs, snapshotted."""

    scenario: Scenario
    config: PlannerConfig
    ego: AgentState
    sim_time: float
    predictions: list

    @property
    def lane(self) -> Lane:
        return self.scenario.lanes[self.ego.lane]


def interacting_agents(scenario: Scenario, ego: AgentState, config: PlannerConfig) -> list:
    """Non-ego agents within the interaction radius of the ego."""
    out = []
    for agent in scenario.agents:
        if agent.id == ego.id:
            continue
        d = math.hypot(agent.x - ego.x, agent.y - ego.y)
        if d <= config.interaction_radius_m:
            out.append(agent)
    return out


def predict_oru(agent: AgentState, scenario: Scenario, config: PlannerConfig) -> Prediction:
    """Constant-velocity prediction on the tick grid.

    Lane-bound vehicles follow their lane centerline and the prediction is
    truncated at the lane end; everything else extrapolates straight along the
    current heading. Standing agents yield a resting trajectory over the full
    horizon.
    """
    dt = config.dt
    horizon = config.planning_horizon_s
    n = config.horizon_steps + 1
    if agent.speed <= 1e-9:
        traj = TimedTrajectory.stationary(agent.x, agent.y, agent.heading, dt, n)
        return Prediction(agent.id, agent.kind, traj, agent.length, agent.width)

    lane = scenario.lane(agent.lane) if agent.kind in ("vehicle", "ego") else None
    if lane is not None:
        s0, _, _ = lane.centerline.project((agent.x, agent.y))
        span = min(agent.speed * horizon, lane.length - s0)
        if span <= 1e-6:
            traj = TimedTrajectory.stationary(agent.x, agent.y, agent.heading, dt, n)
            return Prediction(agent.id, agent.kind, traj, agent.length, agent.width)
        curve = fit_lane_curve(lane, s0, s0 + span, start_point=(agent.x, agent.y),
                               start_heading=agent.heading)
        traj = sample_trajectory(curve, SpeedProfile(agent.speed, 0.0, agent.speed),
                                 dt, horizon=horizon, heading_fallback=agent.heading)
    else:
        span = agent.speed * horizon
        direction = np.array([math.cos(agent.heading), math.sin(agent.heading)])
        p0 = np.array([agent.x, agent.y])
        ctrl = np.array([p0, p0 + direction * (span / 3.0),
                         p0 + direction * (2.0 * span / 3.0), p0 + direction * span])
        traj = sample_trajectory(CubicBezier(ctrl), SpeedProfile(agent.speed, 0.0, agent.speed),
                                 dt, horizon=horizon, heading_fallback=agent.heading)
    return Prediction(agent.id, agent.kind, traj, agent.length, agent.width)


def fit_lane_curve(
    lane: Lane,
    s0: float,
    s1: float,
    start_point=None,
    start_heading: float | None = None,
) -> CubicBezier:
    """Cubic fitted along a lane centerline from arc s0 to s1.

    With control points at the third points of a straight centerline the curve
    *is* the segment with uniform arc parameterization. `start_point` lets the
    curve begin at an off-centerline pose and blend back onto the line.
    """
    span = s1 - s0
    line = lane.centerline
    p3 = line.point_at(s1)
    p2 = line.point_at(s0 + 2.0 * span / 3.0)
    if start_point is None:
        p0 = line.point_at(s0)
        p1 = line.point_at(s0 + span / 3.0)
    else:
        p0 = np.asarray(start_point, dtype=np.float64)
        h = line.heading_at(s0) if start_heading is None else start_heading
        p1 = p0 + np.array([math.cos(h), math.sin(h)]) * (span / 3.0)
    return CubicBezier(np.array([p0, p1, p2, p3]))


def _lane_change_curve(ctx: PlanContext, target: Lane, span: float) -> CubicBezier:
    ego = ctx.ego
    p0 = np.array([ego.x, ego.y])
    s_t, _, _ = target.centerline.project(p0)
    p3 = target.centerline.point_at(s_t + span)
    h3 = target.centerline.heading_at(s_t + span)
    p1 = p0 + np.array([math.cos(ego.heading), math.sin(ego.heading)]) * (span / 3.0)
    p2 = p3 - np.array([math.cos(h3), math.sin(h3)]) * (span / 3.0)
    return CubicBezier(np.array([p0, p1, p2, p3]))


def _lead_inside_curve(ctx: PlanContext, curve: CubicBezier, duration: float) -> bool:
    """True when a vehicle ahead of the ego is predicted inside the curve corridor."""
    cfg = ctx.config
    lane = ctx.lane
    s_ego, _, _ = lane.centerline.project((ctx.ego.x, ctx.ego.y))
    stride = max(1, int(round(cfg.crowd_sample_stride_s / cfg.dt)))
    probe = sample_trajectory(curve, SpeedProfile(max(ctx.ego.speed, 1.0), 0.0),
                              cfg.dt, horizon=duration, heading_fallback=ctx.ego.heading)
    idx = np.arange(0, len(probe), stride)
    for pred in ctx.predictions:
        if pred.kind not in ("vehicle", "obstacle"):
            continue
        s_obj, _, _ = lane.centerline.project((pred.trajectory.x[0], pred.trajectory.y[0]))
        if s_obj <= s_ego:
            continue
        jdx = np.arange(0, len(pred.trajectory), stride)
        if any_overlap(
            probe.x[idx], probe.y[idx], probe.heading[idx],
            ctx.ego.length / 2.0, ctx.ego.width / 2.0,
            pred.trajectory.x[jdx], pred.trajectory.y[jdx], pred.trajectory.heading[jdx],
            pred.length / 2.0, pred.width / 2.0,
        ):
            return True
    return False


def _keep_lane_candidate(ctx: PlanContext, maneuver: Maneuver, accel: float,
                         v_max: float | None = None) -> ManeuverCandidate:
    cfg = ctx.config
    ego = ctx.ego
    lane = ctx.lane
    cap = lane.speed_limit if v_max is None else v_max
    s0, _, _ = lane.centerline.project((ego.x, ego.y))
    span = max(cap, ego.speed) * cfg.planning_horizon_s + 5.0
    curve = fit_lane_curve(lane, s0, s0 + span, start_point=(ego.x, ego.y),
                           start_heading=ego.heading)
    traj = sample_trajectory(curve, SpeedProfile(ego.speed, accel, cap), cfg.dt,
                             horizon=cfg.planning_horizon_s, heading_fallback=ego.heading)
    return ManeuverCandidate(maneuver, traj, ego.lane, ego.speed, traj.end_speed)


def _lane_change_candidate(ctx: PlanContext, maneuver: Maneuver) -> ManeuverCandidate:
    cfg = ctx.config
    ego = ctx.ego
    lane = ctx.lane
    target_id = lane.left_neighbor if maneuver is Maneuver.CHANGE_LANE_LEFT else lane.right_neighbor
    if target_id is None:
        placeholder = _keep_lane_candidate(ctx, maneuver, 0.0)
        placeholder.feasible = False
        placeholder.reason = NO_LANE
        placeholder.target_lane = None
        return placeholder
    target = ctx.scenario.lanes[target_id]
    duration = cfg.lane_change_duration_s
    span = max(ego.speed, 1.0) * duration
    curve = _lane_change_curve(ctx, target, span)
    stretched = False
    if _lead_inside_curve(ctx, curve, duration):
        span *= cfg.lane_change_stretch
        curve = _lane_change_curve(ctx, target, span)
        stretched = True

    cap = min(lane.speed_limit, target.speed_limit)
    traj = sample_trajectory(curve, SpeedProfile(ego.speed, 0.0, cap), cfg.dt,
                             horizon=duration, heading_fallback=ego.heading)
    # keep the candidate window comparable to keep-lane candidates
    if duration < cfg.planning_horizon_s and traj.end_speed > 1e-9:
        s_t, _, _ = target.centerline.project((traj.x[-1], traj.y[-1]))
        ext_span = traj.end_speed * (cfg.planning_horizon_s - duration) + 5.0
        ext_curve = fit_lane_curve(target, s_t, s_t + ext_span,
                                   start_point=(traj.x[-1], traj.y[-1]),
                                   start_heading=float(traj.heading[-1]))
        ext = sample_trajectory(ext_curve, SpeedProfile(traj.end_speed, 0.0, cap), cfg.dt,
                                horizon=cfg.planning_horizon_s - duration,
                                heading_fallback=float(traj.heading[-1]))
        traj = traj.concat(ext)
    cand = ManeuverCandidate(maneuver, traj, target_id, ego.speed, traj.end_speed)
    cand.stretched = stretched
    return cand


def _lane_s(lane: Lane, x: float, y: float) -> float:
    s, _, _ = lane.centerline.project((x, y))
    return s


def _stop_constraint_distance(ctx: PlanContext) -> float | None:
    """Distance from the ego front bumper to the nearest active stop target."""
    cfg = ctx.config
    ego = ctx.ego
    lane = ctx.lane
    front = _lane_s(lane, ego.x, ego.y) + ego.length / 2.0
    targets = []
    for light in ctx.scenario.lights:
        if light.lane != ego.lane:
            continue
        if light.stop_line_s <= front:
            continue
        if light.color_at(ctx.sim_time) == "red":
            targets.append(light.stop_line_s - cfg.stop_line_margin_m)
    for cw in ctx.scenario.crosswalks:
        if ego.lane not in cw.lanes or cw.span[0] <= front:
            continue
        if _crosswalk_occupied(ctx, cw, 0):
            targets.append(cw.span[0] - cfg.stop_line_margin_m)
    for pred in ctx.predictions:
        if pred.kind not in ("vehicle", "obstacle"):
            continue
        x0, y0 = pred.trajectory.x[0], pred.trajectory.y[0]
        s_obj, lateral, _ = lane.centerline.project((x0, y0))
        if s_obj <= front or abs(lateral) > lane.width / 2.0:
            continue
        if pred.trajectory.speed[0] > 0.5:
            continue  # moving traffic is handled by TTC, not a fixed stop target
        targets.append(s_obj - pred.length / 2.0 - cfg.stop_line_margin_m)
    if not targets:
        return None
    return min(targets) - front


def _stop_candidate(ctx: PlanContext) -> ManeuverCandidate:
    cfg = ctx.config
    v = ctx.ego.speed
    d = _stop_constraint_distance(ctx)
    if d is None:
        decel = cfg.stop_decel_default
    elif d <= 0.01 or v <= 1e-9:
        decel = cfg.stop_decel_max
    else:
        needed = v * v / (2.0 * d)
        decel = min(max(needed, 0.1), cfg.stop_decel_max)
    cand = _keep_lane_candidate(ctx, Maneuver.STOP, -decel)
    return cand


def enumerate_candidates(ctx: PlanContext) -> list:
    """All six maneuver candidates, in Maneuver enum order."""
    cfg = ctx.config
    return [
        _lane_change_candidate(ctx, Maneuver.CHANGE_LANE_LEFT),
        _lane_change_candidate(ctx, Maneuver.CHANGE_LANE_RIGHT),
        _keep_lane_candidate(ctx, Maneuver.KEEP_LANE_ACCELERATE, cfg.accel_keep_lane),
        _keep_lane_candidate(ctx, Maneuver.KEEP_LANE_SAME_SPEED, 0.0),
        _keep_lane_candidate(ctx, Maneuver.KEEP_LANE_DECELERATE, -cfg.decel_keep_lane),
        _stop_candidate(ctx),
    ]


def time_to_collision(candidate: ManeuverCandidate, prediction: Prediction,
                      ego_length: float, ego_width: float) -> float:
    """Footprint time-to-collision on the shared tick grid.

    Scans aligned samples for the first oriented-rectangle overlap and refines
    linearly on the separating-axis gap inside that tick. Returns +inf when the
    footprints never overlap.
    """
    traj = candidate.trajectory
    pred = prediction.trajectory
    n = min(len(traj), len(pred))
    if n == 0:
        return math.inf
    gaps = pose_gaps(
        traj.x[:n], traj.y[:n], traj.heading[:n], ego_length / 2.0, ego_width / 2.0,
        pred.x[:n], pred.y[:n], pred.heading[:n], prediction.length / 2.0, prediction.width / 2.0,
    )
    hits = np.nonzero(gaps <= 0.0)[0]
    if len(hits) == 0:
        return math.inf
    i = int(hits[0])
    if i == 0:
        return 0.0
    g0 = float(gaps[i - 1])
    g1 = float(gaps[i])
    frac = g0 / (g0 - g1) if g0 > g1 else 1.0
    return float(traj.t[i - 1] + frac * traj.dt)


def _trajectory_lane_s(traj: TimedTrajectory, lane: Lane) -> np.ndarray:
    return np.array([_lane_s(lane, traj.x[i], traj.y[i]) for i in range(len(traj))])


def _crosswalk_occupied(ctx: PlanContext, cw: Crosswalk, sample_idx: int) -> bool:
    """Any pedestrian footprint predicted on the crosswalk area at this tick."""
    for pred in ctx.predictions:
        if pred.kind != "pedestrian":
            continue
        px, py, ph = pred.pose_at(sample_idx)
        for lane_id in cw.lanes:
            lane = ctx.scenario.lanes[lane_id]
            mid = 0.5 * (cw.span[0] + cw.span[1])
            cx, cy = lane.centerline.point_at(mid)
            heading = lane.centerline.heading_at(mid)
            if rect_gap(
                cx, cy, heading, (cw.span[1] - cw.span[0]) / 2.0, lane.width / 2.0,
                px, py, ph, pred.length / 2.0, pred.width / 2.0,
            ) <= 0.0:
                return True
    return False


def _check_red_lights(ctx: PlanContext, cand: ManeuverCandidate) -> bool:
    """True if the candidate violates a red light (crossing or hold zone)."""
    cfg = ctx.config
    ego = ctx.ego
    lanes_to_check = {ego.lane}
    if cand.target_lane is not None:
        lanes_to_check.add(cand.target_lane)
    for light in ctx.scenario.lights:
        if light.lane not in lanes_to_check:
            continue
        lane = ctx.scenario.lanes[light.lane]
        s_front = _trajectory_lane_s(cand.trajectory, lane) + ego.length / 2.0
        if s_front[0] >= light.stop_line_s:
            continue  # already past this light
        red_now = light.color_at(ctx.sim_time) == "red"
        cross = np.nonzero(s_front >= light.stop_line_s)[0]
        if len(cross):
            t_cross = float(cand.trajectory.t[int(cross[0])])
            if red_now or light.color_at(ctx.sim_time + t_cross) == "red":
                return True
        # gate entry a bit outside the hold window so tracking fuzz cannot
        # park the bumper right on its boundary
        hold_line = light.stop_line_s - cfg.red_light_hold_m - cfg.hold_buffer_m
        hold = np.nonzero(s_front >= hold_line)[0]
        if len(hold) and s_front[0] < hold_line:
            t_enter = float(cand.trajectory.t[int(hold[0])])
            if red_now or light.color_at(ctx.sim_time + t_enter) == "red":
                return True
    return False


def _check_crosswalks(ctx: PlanContext, cand: ManeuverCandidate) -> bool:
    """True if the candidate enters an occupied crosswalk span."""
    cfg = ctx.config
    ego = ctx.ego
    lanes_to_check = {ego.lane}
    if cand.target_lane is not None:
        lanes_to_check.add(cand.target_lane)
    for cw in ctx.scenario.crosswalks:
        if not lanes_to_check.intersection(cw.lanes):
            continue
        lane = ctx.scenario.lanes[ego.lane if ego.lane in cw.lanes else cand.target_lane]
        s_front = _trajectory_lane_s(cand.trajectory, lane) + ego.length / 2.0
        if s_front[0] >= cw.span[1]:
            continue  # already past
        enter = np.nonzero(s_front >= cw.span[0] - cfg.crosswalk_hold_m)[0]
        if not len(enter):
            continue
        if s_front[0] >= cw.span[0] - cfg.crosswalk_hold_m and cand.trajectory.speed[0] <= 1e-9:
            continue  # parked at the hold line is not an entry
        idx = int(enter[0])
        if _crosswalk_occupied(ctx, cw, 0) or _crosswalk_occupied(ctx, cw, idx):
            return True
    return False


def feasibility_filter(ctx: PlanContext, candidates: list) -> list:
    """Mark candidates infeasible for rule or collision reasons (in place).

    Guarantees at least one feasible candidate by retaining Stop as a
    fallback when everything else is rejected.
    """
    cfg = ctx.config
    ego = ctx.ego
    for cand in candidates:
        if not cand.feasible:
            continue
        target = ctx.scenario.lanes[cand.target_lane]
        if cand.v_end > target.speed_limit + cfg.rule_speed_epsilon:
            cand.feasible = False
            cand.reason = RULE_VIOLATION
            continue
        if (cand.maneuver is Maneuver.KEEP_LANE_ACCELERATE
                and cand.v_begin >= ctx.lane.speed_limit - cfg.rule_speed_epsilon):
            cand.feasible = False
            cand.reason = RULE_VIOLATION
            continue
        if cand.maneuver in LANE_CHANGES:
            boundary = (ctx.lane.left_boundary if cand.maneuver is Maneuver.CHANGE_LANE_LEFT
                        else ctx.lane.right_boundary)
            if boundary == "solid":
                cand.feasible = False
                cand.reason = RULE_VIOLATION
                continue
        if _check_red_lights(ctx, cand) or _check_crosswalks(ctx, cand):
            cand.feasible = False
            cand.reason = RULE_VIOLATION
            continue
        ttc = math.inf
        for pred in ctx.predictions:
            ttc = min(ttc, time_to_collision(cand, pred, ego.length, ego.width))
            if ttc == 0.0:
                break
        cand.min_ttc = ttc
        if ttc < cfg.ttc_min_s:
            cand.feasible = False
            cand.reason = COLLISION_RISK

    if not any(c.feasible for c in candidates):
        for cand in candidates:
            if cand.maneuver is Maneuver.STOP:
                cand.feasible = True
                cand.fallback = True
    return candidates
