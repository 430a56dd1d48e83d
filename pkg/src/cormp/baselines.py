"""Baseline planners: MOBIL lane changing over IDM, and a flat-utility argmax.

Both expose the same plan(scenario, sim_time) -> PlanResult protocol as the
primary planner so the simulator and CLI treat all three interchangeably.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bezier import SpeedProfile, sample_trajectory
from .config import PlannerConfig
from .identification import (
    LANE_CHANGES,
    Maneuver,
    ManeuverCandidate,
    PlanContext,
    _keep_lane_candidate,
    _lane_change_candidate,
    interacting_agents,
    predict_oru,
)
from .planner import CorMpPlanner, PlanResult
from .resources import ResourceType
from .scenario import AgentState, Lane, Scenario


@dataclass(frozen=True)
class IdmParams:
    a_max: float = 1.5      # m/s^2 comfortable acceleration
    b_comf: float = 2.0     # m/s^2 comfortable braking
    headway_s: float = 1.5
    min_gap_m: float = 2.0
    delta: float = 4.0


@dataclass(frozen=True)
class MobilParams:
    politeness: float = 0.5
    b_safe: float = 4.0     # m/s^2 braking the new follower must not exceed
    accel_threshold: float = 0.1


def idm_accel(v: float, v_desired: float, gap: float | None,
              dv: float = 0.0, p: IdmParams = IdmParams()) -> float:
    """Intelligent Driver Model acceleration.

    gap is bumper-to-bumper distance to the lead (None when the lane is free),
    dv is the closing speed v_ego - v_lead.
    """
    v_desired = max(v_desired, 0.1)
    free = 1.0 - (max(v, 0.0) / v_desired) ** p.delta
    if gap is None:
        return p.a_max * free
    gap = max(gap, 0.1)
    s_star = p.min_gap_m + max(
        0.0, v * p.headway_s + v * dv / (2.0 * math.sqrt(p.a_max * p.b_comf)))
    return p.a_max * (free - (s_star / gap) ** 2)


def _on_lane(lane: Lane, agent: AgentState) -> tuple[float, bool]:
    s, lateral, overshoot = lane.centerline.project((agent.x, agent.y))
    return s, abs(lateral) <= lane.width / 2.0 and overshoot == 0.0


def find_neighbors(scenario: Scenario, lane: Lane, s_ref: float,
                   ref_half_len: float, exclude: str):
    """Nearest lead and follower on `lane` around arc position s_ref.

    Returns (lead_agent, lead_gap, follower_agent, follower_gap) with
    bumper-to-bumper gaps; missing neighbors come back as (None, None).
    """
    lead, lead_gap = None, None
    follower, follower_gap = None, None
    for agent in scenario.agents:
        if agent.id == exclude or agent.kind == "pedestrian":
            continue
        s, inside = _on_lane(lane, agent)
        if not inside:
            continue
        if s >= s_ref:
            gap = (s - s_ref) - ref_half_len - agent.length / 2.0
            if lead_gap is None or gap < lead_gap:
                lead, lead_gap = agent, gap
        else:
            gap = (s_ref - s) - ref_half_len - agent.length / 2.0
            if follower_gap is None or gap < follower_gap:
                follower, follower_gap = agent, gap
    return lead, lead_gap, follower, follower_gap


class MobilPlanner:
    """MOBIL gap-acceptance lane changes on top of IDM car following.

    Deliberately ignores traffic lights and crosswalks; it exists to contrast
    rule-aware resource planning against a classic interaction model.
    """

    name = "mobil"

    def __init__(self, config: PlannerConfig, profile: str = "regular",
                 idm: IdmParams = IdmParams(), mobil: MobilParams = MobilParams()) -> None:
        self.config = config
        self.profile = profile
        self.idm = idm
        self.mobil = mobil
        self._lc_traj = None
        self._lc_maneuver = None
        self._lc_start = 0.0

    def reset(self) -> None:
        self._lc_traj = None
        self._lc_maneuver = None

    def _context(self, scenario: Scenario, sim_time: float) -> PlanContext:
        ego = scenario.ego
        predictions = [
            predict_oru(agent, scenario, self.config)
            for agent in interacting_agents(scenario, ego, self.config)
        ]
        return PlanContext(scenario=scenario, config=self.config, ego=ego,
                           sim_time=sim_time, predictions=predictions)

    def _ego_accel_on(self, scenario: Scenario, lane: Lane, ego: AgentState) -> float:
        s, _, _ = lane.centerline.project((ego.x, ego.y))
        lead, gap, _, _ = find_neighbors(scenario, lane, s, ego.length / 2.0, ego.id)
        if lead is None:
            return idm_accel(ego.speed, lane.speed_limit, None, 0.0, self.idm)
        return idm_accel(ego.speed, lane.speed_limit, gap,
                         ego.speed - lead.speed, self.idm)

    def _follower_accel(self, lane: Lane, follower: AgentState,
                        gap: float | None, lead_speed: float) -> float:
        if follower is None:
            return 0.0
        return idm_accel(follower.speed, lane.speed_limit, gap,
                         follower.speed - lead_speed, self.idm)

    def _change_gain(self, scenario: Scenario, ego: AgentState,
                     current: Lane, target: Lane, a_keep: float) -> float | None:
        """MOBIL incentive for moving to `target`; None when unsafe."""
        s_cur, _, _ = current.centerline.project((ego.x, ego.y))
        s_tgt, _, _ = target.centerline.project((ego.x, ego.y))
        half = ego.length / 2.0
        t_lead, t_lead_gap, t_fol, t_fol_gap = find_neighbors(
            scenario, target, s_tgt, half, ego.id)
        if (t_lead_gap is not None and t_lead_gap <= 0.0) or \
           (t_fol_gap is not None and t_fol_gap <= 0.0):
            return None
        a_fol_new = self._follower_accel(target, t_fol, t_fol_gap, ego.speed)
        if a_fol_new < -self.mobil.b_safe:
            return None
        a_fol_old = 0.0
        if t_fol is not None:
            s_fol, _, _ = target.centerline.project((t_fol.x, t_fol.y))
            f_lead, f_gap, _, _ = find_neighbors(
                scenario, target, s_fol, t_fol.length / 2.0, t_fol.id)
            if f_lead is None:
                a_fol_old = idm_accel(t_fol.speed, target.speed_limit, None,
                                      0.0, self.idm)
            else:
                a_fol_old = idm_accel(t_fol.speed, target.speed_limit, f_gap,
                                      t_fol.speed - f_lead.speed, self.idm)

        if t_lead is None:
            a_ego_new = idm_accel(ego.speed, target.speed_limit, None, 0.0, self.idm)
        else:
            a_ego_new = idm_accel(ego.speed, target.speed_limit, t_lead_gap,
                                  ego.speed - t_lead.speed, self.idm)

        # relief for the follower the ego leaves behind
        c_lead, c_lead_gap, c_fol, c_fol_gap = find_neighbors(
            scenario, current, s_cur, half, ego.id)
        a_old_fol_now = self._follower_accel(current, c_fol, c_fol_gap, ego.speed)
        a_old_fol_after = 0.0
        if c_fol is not None:
            if c_lead is not None:
                s_fol, _, _ = current.centerline.project((c_fol.x, c_fol.y))
                s_lead, _, _ = current.centerline.project((c_lead.x, c_lead.y))
                gap_after = (s_lead - s_fol) - c_fol.length / 2.0 - c_lead.length / 2.0
                a_old_fol_after = idm_accel(c_fol.speed, current.speed_limit, gap_after,
                                            c_fol.speed - c_lead.speed, self.idm)
            else:
                a_old_fol_after = idm_accel(c_fol.speed, current.speed_limit,
                                            None, 0.0, self.idm)

        gain = (a_ego_new - a_keep) + self.mobil.politeness * (
            (a_fol_new - a_fol_old) + (a_old_fol_after - a_old_fol_now))
        return gain

    def plan(self, scenario: Scenario, sim_time: float) -> PlanResult:
        cfg = self.config
        if self._lc_traj is not None:
            idx = int(round((sim_time - self._lc_start) / cfg.dt))
            if idx >= len(self._lc_traj) - 1:
                self._lc_traj = None
                self._lc_maneuver = None
            else:
                return PlanResult(self._lc_traj.tail(idx), self._lc_maneuver,
                                  committed=True)

        ego = scenario.ego
        lane = scenario.lanes[ego.lane]
        a_keep = self._ego_accel_on(scenario, lane, ego)

        best_change, best_gain = None, self.mobil.accel_threshold
        for maneuver, neighbor_id, boundary in (
            (Maneuver.CHANGE_LANE_LEFT, lane.left_neighbor, lane.left_boundary),
            (Maneuver.CHANGE_LANE_RIGHT, lane.right_neighbor, lane.right_boundary),
        ):
            if neighbor_id is None or boundary == "solid":
                continue
            gain = self._change_gain(scenario, ego, lane,
                                     scenario.lanes[neighbor_id], a_keep)
            if gain is not None and gain > best_gain:
                best_change, best_gain = maneuver, gain

        ctx = self._context(scenario, sim_time)
        if best_change is not None:
            cand = _lane_change_candidate(ctx, best_change)
            if cand.target_lane is not None:
                self._lc_traj = cand.trajectory
                self._lc_maneuver = best_change
                self._lc_start = sim_time
                return PlanResult(cand.trajectory, best_change)

        accel = min(max(a_keep, -cfg.a_lon_max), cfg.accel_keep_lane)
        if accel > 0.05:
            maneuver = Maneuver.KEEP_LANE_ACCELERATE
        elif accel < -0.05:
            maneuver = Maneuver.KEEP_LANE_DECELERATE
        else:
            maneuver = Maneuver.KEEP_LANE_SAME_SPEED
        cand = _keep_lane_candidate(ctx, maneuver, accel)
        return PlanResult(cand.trajectory, maneuver)


class UtilityPlanner(CorMpPlanner):
    """Equal-weight utility over safety, target lane, progress, and comfort.

    Shares the candidate generation, feasibility filter, tie break, and
    commitment logic of the primary planner; only the scoring differs.
    """

    name = "utility"

    UTILITY_WEIGHTS = {
        ResourceType.SAFETY: 0.25,
        ResourceType.COMFORT: 0.25,
        ResourceType.OBJECTIVE: 0.25,
        ResourceType.APRIORI_LANE: 0.25,
        ResourceType.ENERGY: 0.0,
        ResourceType.CROWDEDNESS: 0.0,
    }

    def __init__(self, config: PlannerConfig, profile: str = "regular") -> None:
        super().__init__(config, profile)
        self.weights = dict(self.UTILITY_WEIGHTS)


def make_planner(name: str, config: PlannerConfig, profile: str):
    """Planner registry used by the CLI."""
    if name == "cor-mp":
        return CorMpPlanner(config, profile)
    if name == "mobil":
        return MobilPlanner(config, profile)
    if name == "utility":
        return UtilityPlanner(config, profile)
    raise ValueError(f"unknown planner '{name}' (expected cor-mp, mobil, or utility)")
