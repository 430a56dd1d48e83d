"""Profit maximization over feasible candidates, with lane-change commitment.

`plan_tick` is pure: snapshot in, ranked decision out. `CorMpPlanner` wraps it
with the small amount of state the closed loop needs: the previous maneuver
(tie-break preference), the previous chosen resource values (state upgrades),
and an in-progress lane change, which is committed until it completes unless
its safety resource collapses, in which case the planner aborts into a
deceleration along the remaining path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bezier import TimedTrajectory
from .config import PlannerConfig
from .identification import (
    LANE_CHANGES,
    Maneuver,
    ManeuverCandidate,
    PlanContext,
    enumerate_candidates,
    feasibility_filter,
    interacting_agents,
    predict_oru,
)
from .resources import (
    RESOURCES,
    ResourceAssessment,
    WeightTable,
    assess_candidate,
    safety_value,
)
from .scenario import AgentState, Scenario

# deterministic preference order when profits tie and the previous maneuver
# is not among the tied set
TIE_ORDER = (
    Maneuver.KEEP_LANE_SAME_SPEED,
    Maneuver.KEEP_LANE_ACCELERATE,
    Maneuver.KEEP_LANE_DECELERATE,
    Maneuver.CHANGE_LANE_LEFT,
    Maneuver.CHANGE_LANE_RIGHT,
    Maneuver.STOP,
)


def profit(assessment: ResourceAssessment, weights: dict) -> float:
    """Weighted sum of resource values (the candidate's total profit)."""
    total = 0.0
    for res in RESOURCES:
        total += weights[res] * assessment.values[res]
    return total


@dataclass
class Decision:
    t: float
    maneuver: Maneuver
    trajectory: TimedTrajectory
    candidates: list                  # all six ManeuverCandidates
    assessments: dict                 # Maneuver -> ResourceAssessment (feasible only)
    profits: dict                     # Maneuver -> float (feasible only)
    tie_break_applied: bool = False
    fallback: bool = False
    committed: bool = False
    aborted: bool = False

    @property
    def chosen(self) -> ManeuverCandidate:
        for cand in self.candidates:
            if cand.maneuver is self.maneuver:
                return cand
        raise LookupError(f"no candidate for {self.maneuver}")


def decide(candidates: list, assessments: dict, profits: dict,
           previous: Maneuver | None, tie_eps: float) -> tuple[Maneuver, bool]:
    """Argmax profit over the feasible set with the documented tie-break."""
    feasible = [c.maneuver for c in candidates if c.feasible]
    if not feasible:
        raise ValueError("decide() needs at least one feasible candidate")
    best = max(profits[m] for m in feasible)
    tied = [m for m in feasible if abs(profits[m] - best) < tie_eps]
    if len(tied) == 1:
        return tied[0], False
    if previous is not None and previous in tied:
        return previous, True
    for m in TIE_ORDER:
        if m in tied:
            return m, True
    return tied[0], True  # unreachable: TIE_ORDER covers the enum


def plan_tick(ctx: PlanContext, previous: Maneuver | None = None,
              current_values: dict | None = None,
              weights: dict | None = None) -> Decision:
    """One full planning pass: enumerate, filter, assess, maximize profit."""
    if weights is None:
        weights = WeightTable.for_profile(ctx.scenario.profile).weights
    candidates = enumerate_candidates(ctx)
    feasibility_filter(ctx, candidates)
    assessments: dict = {}
    profits: dict = {}
    for cand in candidates:
        if not cand.feasible:
            continue
        assessment = assess_candidate(ctx, cand, current_values)
        assessments[cand.maneuver] = assessment
        profits[cand.maneuver] = profit(assessment, weights)
    maneuver, tie_break = decide(candidates, assessments, profits, previous, ctx.config.tie_epsilon)
    chosen = next(c for c in candidates if c.maneuver is maneuver)
    return Decision(
        t=ctx.sim_time,
        maneuver=maneuver,
        trajectory=chosen.trajectory,
        candidates=candidates,
        assessments=assessments,
        profits=profits,
        tie_break_applied=tie_break,
        fallback=chosen.fallback,
    )


def decelerate_along(traj: TimedTrajectory, decel: float, dt: float,
                     horizon: float) -> TimedTrajectory:
    """Re-profile a trajectory's path with a constant deceleration to rest.

    Positions stay on the original path; only the speed schedule changes. Used
    for lane-change aborts, where steering back would be a second lateral
    maneuver but slowing down along the committed geometry is always available.
    """
    n = len(traj)
    if n < 2:
        return traj
    seg = np.hypot(np.diff(traj.x), np.diff(traj.y))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(cum[-1])

    v = float(traj.speed[0])
    ts, ss, vs = [0.0], [0.0], [v]
    t = 0.0
    s = 0.0
    while t < horizon - 1e-9:
        t += dt
        if v > 0.0:
            t_stop = v / decel
            if t_stop < dt:
                s += v * t_stop - 0.5 * decel * t_stop * t_stop
                v = 0.0
            else:
                s += v * dt - 0.5 * decel * dt * dt
                v = max(v - decel * dt, 0.0)
        s = min(s, total)
        ts.append(t)
        ss.append(s)
        vs.append(v)

    t_arr = np.asarray(ts)
    s_arr = np.asarray(ss)
    v_arr = np.asarray(vs)
    x = np.interp(s_arr, cum, traj.x)
    y = np.interp(s_arr, cum, traj.y)
    heading = np.interp(s_arr, cum, np.unwrap(traj.heading))
    a_lon = np.zeros(len(t_arr))
    if len(t_arr) > 1:
        a_lon[:-1] = np.diff(v_arr) / dt
        a_lon[-1] = a_lon[-2]
    scale = np.divide(v_arr, np.maximum(traj.speed[0], 1e-9)) ** 2
    a_lat = np.interp(s_arr, cum, traj.a_lat) * scale
    return TimedTrajectory(dt, t_arr, x, y, heading, v_arr, a_lon, a_lat)


@dataclass
class PlanResult:
    """What the simulator consumes each planning call."""

    trajectory: TimedTrajectory
    maneuver: Maneuver
    decision: Decision | None = None   # None while committed to a lane change
    committed: bool = False
    aborted: bool = False
    fallback: bool = False


class CorMpPlanner:
    """Stateful closed-loop wrapper around plan_tick."""

    name = "cor-mp"

    def __init__(self, config: PlannerConfig, profile: str) -> None:
        self.config = config
        self.weights = WeightTable.for_profile(profile).weights
        self.profile = profile
        self.previous: Maneuver | None = None
        self.current_values: dict | None = None
        self._lc_traj: TimedTrajectory | None = None
        self._lc_maneuver: Maneuver | None = None
        self._lc_start: float = 0.0

    def reset(self) -> None:
        self.previous = None
        self.current_values = None
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

    def plan(self, scenario: Scenario, sim_time: float) -> PlanResult:
        cfg = self.config
        if self._lc_traj is not None:
            idx = int(round((sim_time - self._lc_start) / cfg.dt))
            if idx >= len(self._lc_traj) - 1:
                self._lc_traj = None
                self._lc_maneuver = None
            else:
                ctx = self._context(scenario, sim_time)
                remaining = self._lc_traj.tail(idx)
                probe = ManeuverCandidate(self._lc_maneuver, remaining, None,
                                          float(remaining.speed[0]), remaining.end_speed)
                mu_safety = safety_value(probe, ctx.predictions,
                                         ctx.ego.length, ctx.ego.width, cfg)
                if mu_safety < cfg.theta_loss:
                    aborted = decelerate_along(remaining, cfg.stop_decel_default, cfg.dt,
                                               cfg.planning_horizon_s)
                    self._lc_traj = None
                    self._lc_maneuver = None
                    self.previous = Maneuver.KEEP_LANE_DECELERATE
                    return PlanResult(aborted, Maneuver.KEEP_LANE_DECELERATE,
                                      aborted=True)
                return PlanResult(remaining, self._lc_maneuver, committed=True)

        ctx = self._context(scenario, sim_time)
        decision = plan_tick(ctx, self.previous, self.current_values, self.weights)
        self.previous = decision.maneuver
        self.current_values = dict(decision.assessments[decision.maneuver].values)
        if decision.maneuver in LANE_CHANGES:
            self._lc_traj = decision.trajectory
            self._lc_maneuver = decision.maneuver
            self._lc_start = sim_time
        return PlanResult(decision.trajectory, decision.maneuver, decision=decision,
                          fallback=decision.fallback)
