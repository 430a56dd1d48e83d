"""Static world model: lanes, agents, lights, crosswalks, and the JSON loader.

The file format is documented in SCHEMA.md. The loader is strict: unknown keys
anywhere in the document are rejected, and validation errors carry the path of
the offending field (e.g. ``agents[2].speed``). `serialize_scenario` is the
exact inverse of `load_scenario` so scenario files round-trip.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_KINDS = ("solid", "dashed")
AGENT_KINDS = ("ego", "vehicle", "pedestrian", "obstacle")
LIGHT_COLORS = ("red", "green")
PROFILES = ("regular", "aggressive", "fuel_efficient")

DEFAULT_VEHICLE_MASS = 1500.0
DEFAULT_PEDESTRIAN_MASS = 75.0


class ScenarioError(ValueError):
    """Raised for structural or semantic problems in a scenario document."""


class ProjectionError(ValueError):
    """Point cannot be projected onto a lane centerline."""


class Polyline:
    """Arc-length parameterized 2D polyline."""

    def __init__(self, points) -> None:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("polyline needs at least two 2D points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("polyline points must be finite")
        seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        if np.any(seg <= 0):
            raise ValueError("polyline has zero-length segments")
        self.points = pts
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    def _segment(self, s: float) -> tuple[int, float]:
        """Segment index and local offset for arc position s (clamped)."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(max(i, 0), len(self.points) - 2)
        return i, s - self.cum[i]

    def point_at(self, s: float) -> np.ndarray:
        """Position at arc length s; extrapolates along end tangents."""
        if 0.0 <= s <= self.length:
            i, ds = self._segment(s)
            d = self.points[i + 1] - self.points[i]
            return self.points[i] + d * (ds / np.hypot(*d))
        if s < 0.0:
            d = self.points[1] - self.points[0]
            return self.points[0] + d * (s / np.hypot(*d))
        d = self.points[-1] - self.points[-2]
        return self.points[-1] + d * ((s - self.length) / np.hypot(*d))

    def heading_at(self, s: float) -> float:
        i, _ = self._segment(s)
        d = self.points[i + 1] - self.points[i]
        return float(np.arctan2(d[1], d[0]))

    def project(self, point) -> tuple[float, float, float]:
        """(s, signed lateral offset, overshoot) of the closest point.

        Lateral offset is positive to the left of the travel direction.
        Overshoot is how far the point lies beyond the polyline ends along the
        end tangent (0 when it projects onto the interior).
        """
        p = np.asarray(point, dtype=np.float64)
        best = (math.inf, 0.0, 0.0, 0.0)  # dist2, s, lateral, overshoot
        for i in range(len(self.points) - 1):
            a = self.points[i]
            d = self.points[i + 1] - a
            seg_len2 = float(d @ d)
            t = float((p - a) @ d) / seg_len2
            tc = min(max(t, 0.0), 1.0)
            proj = a + d * tc
            r = p - proj
            dist2 = float(r @ r)
            if dist2 < best[0] - 1e-12:
                seg_len = math.sqrt(seg_len2)
                lateral = float(d[0] * r[1] - d[1] * r[0]) / seg_len
                over = 0.0
                if i == 0 and t < 0.0:
                    over = -t * seg_len
                elif i == len(self.points) - 2 and t > 1.0:
                    over = (t - 1.0) * seg_len
                best = (dist2, self.cum[i] + tc * seg_len, lateral, over)
        return best[1], best[2], best[3]


@dataclass(eq=False)
class Lane:
    id: str
    centerline: Polyline
    width: float
    speed_limit: float
    left_neighbor: str | None = None
    right_neighbor: str | None = None
    left_boundary: str = "solid"
    right_boundary: str = "dashed"
    successor: str | None = None

    @property
    def length(self) -> float:
        return self.centerline.length


@dataclass
class Behavior:
    """Scripted motion for a non-ego agent (see SCHEMA.md)."""

    type: str = "lane_follow"
    profile: list = field(default_factory=list)  # speed_schedule: [[t, v], ...]
    start_time: float = 0.0                      # cross
    speed: float = 0.0                           # cross
    distance: float | None = None                # cross: stop after this far

    def speed_at(self, t: float, default: float) -> float:
        if self.type == "speed_schedule":
            v = default
            for t_k, v_k in self.profile:
                if t + 1e-9 >= t_k:
                    v = v_k
            return v
        return default


@dataclass(eq=False)
class AgentState:
    id: str
    kind: str
    x: float
    y: float
    heading: float
    speed: float
    length: float
    width: float
    mass: float
    lane: str | None = None
    behavior: Behavior = field(default_factory=Behavior)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def copy(self) -> "AgentState":
        return AgentState(
            self.id, self.kind, self.x, self.y, self.heading, self.speed,
            self.length, self.width, self.mass, self.lane, self.behavior,
        )


@dataclass(eq=False)
class TrafficLight:
    lane: str
    stop_line_s: float
    schedule: list  # [(color, duration_s), ...] cycled from t=0
    x: float
    y: float

    @property
    def cycle(self) -> float:
        return sum(d for _, d in self.schedule)

    def color_at(self, t: float) -> str:
        phase = t % self.cycle
        for color, dur in self.schedule:
            if phase < dur:
                return color
            phase -= dur
        return self.schedule[-1][0]

    def next_change(self, t: float) -> float:
        """Absolute time of the next color transition after t."""
        phase = t % self.cycle
        acc = 0.0
        for _, dur in self.schedule:
            acc += dur
            if phase < acc:
                return t + (acc - phase)
        return t + self.cycle - phase


@dataclass(eq=False)
class Crosswalk:
    lanes: list
    span: tuple  # (s_begin, s_end) along each listed lane


@dataclass(eq=False)
class Scenario:
    name: str
    duration_s: float
    profile: str
    apriori_lane: str
    lanes: dict          # id -> Lane
    agents: list         # AgentState, ego first
    lights: list
    crosswalks: list
    _raw_lanes: dict = field(default_factory=dict, repr=False)

    @property
    def ego(self) -> AgentState:
        return self.agents[0]

    def lane(self, lane_id: str | None) -> Lane | None:
        if lane_id is None:
            return None
        return self.lanes[lane_id]

    def others(self) -> list:
        return self.agents[1:]


def resolve_apriori_lane(scenario: Scenario) -> Lane:
    return scenario.lanes[scenario.apriori_lane]


def lateral_offset(point, lane: Lane) -> float:
    """Signed lateral offset of a point from a lane centerline (left > 0).

    Raises ProjectionError when the point lies beyond the polyline ends by
    more than one lane width.
    """
    _, lateral, overshoot = lane.centerline.project(point)
    if overshoot > lane.width:
        raise ProjectionError(
            f"point {tuple(np.asarray(point, float))} beyond lane '{lane.id}' ends by {overshoot:.2f} m"
        )
    return lateral


# --------------------------------------------------------------------------
# loading / validation


def _require(doc: dict, path: str, allowed: set, required: set) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ScenarioError(f"{path}: unknown keys {unknown}")
    missing = sorted(required - set(doc))
    if missing:
        raise ScenarioError(f"{path}: missing keys {missing}")


def _number(doc, key, path, lo=None, hi=None):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise ScenarioError(f"{path}.{key}: must be finite")
    if lo is not None and v < lo:
        raise ScenarioError(f"{path}.{key}: must be >= {lo}")
    if hi is not None and v > hi:
        raise ScenarioError(f"{path}.{key}: must be <= {hi}")
    return v


def _point(doc, key, path):
    v = doc[key]
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
        raise ScenarioError(f"{path}.{key}: expected [x, y]")
    return float(v[0]), float(v[1])


def _load_lane(doc: dict, path: str) -> Lane:
    _require(
        doc, path,
        allowed={"id", "centerline", "width", "speed_limit", "left_neighbor",
                 "right_neighbor", "left_boundary", "right_boundary", "successor"},
        required={"id", "centerline", "width", "speed_limit"},
    )
    if not isinstance(doc["id"], str) or not doc["id"]:
        raise ScenarioError(f"{path}.id: expected a non-empty string")
    try:
        line = Polyline(doc["centerline"])
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{path}.centerline: {exc}") from exc
    width = _number(doc, "width", path, lo=0.5)
    limit = _number(doc, "speed_limit", path, lo=0.1)
    lane = Lane(
        id=doc["id"], centerline=line, width=width, speed_limit=limit,
        left_neighbor=doc.get("left_neighbor"),
        right_neighbor=doc.get("right_neighbor"),
        left_boundary=doc.get("left_boundary", "solid"),
        right_boundary=doc.get("right_boundary", "solid"),
        successor=doc.get("successor"),
    )
    for key in ("left_boundary", "right_boundary"):
        if getattr(lane, key) not in BOUNDARY_KINDS:
            raise ScenarioError(f"{path}.{key}: expected one of {BOUNDARY_KINDS}")
    return lane


def _load_behavior(doc: dict, path: str) -> Behavior:
    _require(
        doc, path,
        allowed={"type", "profile", "start_time", "speed", "distance"},
        required={"type"},
    )
    btype = doc["type"]
    if btype == "lane_follow" or btype == "static":
        _require(doc, path, allowed={"type"}, required={"type"})
        return Behavior(type=btype)
    if btype == "speed_schedule":
        _require(doc, path, allowed={"type", "profile"}, required={"type", "profile"})
        prof = doc["profile"]
        if not isinstance(prof, list) or not prof:
            raise ScenarioError(f"{path}.profile: expected a non-empty list of [t, v]")
        out = []
        last_t = -math.inf
        for i, pair in enumerate(prof):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ScenarioError(f"{path}.profile[{i}]: expected [t, v]")
            t_k, v_k = float(pair[0]), float(pair[1])
            if t_k <= last_t:
                raise ScenarioError(f"{path}.profile[{i}]: times must increase")
            if v_k < 0:
                raise ScenarioError(f"{path}.profile[{i}]: speed must be >= 0")
            out.append([t_k, v_k])
            last_t = t_k
        return Behavior(type="speed_schedule", profile=out)
    if btype == "cross":
        _require(doc, path, allowed={"type", "start_time", "speed", "distance"},
                 required={"type", "start_time", "speed"})
        start = _number(doc, "start_time", path, lo=0.0)
        speed = _number(doc, "speed", path, lo=0.0)
        dist = _number(doc, "distance", path, lo=0.0) if "distance" in doc else None
        return Behavior(type="cross", start_time=start, speed=speed, distance=dist)
    raise ScenarioError(f"{path}.type: unknown behavior type {btype!r}")


def _load_agent(doc: dict, path: str, index: int) -> AgentState:
    _require(
        doc, path,
        allowed={"id", "kind", "position", "heading", "speed", "length",
                 "width", "mass", "lane", "behavior"},
        required={"kind", "position", "heading", "speed", "length", "width"},
    )
    kind = doc["kind"]
    if kind not in AGENT_KINDS:
        raise ScenarioError(f"{path}.kind: expected one of {AGENT_KINDS}")
    x, y = _point(doc, "position", path)
    default_mass = DEFAULT_PEDESTRIAN_MASS if kind == "pedestrian" else DEFAULT_VEHICLE_MASS
    mass = _number(doc, "mass", path, lo=1.0) if "mass" in doc else default_mass
    behavior = (_load_behavior(doc["behavior"], f"{path}.behavior")
                if "behavior" in doc else _default_behavior(kind))
    return AgentState(
        id=doc.get("id", f"agent{index}"),
        kind=kind,
        x=x, y=y,
        heading=_number(doc, "heading", path),
        speed=_number(doc, "speed", path, lo=0.0),
        length=_number(doc, "length", path, lo=0.05),
        width=_number(doc, "width", path, lo=0.05),
        mass=mass,
        lane=doc.get("lane"),
        behavior=behavior,
    )


def _default_behavior(kind: str) -> Behavior:
    if kind in ("obstacle", "pedestrian"):
        return Behavior(type="static")
    return Behavior(type="lane_follow")


def _load_light(doc: dict, path: str, lanes: dict) -> TrafficLight:
    _require(doc, path,
             allowed={"lane", "stop_line_s", "schedule", "position"},
             required={"lane", "stop_line_s", "schedule"})
    lane_id = doc["lane"]
    if lane_id not in lanes:
        raise ScenarioError(f"{path}.lane: unknown lane {lane_id!r}")
    stop_s = _number(doc, "stop_line_s", path, lo=0.0, hi=lanes[lane_id].length)
    schedule = doc["schedule"]
    if not isinstance(schedule, list) or not schedule:
        raise ScenarioError(f"{path}.schedule: expected a non-empty list of [color, duration]")
    parsed = []
    for i, entry in enumerate(schedule):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ScenarioError(f"{path}.schedule[{i}]: expected [color, duration]")
        color, dur = entry
        if color not in LIGHT_COLORS:
            raise ScenarioError(f"{path}.schedule[{i}]: color must be one of {LIGHT_COLORS}")
        dur = float(dur)
        if dur <= 0:
            raise ScenarioError(f"{path}.schedule[{i}]: duration must be > 0")
        parsed.append((color, dur))
    if "position" in doc:
        x, y = _point(doc, "position", path)
    else:
        x, y = lanes[lane_id].centerline.point_at(stop_s)
    return TrafficLight(lane=lane_id, stop_line_s=stop_s, schedule=parsed, x=float(x), y=float(y))


def _load_crosswalk(doc: dict, path: str, lanes: dict) -> Crosswalk:
    _require(doc, path, allowed={"lanes", "span"}, required={"lanes", "span"})
    lane_ids = doc["lanes"]
    if not isinstance(lane_ids, list) or not lane_ids:
        raise ScenarioError(f"{path}.lanes: expected a non-empty list of lane ids")
    for lid in lane_ids:
        if lid not in lanes:
            raise ScenarioError(f"{path}.lanes: unknown lane {lid!r}")
    span = doc["span"]
    if not isinstance(span, (list, tuple)) or len(span) != 2:
        raise ScenarioError(f"{path}.span: expected [s_begin, s_end]")
    s0, s1 = float(span[0]), float(span[1])
    if not s0 < s1:
        raise ScenarioError(f"{path}.span: s_begin must be < s_end")
    for lid in lane_ids:
        if s1 > lanes[lid].length:
            raise ScenarioError(f"{path}.span: extends past lane {lid!r} (length {lanes[lid].length:.1f})")
    return Crosswalk(lanes=list(lane_ids), span=(s0, s1))


def load_scenario(source) -> Scenario:
    """Load a scenario from a file path or an already-parsed dict."""
    if isinstance(source, dict):
        doc = source
        name_default = "scenario"
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        import os
        name_default = os.path.splitext(os.path.basename(str(source)))[0]
    if not isinstance(doc, dict):
        raise ScenarioError("scenario: top level must be an object")
    _require(
        doc, "scenario",
        allowed={"name", "duration_s", "profile", "apriori_lane", "lanes",
                 "agents", "lights", "crosswalks"},
        required={"duration_s", "apriori_lane", "lanes", "agents"},
    )
    duration = _number(doc, "duration_s", "scenario", lo=0.1)
    profile = doc.get("profile", "regular")
    if profile not in PROFILES:
        raise ScenarioError(f"scenario.profile: expected one of {PROFILES}")

    if not isinstance(doc["lanes"], list) or not doc["lanes"]:
        raise ScenarioError("scenario.lanes: expected a non-empty list")
    lanes: dict = {}
    raw_lanes: dict = {}
    for i, lane_doc in enumerate(doc["lanes"]):
        lane = _load_lane(lane_doc, f"lanes[{i}]")
        if lane.id in lanes:
            raise ScenarioError(f"lanes[{i}].id: duplicate lane id {lane.id!r}")
        lanes[lane.id] = lane
        raw_lanes[lane.id] = lane_doc
    for lid, lane in lanes.items():
        for key in ("left_neighbor", "right_neighbor", "successor"):
            ref = getattr(lane, key)
            if ref is not None and ref not in lanes:
                raise ScenarioError(f"lane {lid!r}.{key}: unknown lane {ref!r}")

    if not isinstance(doc["agents"], list) or not doc["agents"]:
        raise ScenarioError("scenario.agents: expected a non-empty list")
    agents = []
    seen_ids: set = set()
    for i, agent_doc in enumerate(doc["agents"]):
        agent = _load_agent(agent_doc, f"agents[{i}]", i)
        if agent.id in seen_ids:
            raise ScenarioError(f"agents[{i}].id: duplicate agent id {agent.id!r}")
        seen_ids.add(agent.id)
        if agent.lane is not None and agent.lane not in lanes:
            raise ScenarioError(f"agents[{i}].lane: unknown lane {agent.lane!r}")
        agents.append(agent)
    egos = [a for a in agents if a.kind == "ego"]
    if len(egos) != 1:
        raise ScenarioError(f"scenario.agents: expected exactly one ego, got {len(egos)}")
    if egos[0].lane is None:
        raise ScenarioError("scenario.agents: the ego must reference a lane")
    agents.sort(key=lambda a: a.kind != "ego")  # ego first, stable otherwise

    if doc.get("apriori_lane") not in lanes:
        raise ScenarioError(f"scenario.apriori_lane: unknown lane {doc.get('apriori_lane')!r}")

    lights = [
        _load_light(d, f"lights[{i}]", lanes)
        for i, d in enumerate(doc.get("lights", []))
    ]
    crosswalks = [
        _load_crosswalk(d, f"crosswalks[{i}]", lanes)
        for i, d in enumerate(doc.get("crosswalks", []))
    ]

    return Scenario(
        name=doc.get("name", name_default),
        duration_s=duration,
        profile=profile,
        apriori_lane=doc["apriori_lane"],
        lanes=lanes,
        agents=agents,
        lights=lights,
        crosswalks=crosswalks,
        _raw_lanes=raw_lanes,
    )


def serialize_scenario(sc: Scenario) -> dict:
    """Inverse of load_scenario (all defaults made explicit)."""
    lanes = []
    for lane in sc.lanes.values():
        lanes.append({
            "id": lane.id,
            "centerline": [[float(x), float(y)] for x, y in lane.centerline.points],
            "width": lane.width,
            "speed_limit": lane.speed_limit,
            "left_neighbor": lane.left_neighbor,
            "right_neighbor": lane.right_neighbor,
            "left_boundary": lane.left_boundary,
            "right_boundary": lane.right_boundary,
            "successor": lane.successor,
        })
    agents = []
    for a in sc.agents:
        b = a.behavior
        if b.type == "speed_schedule":
            beh = {"type": b.type, "profile": [[t, v] for t, v in b.profile]}
        elif b.type == "cross":
            beh = {"type": b.type, "start_time": b.start_time, "speed": b.speed}
            if b.distance is not None:
                beh["distance"] = b.distance
        else:
            beh = {"type": b.type}
        agents.append({
            "id": a.id, "kind": a.kind, "position": [a.x, a.y],
            "heading": a.heading, "speed": a.speed, "length": a.length,
            "width": a.width, "mass": a.mass, "lane": a.lane, "behavior": beh,
        })
    return {
        "name": sc.name,
        "duration_s": sc.duration_s,
        "profile": sc.profile,
        "apriori_lane": sc.apriori_lane,
        "lanes": lanes,
        "agents": agents,
        "lights": [
            {"lane": l.lane, "stop_line_s": l.stop_line_s,
             "schedule": [[c, d] for c, d in l.schedule], "position": [l.x, l.y]}
            for l in sc.lights
        ],
        "crosswalks": [
            {"lanes": list(c.lanes), "span": [c.span[0], c.span[1]]} for c in sc.crosswalks
        ],
    }
