"""Environments, trajectories and model runs.

Scenario files (``.scn``) are JSON documents::

    {
      "name": "channel",
      "region": {"width": 20, "height": 20, "resolution": 0.1},
      "obstacles": [{"type": "rect", "params": {"x0": .., "y0": .., "x1": .., "y1": ..}},
                    {"type": "annulus_segment",
                     "params": {"cx": .., "cy": .., "r_inner": .., "r_outer": ..,
                                "start_deg": .., "end_deg": ..}}],
      "trajectories": [[[x, y], ...], ...],      # one list per target
      "sections": ["open", "channel", ...],      # optional, one per waypoint
      "field": {"lambda_t": .., "lambda_o": .., "tau": .., "perception_radius": ..},
      "calibration": {"reference": "<tree text>"}  # optional
    }
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field as dc_field
from importlib import resources
from pathlib import Path

import numpy as np

from . import genome
from .ehgrn import EhGrnModel, ehgrn_steady
from .field import (
    DegeneratePatternError,
    FieldConfig,
    GridSpec,
    MorphogenField,
    Pattern,
    extract_pattern,
    obstacle_distance,
    snap,
    target_distance,
)
from .fitness import FitnessConfig, accuracy_at_waypoint


class ScenarioError(ValueError):
    pass


# ---------------------------------------------------------------- primitives

@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    type = "rect"

    def mask(self, X, Y):
        return (X >= self.x0) & (X <= self.x1) & (Y >= self.y0) & (Y <= self.y1)

    def params(self):
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}


@dataclass(frozen=True)
class AnnulusSegment:
    cx: float
    cy: float
    r_inner: float
    r_outer: float
    start_deg: float
    end_deg: float

    type = "annulus_segment"

    def mask(self, X, Y):
        r = np.hypot(X - self.cx, Y - self.cy)
        a = np.degrees(np.arctan2(Y - self.cy, X - self.cx)) % 360.0
        a0, a1 = self.start_deg % 360.0, self.end_deg % 360.0
        if self.end_deg - self.start_deg >= 360.0:
            ang = np.ones_like(r, bool)
        elif a0 <= a1:
            ang = (a >= a0) & (a <= a1)
        else:
            ang = (a >= a0) | (a <= a1)
        return (r >= self.r_inner) & (r <= self.r_outer) & ang

    def params(self):
        return {
            "cx": self.cx, "cy": self.cy, "r_inner": self.r_inner, "r_outer": self.r_outer,
            "start_deg": self.start_deg, "end_deg": self.end_deg,
        }


_PRIMITIVES = {"rect": Rect, "annulus_segment": AnnulusSegment}


def make_obstacle(d: dict):
    try:
        cls = _PRIMITIVES[d["type"]]
    except KeyError:
        raise ScenarioError(f"unknown obstacle type {d.get('type')!r}") from None
    try:
        return cls(**{k: float(v) for k, v in d["params"].items()})
    except (TypeError, KeyError) as e:
        raise ScenarioError(f"bad parameters for {d['type']}: {e}") from None


# ---------------------------------------------------------------- scenario

@dataclass
class WaypointInputs:
    """Everything needed to evaluate a model at one waypoint.

    Arrays cover only the bounding box of the perception window, which is
    all that extraction ever looks at.
    """

    spec: GridSpec
    cfg: FieldConfig
    targets: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    obstacle_mask: np.ndarray
    target_dist: np.ndarray
    obstacle_dists: list


@dataclass
class Scenario:
    name: str
    region: GridSpec
    obstacles: list
    trajectories: list
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    sections: list | None = None
    reference: str | None = None

    def __post_init__(self):
        self.trajectories = [np.asarray(t, dtype=float).reshape(-1, 2) for t in self.trajectories]
        self._lock = threading.RLock()
        self._cache: dict = {}
        self.validate()

    # -- structure

    def validate(self):
        if not self.trajectories:
            raise ScenarioError("scenario needs at least one trajectory")
        lens = {len(t) for t in self.trajectories}
        if len(lens) != 1:
            raise ScenarioError("all trajectories must have the same number of waypoints")
        if lens.pop() == 0:
            raise ScenarioError("trajectory is empty")
        if self.sections is not None and len(self.sections) != self.n_waypoints:
            raise ScenarioError("sections must list one label per waypoint")
        mask = self.obstacle_mask
        for traj in self.trajectories:
            for p in traj:
                if not self.region.contains(p):
                    raise ScenarioError(f"waypoint {tuple(p)} lies outside the region")
                if mask[self.region.cell_of(p)]:
                    raise ScenarioError(f"waypoint {tuple(p)} lies inside an obstacle")

    @property
    def n_waypoints(self) -> int:
        return len(self.trajectories[0])

    @property
    def n_targets(self) -> int:
        return len(self.trajectories)

    def targets_at(self, i: int) -> np.ndarray:
        return np.array([t[i] for t in self.trajectories])

    def section(self, i: int) -> str:
        return self.sections[i] if self.sections else ""

    def _cached(self, key, fn):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = fn()
            return self._cache[key]

    @property
    def primitive_masks(self) -> list:
        def build():
            X, Y = self.region.mesh()
            return [o.mask(X, Y) for o in self.obstacles]
        return self._cached("pmasks", build)

    @property
    def obstacle_mask(self) -> np.ndarray:
        def build():
            m = np.zeros(self.region.shape, bool)
            for pm in self.primitive_masks:
                m |= pm
            return m
        return self._cached("mask", build)

    @property
    def primitive_distances(self) -> list:
        return self._cached(
            "pdist", lambda: [obstacle_distance(m, self.region) for m in self.primitive_masks]
        )

    @property
    def obstacle_distances(self) -> np.ndarray:
        return self._cached("odist", lambda: obstacle_distance(self.obstacle_mask, self.region))

    def waypoint_inputs(self, i: int, cfg: FieldConfig | None = None) -> WaypointInputs:
        cfg = cfg or self.field
        if not (0 <= i < self.n_waypoints):
            raise IndexError(f"waypoint {i} out of range")
        return self._cached(("wp", i, cfg), lambda: self._build_inputs(i, cfg))

    def _build_inputs(self, i, cfg):
        spec = self.region
        targets = snap(self.targets_at(i), spec)
        r = spec.resolution
        pad = cfg.perception_radius + 2 * r
        xs = targets[:, 0]
        ys = targets[:, 1]
        c0 = max(int(math.floor((xs.min() - pad - spec.origin[0]) / r)), 0)
        c1 = min(int(math.ceil((xs.max() + pad - spec.origin[0]) / r)), spec.nx)
        r0 = max(int(math.floor((ys.min() - pad - spec.origin[1]) / r)), 0)
        r1 = min(int(math.ceil((ys.max() + pad - spec.origin[1]) / r)), spec.ny)
        rows, cols = slice(r0, r1), slice(c0, c1)
        sub = spec.crop(rows, cols)
        td = target_distance(targets, sub)
        od = self.obstacle_distances[rows, cols]
        with np.errstate(over="ignore"):
            x2 = np.exp(-od / cfg.lambda_o)
        return WaypointInputs(
            spec=sub,
            cfg=cfg,
            targets=targets,
            x1=np.exp(-td / cfg.lambda_t),
            x2=x2,
            obstacle_mask=self.obstacle_mask[rows, cols],
            target_dist=td,
            obstacle_dists=[d[rows, cols] for d in self.primitive_distances],
        )

    def with_field(self, cfg: FieldConfig) -> "Scenario":
        return Scenario(self.name, self.region, list(self.obstacles), list(self.trajectories),
                        cfg, self.sections, self.reference)

    # -- serialization

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "region": {"width": self.region.width, "height": self.region.height,
                       "resolution": self.region.resolution},
            "obstacles": [{"type": o.type, "params": o.params()} for o in self.obstacles],
            "trajectories": [t.tolist() for t in self.trajectories],
            "field": {"lambda_t": self.field.lambda_t, "lambda_o": self.field.lambda_o,
                      "tau": self.field.tau, "perception_radius": self.field.perception_radius},
        }
        if self.sections:
            d["sections"] = list(self.sections)
        if self.reference:
            d["calibration"] = {"reference": self.reference}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            reg = d["region"]
            region = GridSpec(float(reg["width"]), float(reg["height"]), float(reg.get("resolution", 0.1)))
            obstacles = [make_obstacle(o) for o in d.get("obstacles", [])]
            trajectories = d["trajectories"]
            fcfg = FieldConfig(**{k: float(v) for k, v in d.get("field", {}).items()})
        except (KeyError, TypeError) as e:
            raise ScenarioError(f"malformed scenario: {e}") from None
        except ValueError as e:
            raise ScenarioError(str(e)) from None
        if not trajectories or any(len(t) == 0 for t in trajectories):
            raise ScenarioError("trajectory is empty")
        ref = d.get("calibration", {}).get("reference")
        return cls(d.get("name", "scenario"), region, obstacles, trajectories, fcfg,
                   d.get("sections"), ref)


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a built-in by name (``channel``, ``compound``...)."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and str(path) in builtin_names():
        return builtin(str(path))
    if not p.exists() and p.name in {n + ".scn" for n in builtin_names()}:
        return builtin(p.stem)
    try:
        text = p.read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: {e}") from None
    return Scenario.from_dict(d)


def builtin_names() -> list:
    return sorted(
        f.name[:-4] for f in resources.files("morphoevo.data").iterdir() if f.name.endswith(".scn")
    )


def builtin(name: str) -> Scenario:
    f = resources.files("morphoevo.data") / f"{name}.scn"
    if not f.is_file():
        raise ScenarioError(f"no built-in scenario {name!r}")
    return Scenario.from_dict(json.loads(f.read_text()))


# ---------------------------------------------------------------- model runs

def model_field(model, wi: WaypointInputs) -> MorphogenField:
    if isinstance(model, EhGrnModel):
        vals = ehgrn_steady(model, wi.x1, wi.x2)
    else:
        vals = genome.evaluate(model, wi.x1, wi.x2)
    return MorphogenField(wi.spec, np.broadcast_to(vals, wi.spec.shape))


def model_pattern(model, scenario: Scenario, i: int, cfg: FieldConfig | None = None) -> Pattern:
    wi = scenario.waypoint_inputs(i, cfg)
    return extract_pattern(model_field(model, wi), wi.cfg, targets=wi.targets,
                           obstacle_mask=wi.obstacle_mask, waypoint_index=i,
                           target_dist=wi.target_dist)


CONTOUR_LENGTH_FACTOR = math.pi / (2.0 * math.sqrt(2.0))


def estimate_robot_count(pattern: Pattern, spacing: float = 0.5) -> int:
    """Robots needed to line the pattern's contour at the given spacing.

    The contour is an 8-connected digital curve, whose cell count
    underestimates length by 2*sqrt(2)/pi on average over orientations;
    the count is scaled back by the inverse of that factor.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    n = int(pattern.contour.sum())
    if n == 0:
        raise ValueError("pattern is empty")
    length = n * pattern.spec.resolution * CONTOUR_LENGTH_FACTOR
    return max(1, math.ceil(length / spacing - 1e-9))


def assign_robots(points, robots):
    """Greedy matching: repeatedly pair the globally closest robot and point.

    Returns ``(assignment, total_displacement)`` where ``assignment[i]`` is
    the point index given to robot ``i``.
    """
    pts = np.asarray(points.robots if isinstance(points, Pattern) else points, float).reshape(-1, 2)
    rob = np.asarray(robots, float).reshape(-1, 2)
    if len(pts) != len(rob):
        raise ValueError(f"{len(rob)} robots for {len(pts)} points")
    d = np.hypot(rob[:, None, 0] - pts[None, :, 0], rob[:, None, 1] - pts[None, :, 1])
    order = np.lexsort((np.tile(np.arange(len(pts)), len(rob)),
                        np.repeat(np.arange(len(rob)), len(pts)), d.ravel()))
    assign = [-1] * len(rob)
    used = np.zeros(len(pts), bool)
    left = len(rob)
    total = 0.0
    for k in order:
        if left == 0:
            break
        i, j = divmod(int(k), len(pts))
        if assign[i] < 0 and not used[j]:
            assign[i] = j
            used[j] = True
            total += float(d[i, j])
            left -= 1
    return assign, total


def _r(x, nd=6):
    return None if x is None else round(float(x), nd)


@dataclass
class RunReport:
    model: str
    scenario: str
    waypoints: list
    f2: float
    robot_count: int
    violations: dict

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "scenario": self.scenario,
            "f2": _r(self.f2, 9),
            "robot_count": self.robot_count,
            "violations": self.violations,
            "waypoints": self.waypoints,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def model_name(model) -> str:
    return model.name if isinstance(model, EhGrnModel) else genome.serialize(model)


def run_model(model, scenario: Scenario, fit_cfg: FitnessConfig | None = None,
              cfg: FieldConfig | None = None, spacing: float = 0.5) -> RunReport:
    """Evaluate a model at every waypoint and collect pattern metrics."""
    fit_cfg = fit_cfg or FitnessConfig()
    rows = []
    total = 0.0
    counts = {"d_min": 0, "d_max": 0, "d_obs_min": 0, "degenerate": 0}
    robots_needed = 0
    for i in range(scenario.n_waypoints):
        wi = scenario.waypoint_inputs(i, cfg)
        try:
            pat = extract_pattern(model_field(model, wi), wi.cfg, targets=wi.targets,
                                  obstacle_mask=wi.obstacle_mask, waypoint_index=i,
                                  target_dist=wi.target_dist)
        except DegeneratePatternError:
            pat = None
        f2 = accuracy_at_waypoint(pat, wi.targets, wi.obstacle_dists, fit_cfg)
        total += f2
        row = {
            "index": i,
            "section": scenario.section(i),
            "targets": [[_r(x) for x in t] for t in wi.targets],
            "degenerate": pat is None or pat.empty,
            "f2": _r(f2, 9),
        }
        if row["degenerate"]:
            counts["degenerate"] += 1
            row.update(n_points=0, components=0, robot_count=0, min_obstacle_distance=None,
                       per_target=[], nearest_min=None, nearest_max=None,
                       violations={"d_min": False, "d_max": False, "d_obs_min": False},
                       robots=[])
            rows.append(row)
            continue
        robots = pat.robots
        d_pt = np.hypot(robots[:, None, 0] - wi.targets[None, :, 0],
                        robots[:, None, 1] - wi.targets[None, :, 1])
        nearest = d_pt.min(axis=1)
        if wi.obstacle_dists:
            dobs = float(min(g[pat.contour].min() for g in wi.obstacle_dists))
        else:
            dobs = None
        viol = {
            "d_min": bool(nearest.min() < fit_cfg.d_min),
            "d_max": bool(nearest.max() > fit_cfg.d_max),
            "d_obs_min": bool(dobs is not None and dobs < fit_cfg.d_obs_min),
        }
        for k, v in viol.items():
            counts[k] += int(v)
        n_rob = estimate_robot_count(pat, spacing)
        robots_needed = max(robots_needed, n_rob)
        row.update(
            n_points=int(len(robots)),
            components=pat.components(),
            robot_count=n_rob,
            min_obstacle_distance=_r(dobs),
            per_target=[{"min": _r(d_pt[:, j].min()), "max": _r(d_pt[:, j].max())}
                        for j in range(d_pt.shape[1])],
            nearest_min=_r(nearest.min()),
            nearest_max=_r(nearest.max()),
            violations=viol,
            robots=[[_r(x), _r(y)] for x, y in robots],
        )
        rows.append(row)
    return RunReport(model_name(model), scenario.name, rows, total / scenario.n_waypoints,
                     robots_needed, counts)
