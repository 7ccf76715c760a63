"""Objectives: structural complexity f1 and pattern accuracy f2."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import genome
from .field import DegeneratePatternError, MorphogenField, extract_pattern

EMPTY_PENALTY = 2.0


@dataclass(frozen=True)
class FitnessConfig:
    d_min: float = 1.0
    d_max: float = 2.0
    d_obs_min: float = 2.0
    k1: float = 20.0
    k2: float = 20.0
    k3: float = 20.0

    def __post_init__(self):
        if not (0 < self.d_min < self.d_max):
            raise ValueError("need 0 < d_min < d_max")
        if self.d_obs_min <= 0:
            raise ValueError("d_obs_min must be positive")
        if min(self.k1, self.k2, self.k3) <= 0:
            raise ValueError("steepness factors must be positive")


@dataclass(frozen=True)
class Objectives:
    f1: int
    f2: float

    def as_tuple(self):
        return (self.f1, self.f2)


class EvalCounter:
    """Thread-safe evaluation tally."""

    def __init__(self):
        self._lock = threading.Lock()
        self._n = 0

    def increment(self, n: int = 1) -> int:
        with self._lock:
            self._n += n
            return self._n

    @property
    def value(self) -> int:
        with self._lock:
            return self._n

    def reset(self):
        with self._lock:
            self._n = 0


GLOBAL_COUNTER = EvalCounter()


def _sig(a, b, k):
    # sig(a, b, k) = 1 / (1 + exp(-k (a - b)))
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-k * (np.asarray(a, float) - b)))


def accuracy_terms(robots, targets, obstacle_dist, cfg: FitnessConfig):
    """Target and obstacle terms of the accuracy penalty.

    ``robots`` is an (N_p, 2) array of positions, ``targets`` an (N_t, 2)
    array and ``obstacle_dist`` an (N_o, N_p) array of distances from each
    robot to each obstacle primitive.
    """
    robots = np.asarray(robots, float).reshape(-1, 2)
    targets = np.asarray(targets, float).reshape(-1, 2)
    n_p, n_t = len(robots), len(targets)
    d_pt = np.hypot(robots[:, None, 0] - targets[None, :, 0], robots[:, None, 1] - targets[None, :, 1])
    t_term = (_sig(d_pt, cfg.d_max, cfg.k1) + _sig(cfg.d_min, d_pt, cfg.k2)).sum() / (n_p * n_t)
    o_term = 0.0
    d_po = np.asarray(obstacle_dist, float).reshape(-1, n_p) if np.size(obstacle_dist) else None
    if d_po is not None and len(d_po):
        o_term = _sig(cfg.d_obs_min, d_po, cfg.k3).sum() / (n_p * len(d_po))
    return float(t_term), float(o_term)


def accuracy_at_waypoint(pattern, targets, obstacles, cfg: FitnessConfig) -> float:
    """Accuracy penalty of one pattern.

    ``obstacles`` is a list of per-primitive distance grids aligned with the
    pattern's grid (0 inside the primitive).  An empty pattern scores
    ``EMPTY_PENALTY``.
    """
    if pattern is None or pattern.empty:
        return EMPTY_PENALTY
    robots = pattern.robots
    d_po = np.array([g[pattern.contour] for g in obstacles]) if len(obstacles) else np.empty((0, len(robots)))
    t, o = accuracy_terms(robots, targets, d_po, cfg)
    return t + o


def waypoint_pattern(tree, wi, index: int = 0):
    """Pattern of a GRN tree at prepared waypoint inputs (None if degenerate)."""
    out = MorphogenField(wi.spec, np.broadcast_to(genome.evaluate(tree, wi.x1, wi.x2), wi.spec.shape))
    try:
        return extract_pattern(
            out, wi.cfg, targets=wi.targets, obstacle_mask=wi.obstacle_mask,
            waypoint_index=index, target_dist=wi.target_dist,
        )
    except DegeneratePatternError:
        return None


def pattern_f2(tree, scenario, cfg: FitnessConfig) -> float:
    """Mean accuracy penalty over all waypoints (no counting)."""
    total = 0.0
    for i in range(scenario.n_waypoints):
        wi = scenario.waypoint_inputs(i)
        pat = waypoint_pattern(tree, wi, i)
        total += accuracy_at_waypoint(pat, wi.targets, wi.obstacle_dists, cfg)
    return total / scenario.n_waypoints


def evaluate_objectives(tree, scenario, cfg: FitnessConfig | None = None, counter: EvalCounter | None = None) -> Objectives:
    """f1 = node count, f2 = mean waypoint accuracy penalty.

    Each call adds one to ``counter`` (the module-wide counter by default).
    """
    cfg = cfg or FitnessConfig()
    if scenario.n_waypoints < 1:
        raise ValueError("scenario has no waypoints")
    f2 = pattern_f2(tree, scenario, cfg)
    (counter or GLOBAL_COUNTER).increment()
    return Objectives(genome.node_count(tree), f2)
