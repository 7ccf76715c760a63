"""Morphogen gradient grids and candidate-point extraction."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from . import genome

# 4-connectivity for region labelling, 8-connectivity for pattern pieces
_CROSS = ndimage.generate_binary_structure(2, 1)
_SQUARE = ndimage.generate_binary_structure(2, 2)


class DegeneratePatternError(ValueError):
    """The output field carries no usable signal (maximum not positive)."""


@dataclass(frozen=True)
class GridSpec:
    width: float
    height: float
    resolution: float = 0.1
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        for name in ("width", "height"):
            n = getattr(self, name) / self.resolution
            if n <= 0 or abs(n - round(n)) > 1e-6:
                raise ValueError(f"{name}/resolution must be a positive integer, got {n}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def nx(self) -> int:
        return int(round(self.width / self.resolution))

    @property
    def ny(self) -> int:
        return int(round(self.height / self.resolution))

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    def axes(self):
        r = self.resolution
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * r
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * r
        return xs, ys

    def mesh(self):
        xs, ys = self.axes()
        return np.meshgrid(xs, ys)

    def cell_of(self, p) -> tuple:
        """(row, col) of the cell containing world point ``p`` (clamped)."""
        c = int(np.floor((p[0] - self.origin[0]) / self.resolution))
        r = int(np.floor((p[1] - self.origin[1]) / self.resolution))
        return min(max(r, 0), self.ny - 1), min(max(c, 0), self.nx - 1)

    def contains(self, p) -> bool:
        x, y = p[0] - self.origin[0], p[1] - self.origin[1]
        return 0 <= x < self.width and 0 <= y < self.height

    def center(self, rc) -> tuple:
        r, c = rc
        return (
            self.origin[0] + (c + 0.5) * self.resolution,
            self.origin[1] + (r + 0.5) * self.resolution,
        )

    def crop(self, rows: slice, cols: slice) -> "GridSpec":
        r = self.resolution
        return GridSpec(
            width=(cols.stop - cols.start) * r,
            height=(rows.stop - rows.start) * r,
            resolution=r,
            origin=(self.origin[0] + cols.start * r, self.origin[1] + rows.start * r),
        )


@dataclass
class MorphogenField:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.spec.shape}")


@dataclass(frozen=True)
class FieldConfig:
    """Gradient and threshold constants.

    ``perception_radius`` bounds the neighbourhood around the targets in
    which candidate points are sought and in which the threshold is
    normalised.
    """

    lambda_t: float = 1.75
    lambda_o: float = 0.5
    tau: float = 0.15
    perception_radius: float = 4.0

    def __post_init__(self):
        if self.lambda_t <= 0 or self.lambda_o <= 0:
            raise ValueError("decay lengths must be positive")
        if not (0.0 < self.tau < 1.0):
            raise ValueError("tau must lie in (0, 1)")
        if self.perception_radius <= 0:
            raise ValueError("perception_radius must be positive")


@dataclass
class Pattern:
    """Candidate region and the robot positions on its enclosing contour.

    ``region`` holds every cell above the threshold.  ``contour`` holds the
    region cells that bound the target-enclosing piece of the region; these
    are where robots stand.
    """

    spec: GridSpec
    region: np.ndarray
    contour: np.ndarray
    waypoint_index: int = 0
    threshold: float = 0.0

    def _coords(self, mask):
        rr, cc = np.nonzero(mask)  # row-major order
        r = self.spec.resolution
        return np.column_stack(
            (self.spec.origin[0] + (cc + 0.5) * r, self.spec.origin[1] + (rr + 0.5) * r)
        )

    @property
    def points(self) -> np.ndarray:
        return self._coords(self.region)

    @property
    def robots(self) -> np.ndarray:
        return self._coords(self.contour)

    @property
    def empty(self) -> bool:
        return not self.contour.any()

    def components(self) -> int:
        """Number of 8-connected pieces of the robot contour."""
        if not self.contour.any():
            return 0
        return int(ndimage.label(self.contour, structure=_SQUARE)[1])


def snap(targets, spec: GridSpec) -> np.ndarray:
    """Targets moved to the centres of the cells that contain them."""
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    return np.array([spec.center(spec.cell_of(p)) for p in pts])


def target_distance(targets, spec: GridSpec) -> np.ndarray:
    pts = snap(targets, spec)
    if len(pts) == 0:
        raise ValueError("at least one target is required")
    X, Y = spec.mesh()
    d = np.full(spec.shape, np.inf)
    for tx, ty in pts:
        np.minimum(d, np.hypot(X - tx, Y - ty), out=d)
    return d


def obstacle_distance(mask: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Distance (m) from each cell centre to the nearest obstacle cell centre.

    Zero inside obstacles, ``inf`` everywhere when there are none.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(~mask) * spec.resolution


def build_target_field(targets, spec: GridSpec, cfg: FieldConfig) -> MorphogenField:
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.size == 0:
        raise ValueError("at least one target is required")
    for p in targets:
        if not spec.contains(p):
            raise ValueError(f"target {tuple(p)} lies outside the region")
    return MorphogenField(spec, np.exp(-target_distance(targets, spec) / cfg.lambda_t))


def build_obstacle_field(obstacle_mask, spec: GridSpec, cfg: FieldConfig) -> MorphogenField:
    d = obstacle_distance(obstacle_mask, spec)
    with np.errstate(over="ignore"):
        vals = np.exp(-d / cfg.lambda_o)  # exp(-inf) == 0 for the empty case
    return MorphogenField(spec, vals)


def evaluate_tree_field(tree, x1: MorphogenField, x2: MorphogenField) -> MorphogenField:
    if x1.spec != x2.spec:
        raise ValueError("x1 and x2 must share one grid")
    if not genome.is_valid(tree):
        raise ValueError("malformed tree")
    out = np.broadcast_to(genome.evaluate(tree, x1.values, x2.values), x1.spec.shape)
    return MorphogenField(x1.spec, np.array(out, dtype=float))


def _n4(mask: np.ndarray) -> np.ndarray:
    """Cells 4-adjacent to ``mask``."""
    out = np.zeros_like(mask)
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def extract_pattern(
    fld: MorphogenField,
    cfg: FieldConfig,
    targets=None,
    obstacle_mask=None,
    waypoint_index: int = 0,
    target_dist=None,
) -> Pattern:
    """Threshold the output field and locate the robot contour.

    The threshold is ``lo + tau * (hi - lo)`` where ``lo``/``hi`` are the
    extreme values over the search window.  The window is every free cell
    (obstacle cells excluded) or, when targets are given, the free cells
    within ``cfg.perception_radius`` of a target.

    With targets, the contour is restricted to the boundary of the region
    piece that encloses each target: if a target sits inside the region the
    contour is that piece's rim; if it sits in a hole, the contour is the
    ring of region cells around that hole.
    """
    v = fld.values
    if not np.all(np.isfinite(v)):
        raise ValueError("field contains non-finite values")
    spec = fld.spec
    free = np.ones(spec.shape, bool) if obstacle_mask is None else ~np.asarray(obstacle_mask, bool)

    trc = []
    window = free
    if targets is not None:
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        if target_dist is None:
            target_dist = target_distance(targets, spec)
        window = free & (target_dist <= cfg.perception_radius)
        trc = [spec.cell_of(p) for p in targets]
    if not window.any():
        raise DegeneratePatternError("search window is empty")

    wv = v[window]
    lo, hi = float(wv.min()), float(wv.max())
    if hi <= 0.0:
        raise DegeneratePatternError("output field maximum is not positive")
    thr = lo + cfg.tau * (hi - lo)
    region = window & (v >= thr)
    below = window & ~region

    if not trc:
        contour = region & _n4(below)
    else:
        contour = np.zeros_like(region)
        la = ndimage.label(region, structure=_CROSS)[0]
        lb = ndimage.label(below, structure=_CROSS)[0]
        near_below = _n4(below)
        for rc in trc:
            if region[rc]:
                contour |= (la == la[rc]) & near_below
            elif below[rc]:
                contour |= region & _n4(lb == lb[rc])
    return Pattern(spec, region, contour, waypoint_index, thr)


# ---------------------------------------------------------------- calibration

@dataclass
class CalibrationResult:
    lambda_t: float
    tau: float
    score: float
    table: list = dc_field(default_factory=list)


class CalibrationInfeasible(RuntimeError):
    """No setting is feasible; ``table`` holds the full sweep."""

    def __init__(self, msg, table=()):
        super().__init__(msg, list(table))
        self.table = list(table)


def _grid_values(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def calibrate(
    reference_tree,
    size: float = 20.0,
    resolution: float = 0.1,
    d_min: float = 1.0,
    d_max: float = 2.0,
    lambda_o: float = 0.5,
    perception_radius: float = 4.0,
    lambda_grid=None,
    tau_grid=None,
) -> CalibrationResult:
    """Pick (lambda_t, tau) for one isolated target in open space.

    A setting is feasible when every robot-contour radius lies within
    ``[d_min, d_max]``.  Among feasible settings the score
    ``|mean radius - band centre| + (max - min radius)`` is minimised; ties
    go to the smaller ``lambda_t`` and then the smaller ``tau``.
    """
    if lambda_grid is None:
        lambda_grid = _grid_values(0.5, 3.0, 0.25)
    if tau_grid is None:
        tau_grid = _grid_values(0.05, 0.95, 0.05)
    spec = GridSpec(size, size, resolution)
    centre = np.array([[size / 2, size / 2]])
    dist = target_distance(centre, spec)
    zero = MorphogenField(spec, np.zeros(spec.shape))
    mid = 0.5 * (d_min + d_max)
    table = []
    best = None
    for lt in lambda_grid:
        x1 = MorphogenField(spec, np.exp(-dist / lt))
        out = evaluate_tree_field(reference_tree, x1, zero)
        for tau in tau_grid:
            cfg = FieldConfig(lt, lambda_o, tau, perception_radius)
            row = {"lambda_t": lt, "tau": tau, "r_min": None, "r_max": None,
                   "r_mean": None, "feasible": False, "score": None}
            try:
                pat = extract_pattern(out, cfg, targets=centre, target_dist=dist)
            except DegeneratePatternError:
                table.append(row)
                continue
            if not pat.empty:
                r = dist[pat.contour]
                row.update(r_min=float(r.min()), r_max=float(r.max()), r_mean=float(r.mean()))
                if r.min() >= d_min and r.max() <= d_max:
                    score = abs(r.mean() - mid) + (r.max() - r.min())
                    row.update(feasible=True, score=float(score))
                    key = (round(score, 9), lt, tau)
                    if best is None or key < best[0]:
                        best = (key, lt, tau, float(score))
            table.append(row)
    if best is None:
        raise CalibrationInfeasible(
            "no (lambda_t, tau) keeps the reference contour within the band", table)
    return CalibrationResult(best[1], best[2], best[3], table)
