"""Fixed-structure hierarchical GRN baselines (EH-GRN).

Two reference cascades with fixed thresholds are provided.  Both map the morphogen inputs
``p1`` (targets) and ``p2`` (obstacles) through three two-gene branches
(``g1``, ``g2``, ``g3``) to an output ``M``.

The second cascade's reference form repeats two lines and never uses θ6
or θ9.  By default it is completed symmetrically with the first one
(``y6 = sig(p2, θ6)``, ``g3 = sig(y5·y6, θ9)``).  ``literal=True`` keeps
the reference form, in which ``g3`` has no production term and decays
to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import (
    FieldConfig,
    MorphogenField,
    Pattern,
    extract_pattern,
)

TASK1_THETAS = (1, 0.5328, 1, 0.4448, 0, 0.934, 2, 1.2095, 1.6798, 1, 0.5385, 0.2763, 1.3445)
TASK2_THETAS = (0.1438, 1, 0.3457, 0.8571, 0.3827, 1, 1.5841, 1.1972, 0.4208, 0, 0, 0.5977, 0.6777)

GENES = ("y1", "y2", "g1", "y3", "y4", "g2", "y5", "y6", "g3", "y7", "y8", "y9", "M")


def _sig(x, theta):
    return 1.0 / (1.0 + np.exp(-(x - theta)))


# Each rule is (gene, op, inputs, theta index, inverted).  op is "id", "mul"
# or "sum"; inverted means the production term is 1 - sig(...).
_TASK1_RULES = (
    ("y1", "id", ("p1",), 1, True),
    ("y2", "id", ("p2",), 2, True),
    ("g1", "mul", ("y1", "y2"), 7, False),
    ("y3", "id", ("p1",), 3, False),
    ("y4", "id", ("p2",), 4, False),
    ("g2", "sum", ("y3", "y4"), 8, False),
    ("y5", "id", ("p1",), 5, False),
    ("y6", "id", ("p2",), 6, False),
    ("g3", "mul", ("y5", "y6"), 9, False),
    ("y7", "id", ("g1",), 10, True),
    ("y8", "id", ("g2",), 11, False),
    ("y9", "id", ("g3",), 12, False),
    ("M", "sum", ("y7", "y8", "y9"), 13, False),
)

_TASK2_RULES = (
    ("y1", "id", ("p1",), 1, False),
    ("y2", "id", ("p2",), 2, True),
    ("g1", "mul", ("y1", "y2"), 7, False),
    ("y3", "id", ("p1",), 3, False),
    ("y4", "id", ("p2",), 4, True),
    ("g2", "mul", ("y3", "y4"), 8, False),
    ("y5", "id", ("p1",), 5, False),
    ("y6", "id", ("p2",), 6, False),
    ("g3", "mul", ("y5", "y6"), 9, False),
    ("y7", "id", ("g1",), 10, False),
    ("y8", "id", ("g2",), 11, False),
    ("y9", "id", ("g3",), 12, True),
    ("M", "sum", ("y7", "y8", "y9"), 13, False),
)

# literal second cascade: y6 and g3 have no production term
_TASK2_LITERAL_RULES = tuple(
    (r[0], "zero", (), 0, False) if r[0] in ("y6", "g3") else r for r in _TASK2_RULES
)


@dataclass(frozen=True)
class EhGrnModel:
    variant: str
    thetas: tuple
    literal: bool = False

    def __post_init__(self):
        if self.variant not in ("task1", "task2"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if len(self.thetas) != 13:
            raise ValueError("EH-GRN needs 13 thresholds")
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))

    @property
    def rules(self):
        if self.variant == "task1":
            return _TASK1_RULES
        return _TASK2_LITERAL_RULES if self.literal else _TASK2_RULES

    @property
    def name(self) -> str:
        return self.variant + ("-literal" if self.literal else "")


TASK1 = EhGrnModel("task1", TASK1_THETAS)
TASK2 = EhGrnModel("task2", TASK2_THETAS)


def baseline(name: str, literal: bool = False) -> EhGrnModel:
    if name == "task1":
        return TASK1
    if name == "task2":
        return EhGrnModel("task2", TASK2_THETAS, literal)
    raise ValueError(f"unknown baseline {name!r}; expected task1 or task2")


def ehgrn_steady(model: EhGrnModel, p1, p2, return_all: bool = False):
    """Bottom-up fixed point of the cascade; returns ``M`` (or all genes)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    state = {"p1": p1, "p2": p2}
    # rules are listed in dependency order, so one sweep settles the cascade
    for rule in model.rules:
        state[rule[0]] = _produce(model, rule, state)
    if return_all:
        return {g: state[g] for g in GENES}
    return state["M"]


def _produce(model, rule, state):
    _, op, ins, ti, inv = rule
    if op == "zero":
        return np.zeros_like(state["p1"])
    vals = [state[i] for i in ins]
    arg = vals[0] if op == "id" else (vals[0] * vals[1] if op == "mul" else sum(vals))
    s = _sig(arg, model.thetas[ti - 1])
    return 1.0 - s if inv else s


def ehgrn_steady_field(model: EhGrnModel, p1: MorphogenField, p2: MorphogenField) -> MorphogenField:
    if p1.spec != p2.spec:
        raise ValueError("p1 and p2 must share one grid")
    return MorphogenField(p1.spec, ehgrn_steady(model, p1.values, p2.values))


def ehgrn_pattern(model: EhGrnModel, scenario, waypoint: int, cfg: FieldConfig | None = None) -> Pattern:
    """Pattern produced by the baseline at one waypoint of a scenario."""
    wi = scenario.waypoint_inputs(waypoint, cfg)
    out = MorphogenField(wi.spec, ehgrn_steady(model, wi.x1, wi.x2))
    return extract_pattern(
        out, wi.cfg, targets=wi.targets, obstacle_mask=wi.obstacle_mask,
        waypoint_index=waypoint, target_dist=wi.target_dist,
    )
