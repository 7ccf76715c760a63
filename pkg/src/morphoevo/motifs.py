"""Network motif kernels.

Each motif is a small gene regulatory circuit with one output gene ``y``
obeying ``dy/dt = -y + F(inputs; theta)``.  The steady state is therefore
``F`` itself, which is what the closed-form functions below return.  A
forward-Euler integrator is provided as an independent route used by the
tests to validate the closed forms.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class DomainError(ValueError):
    """Raised when a motif receives a non-finite input."""


class MotifKind(str, Enum):
    POS = "POS"
    NEG = "NEG"
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    ANDN = "ANDN"
    ORN = "ORN"
    XOR = "XOR"
    XNOR = "XNOR"

    @property
    def arity(self) -> int:
        return 1 if self in (MotifKind.POS, MotifKind.NEG) else 2


ALL_MOTIFS: tuple[MotifKind, ...] = tuple(MotifKind)
THETA_BOUNDS = (0.0, 2.0)


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("motif input contains NaN or infinite values")


def sigmoid(x, theta=1.0, k=1.0):
    """Logistic activation ``1 / (1 + exp(-k (x - theta)))``.

    Works elementwise on scalars and arrays.  Non-finite ``x`` raises
    :class:`DomainError`.
    """
    x = np.asarray(x, dtype=float)
    _check_finite(x)
    z = -k * (x - theta)
    # exp overflow just saturates to 0, which is the correct limit
    with np.errstate(over="ignore"):
        out = 1.0 / (1.0 + np.exp(z))
    return out if out.ndim else float(out)


def _sig(x, theta):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-(x - theta)))


def motif_steady_state(kind, inputs, theta):
    """Closed-form steady-state output of a motif.

    Parameters
    ----------
    kind : MotifKind or str
    inputs : sequence of one (unary) or two (binary) arrays/scalars
    theta : float
        Activation threshold of the output gene.

    Notes
    -----
    For the binary motifs the first input is ``g1`` and the second is
    ``g2``.  ``ANDN`` and ``ORN`` are not symmetric in their inputs.
    """
    kind = MotifKind(kind)
    if len(inputs) != kind.arity:
        raise ValueError(f"{kind.value} expects {kind.arity} input(s), got {len(inputs)}")
    ins = [np.asarray(v, dtype=float) for v in inputs]
    _check_finite(*ins)

    if kind is MotifKind.POS:
        out = _sig(ins[0], theta)
    elif kind is MotifKind.NEG:
        out = 1.0 - _sig(ins[0], theta)
    else:
        g1, g2 = ins
        if kind is MotifKind.AND:
            out = _sig(g1 * g2, theta)
        elif kind is MotifKind.NAND:
            out = 1.0 - _sig(g1 * g2, theta)
        elif kind is MotifKind.OR:
            out = _sig(g1 + g2, theta)
        elif kind is MotifKind.NOR:
            out = 1.0 - _sig(g1 + g2, theta)
        elif kind is MotifKind.ANDN:
            out = _sig(g1 * (1.0 - g2), theta)
        elif kind is MotifKind.ORN:
            out = _sig(g1 + (1.0 - g2), theta)
        elif kind is MotifKind.XOR:
            out = _sig(g1 * (1.0 - g2), theta) + _sig((1.0 - g1) * g2, theta)
        else:  # XNOR
            out = 1.0 - _sig(g1 * (1.0 - g2), theta) - _sig((1.0 - g1) * g2, theta)
    return out if np.ndim(out) else float(out)


def motif_integrate(kind, inputs, theta, dt, steps, y0=0.0):
    """Integrate ``dy/dt = -y + F`` with forward Euler from ``y0``.

    The inputs are held constant.  The scheme is stable only for
    ``0 < dt < 2``; larger steps raise ``ValueError``.
    """
    if not (0.0 < dt < 2.0):
        raise ValueError(f"Euler step dt={dt} is outside the stable range (0, 2)")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    f = np.asarray(motif_steady_state(kind, inputs, theta), dtype=float)
    y = np.broadcast_to(np.asarray(y0, dtype=float), f.shape).copy()
    for _ in range(int(steps)):
        y += dt * (f - y)
    return y if y.ndim else float(y)
