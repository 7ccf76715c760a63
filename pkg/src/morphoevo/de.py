"""Differential evolution (DE/rand/1/bin) for a tree's thresholds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import genome
from .fitness import EvalCounter, FitnessConfig, evaluate_objectives


@dataclass(frozen=True)
class DeConfig:
    pop_size: int = 10
    cr: float = 0.9
    f: float = 0.5
    bounds: tuple = (0.0, 2.0)
    generations: int = 15

    def __post_init__(self):
        if self.pop_size < 4:
            raise ValueError("DE/rand/1 needs pop_size >= 4")
        if not (0.0 <= self.cr <= 1.0):
            raise ValueError("cr must lie in [0, 1]")
        if not (0.0 < self.f <= 2.0):
            raise ValueError("f must lie in (0, 2]")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError("bounds must satisfy lo < hi")

    @property
    def evaluations(self) -> int:
        return self.pop_size * (self.generations + 1)


@dataclass
class DeResult:
    x: np.ndarray
    fun: float
    nfev: int
    history: list  # best value after initialisation and after each generation


def reflect(v, lo, hi):
    """Fold values back into [lo, hi] by mirroring at the bounds."""
    w = hi - lo
    y = np.mod(np.asarray(v, float) - lo, 2.0 * w)
    return lo + np.where(y > w, 2.0 * w - y, y)


def de_minimize(func, x0, cfg: DeConfig, rng: np.random.Generator) -> DeResult:
    """Minimise ``func`` over the box ``cfg.bounds``^D.

    Member 0 of the initial population is ``x0``; the rest are uniform.
    Selection is greedy and generational, so the best value never rises.
    """
    x0 = np.asarray(x0, float).ravel()
    dim = x0.size
    lo, hi = cfg.bounds
    n = cfg.pop_size
    pop = rng.uniform(lo, hi, size=(n, dim))
    pop[0] = np.clip(x0, lo, hi)
    fit = np.array([func(p) for p in pop], float)
    nfev = n
    history = [float(fit.min())]
    idx = np.arange(n)
    for _ in range(cfg.generations):
        trials = np.empty_like(pop)
        for i in range(n):
            r1, r2, r3 = rng.choice(idx[idx != i], size=3, replace=False)
            mutant = reflect(pop[r1] + cfg.f * (pop[r2] - pop[r3]), lo, hi)
            cross = rng.random(dim) < cfg.cr
            cross[rng.integers(dim)] = True
            trials[i] = np.where(cross, mutant, pop[i])
        tfit = np.array([func(t) for t in trials], float)
        nfev += n
        better = tfit <= fit
        pop[better] = trials[better]
        fit[better] = tfit[better]
        history.append(float(fit.min()))
    b = int(np.argmin(fit))
    return DeResult(pop[b].copy(), float(fit[b]), nfev, history)


def de_optimize(tree, scenario, fit_cfg: FitnessConfig | None = None, cfg: DeConfig | None = None,
                rng: np.random.Generator | None = None, counter: EvalCounter | None = None):
    """Tune the tree's thresholds against f2 with its structure frozen.

    Returns ``(tuned_tree, f2)``.  A tree without motif nodes is evaluated
    once and returned as is.
    """
    cfg = cfg or DeConfig()
    fit_cfg = fit_cfg or FitnessConfig()
    rng = rng if rng is not None else np.random.default_rng()
    theta0 = genome.extract_params(tree)
    if theta0.size == 0:
        return tree, evaluate_objectives(tree, scenario, fit_cfg, counter).f2

    def f2(theta):
        return evaluate_objectives(genome.inject_params(tree, theta), scenario, fit_cfg, counter).f2

    res = de_minimize(f2, theta0, cfg, rng)
    return genome.inject_params(tree, res.x), res.fun
