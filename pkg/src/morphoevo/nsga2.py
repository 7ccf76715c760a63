"""Multi-objective GP loop with NSGA-II survival and knee-point selection.

Objectives are minimised.  Sorting, crowding, hypervolume and knee helpers
take plain ``(n, 2)`` arrays so they can be reused outside the GP loop.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from . import genome
from .de import DeConfig, de_optimize
from .fitness import EvalCounter, FitnessConfig, Objectives, evaluate_objectives

log = logging.getLogger(__name__)

HV_REFERENCE = (32.0, 3.0)


def dominates(a, b) -> bool:
    return bool(np.all(a <= b) and np.any(a < b))


def fast_nondominated_sort(objs) -> list:
    """Deb's fast non-dominated sort.  Returns fronts as lists of indices."""
    F = np.asarray(objs, float)
    n = len(F)
    if n == 0:
        return []
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.nonzero(dom[i])[0]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def crowding_distance(objs) -> np.ndarray:
    F = np.asarray(objs, float)
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        d[:] = np.inf
        return d
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        lo, hi = F[order[0], k], F[order[-1], k]
        d[order[0]] = d[order[-1]] = np.inf
        if hi == lo:
            continue
        gaps = (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
        d[order[1:-1]] += gaps
    return d


def hypervolume_2d(objs, ref=HV_REFERENCE) -> float:
    """Area dominated by the points and bounded by ``ref`` (minimisation)."""
    F = np.asarray(objs, float).reshape(-1, 2)
    F = F[(F[:, 0] < ref[0]) & (F[:, 1] < ref[1])]
    if len(F) == 0:
        return 0.0
    F = F[np.lexsort((F[:, 1], F[:, 0]))]
    hv = 0.0
    best_f2 = ref[1]
    for i, (f1, f2) in enumerate(F):
        if f2 >= best_f2:
            continue
        nxt = ref[0]
        for g1, g2 in F[i + 1:]:
            if g2 < f2:
                nxt = g1
                break
        hv += (nxt - f1) * (ref[1] - f2)
        best_f2 = f2
    return float(hv)


def select_knee_points(objs) -> list:
    """Knee indices, best first.

    Objectives are normalised over the set; each point's distance to the
    chord through the two extreme points is computed and local maxima along
    the f1-sorted front are returned by decreasing distance, ties going to
    the lower f1.  Sets of one or two points return ``[0]``.
    """
    F = np.asarray(objs, float).reshape(-1, 2)
    n = len(F)
    if n == 0:
        raise ValueError("empty archive")
    if n <= 2:
        return [0]
    lo, hi = F.min(axis=0), F.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    N = (F - lo) / span
    order = np.lexsort((N[:, 1], N[:, 0]))
    a = order[0]  # fewest nodes
    b = np.lexsort((N[:, 0], N[:, 1]))[0]  # lowest f2
    ab = N[b] - N[a]
    length = math.hypot(*ab)
    if length == 0.0:
        return [int(a)]
    dist = np.abs(ab[0] * (N[:, 1] - N[a, 1]) - ab[1] * (N[:, 0] - N[a, 0])) / length
    dist = np.round(dist, 12)
    knees = []
    for pos, i in enumerate(order):
        if dist[i] <= 0.0:
            continue
        left = dist[order[pos - 1]] if pos > 0 else -1.0
        right = dist[order[pos + 1]] if pos + 1 < n else -1.0
        if dist[i] >= left and dist[i] >= right:
            knees.append(int(i))
    if not knees:
        return [int(a)]
    knees.sort(key=lambda i: (-dist[i], F[i, 0], F[i, 1], i))
    return knees


# ---------------------------------------------------------------- GP loop

@dataclass
class Individual:
    tree: object
    objectives: Objectives
    rank: int = 0
    crowding: float = 0.0

    @property
    def text(self) -> str:
        return genome.serialize(self.tree)


@dataclass(frozen=True)
class EvolutionConfig:
    pop_size: int = 40
    crossover_rate: float = 1.0
    mutation_rate: float = 0.1
    eval_budget: int = 4000
    seed: int = 0
    count_inner_evals: bool = True
    depth_range: tuple = (2, 4)
    plan_generations: int = 5
    threads: int = 1

    def __post_init__(self):
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.eval_budget < self.pop_size:
            raise ValueError("eval_budget must be at least pop_size")
        if self.plan_generations < 1 or self.threads < 1:
            raise ValueError("plan_generations and threads must be positive")


@dataclass
class ParetoArchive:
    members: list
    knees: list
    history: list = dc_field(default_factory=list)
    evaluations: int = 0

    def objectives(self) -> np.ndarray:
        return np.array([m.objectives.as_tuple() for m in self.members], float).reshape(-1, 2)


def stream(seed: int, generation: int, index: int, purpose: int) -> np.random.Generator:
    """Independent RNG for one (generation, individual, purpose) slot."""
    return np.random.default_rng([int(seed), int(generation), int(index), int(purpose)])


_VARIATION, _DE = 1, 2


def inner_generations(allowance: float, de_cfg: DeConfig) -> int | None:
    """DE generations affordable within ``allowance`` evaluations.

    ``None`` means only the incumbent can be evaluated (one evaluation).
    """
    if allowance < de_cfg.pop_size:
        return None
    return int(min(de_cfg.generations, math.floor(allowance / de_cfg.pop_size) - 1))


def _tune(tree, scenario, fit_cfg, de_cfg, gens, rng, counter):
    """DE-tune one tree (or just evaluate it when ``gens`` is None)."""
    if gens is None:
        tuned, f2 = tree, evaluate_objectives(tree, scenario, fit_cfg, counter).f2
    else:
        tuned, f2 = de_optimize(tree, scenario, fit_cfg, replace(de_cfg, generations=gens), rng, counter)
    return Individual(tuned, Objectives(genome.node_count(tuned), f2))


def _tournament(pop, rng):
    i, j = rng.integers(len(pop), size=2)
    a, b = pop[i], pop[j]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a


def _assign_rank_crowding(pop):
    objs = np.array([p.objectives.as_tuple() for p in pop], float)
    fronts = fast_nondominated_sort(objs)
    for r, fr in enumerate(fronts):
        cd = crowding_distance(objs[fr])
        for k, i in enumerate(fr):
            pop[i].rank = r
            pop[i].crowding = float(cd[k])
    return fronts


def survive(pop, size):
    """NSGA-II environmental selection: whole fronts, then crowding."""
    objs = np.array([p.objectives.as_tuple() for p in pop], float)
    fronts = fast_nondominated_sort(objs)
    chosen = []
    for fr in fronts:
        if len(chosen) + len(fr) <= size:
            chosen.extend(fr)
            continue
        cd = crowding_distance(objs[fr])
        order = sorted(range(len(fr)), key=lambda k: (-cd[k], fr[k]))
        chosen.extend(fr[k] for k in order[: size - len(chosen)])
        break
    out = [pop[i] for i in chosen]
    _assign_rank_crowding(out)
    return out


def _front0(pop):
    return [p for p in pop if p.rank == 0]


def _record(gen, evals, pop):
    f0 = sorted({p.objectives.as_tuple() for p in _front0(pop)})
    return {
        "generation": gen,
        "evaluations": evals,
        "front_size": len(f0),
        "hypervolume": hypervolume_2d(f0),
        "best_f2": min(f2 for _, f2 in f0),
        "front": f0,
    }


def evolve(scenario, cfg: EvolutionConfig | None = None, de_cfg: DeConfig | None = None,
           fit_cfg: FitnessConfig | None = None, progress=None) -> ParetoArchive:
    """Run the structure/parameter co-optimisation until the budget is spent.

    With ``count_inner_evals`` every f2 evaluation inside DE counts against
    the budget and the DE length of each tree is scaled to the remaining
    budget.  Otherwise each tree costs one evaluation and DE always runs
    its full length.
    """
    cfg = cfg or EvolutionConfig()
    de_cfg = de_cfg or DeConfig()
    fit_cfg = fit_cfg or FitnessConfig()
    budget = EvalCounter()

    def tune_batch(trees, gen):
        remaining = cfg.eval_budget - budget.value
        if cfg.count_inner_evals:
            horizon = max(1, cfg.plan_generations - gen)
            gens = inner_generations(remaining / (len(trees) * horizon), de_cfg)
        else:
            gens = de_cfg.generations

        def work(k):
            tree = trees[k]
            rng = stream(cfg.seed, gen, k, _DE)
            if cfg.count_inner_evals:
                return _tune(tree, scenario, fit_cfg, de_cfg, gens, rng, budget)
            ind = _tune(tree, scenario, fit_cfg, de_cfg, gens, rng, EvalCounter())
            budget.increment()
            return ind

        if cfg.threads > 1:
            with ThreadPoolExecutor(cfg.threads) as ex:
                return list(ex.map(work, range(len(trees))))
        return [work(k) for k in range(len(trees))]

    init_rng = stream(cfg.seed, 0, 0, _VARIATION)
    trees = genome.ramped_half_and_half(cfg.pop_size, init_rng, cfg.depth_range)
    pop = tune_batch(trees, 0)
    _assign_rank_crowding(pop)
    history = [_record(0, budget.value, pop)]
    if progress:
        progress(history[-1])

    gen = 0
    while budget.value < cfg.eval_budget:
        gen += 1
        rng = stream(cfg.seed, gen, 0, _VARIATION)
        children = []
        while len(children) < cfg.pop_size:
            a, b = _tournament(pop, rng).tree, _tournament(pop, rng).tree
            if cfg.pop_size - len(children) == 1:
                children.append(a)  # reproduction fills an odd slot
                break
            if rng.random() < cfg.crossover_rate:
                a, b = genome.subtree_crossover(a, b, rng)
            for c in (a, b):
                if rng.random() < cfg.mutation_rate:
                    c = genome.subtree_mutation(c, rng)
                children.append(c)
        offspring = tune_batch(children, gen)
        pop = survive(pop + offspring, cfg.pop_size)
        history.append(_record(gen, budget.value, pop))
        if progress:
            progress(history[-1])
        log.info("generation %d: %d evaluations, front %s", gen, budget.value, history[-1]["front"])

    return make_archive(pop, history, budget.value)


def make_archive(pop, history=(), evaluations=0) -> ParetoArchive:
    """Unique non-dominated members, ordered by (f1, f2, text), with knees."""
    objs = np.array([p.objectives.as_tuple() for p in pop], float)
    f0 = fast_nondominated_sort(objs)[0]
    seen = {}
    for i in f0:
        seen.setdefault(pop[i].text, pop[i])
    members = sorted(seen.values(), key=lambda p: (p.objectives.f1, p.objectives.f2, p.text))
    knees = select_knee_points([m.objectives.as_tuple() for m in members])
    return ParetoArchive(members, knees, list(history), evaluations)
