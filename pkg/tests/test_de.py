import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphoevo import genome
from morphoevo.de import DeConfig, de_minimize, de_optimize, reflect
from morphoevo.fitness import EvalCounter, evaluate_objectives

import oracles


class TestReflect:
    def test_examples(self):
        np.testing.assert_allclose(reflect([2.5, -0.5, 1.0, 4.5], 0.0, 2.0), [1.5, 0.5, 1.0, 0.5])

    @given(st.floats(-100, 100))
    def test_in_bounds(self, v):
        r = float(reflect(v, 0.0, 2.0))
        assert 0.0 <= r <= 2.0

    @given(st.floats(0, 2))
    def test_identity_inside(self, v):
        assert float(reflect(v, 0.0, 2.0)) == pytest.approx(v)


class TestMinimize:
    def test_sphere_larger_population(self):
        # pop 30 is enough to escape stagnation on the 5-D sphere
        cfg = DeConfig(pop_size=30, generations=300)
        hits = 0
        for seed in range(10):
            x0 = np.random.default_rng(100 + seed).uniform(0, 2, 5)
            res = de_minimize(oracles.sphere, x0, cfg, np.random.default_rng(seed))
            hits += res.fun <= 1e-3
        assert hits == 10

    def test_symmetric_bounds_reach_optimum(self):
        cfg = DeConfig(pop_size=20, generations=300, bounds=(-2.0, 2.0))
        res = de_minimize(oracles.sphere, np.ones(3), cfg, np.random.default_rng(0))
        assert res.fun < 1e-8
        assert np.all(np.abs(res.x) < 1e-3)

    def test_nfev(self):
        cfg = DeConfig(pop_size=7, generations=4)
        calls = []
        res = de_minimize(lambda x: calls.append(1) or oracles.sphere(x), np.ones(2), cfg,
                          np.random.default_rng(0))
        assert res.nfev == len(calls) == 35 == cfg.evaluations
        assert len(res.history) == 5

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_incumbent_never_regresses(self, seed, dim):
        rng = np.random.default_rng(seed)
        x0 = rng.uniform(0, 2, dim)
        cfg = DeConfig(generations=10)
        f = lambda x: float(np.sum(np.sin(3 * x) + x))  # noqa: E731
        res = de_minimize(f, x0, cfg, rng)
        assert res.fun <= f(x0)
        assert all(b <= a for a, b in zip(res.history, res.history[1:]))
        assert np.all((res.x >= 0) & (res.x <= 2))
        assert res.fun == pytest.approx(f(res.x))

    def test_deterministic(self):
        cfg = DeConfig(generations=20)
        a = de_minimize(oracles.sphere, np.ones(3), cfg, np.random.default_rng(4))
        b = de_minimize(oracles.sphere, np.ones(3), cfg, np.random.default_rng(4))
        assert a.fun == b.fun and np.array_equal(a.x, b.x) and a.history == b.history

    @pytest.mark.parametrize("kw", [dict(pop_size=3), dict(cr=1.5), dict(f=0), dict(bounds=(2, 0)),
                                    dict(generations=-1)])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            DeConfig(**kw)


class TestOptimizeTree:
    def test_terminal_single_evaluation(self, channel):
        c = EvalCounter()
        t, f2 = de_optimize(genome.Terminal("x1"), channel, counter=c, rng=np.random.default_rng(0))
        assert t == genome.Terminal("x1") and c.value == 1

    def test_improves_or_keeps(self, channel):
        tree = genome.parse("(XNOR 1.9 (NAND 0.1 x1 x1) x2)")
        c = EvalCounter()
        before = evaluate_objectives(tree, channel, counter=EvalCounter()).f2
        tuned, f2 = de_optimize(tree, channel, cfg=DeConfig(generations=3), rng=np.random.default_rng(2),
                                counter=c)
        assert f2 <= before
        assert c.value == 40
        assert genome.node_count(tuned) == genome.node_count(tree)
        assert f2 == pytest.approx(evaluate_objectives(tuned, channel, counter=EvalCounter()).f2)
