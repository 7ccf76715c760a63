import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from morphoevo.ehgrn import (
    GENES,
    TASK1,
    TASK1_THETAS,
    TASK2,
    TASK2_THETAS,
    EhGrnModel,
    baseline,
    ehgrn_pattern,
    ehgrn_steady,
    ehgrn_steady_field,
)
from morphoevo.field import GridSpec, MorphogenField, target_distance
from morphoevo.scenarios import Scenario

import oracles


def s(x, t):
    return 1 / (1 + math.exp(-(x - t)))


class TestConstants:
    def test_reference_thresholds(self):
        assert TASK1_THETAS == (1, 0.5328, 1, 0.4448, 0, 0.934, 2, 1.2095, 1.6798, 1, 0.5385, 0.2763, 1.3445)
        assert TASK2_THETAS == (0.1438, 1, 0.3457, 0.8571, 0.3827, 1, 1.5841, 1.1972, 0.4208, 0, 0, 0.5977, 0.6777)

    def test_validation(self):
        with pytest.raises(ValueError):
            EhGrnModel("task3", TASK1_THETAS)
        with pytest.raises(ValueError):
            EhGrnModel("task1", TASK1_THETAS[:12])
        with pytest.raises(ValueError):
            baseline("task9")


class TestSteady:
    def test_task1_hand_chain_at_zero(self):
        t = TASK1_THETAS
        y1, y2 = 1 - s(0, t[0]), 1 - s(0, t[1])
        g1 = s(y1 * y2, t[6])
        y3, y4 = s(0, t[2]), s(0, t[3])
        g2 = s(y3 + y4, t[7])
        y5, y6 = s(0, t[4]), s(0, t[5])
        g3 = s(y5 * y6, t[8])
        y7, y8, y9 = 1 - s(g1, t[9]), s(g2, t[10]), s(g3, t[11])
        m = s(y7 + y8 + y9, t[12])
        assert y1 == pytest.approx(s(1, 0))
        assert float(ehgrn_steady(TASK1, 0.0, 0.0)) == pytest.approx(m, abs=1e-15)

    @pytest.mark.parametrize("model,variant,literal", [
        (TASK1, "task1", False),
        (TASK2, "task2", False),
        (baseline("task2", literal=True), "task2", True),
    ])
    def test_matches_euler(self, model, variant, literal):
        rng = np.random.default_rng(8)
        p1, p2 = rng.random(100), rng.random(100)
        ref = oracles.euler_ehgrn(variant, p1, p2, model.thetas, dt=0.05, steps=1000, literal=literal)
        mine = ehgrn_steady(model, p1, p2, return_all=True)
        for g in GENES:
            np.testing.assert_allclose(mine[g], ref[g], atol=1e-6, err_msg=g)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_theta7_caps_g1(self, p1, p2):
        g = ehgrn_steady(TASK1, p1, p2, return_all=True)
        assert 0 < g["y1"] < 1 and 0 < g["y2"] < 1
        assert g["g1"] < 0.5

    def test_literal_branch_silent(self):
        g = ehgrn_steady(baseline("task2", literal=True), np.array([0.3, 0.9]), np.array([0.1, 0.5]),
                         return_all=True)
        assert not g["y6"].any() and not g["g3"].any()

    def test_uniform_inputs(self):
        spec = GridSpec(2, 2, 0.1)
        a = MorphogenField(spec, np.full(spec.shape, 0.4))
        b = MorphogenField(spec, np.full(spec.shape, 0.7))
        for m in (TASK1, TASK2):
            assert np.ptp(ehgrn_steady_field(m, a, b).values) == 0.0

    def test_grid_mismatch(self):
        a = MorphogenField(GridSpec(2, 2, 0.1), np.zeros((20, 20)))
        b = MorphogenField(GridSpec(3, 2, 0.1), np.zeros((20, 30)))
        with pytest.raises(ValueError):
            ehgrn_steady_field(TASK1, a, b)


class TestPattern:
    def test_task1_channel_clear_of_walls(self, channel):
        mask = channel.obstacle_mask
        for i in range(channel.n_waypoints):
            p = ehgrn_pattern(TASK1, channel, i)
            assert not p.empty
            assert not (p.region & channel.waypoint_inputs(i).obstacle_mask).any()
            for x, y in p.robots:
                assert not mask[channel.region.cell_of((x, y))]

    def test_task1_two_targets_split(self, channel_two):
        comps = [ehgrn_pattern(TASK1, channel_two, i).components() for i in range(channel_two.n_waypoints)]
        assert max(comps) >= 2, comps

    @pytest.mark.parametrize("model", [TASK1, TASK2])
    def test_open_region_annulus(self, model):
        sc = Scenario("open", GridSpec(20, 20, 0.1), [], [[[10.05, 10.05]]])
        p = ehgrn_pattern(model, sc, 0)
        d = target_distance([(10.05, 10.05)], p.spec)[p.contour]
        assert p.components() == 1
        assert d.min() > 0.5
        assert np.ptp(d) <= 0.25
