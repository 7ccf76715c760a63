import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphoevo import genome
from morphoevo.genome import (
    ENCIRCLE_TEXT,
    POINT_A_TEXT,
    POINT_B_TEXT,
    Motif,
    Terminal,
    TreeParseError,
    depth,
    extract_params,
    inject_params,
    node_count,
    parse,
    serialize,
    subtree_crossover,
    subtree_mutation,
)
from morphoevo.motifs import MotifKind

seeds = st.integers(0, 2**32 - 1)


def random_tree(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    return genome.full_tree(d, rng) if rng.random() < 0.5 else genome.grow_tree(d, rng)


def check_valid(t):
    assert 1 <= depth(t) <= 4
    for _, _, n in genome.iter_nodes(t):
        if isinstance(n, Motif):
            assert len(n.children) == n.kind.arity
            assert 0.0 <= n.theta <= 2.0
    assert 1 <= node_count(t) <= 31


class TestCounts:
    def test_reference_trees(self):
        assert node_count(parse(POINT_A_TEXT)) == 5
        assert node_count(parse(POINT_B_TEXT)) == 7
        assert node_count(parse(ENCIRCLE_TEXT)) == 5

    def test_terminal(self):
        assert node_count(Terminal("x1")) == 1
        assert depth(Terminal("x2")) == 1

    def test_depth(self):
        assert depth(parse(ENCIRCLE_TEXT)) == 3


class TestText:
    def test_encircle_serialization(self):
        t = Motif("XNOR", 0.9256, (Motif("NAND", 0.8393, (Terminal("x1"), Terminal("x1"))), Terminal("x2")))
        assert serialize(t) == "(XNOR 0.9256 (NAND 0.8393 x1 x1) x2)"

    def test_terminal_text(self):
        assert parse("x1") == Terminal("x1")
        assert parse("  x2 ") == Terminal("x2")

    @pytest.mark.parametrize("text,pos", [
        ("(XNOR 0.5 x1", 12),
        ("(FOO 0.5 x1 x2)", 1),
        ("(AND 2.5 x1 x2)", 5),
        ("(AND 0.5 x1)", 0),
        ("(POS 0.5 x1 x2)", 0),
        ("(AND 0.5 x1 x3)", 12),
        ("x1 x2", 3),
        (")", 0),
        ("(AND abc x1 x2)", 5),
    ])
    def test_parse_errors_report_position(self, text, pos):
        with pytest.raises(TreeParseError) as e:
            parse(text)
        assert e.value.pos == pos

    def test_depth_limit_on_parse(self):
        deep = "(POS 1 (POS 1 (POS 1 (POS 1 x1))))"
        with pytest.raises(TreeParseError):
            parse(deep)

    @settings(max_examples=300)
    @given(seeds)
    def test_round_trip(self, seed):
        t = random_tree(seed)
        assert parse(serialize(t)) == t

    def test_full_precision(self):
        t = Motif("POS", 1 / 3, (Terminal("x1"),))
        assert parse(serialize(t)).theta == 1 / 3
        digits = serialize(t).split()[1].rstrip(")").replace("0.", "", 1)
        assert len(digits) >= 10


class TestParams:
    def test_preorder(self):
        assert extract_params(parse(ENCIRCLE_TEXT)).tolist() == [0.9256, 0.8393]

    def test_terminal_empty(self):
        assert extract_params(Terminal("x1")).size == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            inject_params(parse(ENCIRCLE_TEXT), [0.1])

    @given(seeds, st.data())
    def test_round_trip(self, seed, data):
        t = random_tree(seed)
        n = genome.motif_count(t)
        v = np.array(data.draw(st.lists(st.floats(0, 2), min_size=n, max_size=n)))
        assert np.array_equal(extract_params(inject_params(t, v)), v)
        assert inject_params(t, extract_params(t)) == t


class TestInit:
    def test_population(self):
        pop = genome.ramped_half_and_half(40, np.random.default_rng(0), (2, 4))
        assert len(pop) == 40
        for t in pop:
            check_valid(t)
        assert {depth(t) for t in pop} <= {2, 3, 4}

    def test_full_method_depth(self):
        rng = np.random.default_rng(1)
        for d in (1, 2, 3, 4):
            assert depth(genome.full_tree(d, rng)) == d

    def test_bucket_one_is_terminal(self):
        pop = genome.ramped_half_and_half(6, np.random.default_rng(2), (1, 1))
        assert all(isinstance(t, Terminal) for t in pop)

    def test_deterministic(self):
        a = genome.ramped_half_and_half(20, np.random.default_rng(9))
        b = genome.ramped_half_and_half(20, np.random.default_rng(9))
        assert a == b

    def test_pop_size_guard(self):
        with pytest.raises(ValueError):
            genome.ramped_half_and_half(1, np.random.default_rng(0))


class TestVariation:
    def test_root_swap(self):
        a, b = parse(ENCIRCLE_TEXT), parse(POINT_A_TEXT)

        class Roots:
            def integers(self, n, *args, **kw):
                return 0

        c1, c2 = subtree_crossover(a, b, Roots())
        assert (c1, c2) == (b, a)

    def test_deep_swap_repaired(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a, b = genome.full_tree(4, rng), genome.full_tree(4, rng)
            for c in subtree_crossover(a, b, rng):
                check_valid(c)

    def test_crossover_deterministic(self):
        a, b = parse(ENCIRCLE_TEXT), parse(POINT_B_TEXT)
        r1 = subtree_crossover(a, b, np.random.default_rng(4))
        r2 = subtree_crossover(a, b, np.random.default_rng(4))
        assert r1 == r2

    def test_bottom_mutation_gives_terminal(self):
        t = genome.full_tree(4, np.random.default_rng(0))
        path = next(p for p, d, _ in genome.iter_nodes(t) if d == 4)
        new = genome.replace_subtree(t, path, genome._random_terminal(np.random.default_rng(1)))
        assert isinstance(genome.get_subtree(new, path), Terminal)

    def test_theta_travels_with_subtree(self):
        rng = np.random.default_rng(11)
        a, b = parse(ENCIRCLE_TEXT), parse(POINT_A_TEXT)
        thetas = set(extract_params(a)) | set(extract_params(b))
        for _ in range(50):
            for c in subtree_crossover(a, b, rng):
                # without truncation every theta comes from a parent
                assert set(extract_params(c)) <= thetas

    @settings(max_examples=100)
    @given(seeds)
    def test_operator_fuzz(self, seed):
        rng = np.random.default_rng(seed)
        pop = genome.ramped_half_and_half(8, rng)
        for _ in range(100):
            i, j = rng.integers(len(pop), size=2)
            c1, c2 = subtree_crossover(pop[i], pop[j], rng)
            c1 = subtree_mutation(c1, rng)
            check_valid(c1)
            check_valid(c2)
            pop[i], pop[j] = c1, c2


class TestEvaluate:
    def test_terminal_identity(self):
        x1 = np.linspace(0, 1, 5)
        np.testing.assert_array_equal(genome.evaluate(Terminal("x1"), x1, 0 * x1), x1)

    def test_encircle_cell(self):
        import oracles
        v = genome.evaluate(parse(ENCIRCLE_TEXT), 1.0, 0.0)
        assert float(v) == pytest.approx(float(oracles.encircle_direct(1.0, 0.0)), abs=1e-15)
        y1 = 1 - 1 / (1 + np.exp(-(1 - 0.8393)))
        assert y1 == pytest.approx(0.4599, abs=1e-4)

    def test_motif_validation(self):
        with pytest.raises(ValueError):
            Motif(MotifKind.AND, 0.5, (Terminal("x1"),))
        with pytest.raises(ValueError):
            Motif(MotifKind.POS, 2.5, (Terminal("x1"),))
        with pytest.raises(ValueError):
            Terminal("x3")
