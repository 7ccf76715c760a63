"""GP-tree genome built from network motifs.

A tree is either a :class:`Terminal` (one of the two morphogen inputs) or a
:class:`Motif` node carrying its own threshold ``theta`` and one or two
children.  Nodes are frozen dataclasses, so trees are immutable values and
can be shared freely between threads.

The text format is prefix notation, e.g.::

    (XNOR 0.9256 (NAND 0.8393 x1 x1) x2)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .motifs import ALL_MOTIFS, THETA_BOUNDS, MotifKind, motif_steady_state

MAX_DEPTH = 4
MIN_DEPTH = 1
TERMINALS = ("x1", "x2")


@dataclass(frozen=True)
class Terminal:
    name: str

    def __post_init__(self):
        if self.name not in TERMINALS:
            raise ValueError(f"unknown terminal {self.name!r}")


@dataclass(frozen=True)
class Motif:
    kind: MotifKind
    theta: float
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", MotifKind(self.kind))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.kind.arity:
            raise ValueError(
                f"{self.kind.value} takes {self.kind.arity} children, got {len(self.children)}"
            )
        lo, hi = THETA_BOUNDS
        if not (lo <= self.theta <= hi):
            raise ValueError(f"theta {self.theta} outside [{lo}, {hi}]")


Node = Union[Terminal, Motif]
# A tree is identified with its root node.
GrnTree = Node


def depth(t: Node) -> int:
    """Depth with a lone terminal counted as 1."""
    if isinstance(t, Terminal):
        return 1
    return 1 + max(depth(c) for c in t.children)


def node_count(t: Node) -> int:
    if isinstance(t, Terminal):
        return 1
    return 1 + sum(node_count(c) for c in t.children)


def motif_count(t: Node) -> int:
    if isinstance(t, Terminal):
        return 0
    return 1 + sum(motif_count(c) for c in t.children)


def iter_nodes(t: Node) -> Iterator[tuple[tuple[int, ...], int, Node]]:
    """Yield ``(path, depth, node)`` in pre-order; the root has depth 1."""
    stack = [((), 1, t)]
    while stack:
        path, d, n = stack.pop()
        yield path, d, n
        if isinstance(n, Motif):
            for i in reversed(range(len(n.children))):
                stack.append((path + (i,), d + 1, n.children[i]))


def get_subtree(t: Node, path: Sequence[int]) -> Node:
    for i in path:
        t = t.children[i]
    return t


def replace_subtree(t: Node, path: Sequence[int], new: Node) -> Node:
    if not path:
        return new
    i = path[0]
    kids = list(t.children)
    kids[i] = replace_subtree(kids[i], path[1:], new)
    return Motif(t.kind, t.theta, tuple(kids))


def is_valid(t: Node) -> bool:
    try:
        return MIN_DEPTH <= depth(t) <= MAX_DEPTH and all(
            isinstance(n, (Terminal, Motif)) for _, _, n in iter_nodes(t)
        )
    except (AttributeError, TypeError):
        return False


def evaluate(t: Node, x1, x2):
    """Evaluate the tree's output on morphogen inputs (scalars or arrays)."""
    if isinstance(t, Terminal):
        return np.asarray(x1 if t.name == "x1" else x2, dtype=float)
    ins = [evaluate(c, x1, x2) for c in t.children]
    return np.asarray(motif_steady_state(t.kind, ins, t.theta), dtype=float)


# ---------------------------------------------------------------- random trees

def _random_terminal(rng: np.random.Generator) -> Terminal:
    return Terminal(TERMINALS[rng.integers(len(TERMINALS))])


def _random_motif(rng: np.random.Generator, children_fn) -> Motif:
    kind = ALL_MOTIFS[rng.integers(len(ALL_MOTIFS))]
    theta = float(rng.uniform(*THETA_BOUNDS))
    return Motif(kind, theta, tuple(children_fn() for _ in range(kind.arity)))


def full_tree(max_depth: int, rng: np.random.Generator) -> Node:
    """Every branch reaches exactly ``max_depth``."""
    if max_depth <= 1:
        return _random_terminal(rng)
    return _random_motif(rng, lambda: full_tree(max_depth - 1, rng))


def grow_tree(max_depth: int, rng: np.random.Generator, root: bool = True) -> Node:
    """Branches may stop early.

    The root is forced to be a motif whenever ``max_depth > 1`` so the depth
    bucket is not wasted on bare terminals.  Below the root every symbol
    (ten motifs, two terminals) is equally likely.
    """
    if max_depth <= 1:
        return _random_terminal(rng)
    n_sym = len(ALL_MOTIFS) + len(TERMINALS)
    if not root and rng.integers(n_sym) < len(TERMINALS):
        return _random_terminal(rng)
    return _random_motif(rng, lambda: grow_tree(max_depth - 1, rng, root=False))


def ramped_half_and_half(pop_size: int, rng: np.random.Generator, depth_range=(2, 4)) -> list:
    """Initial population split evenly across depth buckets and methods."""
    if pop_size < 2:
        raise ValueError("pop_size must be at least 2")
    lo, hi = depth_range
    if not (MIN_DEPTH <= lo <= hi <= MAX_DEPTH):
        raise ValueError(f"depth_range {depth_range} must lie within [{MIN_DEPTH}, {MAX_DEPTH}]")
    buckets = list(range(lo, hi + 1))
    pop = []
    for i in range(pop_size):
        d = buckets[i % len(buckets)]
        use_full = (i // len(buckets)) % 2 == 0
        pop.append(full_tree(d, rng) if use_full else grow_tree(d, rng))
    return pop


# ---------------------------------------------------------------- variation

def truncate(t: Node, rng: np.random.Generator, max_depth: int = MAX_DEPTH, _d: int = 1) -> Node:
    """Replace motif nodes sitting at ``max_depth`` by random terminals."""
    if isinstance(t, Terminal):
        return t
    if _d >= max_depth:
        return _random_terminal(rng)
    kids = tuple(truncate(c, rng, max_depth, _d + 1) for c in t.children)
    if kids == t.children:
        return t
    return Motif(t.kind, t.theta, kids)


def _pick_node(t: Node, rng: np.random.Generator):
    nodes = list(iter_nodes(t))
    path, d, n = nodes[rng.integers(len(nodes))]
    return path, d, n


def subtree_crossover(a: Node, b: Node, rng: np.random.Generator) -> tuple:
    """Swap uniformly chosen subtrees; over-deep offspring are truncated."""
    pa, _, sa = _pick_node(a, rng)
    pb, _, sb = _pick_node(b, rng)
    c1 = replace_subtree(a, pa, sb)
    c2 = replace_subtree(b, pb, sa)
    if depth(c1) > MAX_DEPTH:
        c1 = truncate(c1, rng)
    if depth(c2) > MAX_DEPTH:
        c2 = truncate(c2, rng)
    return c1, c2


def subtree_mutation(t: Node, rng: np.random.Generator) -> Node:
    """Replace a uniformly chosen node by a freshly grown subtree.

    The new subtree may use whatever depth remains at that position, so a
    node at the bottom level can only become a terminal.
    """
    path, d, _ = _pick_node(t, rng)
    budget = MAX_DEPTH - d + 1
    new = grow_tree(budget, rng, root=False) if budget > 1 else _random_terminal(rng)
    return replace_subtree(t, path, new)


# ---------------------------------------------------------------- parameters

def extract_params(t: Node) -> np.ndarray:
    """Motif thresholds in pre-order (root first)."""
    return np.array([n.theta for _, _, n in iter_nodes(t) if isinstance(n, Motif)], dtype=float)


def inject_params(t: Node, values) -> Node:
    values = np.asarray(values, dtype=float).ravel()
    n = motif_count(t)
    if values.size != n:
        raise ValueError(f"expected {n} parameters, got {values.size}")
    it = iter(values.tolist())

    def rebuild(node):
        if isinstance(node, Terminal):
            return node
        theta = next(it)
        kids = tuple(rebuild(c) for c in node.children)
        return Motif(node.kind, theta, kids)

    return rebuild(t)


# ---------------------------------------------------------------- text format

class TreeParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


def serialize(t: Node) -> str:
    if isinstance(t, Terminal):
        return t.name
    # repr() gives the shortest string that round-trips exactly (17 sig. digits max)
    parts = [t.kind.value, repr(t.theta)] + [serialize(c) for c in t.children]
    return "(" + " ".join(parts) + ")"


_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise TreeParseError("unexpected character", pos)
        out.append((m.group(1), m.start(1)))
        pos = m.end()
    return out


def parse(text: str) -> Node:
    """Parse prefix tree text.  Errors report the character offset."""
    toks = _tokenize(text)
    if not toks:
        raise TreeParseError("empty input", 0)
    i = 0

    def node():
        nonlocal i
        if i >= len(toks):
            raise TreeParseError("unexpected end of input", len(text))
        tok, pos = toks[i]
        if tok == ")":
            raise TreeParseError("unexpected ')'", pos)
        if tok != "(":
            i += 1
            if tok not in TERMINALS:
                raise TreeParseError(f"unknown terminal {tok!r}", pos)
            return Terminal(tok)
        i += 1
        if i >= len(toks):
            raise TreeParseError("unexpected end of input", len(text))
        kind_tok, kpos = toks[i]
        try:
            kind = MotifKind(kind_tok)
        except ValueError:
            raise TreeParseError(f"unknown motif {kind_tok!r}", kpos) from None
        i += 1
        if i >= len(toks):
            raise TreeParseError("missing theta", len(text))
        th_tok, tpos = toks[i]
        try:
            theta = float(th_tok)
        except ValueError:
            raise TreeParseError(f"invalid theta {th_tok!r}", tpos) from None
        if not (THETA_BOUNDS[0] <= theta <= THETA_BOUNDS[1]):
            raise TreeParseError(f"theta {theta} outside [0, 2]", tpos)
        i += 1
        kids = []
        while i < len(toks) and toks[i][0] != ")":
            kids.append(node())
        if i >= len(toks):
            raise TreeParseError("missing ')'", len(text))
        if len(kids) != kind.arity:
            raise TreeParseError(
                f"{kind.value} takes {kind.arity} children, got {len(kids)}", pos
            )
        i += 1
        return Motif(kind, theta, tuple(kids))

    tree = node()
    if i != len(toks):
        raise TreeParseError("trailing input", toks[i][1])
    d = depth(tree)
    if d > MAX_DEPTH:
        raise TreeParseError(f"tree depth {d} exceeds {MAX_DEPTH}", 0)
    return tree


# Reference models with fixed thresholds.
ENCIRCLE_TEXT = "(XNOR 0.9256 (NAND 0.8393 x1 x1) x2)"
POINT_A_TEXT = "(XNOR 0.7472 (ANDN 1.3072 x2 x1) x1)"
POINT_B_TEXT = "(XNOR 0.2414 (ANDN 1.5441 x2 x1) (NAND 0.0904 x1 x1))"
