"""Norming trees: validation, evaluation, and the S_1 / S_N re-branching maps.

A tree is an immutable nested structure of nodes.  Every internal node
records the Schreier level ``level`` used by its immediate successors.  Nodes
are addressed by paths: tuples of child indices from the root.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

from tslab.core import FinSet, SparseVector, finset, set_less
from tslab.schreier import Mode, check_sequence, push_state, start_state

Weights = Callable[[int], Fraction]
Path = tuple


class InvalidTree(ValueError):
    pass


class NotS1Tree(ValueError):
    pass


class NotDisjoint(ValueError):
    pass


class OrderTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class NormingTree:
    set: FinSet
    children: tuple = ()
    level: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "set", finset(self.set))
        object.__setattr__(self, "children", tuple(self.children))
        if self.children and (self.level is None or self.level < 1):
            raise InvalidTree("an internal node needs a positive branch level")
        if not self.children and self.level is not None:
            object.__setattr__(self, "level", None)

    @classmethod
    def leaf(cls, s: Iterable[int]) -> "NormingTree":
        return cls(finset(s))

    @classmethod
    def branch(cls, s: Iterable[int], level: int, children: Sequence["NormingTree"]) -> "NormingTree":
        return cls(finset(s), tuple(children), level)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def node(self, path: Path) -> "NormingTree":
        node = self
        for i in path:
            node = node.children[i]
        return node

    def walk(self, path: Path = ()) -> Iterator[tuple[Path, "NormingTree"]]:
        """Preorder traversal yielding (path, node)."""
        yield path, self
        for i, child in enumerate(self.children):
            yield from child.walk(path + (i,))

    def leaves(self) -> list[tuple[Path, "NormingTree"]]:
        return [(p, n) for p, n in self.walk() if n.is_leaf]

    def leaf_orders(self) -> list[tuple[FinSet, int]]:
        """(leaf set, order) for every leaf, in preorder."""
        out = []

        def visit(node, order):
            if node.is_leaf:
                out.append((node.set, order))
            for child in node.children:
                visit(child, order + node.level)

        visit(self, 0)
        return out

    def height(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.height() for c in self.children)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def to_json(self) -> dict:
        out: dict = {"set": list(self.set)}
        if self.children:
            out["level"] = self.level
            out["children"] = [c.to_json() for c in self.children]
        return out

    @classmethod
    def from_json(cls, data) -> "NormingTree":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict) or "set" not in data:
            raise ValueError("tree node must be an object with a 'set'")
        extra = set(data) - {"set", "level", "children"}
        if extra:
            raise ValueError(f"unknown tree keys {sorted(extra)}")
        children = tuple(cls.from_json(c) for c in data.get("children", ()))
        level = data.get("level")
        if children and not isinstance(level, int):
            raise ValueError("internal node needs an integer 'level'")
        return cls(finset(data["set"]), children, level if children else None)


@dataclass(frozen=True)
class NodeMeta:
    tag: Fraction
    order: int
    height: int


@dataclass
class TreeValidation:
    ok: bool
    meta: dict
    height: int
    error: Optional[str] = None
    path: Optional[Path] = None

    def __bool__(self) -> bool:
        return self.ok


def validate_tree(tree: NormingTree, mode, weights: Weights) -> TreeValidation:
    """Check the tree conditions and compute tags, orders and heights.

    Conditions checked: every child is a subset of its parent; the immediate
    successors of each node form an S_level-admissible (allowable) family;
    nodes at a common height are successive (admissible mode) or pairwise
    disjoint (allowable mode).  Nonempty node sets are required.
    """
    mode = Mode.parse(mode)
    meta: dict = {}
    by_height: dict[int, list[tuple[Path, FinSet]]] = {}
    stack = [((), tree, Fraction(1), 0, 0)]
    while stack:
        path, node, tag, order, h = stack.pop()
        if not node.set:
            return TreeValidation(False, meta, 0, "empty node", path)
        meta[path] = NodeMeta(tag, order, h)
        by_height.setdefault(h, []).append((path, node.set))
        if node.is_leaf:
            continue
        parent = set(node.set)
        for i, child in enumerate(node.children):
            if not parent.issuperset(child.set):
                return TreeValidation(False, meta, 0, "child not contained in parent", path + (i,))
        if not all(c.set for c in node.children):
            return TreeValidation(False, meta, 0, "empty node", path)
        family = sorted((c.set for c in node.children), key=lambda s: s[0])
        if mode is Mode.ADMISSIBLE:
            family = [c.set for c in node.children]
        if not check_sequence(family, node.level, mode):
            return TreeValidation(False, meta, 0,
                                  f"successors not S_{node.level}-{mode.value}", path)
        w = weights(node.level)
        for i, child in enumerate(node.children):
            stack.append((path + (i,), child, tag * w, order + node.level, h + 1))
    for h, nodes in by_height.items():
        nodes.sort(key=lambda item: item[1][0])
        if mode is Mode.ADMISSIBLE:
            for (p1, a), (p2, b) in zip(nodes, nodes[1:]):
                if not set_less(a, b):
                    return TreeValidation(False, meta, 0, "nodes at a height not successive", p2)
        else:
            seen: dict[int, Path] = {}
            for p, s in nodes:
                for v in s:
                    if v in seen:
                        return TreeValidation(False, meta, 0, "nodes at a height overlap", p)
                    seen[v] = p
    return TreeValidation(True, meta, max(by_height))


def evaluate_tree(tree: NormingTree, x: SparseVector, weights: Weights, mode=Mode.ALLOWABLE,
                  check: bool = True) -> Fraction:
    """sum over leaves of tag(E) * ||Ex||_c0."""
    if check:
        v = validate_tree(tree, mode, weights)
        if not v.ok:
            raise InvalidTree(f"{v.error} at {v.path}")
    total = Fraction(0)
    stack = [(tree, Fraction(1))]
    while stack:
        node, tag = stack.pop()
        if node.is_leaf:
            total += tag * x.restrict(node.set).c0()
        else:
            w = weights(node.level)
            stack.extend((c, tag * w) for c in node.children)
    return total


def _union(nodes: Sequence[NormingTree]) -> FinSet:
    out: set[int] = set()
    for n in nodes:
        out.update(n.set)
    return finset(out)


def _greedy_blocks(children: Sequence[NormingTree], n: int) -> list[list[NormingTree]]:
    """Cut children (ordered by minima) into maximal runs whose minima lie in S_n."""
    blocks: list[list[NormingTree]] = []
    state = None
    for child in children:
        z = child.set[0]
        nxt = push_state(state, z) if state is not None else None
        if nxt is None:
            blocks.append([child])
            state = start_state(n, z) if n > 0 else None
        else:
            blocks[-1].append(child)
            state = nxt
    return blocks


def _cascade(node_set: FinSet, children: Sequence[NormingTree], n: int) -> NormingTree:
    """An S_1-branching tree of height n on node_set whose depth-n nodes are ``children``."""
    if n == 1:
        return NormingTree(node_set, tuple(children), 1)
    subs = [_cascade(_union(block), block, n - 1) for block in _greedy_blocks(children, n - 1)]
    return NormingTree(node_set, tuple(subs), 1)


def flatten_to_s1(tree: NormingTree) -> NormingTree:
    """Replace every S_n branching by an n-step cascade of S_1 branchings.

    Leaves and their orders are unchanged.  The cascade groups the successors
    (ordered by minima) greedily into maximal runs whose minima lie in
    S_{n-1}, recursively.
    """
    if tree.is_leaf:
        return tree
    children = sorted((flatten_to_s1(c) for c in tree.children), key=lambda c: c.set[0])
    return _cascade(tree.set, children, tree.level)


def lift_s1_to_sN(tree: NormingTree, N: int) -> NormingTree:
    """Regroup an S_1-branching tree into S_N branchings.

    Each node's new successors are its descendants N levels down together with
    the leaves above that depth; a leaf of order o ends with order N*ceil(o/N).
    """
    if N < 1:
        raise ValueError("N must be positive")
    for path, node in tree.walk():
        if not node.is_leaf and node.level != 1:
            raise NotS1Tree(f"node at {path} branches at level {node.level}")
    return _lift(tree, N)


def _lift(node: NormingTree, N: int) -> NormingTree:
    if node.is_leaf:
        return node
    frontier: list[NormingTree] = []

    def collect(n, depth):
        if depth == N or n.is_leaf:
            frontier.append(n)
            return
        for c in n.children:
            collect(c, depth + 1)

    for c in node.children:
        collect(c, 1)
    frontier.sort(key=lambda n: n.set[0])
    return NormingTree(node.set, tuple(_lift(n, N) for n in frontier), N)


def retarget_to_sN(tree: NormingTree, N: int) -> NormingTree:
    """An S_N-branching tree with the same leaves, leaf orders N*ceil(o/N)."""
    return lift_s1_to_sN(flatten_to_s1(tree), N)


def ceil_to_multiple(o: int, N: int) -> int:
    return N * math.ceil(o / N) if o else 0


def verify_disjoint_family(tree: NormingTree, paths: Iterable[Path], m: int, mode) -> bool:
    """Check that pairwise disjoint nodes of order <= m form an S_m family.

    Returns the outcome of check_sequence on the nodes ordered by minima; a
    False is a counterexample to the statement being exercised.
    """
    mode = Mode.parse(mode)
    orders = {}

    def visit(node, path, order):
        orders[path] = order
        for i, c in enumerate(node.children):
            visit(c, path + (i,), order + node.level)

    visit(tree, (), 0)
    nodes = []
    for p in paths:
        p = tuple(p)
        if p not in orders:
            raise KeyError(f"no node at path {p}")
        if orders[p] > m:
            raise OrderTooLarge(f"node {p} has order {orders[p]} > {m}")
        nodes.append(tree.node(p).set)
    seen: set[int] = set()
    for s in nodes:
        if seen.intersection(s):
            raise NotDisjoint("family members overlap")
        seen.update(s)
    if not nodes:
        return True
    nodes.sort(key=lambda s: s[0])
    return check_sequence(nodes, m, mode)


# random generation for property tests and suites

def random_family(rng: random.Random, items: Sequence[int], n: int, mode) -> list[FinSet]:
    """A random S_n-admissible (allowable) family of subsets of ``items``."""
    mode = Mode.parse(mode)
    items = list(items)
    if not items:
        return []
    if mode is Mode.ADMISSIBLE:
        cuts = sorted(rng.sample(range(1, len(items)), rng.randint(0, len(items) - 1)))
        bounds = [0] + cuts + [len(items)]
        pieces = [items[a:b] for a, b in zip(bounds, bounds[1:])]
    else:
        r = rng.randint(1, len(items))
        groups: list[list[int]] = [[] for _ in range(r)]
        for v in items:
            groups[rng.randrange(r)].append(v)
        pieces = sorted((g for g in groups if g), key=lambda g: g[0])
    pieces = [[v for v in p if v == p[0] or rng.random() < 0.8] for p in pieces]
    chosen: list[FinSet] = []
    state = None
    for piece in pieces:
        if rng.random() < 0.15 and chosen:
            continue
        z = piece[0]
        if state is None:
            state = start_state(n, z) if n > 0 else ()
            chosen.append(finset(piece))
            continue
        nxt = push_state(state, z)
        if nxt is not None:
            state = nxt
            chosen.append(finset(piece))
    return chosen


def random_tree(rng: random.Random, mode, max_index: int = 30, max_height: int = 4,
                max_level: int = 3, root: Optional[Iterable[int]] = None) -> NormingTree:
    """A random valid tree in the given mode."""
    mode = Mode.parse(mode)
    if root is None:
        size = rng.randint(1, max_index)
        root = rng.sample(range(1, max_index + 1), size)
    root = finset(root)

    def grow(s: FinSet, depth: int) -> NormingTree:
        if depth >= max_height or rng.random() < 0.25 * (depth > 0):
            return NormingTree(s)
        n = rng.randint(1, max_level)
        fam = random_family(rng, s, n, mode)
        if not fam:
            return NormingTree(s)
        return NormingTree(s, tuple(grow(f, depth + 1) for f in fam), n)

    return grow(root, 0)


def random_antichain(rng: random.Random, tree: NormingTree, stop: float = 0.35,
                     drop: float = 0.2) -> list[Path]:
    """Random set of paths no two of which are ancestor and descendant."""
    out: list[Path] = []

    def visit(node, path):
        if node.is_leaf or rng.random() < stop:
            if rng.random() >= drop:
                out.append(path)
            return
        for i, c in enumerate(node.children):
            visit(c, path + (i,))

    visit(tree, ())
    if not out:
        out.append(())
    return out


def node_order(tree: NormingTree, path: Path) -> int:
    order, node = 0, tree
    for i in path:
        order += node.level
        node = node.children[i]
    return order
