"""Exact norm engines for mixed Tsirelson norms and their modified versions.

Both engines evaluate the implicit norm

    ||x|| = max(||x||_c0, sup_n theta_n sup sum_i ||E_i x||)

where the inner sup runs over S_n-admissible (successive) or S_n-allowable
(pairwise disjoint) families.  Two facts drive the search:

* norms only grow when sets grow, so a family can be assumed to cover
  everything from its smallest minimum on;
* norms are subadditive, so once the Schreier constraint can no longer bind
  the best split is into singletons and is worth the l1 norm.

A brute-force oracle that enumerates every family directly is kept separate
and shares none of these shortcuts.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

from tslab.core import SparseVector, finset
from tslab.report import NOT_APPLICABLE, VerificationReport
from tslab.schreier import (Mode, push_state, schreier_level, schreier_member_exhaustive,
                            start_state)
from tslab.theta import ThetaSpec, prop5_theta
from tslab.trees import NormingTree

DEFAULT_EXACT_CAP = 14
UNBOUNDED = -1


class SupportTooLarge(ValueError):
    pass


class CapExceeded(RuntimeError):
    pass


def default_exact_cap() -> int:
    value = os.environ.get("TSLAB_EXACT_CAP")
    if value is None:
        return DEFAULT_EXACT_CAP
    try:
        cap = int(value)
    except ValueError:
        raise ValueError(f"TSLAB_EXACT_CAP must be an integer, got {value!r}") from None
    if cap < 0:
        raise ValueError("TSLAB_EXACT_CAP must be nonnegative")
    return cap


@dataclass(frozen=True)
class FiniteFamily:
    """Finitely many levels n_i with weights theta_i."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple(sorted((int(n), Fraction(t)) for n, t in self.pairs))
        if not pairs:
            raise ValueError("a finite family needs at least one level")
        levels = [n for n, _ in pairs]
        if len(set(levels)) != len(levels):
            raise ValueError("levels must be distinct")
        for n, t in pairs:
            if n < 1:
                raise ValueError("levels must be positive")
            if not 0 < t < 1:
                raise ValueError("weights must lie in (0,1)")
        object.__setattr__(self, "pairs", pairs)

    def __call__(self, n: int) -> Fraction:
        for level, t in self.pairs:
            if level == n:
                return t
        raise KeyError(f"level {n} is not in the family")

    def to_json(self) -> list:
        return [[n, str(t)] for n, t in self.pairs]


class Levels:
    """Which branch levels are available and what they weigh."""

    def __init__(self, weights):
        self.weights = weights
        if isinstance(weights, FiniteFamily):
            self.allowed: Optional[list[int]] = [n for n, _ in weights.pairs]
        elif isinstance(weights, ThetaSpec):
            self.allowed = None
        else:
            raise TypeError("weights must be a ThetaSpec or FiniteFamily")
        self._best: dict[int, Optional[tuple[Fraction, int]]] = {}

    def weight(self, n: int) -> Fraction:
        return self.weights(n)

    def below(self, n: int) -> list[int]:
        """Available levels strictly below n."""
        if self.allowed is None:
            return list(range(1, n))
        return [m for m in self.allowed if m < n]

    def best_at_least(self, n: int) -> Optional[tuple[Fraction, int]]:
        """(max weight, its least level) over available levels >= n."""
        if n in self._best:
            return self._best[n]
        if self.allowed is not None:
            cands = [(self.weights(m), -m) for m in self.allowed if m >= n]
        else:
            spec = self.weights
            if spec.kind == "table":
                # values past the table decrease geometrically
                last = max(n, len(spec.values) + 1)
                cands = [(spec(m), -m) for m in range(n, last + 1)]
            else:
                cands = [(spec(n), -n)]
        out = None
        if cands:
            w, neg = max(cands)
            out = (w, -neg)
        self._best[n] = out
        return out

    def top(self) -> Fraction:
        best = self.best_at_least(1)
        return best[0] if best else Fraction(0)


@dataclass
class NormResult:
    value: Fraction
    exact: bool
    lower: Fraction
    upper: Fraction
    witness: NormingTree

    def to_json(self) -> dict:
        return {"value": str(self.value), "exact": self.exact, "lower": str(self.lower),
                "upper": str(self.upper), "witness": self.witness.to_json()}


def _ensure_recursion(n: int) -> None:
    # rounded up so repeated calls rarely move the limit
    need = -(-(2000 + 40 * n) // 5000) * 5000
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


class _Vector:
    """Support positions, |coefficients| and cached block statistics."""

    def __init__(self, x: SparseVector):
        self.idx = list(x.support)
        self.abs = [abs(x[k]) for k in self.idx]
        self.size = len(self.idx)
        self.prefix = [Fraction(0)]
        for a in self.abs:
            self.prefix.append(self.prefix[-1] + a)

    def ell1(self, a: int, b: int) -> Fraction:
        return self.prefix[b + 1] - self.prefix[a]


class AdmissibleEngine:
    """Dynamic program over intervals of support positions.

    f(a, b, d) is the norm (iterated d times, or fully when d < 0) of x
    restricted to support positions a..b.  A split is a cut of a..b into
    consecutive intervals starting at a whose minima lie in S_n.
    """

    def __init__(self, x: SparseVector, weights):
        self.v = _Vector(x)
        self.levels = Levels(weights)
        self.f_memo: dict = {}
        self.g_memo: dict = {}
        self.level_memo: dict = {}
        self.c0_memo: dict = {}
        _ensure_recursion(self.v.size)

    def c0(self, a: int, b: int) -> Fraction:
        key = (a, b)
        out = self.c0_memo.get(key)
        if out is None:
            out = self.v.abs[a] if a == b else max(self.v.abs[a], self.c0(a + 1, b))
            self.c0_memo[key] = out
        return out

    def nmax(self, a: int, b: int) -> int:
        key = (a, b)
        out = self.level_memo.get(key)
        if out is None:
            out = schreier_level(self.v.idx[a:b + 1])
            self.level_memo[key] = out
        return out

    def _free(self, state, i: int, b: int) -> bool:
        idx = self.v.idx
        for j in range(i + 1, b + 1):
            state = push_state(state, idx[j])
            if state is None:
                return False
        return True

    def g(self, i: int, b: int, state, d: int) -> tuple[Fraction, Optional[int]]:
        """Best sum over cuts of i..b into intervals, the first starting at i.

        ``state`` already contains idx[i].  Returns (value, end of first piece).
        """
        key = (i, b, state, d)
        out = self.g_memo.get(key)
        if out is not None:
            return out
        if self._free(state, i, b):
            out = (self.v.ell1(i, b), i if i < b else b)
            self.g_memo[key] = out
            return out
        best, arg = self.f(i, b, d)[0], b
        for j in range(i + 1, b + 1):
            nxt = push_state(state, self.v.idx[j])
            if nxt is None:
                break  # a full state rejects every further element
            head = self.f(i, j - 1, d)[0]
            if head + self.v.ell1(j, b) <= best:
                continue
            val = head + self.g(j, b, nxt, d)[0]
            if val > best:
                best, arg = val, j - 1
        out = (best, arg)
        self.g_memo[key] = out
        return out

    def split(self, a: int, b: int, n: int, d: int) -> tuple[Fraction, Optional[int]]:
        """Best sum with at least two pieces and minima in S_n."""
        state = start_state(n, self.v.idx[a])
        if self._free(state, a, b):
            return self.v.ell1(a, b), a
        best, arg = None, None
        for j in range(a + 1, b + 1):
            nxt = push_state(state, self.v.idx[j])
            if nxt is None:
                break
            val = self.f(a, j - 1, d)[0] + self.g(j, b, nxt, d)[0]
            if best is None or val > best:
                best, arg = val, j - 1
        return best, arg

    def f(self, a: int, b: int, d: int) -> tuple[Fraction, tuple]:
        key = (a, b, d)
        out = self.f_memo.get(key)
        if out is not None:
            return out
        best, choice = self.c0(a, b), ("leaf",)
        if d != 0 and a < b:
            val = self.f(a + 1, b, d)[0]
            if val > best:
                best, choice = val, ("drop",)
            ell1 = self.v.ell1(a, b)
            if self.v.idx[a] != 1 and self.levels.top() * ell1 > best:
                top = self.nmax(a, b)
                child_d = d - 1 if d > 0 else d
                free = self.levels.best_at_least(top)
                if free is not None and free[0] * ell1 > best:
                    best, choice = free[0] * ell1, ("free", free[1])
                for n in self.levels.below(top):
                    w = self.levels.weight(n)
                    if w * ell1 <= best:
                        continue
                    val, first = self.split(a, b, n, child_d)
                    if val is not None and w * val > best:
                        best, choice = w * val, ("split", n, first)
        out = (best, choice)
        self.f_memo[key] = out
        return out

    def value(self, depth: int = UNBOUNDED) -> Fraction:
        if self.v.size == 0:
            return Fraction(0)
        return self.f(0, self.v.size - 1, depth)[0]

    def tree(self, a: int, b: int, d: int, root=None) -> NormingTree:
        root = finset(root if root is not None else self.v.idx[a:b + 1])
        choice = self.f(a, b, d)[1]
        kind = choice[0]
        if kind == "leaf":
            return NormingTree(root)
        if kind == "drop":
            return self.tree(a + 1, b, d, root)
        child_d = d - 1 if d > 0 else d
        if kind == "free":
            leaves = [NormingTree((k,)) for k in self.v.idx[a:b + 1]]
            return NormingTree(root, tuple(leaves), choice[1])
        _, n, first = choice
        pieces = [(a, first)]
        state = start_state(n, self.v.idx[a])
        i = first + 1
        while i <= b:
            state = push_state(state, self.v.idx[i])
            _, end = self.g(i, b, state, child_d)
            if self._free(state, i, b):
                pieces.extend((k, k) for k in range(i, b + 1))
                break
            pieces.append((i, end))
            i = end + 1
        children = tuple(self.tree(s, e, child_d) for s, e in pieces)
        return NormingTree(root, children, n)

    def witness(self, depth: int = UNBOUNDED) -> NormingTree:
        if self.v.size == 0:
            return NormingTree(())
        return self.tree(0, self.v.size - 1, depth)


class AllowableEngine:
    """Memoized search over subsets of support positions (bitmasks).

    A split of U is a partition of U into at least two parts whose minima
    lie in S_n; the part holding the least remaining element is chosen first.

    Arithmetic is on integers: every tag below a node U is a product of at
    most |U| - 1 weights, so f(U) * X * D^(|U|-1) is an integer, where D is
    the lcm of the weight denominators and X that of the coefficients.
    """

    def __init__(self, x: SparseVector, weights):
        self.v = _Vector(x)
        self.levels = Levels(weights)
        self.f_memo: dict = {}
        self.h_memo: dict = {}
        self.level_memo: dict = {}
        _ensure_recursion(self.v.size)
        size = self.v.size
        self.X = math.lcm(1, *(a.denominator for a in self.v.abs))
        self.xint = [int(a * self.X) for a in self.v.abs]
        top = schreier_level([k for k in self.v.idx if k != 1]) or 1
        ws = {self.levels.weight(n) for n in self.levels.below(top)}
        for n in range(1, top + 1):
            best = self.levels.best_at_least(n)
            if best is not None:
                ws.add(best[0])
        self.D = math.lcm(1, *(w.denominator for w in ws))
        self.wint = {w: int(w * self.D) for w in ws}
        self.pow = [self.D ** i for i in range(size + 1)]
        # l1 and c0 of every subset (times X), filled by peeling the lowest bit
        n_masks = 1 << size
        self.l1 = [0] * n_masks
        self.c0x = [0] * n_masks
        self.card = [0] * n_masks
        for mask in range(1, n_masks):
            low = mask & -mask
            a = self.xint[low.bit_length() - 1]
            prev = mask ^ low
            self.l1[mask] = self.l1[prev] + a
            self.c0x[mask] = max(self.c0x[prev], a)
            self.card[mask] = self.card[prev] + 1

    def elems(self, mask: int) -> list[int]:
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return out

    def scaled(self, mask: int, value: int) -> Fraction:
        """Undo the integer scaling of f(mask)."""
        return Fraction(value, self.X * self.pow[self.card[mask] - 1])

    def nmax(self, mask: int) -> int:
        out = self.level_memo.get(mask)
        if out is None:
            out = schreier_level([self.v.idx[i] for i in self.elems(mask)])
            self.level_memo[mask] = out
        return out

    def _free(self, state, mask: int) -> bool:
        idx = self.v.idx
        while mask:
            low = mask & -mask
            state = push_state(state, idx[low.bit_length() - 1])
            if state is None:
                return False
            mask ^= low
        return True

    def h(self, rest: int, state, d: int) -> tuple[Optional[int], Optional[int]]:
        """Best sum of f over partitions of ``rest`` whose minima extend ``state``.

        The sum is scaled by X * D^(|rest|-1).  Returns (value, first part) or
        (None, None) when no partition fits.
        """
        key = (rest, state, d)
        out = self.h_memo.get(key)
        if out is not None:
            return out
        low = rest & -rest
        state = push_state(state, self.v.idx[low.bit_length() - 1])
        if state is None:
            out = (None, None)
        else:
            others = rest ^ low
            if self._free(state, others):
                out = (self.l1[rest] * self.pow[self.card[rest] - 1], low)
            else:
                out = self._best_first_part(low, others, state, d, True)
        self.h_memo[key] = out
        return out

    def _best_first_part(self, low: int, others: int, state, d: int, allow_whole: bool):
        """Choose the part containing ``low``; the remaining parts extend ``state``.

        Values are scaled by X * D^(|low|+|others|-1).
        """
        best, arg = None, None
        pw, card, l1 = self.pow, self.card, self.l1
        total = card[others] + 1
        sub = others
        while True:
            part = low | sub
            tail = others ^ sub
            if tail == 0:
                if allow_whole:
                    val = self.f(part, d)[0]
                    if best is None or val > best:
                        best, arg = val, part
            else:
                head = self.f(part, d)[0] * pw[card[tail]]
                # h(tail) <= l1(tail), in the same scale
                if best is None or head + l1[tail] * pw[total - 1] > best:
                    t = self.h(tail, state, d)[0]
                    if t is not None:
                        val = head + t * pw[card[part]]
                        if best is None or val > best:
                            best, arg = val, part
            if sub == 0:
                break
            sub = (sub - 1) & others
        return best, arg

    def split(self, mask: int, n: int, d: int) -> tuple[Optional[int], Optional[int]]:
        """Best scaled sum over splits of ``mask`` at level n (at least two parts)."""
        low = mask & -mask
        others = mask ^ low
        state = start_state(n, self.v.idx[low.bit_length() - 1])
        if self._free(state, others):
            return self.l1[mask] * self.pow[self.card[mask] - 1], low
        return self._best_first_part(low, others, state, d, False)

    def f(self, mask: int, d: int) -> tuple[int, tuple]:
        """Scaled norm of x restricted to ``mask`` (times X * D^(|mask|-1))."""
        key = (mask, d)
        out = self.f_memo.get(key)
        if out is not None:
            return out
        k = self.card[mask]
        pw = self.pow
        best, choice = self.c0x[mask] * pw[k - 1], ("leaf",)
        if d != 0 and k > 1:
            low = mask & -mask
            val = self.f(mask ^ low, d)[0] * self.D
            if val > best:
                best, choice = val, ("drop",)
            # a split is worth at most w * l1, i.e. w*D * l1 * D^(k-2) scaled
            ell1 = self.l1[mask] * pw[k - 2]
            top_w = self.levels.top()
            if self.v.idx[low.bit_length() - 1] != 1 and top_w * self.D * ell1 > best:
                top = self.nmax(mask)
                child_d = d - 1 if d > 0 else d
                free = self.levels.best_at_least(top)
                if free is not None and self.wint[free[0]] * ell1 > best:
                    best, choice = self.wint[free[0]] * ell1, ("free", free[1])
                for n in self.levels.below(top):
                    a = self.wint[self.levels.weight(n)]
                    if a * ell1 <= best:
                        continue
                    val, first = self.split(mask, n, child_d)
                    if val is not None and a * (val // self.D) > best:
                        best, choice = a * (val // self.D), ("split", n, first)
        out = (best, choice)
        self.f_memo[key] = out
        return out

    def full(self) -> int:
        return (1 << self.v.size) - 1

    def value(self, depth: int = UNBOUNDED) -> Fraction:
        if self.v.size == 0:
            return Fraction(0)
        return self.scaled(self.full(), self.f(self.full(), depth)[0])

    def tree(self, mask: int, d: int, root=None) -> NormingTree:
        root = finset(root if root is not None else [self.v.idx[i] for i in self.elems(mask)])
        choice = self.f(mask, d)[1]
        kind = choice[0]
        if kind == "leaf":
            return NormingTree(root)
        if kind == "drop":
            low = mask & -mask
            return self.tree(mask ^ low, d, root)
        child_d = d - 1 if d > 0 else d
        if kind == "free":
            leaves = [NormingTree((self.v.idx[i],)) for i in self.elems(mask)]
            return NormingTree(root, tuple(leaves), choice[1])
        _, n, first = choice
        parts = [first]
        low = mask & -mask
        state = start_state(n, self.v.idx[low.bit_length() - 1])
        rest = mask ^ first
        while rest:
            r_low = rest & -rest
            pushed = push_state(state, self.v.idx[r_low.bit_length() - 1])
            if self._free(pushed, rest ^ r_low):
                parts.extend(1 << i for i in self.elems(rest))
                break
            _, part = self.h(rest, state, child_d)
            parts.append(part)
            state = pushed
            rest ^= part
        children = tuple(self.tree(p, child_d) for p in parts)
        return NormingTree(root, children, n)

    def witness(self, depth: int = UNBOUNDED) -> NormingTree:
        if self.v.size == 0:
            return NormingTree(())
        return self.tree(self.full(), depth)


def _relaxed_upper(x: SparseVector, levels: Levels) -> Fraction:
    c0, ell1 = x.c0(), x.ell1()
    if len(x.support) <= 1:
        return c0
    return max(c0, levels.top() * ell1)


def _norm(x: SparseVector, weights, mode, exact_cap: Optional[int]) -> NormResult:
    mode = Mode.parse(mode)
    if mode is Mode.ADMISSIBLE:
        eng = AdmissibleEngine(x, weights)
        value = eng.value()
        return NormResult(value, True, value, value, eng.witness())
    cap = default_exact_cap() if exact_cap is None else exact_cap
    if len(x.support) <= cap:
        eng = AllowableEngine(x, weights)
        value = eng.value()
        return NormResult(value, True, value, value, eng.witness())
    adm = AdmissibleEngine(x, weights)
    lower = adm.value()
    upper = min(x.ell1(), _relaxed_upper(x, Levels(weights)))
    return NormResult(lower, lower == upper, lower, upper, adm.witness())


def norm_admissible(x: SparseVector, spec: ThetaSpec) -> NormResult:
    return _norm(x, spec, Mode.ADMISSIBLE, None)


def norm_allowable(x: SparseVector, spec: ThetaSpec, exact_cap: Optional[int] = None) -> NormResult:
    """Modified norm; exact up to ``exact_cap`` support points, bounds beyond."""
    return _norm(x, spec, Mode.ALLOWABLE, exact_cap)


def norm(x: SparseVector, spec, mode, exact_cap: Optional[int] = None) -> NormResult:
    return _norm(x, spec, mode, exact_cap)


def norm_finite_family(x: SparseVector, fam: FiniteFamily, mode,
                       exact_cap: Optional[int] = None) -> NormResult:
    return _norm(x, fam, mode, exact_cap)


def iterated_norm(x: SparseVector, m: int, mode, spec, exact_cap: Optional[int] = None) -> Fraction:
    """The m-th iterate: ||x||_0 = c0(x), ||x||_{m} uses ||.||_{m-1} on the pieces."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    mode = Mode.parse(mode)
    if mode is Mode.ADMISSIBLE:
        return AdmissibleEngine(x, spec).value(m)
    cap = default_exact_cap() if exact_cap is None else exact_cap
    if len(x.support) > cap:
        raise CapExceeded(f"support size {len(x.support)} exceeds exact cap {cap}")
    return AllowableEngine(x, spec).value(m)


# independent oracle

def _families(elements: Sequence[int]):
    """Every family of pairwise disjoint nonempty subsets of ``elements``."""
    n = len(elements)

    def rec(i, parts):
        if i == n:
            if parts:
                yield [tuple(p) for p in parts]
            return
        yield from rec(i + 1, parts)
        for p in parts:
            p.append(elements[i])
            yield from rec(i + 1, parts)
            p.pop()
        parts.append([elements[i]])
        yield from rec(i + 1, parts)
        parts.pop()

    yield from rec(0, [])


def brute_force_norm(x: SparseVector, mode, weights, level_cap: Optional[int] = None,
                     _memo: Optional[dict] = None) -> Fraction:
    """Maximum of the tree value over all trees, by exhaustive enumeration.

    Every family of disjoint subsets of every node (successive in admissible
    mode) is tried at every level up to ``level_cap``; membership uses the
    exhaustive decomposition test.  Only for supports of at most 8 points.
    """
    mode = Mode.parse(mode)
    support = x.support
    if len(support) > 8:
        raise SupportTooLarge(f"support has {len(support)} points; the oracle handles at most 8")
    if not support:
        return Fraction(0)
    if level_cap is None and isinstance(weights, FiniteFamily):
        level_cap = max(n for n, _ in weights.pairs)
    elif level_cap is None:
        rest = [k for k in support if k != 1]
        level_cap = max(1, _exhaustive_level(tuple(rest))) + 2
    coeff = {k: abs(x[k]) for k in support}
    memo = {} if _memo is None else _memo

    def best_weight(mins: tuple) -> Optional[Fraction]:
        out = None
        for n in range(1, level_cap + 1):
            try:
                w = weights(n)
            except KeyError:
                continue
            if schreier_member_exhaustive(mins, n) and (out is None or w > out):
                out = w
        return out

    def value(node: tuple) -> Fraction:
        key = (mode, level_cap, tuple((k, coeff[k]) for k in node))
        if key in memo:
            return memo[key]
        best = max(coeff[k] for k in node)
        for fam in _families(node):
            if len(fam) == 1 and len(fam[0]) == len(node):
                continue
            fam.sort(key=lambda s: s[0])
            if mode is Mode.ADMISSIBLE and any(a[-1] > b[0] for a, b in zip(fam, fam[1:])):
                continue
            mins = tuple(s[0] for s in fam)
            w = best_weight(mins)
            if w is None:
                continue
            total = w * sum((value(s) for s in fam), Fraction(0))
            if total > best:
                best = total
        memo[key] = best
        return best

    return value(tuple(support))


def _exhaustive_level(f: tuple) -> int:
    if len(f) <= 1:
        return 0
    n = 1
    while not schreier_member_exhaustive(f, n):
        n += 1
    return n


def prop5_report(spec: ThetaSpec, N: int, samples: Iterable[SparseVector],
                 exact_cap: Optional[int] = None) -> VerificationReport:
    """Compare X, X_M with Y = T[S_1, theta], Y_M on each sample.

    Checks theta^N ||x||_Y <= ||x||_X <= theta^-N ||x||_Y and the same for the
    modified norms.  Specs that do not satisfy theta_N = theta^N (theta the sup
    of theta_n^{1/n}) are reported not-applicable.
    """
    rep = VerificationReport("prop5")
    theta = prop5_theta(spec, N)
    if theta is None or spec.at(N) != theta ** N:
        rep.add("precondition", NOT_APPLICABLE,
                note=f"theta_{N} = theta^{N} with theta = sup theta_n^(1/n) not verified")
        return rep
    fam = FiniteFamily(((1, theta),))
    lo, hi = theta ** N, 1 / theta ** N
    for i, x in enumerate(samples):
        for mode in (Mode.ADMISSIBLE, Mode.ALLOWABLE):
            X = norm(x, spec, mode, exact_cap)
            Y = norm_finite_family(x, fam, mode, exact_cap)
            if not (X.exact and Y.exact):
                rep.add(f"x{i}:{mode.value}", NOT_APPLICABLE, note="support above exact cap")
                continue
            ratio = X.value / Y.value if Y.value else Fraction(1)
            ok = lo * Y.value <= X.value <= hi * Y.value
            rep.check(f"x{i}:{mode.value}", ok,
                      {"x": x.to_json(), "X": X.value, "Y": Y.value},
                      {"ratio": ratio, "low": lo, "high": hi})
    return rep
