"""Schreier families S_n (finite n), admissibility and the S_p seminorm.

Membership of F in S_n is decided by a greedy automaton: read F left to
right, keep extending the current S_{n-1} block while it stays in S_{n-1},
otherwise open a new block, and reject once the block count exceeds min F.
The state is a flat tuple ``(m_n, c_n, m_{n-1}, c_{n-1}, ..., m_1, c_1)``
of block minima and block counts, outermost level first.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from tslab.core import EmptyMember, FinSet, LengthMismatch, SparseVector, finset, set_less

State = tuple


class Mode(enum.Enum):
    ADMISSIBLE = "admissible"
    ALLOWABLE = "allowable"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"mode must be 'admissible' or 'allowable', got {value!r}") from None


ADMISSIBLE = Mode.ADMISSIBLE
ALLOWABLE = Mode.ALLOWABLE


def start_state(n: int, z: int) -> State:
    return (z, 1) * n


def push_state(state: State, z: int) -> Optional[State]:
    """Append ``z`` (larger than everything read so far); None if that leaves S_n."""
    levels = len(state) // 2
    for depth in range(levels - 1, -1, -1):
        m, c = state[2 * depth], state[2 * depth + 1]
        if c < m:
            return state[: 2 * depth] + (m, c + 1) + (z, 1) * (levels - 1 - depth)
    return None


def run_automaton(elements: Sequence[int], n: int) -> Optional[State]:
    """Feed ``elements`` (increasing) to the S_n automaton; None on rejection."""
    if not elements:
        return ()
    if n == 0:
        return () if len(elements) == 1 else None
    state = start_state(n, elements[0])
    for z in elements[1:]:
        state = push_state(state, z)
        if state is None:
            return None
    return state


def schreier_member(f: Iterable[int], n: int) -> bool:
    if n < 0:
        raise ValueError("Schreier level must be nonnegative")
    return run_automaton(finset(f), n) is not None


@lru_cache(maxsize=None)
def _member_exhaustive(f: FinSet, n: int) -> bool:
    if len(f) <= 1:
        return True
    if n == 0:
        return False
    k_max = min(f[0], len(f))
    # every way of cutting f into consecutive nonempty blocks
    for mask in range(1 << (len(f) - 1)):
        if bin(mask).count("1") + 1 > k_max:
            continue
        blocks, start = [], 0
        for i in range(1, len(f)):
            if mask >> (i - 1) & 1:
                blocks.append(f[start:i])
                start = i
        blocks.append(f[start:])
        if all(_member_exhaustive(b, n - 1) for b in blocks):
            return True
    return False


def schreier_member_exhaustive(f: Iterable[int], n: int) -> bool:
    """Membership by trying every decomposition; exponential, used as an oracle."""
    return _member_exhaustive(finset(f), n)


def schreier_level(f: Iterable[int]) -> Optional[int]:
    """Least n with F in S_n, or None when no level works (min F = 1, |F| > 1)."""
    f = finset(f)
    if len(f) <= 1:
        return 0
    if f[0] == 1:
        return None
    n = 1
    while run_automaton(f, n) is None:
        n += 1
    return n


def check_sequence(sets: Sequence[Iterable[int]], n: int, mode) -> bool:
    """Is ``sets`` S_n-admissible (successive) or S_n-allowable (disjoint)?"""
    mode = Mode.parse(mode)
    family = [finset(s) for s in sets]
    if any(not s for s in family):
        raise EmptyMember("admissible/allowable sequences consist of nonempty sets")
    if mode is Mode.ADMISSIBLE:
        if any(not set_less(a, b) for a, b in zip(family, family[1:])):
            return False
    else:
        seen: set[int] = set()
        for s in family:
            if seen.intersection(s):
                return False
            seen.update(s)
    mins = [s[0] for s in family]
    if len(set(mins)) != len(mins):
        return False
    return schreier_member(mins, n)


def spreading_shift(f: Sequence[int], target: Sequence[int]) -> bool:
    """True iff ``target`` is a spread of ``f``: same length, target_i >= f_i."""
    f, target = finset(f), finset(target)
    if len(f) != len(target):
        raise LengthMismatch(f"|F| = {len(f)} but |target| = {len(target)}")
    return all(t >= s for s, t in zip(f, target))


def schreier_seminorm(x: SparseVector, p: int) -> tuple[Fraction, FinSet]:
    """``max_{E in S_p} ||Ex||_1`` with a maximizing E.

    Forward dynamic program over the support, one automaton state per
    partial choice.  Weights are scaled to integers so the inner loop never
    touches Fraction.
    """
    if p < 0:
        raise ValueError("Schreier level must be nonnegative")
    support = x.support
    if not support:
        return Fraction(0), ()
    scale = math.lcm(*(x[k].denominator for k in support))
    weights = [abs(x[k].numerator) * (scale // x[k].denominator) for k in support]
    n = len(support)
    suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + weights[i]

    # The future of an automaton state depends only on the remaining room
    # m - c at each level, so states are keyed by that capacity vector.
    best_value, best_chain = -1, None
    states: dict = {}  # capacities -> (value, chain); chain is a cons list
    for i, (z, w) in enumerate(zip(support, weights)):
        rest = support[i + 1 :]
        candidates = [((z - 1,) * p, w, (z, None))]
        for caps, (value, chain) in states.items():
            nxt = _push_caps(caps, z)
            if nxt is not None:
                candidates.append((nxt, value + w, (z, chain)))
        fresh = dict(states)  # skipping z keeps every old state
        for caps, value, chain in candidates:
            if value > best_value:
                best_value, best_chain = value, chain
            if value + suffix[i + 1] <= best_value:
                continue
            # every remaining element fits: taking them all is optimal
            if _caps_accept(caps, rest):
                best_value = value + suffix[i + 1]
                for k in rest:
                    chain = (k, chain)
                best_chain = chain
                continue
            old = fresh.get(caps)
            if old is None or old[0] < value:
                fresh[caps] = (value, chain)
        states = _pareto(fresh, suffix[i + 1], best_value, len(rest))

    witness = []
    while best_chain is not None:
        witness.append(best_chain[0])
        best_chain = best_chain[1]
    return Fraction(best_value, scale), finset(witness)


def _pareto(states: dict, suffix: int, best: int, left: int) -> dict:
    """Drop states that cannot beat ``best`` or are dominated.

    Room beyond the number of elements left is never used, so capacities
    are clamped to ``left``.  A state with at least as much room at every
    level and at least the same value accepts every continuation the other
    does, so the other can go.
    """
    merged: dict = {}
    for caps, (value, chain) in states.items():
        if value + suffix <= best:
            continue
        caps = tuple(min(c, left) for c in caps)
        old = merged.get(caps)
        if old is None or old[0] < value:
            merged[caps] = (value, chain)
    ranked = sorted(merged.items(), key=lambda item: -item[1][0])
    kept: list = []
    if ranked and len(ranked[0][0]) == 1:
        room = -1
        for caps, vc in ranked:
            if caps[0] > room:
                kept.append((caps, vc))
                room = caps[0]
        return dict(kept)
    for caps, vc in ranked:
        if not any(all(a >= b for a, b in zip(other, caps)) for other, _ in kept):
            kept.append((caps, vc))
    return dict(kept)


def _push_caps(caps: tuple, z: int) -> Optional[tuple]:
    for depth in range(len(caps) - 1, -1, -1):
        if caps[depth] > 0:
            return caps[:depth] + (caps[depth] - 1,) + (z - 1,) * (len(caps) - 1 - depth)
    return None


def _caps_accept(caps: tuple, rest: Sequence[int]) -> bool:
    # total room is a cheap necessary condition before simulating
    if len(caps) == 0:
        return not rest
    if len(caps) == 1 and caps[0] < len(rest):
        return False
    for z in rest:
        caps = _push_caps(caps, z)
        if caps is None:
            return False
    return True


def is_schreier_seminorm_bruteforce(x: SparseVector, p: int) -> Fraction:
    """Maximum over every subset of the support; only for tiny supports."""
    support = x.support
    best = Fraction(0)
    for mask in range(1, 1 << len(support)):
        chosen = [support[i] for i in range(len(support)) if mask >> i & 1]
        if schreier_member_exhaustive(chosen, p):
            best = max(best, sum((abs(x[k]) for k in chosen), Fraction(0)))
    return best
