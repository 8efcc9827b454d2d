"""Repeated averages and the layered vectors x^0, ..., x^N built from them.

Level 0 consists of basis vectors e_v for v in an index stream V.  Each
level M+1 vector is x_k^{M+1} = sum_{j in I_k} a_j x_j^M, where
theta_q * sum_j a_j e_{m_j} is an S_q repeated average over the minima
m_j = min supp x_j^M, with q = r_{M+1}(k) p_{M+1}.

Repeated averages grow very fast (an S_2 average starting at m has
m (2^m - 1) entries), so every build runs under an atom budget.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence

from tslab.core import FinSet, SparseVector, finset
from tslab.report import FAIL, NOT_APPLICABLE, PASS, VerificationReport
from tslab.schreier import schreier_member, schreier_seminorm
from tslab.theta import ParamSet, ThetaSpec, big_theta, minimal_k

DEFAULT_BUDGET = 20000


class InsufficientStream(RuntimeError):
    pass


class ConstructionTooLarge(RuntimeError):
    pass


class KeyOutOfRange(KeyError):
    pass


class NotInSpan(ValueError):
    pass


class NotSkipped(ValueError):
    pass


class HypothesisViolated(ValueError):
    def __init__(self, index: int, detail: str = ""):
        super().__init__(f"hypothesis ({index}) violated{': ' + detail if detail else ''}")
        self.index = index
        self.detail = detail


def residue(k: int, L: int) -> int:
    """The r in 1..L with L | (k - r)."""
    if L < 1:
        raise ValueError("L must be positive")
    return (k - 1) % L + 1


def p_of(params: ParamSet, residues: dict[int, int]) -> int:
    """p(r_M, ..., r_M') = sum p_i r_i over the given {i: r_i}."""
    return sum(params.p[i - 1] * r for i, r in residues.items())


class IndexStream:
    """Strictly increasing positive integers consumed left to right.

    ``budget`` caps the number of items that may be consumed in total.
    """

    def __init__(self, values: Iterable[int], budget: Optional[int] = DEFAULT_BUDGET):
        self._it = iter(values)
        self.budget = budget
        self.consumed = 0
        self._last = 0

    @classmethod
    def from_start(cls, start: int, budget: Optional[int] = DEFAULT_BUDGET) -> "IndexStream":
        if start < 1:
            raise ValueError("indices start at 1")
        return cls(itertools.count(start), budget)

    @classmethod
    def from_list(cls, values: Sequence[int], budget: Optional[int] = DEFAULT_BUDGET) -> "IndexStream":
        return cls(list(values), budget)

    def __next__(self) -> int:
        if self.budget is not None and self.consumed >= self.budget:
            raise ConstructionTooLarge(f"atom budget of {self.budget} exhausted")
        try:
            v = next(self._it)
        except StopIteration:
            raise InsufficientStream(f"stream exhausted after {self.consumed} items") from None
        if v <= self._last:
            raise ValueError("index stream must be strictly increasing positive integers")
        self._last = v
        self.consumed += 1
        return v

    def __iter__(self):
        return self


@dataclass
class AverageNode:
    """Block structure of a repeated average over a stream of atoms.

    ``atoms`` lists (atom, value) pairs in order; ``coeffs`` the matching
    weights; ``children`` the constituent averages one order lower.
    """

    p: int
    atoms: list
    coeffs: list
    children: list = field(default_factory=list)

    @property
    def min_value(self) -> int:
        return self.atoms[0][1]


def average_over(q: int, take: Callable[[], tuple[Any, int]]) -> AverageNode:
    """The canonical S_q repeated average over atoms drawn by ``take``.

    ``take`` returns (atom, value) with strictly increasing values; an
    average of order q is (1/k) times the sum of k consecutive averages of
    order q-1, where k is the value of its first atom.
    """
    if q < 0:
        raise ValueError("order must be nonnegative")
    if q == 0:
        atom = take()
        return AverageNode(0, [atom], [Fraction(1)])
    first = average_over(q - 1, take)
    k = first.min_value
    children = [first] + [average_over(q - 1, take) for _ in range(k - 1)]
    atoms, coeffs = [], []
    scale = Fraction(1, k)
    for child in children:
        atoms.extend(child.atoms)
        coeffs.extend(c * scale for c in child.coeffs)
    return AverageNode(q, atoms, coeffs, children)


@dataclass
class RepeatedAverage:
    p: int
    vector: SparseVector
    blocks: AverageNode

    def to_json(self) -> dict:
        return {"p": self.p, "vector": self.vector.to_json()}


def repeated_average(p: int, stream) -> RepeatedAverage:
    """Repeated average of order p over basis vectors e_v, v drawn from ``stream``."""
    if not isinstance(stream, IndexStream):
        stream = IndexStream(stream)

    def take():
        v = next(stream)
        return (v, v)

    node = average_over(p, take)
    vec = SparseVector({v: c for (v, _), c in zip(node.atoms, node.coeffs)})
    return RepeatedAverage(p, vec, node)


def is_repeated_average(v: SparseVector, q: int) -> bool:
    """Is v exactly the S_q repeated average over its own support?

    The block structure of a repeated average is forced by its support, so
    rebuilding it over supp(v) and comparing decides the question.
    """
    support = v.support
    if not support:
        return False
    try:
        ra = repeated_average(q, IndexStream.from_list(support, budget=len(support)))
    except (InsufficientStream, ConstructionTooLarge):
        return False
    return ra.vector == v


def check_repeated_average(ra: RepeatedAverage) -> VerificationReport:
    """Positive coefficients summing to 1, support in S_p, c0 <= 1/min, nonincreasing.

    The sup-norm bound only holds from order 1 on; at order 0 it is reported
    not-applicable.
    """
    rep = VerificationReport("repavg")
    vec = ra.vector
    coeffs = [vec[k] for k in vec.support]
    rep.check("positive", all(c > 0 for c in coeffs), vec.to_json())
    rep.check("sum=1", sum(coeffs, Fraction(0)) == 1, {"sum": sum(coeffs, Fraction(0))})
    rep.check("support in S_p", schreier_member(vec.support, ra.p), list(vec.support))
    if ra.p >= 1:
        rep.check("c0<=1/min", vec.c0() <= Fraction(1, vec.support[0]),
                  {"c0": vec.c0(), "min": vec.support[0]})
    else:
        rep.add("c0<=1/min", NOT_APPLICABLE, note="order 0 is a basis vector; the bound is for p >= 1")
    rep.check("nonincreasing", all(a >= b for a, b in zip(coeffs, coeffs[1:])), vec.to_json())
    return rep


@dataclass
class LayerEntry:
    """x_k^{M+1}: interval I_k (first, last index of level M) and its a_j."""

    k: int
    first: int
    last: int
    coeffs: dict
    order: int
    vector: SparseVector


class LayeredFamily:
    """Lazily built vectors x_j^M for M = 0..N.

    ``vector(M, j)`` builds whatever is needed below it.  Everything is
    exact; the shared index stream enforces the atom budget.
    """

    def __init__(self, spec: ThetaSpec, params: ParamSet, V: IndexStream):
        self.spec = spec
        self.params = params
        self.V = V
        self.N = params.N
        self.levels: list[list[SparseVector]] = [[] for _ in range(self.N + 1)]
        self.entries: list[list[LayerEntry]] = [[] for _ in range(self.N + 1)]
        self._next_child = [0] * (self.N + 1)
        self.exhausted = False

    def residue(self, level: int, k: int) -> int:
        return residue(k, self.params.L[level - 1])

    def order(self, level: int, k: int) -> int:
        """q = r_level(k) * p_level, the order of the average defining x_k^level."""
        return self.residue(level, k) * self.params.p[level - 1]

    def count(self, level: int) -> int:
        return len(self.levels[level])

    def vector(self, level: int, j: int) -> SparseVector:
        if not 0 <= level <= self.N:
            raise KeyOutOfRange(f"level {level} outside 0..{self.N}")
        if j < 1:
            raise KeyOutOfRange("vector indices start at 1")
        while len(self.levels[level]) < j:
            self._build_next(level)
        return self.levels[level][j - 1]

    def entry(self, level: int, k: int) -> LayerEntry:
        if not 1 <= level <= self.N:
            raise KeyOutOfRange(f"level {level} has no defining coefficients")
        self.vector(level, k)
        return self.entries[level][k - 1]

    def _build_next(self, level: int) -> None:
        if self.exhausted:
            raise ConstructionTooLarge("family exceeded its budget earlier; build a fresh one")
        try:
            self._build_one(level)
        except (ConstructionTooLarge, InsufficientStream):
            self.exhausted = True
            raise

    def _build_one(self, level: int) -> None:
        if level == 0:
            v = next(self.V)
            self.levels[0].append(SparseVector.basis(v))
            return
        k = len(self.levels[level]) + 1
        q = self.order(level, k)
        below = level - 1

        def take():
            self._next_child[level] += 1
            j = self._next_child[level]
            vec = self.vector(below, j)
            return (j, vec.support[0])

        node = average_over(q, take)
        theta_q = self.spec.at(q)
        coeffs = {j: c / theta_q for (j, _), c in zip(node.atoms, node.coeffs)}
        total: dict[int, Fraction] = {}
        for j, a in coeffs.items():
            for idx, val in self.levels[below][j - 1].items():
                total[idx] = total.get(idx, Fraction(0)) + a * val
        vec = SparseVector(total)
        first, last = node.atoms[0][0], node.atoms[-1][0]
        self.levels[level].append(vec)
        self.entries[level].append(LayerEntry(k, first, last, coeffs, q, vec))

    def minima(self, level: int) -> list[int]:
        return [v.support[0] for v in self.levels[level]]

    def coefficients_nonincreasing(self, level: int) -> tuple[bool, bool]:
        """(within every interval, across the whole built sequence) for (a_j)."""
        within = True
        seq: list[Fraction] = []
        for e in self.entries[level]:
            vals = [e.coeffs[j] for j in range(e.first, e.last + 1)]
            within &= all(a >= b for a, b in zip(vals, vals[1:]))
            seq.extend(vals)
        overall = all(a >= b for a, b in zip(seq, seq[1:]))
        return within, overall

    def used_counts(self) -> list[int]:
        """Per level, how many vectors the built top-level vectors depend on."""
        counts = [0] * (self.N + 1)
        counts[self.N] = len(self.levels[self.N])
        for M in range(self.N, 0, -1):
            used = self.entries[M][: counts[M]]
            counts[M - 1] = max((e.last for e in used), default=0)
        return counts

    def to_json(self) -> dict:
        """The top level and everything beneath it; leftovers of a failed build are dropped."""
        counts = self.used_counts()
        out: dict = {"theta": self.spec.to_json(), "params": self.params.to_json(), "levels": []}
        for M in range(self.N + 1):
            n = counts[M]
            level: dict = {"M": M, "vectors": [v.to_json() for v in self.levels[M][:n]]}
            if M >= 1:
                entries = self.entries[M][:n]
                level["intervals"] = [[e.first, e.last] for e in entries]
                level["residues"] = [self.residue(M, e.k) for e in entries]
                level["coefficients"] = [[[j, str(e.coeffs[j])] for j in sorted(e.coeffs)]
                                         for e in entries]
            out["levels"].append(level)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def build_layers(spec: ThetaSpec, params: ParamSet, V: IndexStream,
                 counts: Sequence[int]) -> LayeredFamily:
    """Build at least counts[M] vectors at each level M (levels past the list: none)."""
    fam = LayeredFamily(spec, params, V)
    for M, c in enumerate(counts):
        if M > params.N:
            raise KeyOutOfRange(f"counts given for level {M} > N = {params.N}")
        if c > 0:
            fam.vector(M, c)
    return fam


def _check_residues(fam: LayeredFamily, s: int, M: int, residues: Sequence[int]) -> None:
    if not 1 <= s <= M:
        raise KeyOutOfRange(f"need 1 <= s <= M, got s={s}, M={M}")
    if M + 1 > fam.N:
        raise KeyOutOfRange(f"level {M + 1} exceeds N = {fam.N}")
    if len(residues) != M - s + 1:
        raise KeyOutOfRange(f"expected {M - s + 1} residues for levels {s}..{M}")
    for i, r in zip(range(s, M + 1), residues):
        if not 1 <= r <= fam.params.L[i - 1]:
            raise KeyOutOfRange(f"residue r_{i} = {r} outside 1..{fam.params.L[i - 1]}")


def pure_form_coeffs(fam: LayeredFamily, k: int, level: int, residues: Sequence[int],
                     s: int) -> dict[int, Fraction]:
    """Coefficients of x_k^level(r_s, ..., r_{level-1}) over the vectors x^{s-1}."""
    M = level - 1
    _check_residues(fam, s, M, residues)
    entry = fam.entry(level, k)
    r_M = residues[-1]
    out: dict[int, Fraction] = {}
    for j, a in entry.coeffs.items():
        if fam.residue(M, j) != r_M:
            continue
        if s == M:
            inner = fam.entry(M, j).coeffs
        else:
            inner = pure_form_coeffs(fam, j, M, residues[:-1], s)
        for i, b in inner.items():
            out[i] = out.get(i, Fraction(0)) + a * b
    return out


def pure_form(fam: LayeredFamily, k: int, level: int, residues: Sequence[int]) -> SparseVector:
    """x_k^level(r_s, ..., r_{level-1}) as a vector; s = level - len(residues)."""
    M = level - 1
    s = level - len(residues)
    _check_residues(fam, s, M, residues)
    entry = fam.entry(level, k)
    r_M = residues[-1]
    out = SparseVector({})
    for j, a in entry.coeffs.items():
        if fam.residue(M, j) != r_M:
            continue
        piece = fam.vector(M, j) if s == M else pure_form(fam, j, M, residues[:-1])
        out = out + piece.scale(a)
    return out


def coordinate_map(fam: LayeredFamily, y: SparseVector, level: int) -> dict[int, Fraction]:
    """Coefficients c_j with y = sum c_j x_j^level, read off the vectors themselves."""
    if not 0 <= level <= fam.N:
        raise KeyOutOfRange(f"level {level} outside 0..{fam.N}")
    out: dict[int, Fraction] = {}
    if not y.support:
        return out
    vectors = fam.levels[level]
    remaining = set(y.support)
    for j, vec in enumerate(vectors, start=1):
        lo, hi = vec.support[0], vec.support[-1]
        hit = [i for i in y.support if lo <= i <= hi]
        if not hit:
            continue
        c = y[lo] / vec[lo] if lo in y else Fraction(0)
        if c == 0 or y.restrict(range(lo, hi + 1)) != vec.scale(c):
            raise NotInSpan(f"y is not a multiple of x_{j}^{level} on its support")
        out[j] = c
        remaining.difference_update(hit)
    if remaining:
        raise NotInSpan(f"indices {sorted(remaining)[:5]} lie outside the built level-{level} vectors")
    return out


def ell1_of(coords: dict) -> Fraction:
    return sum((abs(c) for c in coords.values()), Fraction(0))


def u_vector(fam: LayeredFamily, k: int, level: int, residues: Sequence[int], M: int) -> SparseVector:
    """Place the level-M coefficients of x_k^level(r_{M+1}, ..., r_{level-1}) at minima.

    With no residues (level = M + 1) this is sum_j a_j e_{m_j} over I_k.
    """
    if level - M - 1 != len(residues):
        raise KeyOutOfRange("need one residue per level strictly between M and the top")
    if level == M + 1:
        coeffs = dict(fam.entry(level, k).coeffs)
    else:
        coeffs = pure_form_coeffs(fam, k, level, residues, M + 1)
    return SparseVector({fam.vector(M, j).support[0]: c for j, c in coeffs.items()})


def sandwich_bounds(fam: LayeredFamily, k: int, s: int, M: int,
                    residues: Sequence[int]) -> tuple[Fraction, Fraction, Fraction]:
    """(lower, upper, normaliser) from the closed-form estimate for pure forms.

    normaliser = theta_{r_{M+1}(k) p_{M+1}}^-1 prod_{i=s}^M theta_{r_i p_i}^-1.
    """
    p, L, spec = fam.params.p, fam.params.L, fam.spec
    lower, upper = Fraction(1), Fraction(1)
    norm = 1 / spec.at(fam.order(M + 1, k))
    for i, r in zip(range(s, M + 1), residues):
        lower *= Fraction(1, L[i - 1]) - Fraction(1, k)
        upper *= Fraction(1, L[i - 1]) + Fraction(1, k)
        norm /= spec.at(r * p[i - 1])
    return lower, upper, norm


def check_pure_form_bounds(fam: LayeredFamily, k: int, s: int, M: int,
                           k_min: Optional[int] = None) -> VerificationReport:
    """Check the l1 sandwich for every residue tuple of x_k^{M+1} over x^{s-1}.

    The l1 norm is computed from the pure-form vector through coordinate_map,
    the bounds from the closed form.  The 1/2..2 form and the l1 bound on
    x_k^{M+1} are only asserted when k reaches the minimal admissible k.
    """
    rep = VerificationReport("pureforms")
    params = fam.params
    if k_min is None:
        k_min = minimal_k(fam.spec, params)
    level = M + 1
    tuples = list(itertools.product(*(range(1, params.L[i - 1] + 1) for i in range(s, M + 1))))
    total = SparseVector({})
    for rs in tuples:
        vec = pure_form(fam, k, level, rs)
        total = total + vec
        ell1 = ell1_of(coordinate_map(fam, vec, s - 1))
        lower, upper, norm = sandwich_bounds(fam, k, s, M, rs)
        ratio = ell1 / norm
        tag = f"k={k},s={s},M={M},r={','.join(map(str, rs))}"
        rep.check(f"sandwich:{tag}", lower <= ratio <= upper,
                  {"ratio": ratio, "lower": lower, "upper": upper},
                  {"ratio": ratio, "lower": lower, "upper": upper})
        half = norm * math.prod((Fraction(1, params.L[i - 1]) for i in range(s, M + 1)),
                                start=Fraction(1))
        if k >= k_min:
            rep.check(f"cornorm1:{tag}", half / 2 <= ell1 <= 2 * half,
                      {"ell1": ell1, "scale": half})
        else:
            rep.add(f"cornorm1:{tag}", NOT_APPLICABLE, margins={"ell1": ell1, "scale": half},
                    note=f"k={k} below minimal k")
    rep.check(f"partition:k={k},s={s},M={M}", total == fam.vector(level, k),
              {"k": k, "level": level})
    bound = 2 * math.prod((1 / fam.spec.at(params.L[i] * params.p[i]) for i in range(level)),
                          start=Fraction(1))
    ell1_top = fam.vector(level, k).ell1()
    if k >= k_min:
        rep.check(f"cornorm:k={k},level={level}", ell1_top <= bound, {"ell1": ell1_top, "bound": bound})
    else:
        rep.add(f"cornorm:k={k},level={level}", NOT_APPLICABLE,
                margins={"ell1": ell1_top, "bound": bound}, note=f"k={k} below minimal k")
    return rep


def verify_lskipped(a: Sequence, start: int, L: int, I: Iterable[int]) -> VerificationReport:
    """Check sum_I a <= (1/L) sum a + sup a, and the lower bound for residue classes.

    ``a`` is a nonnegative nonincreasing sequence on the interval
    J = {start, ..., start + len(a) - 1}; I must be an L-skipped subset of J.
    """
    rep = VerificationReport("lskipped")
    a = [Fraction(v) for v in a]
    if not a:
        raise ValueError("the sequence must be nonempty")
    if any(v < 0 for v in a) or any(x < y for x, y in zip(a, a[1:])):
        raise ValueError("the sequence must be nonnegative and nonincreasing")
    if L < 1:
        raise ValueError("L must be positive")
    I = finset(I)
    J = range(start, start + len(a))
    if any(i not in J for i in I):
        raise NotSkipped("I is not contained in the interval J")
    if any(y - x < L for x, y in zip(I, I[1:])):
        raise NotSkipped(f"I is not {L}-skipped")
    total, top = sum(a, Fraction(0)), max(a)
    picked = sum((a[i - start] for i in I), Fraction(0))
    rep.check("upper", picked <= total / L + top,
              {"sum_I": picked, "bound": total / L + top},
              {"slack": total / L + top - picked})
    classes = {r: [j for j in J if residue(j, L) == r] for r in range(1, L + 1)}
    if I and any(list(I) == cls for cls in classes.values()):
        rep.check("lower", total / L - top <= picked,
                  {"sum_I": picked, "bound": total / L - top},
                  {"slack": picked - (total / L - top)})
    else:
        rep.add("lower", NOT_APPLICABLE, note="I is not a full residue class")
    return rep


def modified_lower_bound(fam_or_params, spec: Optional[ThetaSpec] = None,
                         k: int = 1) -> dict[int, Fraction]:
    """Lower estimates for the modified norm of x_k^N, one per M in 0..N-2.

    M = 0 is the full sum over r_1..r_{N-1}; larger M sum over r_{M+1}..r_{N-1}.
    For N = 1 the sum is empty and the single value is theta_1 / 2.
    """
    if isinstance(fam_or_params, LayeredFamily):
        params, spec = fam_or_params.params, fam_or_params.spec
    else:
        params = fam_or_params
    N = params.N
    t1 = spec.at(1)
    rN = residue(k, params.L[-1])
    inv_top = 1 / spec.at(rN * params.p[-1])
    out: dict[int, Fraction] = {}
    for M in range(0, max(1, N - 1)):
        free = list(range(M + 1, N))  # levels whose residues are summed
        total = Fraction(0)
        for rs in itertools.product(*(range(1, params.L[i - 1] + 1) for i in free)):
            pr = sum(params.p[i - 1] * r for i, r in zip(free, rs)) + rN * params.p[-1]
            term = spec.at(pr) * inv_top
            for i, r in zip(free, rs):
                term *= 1 / (spec.at(r * params.p[i - 1]) * params.L[i - 1])
            total += term
        out[M] = t1 / 2 * total
    return out


def th21_rhs(spec: ThetaSpec, N: int, ratio: Fraction) -> Fraction:
    """2/N + 4 theta_1^-1 * ratio."""
    return Fraction(2, N) + 4 / spec.at(1) * Fraction(ratio)


def th21_bound(spec: ThetaSpec, params: ParamSet, k: int) -> tuple[Fraction, Fraction]:
    """(bound, sup ratio): the ratio is the max of Theta_p(N)/theta_p over residue tuples.

    p runs over p(r_1, ..., r_{N-1}, r_N(k)) with 1 <= r_i <= L_i.
    """
    N = params.N
    rN = residue(k, params.L[-1])
    seen: set[int] = set()
    best = None
    for rs in itertools.product(*(range(1, L + 1) for L in params.L[:-1])):
        pr = sum(p * r for p, r in zip(params.p, rs)) + rN * params.p[-1]
        if pr in seen:
            continue
        seen.add(pr)
        ratio = big_theta(spec, N, pr)[0] / spec.at(pr)
        if best is None or ratio > best:
            best = ratio
    return th21_rhs(spec, N, best), best


def check_u_vector(fam: LayeredFamily, k: int, M: int, residues: Sequence[int],
                   k_min: Optional[int] = None) -> VerificationReport:
    """Schreier seminorm of u_k^N(r_{M+1}, ..., r_{N-1}) against (6/k) prod theta^-1."""
    rep = VerificationReport("uvector")
    params = fam.params
    N = params.N
    if k_min is None:
        k_min = minimal_k(fam.spec, params)
    rs = dict(zip(range(M + 1, N), residues))
    rs[N] = fam.residue(N, k)
    u = u_vector(fam, k, N, residues, M)
    level = p_of(params, rs) - 1
    value, witness = schreier_seminorm(u, level)
    bound = Fraction(6, k) * math.prod((1 / fam.spec.at(r * params.p[i - 1]) for i, r in rs.items()),
                                       start=Fraction(1))
    tag = f"k={k},M={M},r={','.join(map(str, residues))}"
    margins = {"seminorm": value, "bound": bound, "level": level}
    if k >= k_min:
        rep.check(tag, value <= bound, {"witness": list(witness), **margins}, margins)
    else:
        rep.add(tag, NOT_APPLICABLE, margins=margins,
                note="k below minimal k; reported, not asserted"
                + ("" if value <= bound else " (estimate exceeded)"))
    return rep


@dataclass
class L1pqInstance:
    p: int
    q: int
    P: tuple
    G: list
    a: dict
    Q: tuple
    z: dict


def verify_l1pq(inst: L1pqInstance) -> VerificationReport:
    """Check the hypotheses, then both conclusions, of the S_{p+q} seminorm estimate for weighted block sums.

    Hypotheses: each sum_{m in G_i} a_m e_m is an S_q repeated average;
    (1) supp z_k lies in [m, next element of P); (2) ||z_k||_1 <= 1;
    (3) ||z_1 + ... + z_j||_{S_p} <= 6 for every j.
    Conclusions for y_i = sum_{m in G_i cap Q} a_m z_m:
    (i) ||y_1 + ... + y_j||_{S_{p+q}} <= 6;  (ii) ||y_i||_{S_{p+q-1}} <= 6/min G_i if q >= 1.
    """
    P = list(inst.P)
    if any(x >= y for x, y in zip(P, P[1:])):
        raise ValueError("P must be increasing")
    nxt = {m: (P[i + 1] if i + 1 < len(P) else None) for i, m in enumerate(P)}
    Pset = set(P)
    for G in inst.G:
        if not set(G) <= Pset:
            raise ValueError("every G_i must be a subset of P")
        avg = SparseVector({m: inst.a[m] for m in G})
        if not is_repeated_average(avg, inst.q):
            raise ValueError("the coefficients on some G_i are not an S_q repeated average")
    if any(g1[-1] >= g2[0] for g1, g2 in zip(inst.G, inst.G[1:])):
        raise ValueError("the G_i must be successive")
    Q = list(inst.Q)
    for m in Q:
        if m not in Pset:
            raise ValueError("Q must be a subset of P")
        z = inst.z[m]
        hi = nxt[m]
        if z.support and (z.support[0] < m or (hi is not None and z.support[-1] >= hi)):
            raise HypothesisViolated(1, f"supp z at {m} leaves [{m}, {hi})")
        if hi is None and z.support:
            raise HypothesisViolated(1, f"{m} is the last element of P")
        if z.ell1() > 1:
            raise HypothesisViolated(2, f"||z at {m}||_1 = {z.ell1()}")
    running = SparseVector({})
    for m in Q:
        running = running + inst.z[m]
        if schreier_seminorm(running, inst.p)[0] > 6:
            raise HypothesisViolated(3, f"partial sum through {m}")

    rep = VerificationReport("l1pq")
    Qset = set(Q)
    ys = []
    for G in inst.G:
        y = SparseVector({})
        for m in G:
            if m in Qset:
                y = y + inst.z[m].scale(inst.a[m])
        ys.append(y)
    total = SparseVector({})
    worst = Fraction(0)
    for j, y in enumerate(ys, start=1):
        total = total + y
        value, wit = schreier_seminorm(total, inst.p + inst.q)
        worst = max(worst, value)
        if value > 6:
            rep.check(f"(i) j={j}", False, {"value": value, "witness": list(wit)})
    rep.check("(i)", worst <= 6, {"max": worst}, {"max": worst, "bound": 6})
    if inst.q >= 1:
        for i, (G, y) in enumerate(zip(inst.G, ys), start=1):
            value, wit = schreier_seminorm(y, inst.p + inst.q - 1)
            bound = Fraction(6, G[0])
            rep.check(f"(ii) i={i}", value <= bound, {"value": value, "witness": list(wit)},
                      {"value": value, "bound": bound})
    else:
        rep.add("(ii)", NOT_APPLICABLE, note="q = 0")
    return rep


def random_l1pq_instance(rng: random.Random, p: int, q: int, n_groups: int = 3,
                         budget: int = 400, tries: int = 50) -> L1pqInstance:
    """A random instance satisfying all three hypotheses.

    P has random gaps; the G_i are consecutive S_q averages over P; Q is a
    random subset of P; z_k is e_m when p = 0, else a random vector in the
    gap after m with l1 norm at most 1.  Instances violating (3) are redrawn.
    """
    for _ in range(tries):
        if q >= 3:
            # an S_3 average from 2 already spans 2046 points; keep it minimal
            start, gaps, n_groups = 2, [1] * 2100, 1
        else:
            start = rng.randint(2, 4)
            gaps = [rng.randint(1, 3) for _ in range(budget)]
        P = list(itertools.accumulate([start] + gaps))
        stream = IndexStream.from_list(P, budget=len(P))
        G, a = [], {}
        try:
            for _ in range(n_groups):
                ra = repeated_average(q, stream)
                G.append(ra.vector.support)
                a.update(ra.vector.items())
        except (InsufficientStream, ConstructionTooLarge):
            if not G:
                continue
        used = [m for g in G for m in g]
        nxt = {m: P[i + 1] for i, m in enumerate(P[:-1])}
        # a sparse Q keeps the y_i small when the averages are long
        density = 0.7 if len(used) < 200 else 40 / len(used)
        Q = tuple(m for m in used if rng.random() < density and m in nxt) or (used[0],)
        z = {}
        for m in Q:
            if p == 0:
                z[m] = SparseVector.basis(m)
                continue
            width = nxt[m] - m
            entries = {m + i: Fraction(rng.randint(1, 6)) for i in range(width) if rng.random() < 0.8}
            if not entries:
                entries = {m: Fraction(1)}
            vec = SparseVector(entries)
            vec = vec.scale(Fraction(rng.randint(1, 4), 4) / vec.ell1())
            z[m] = vec
        running = SparseVector({})
        worst = Fraction(0)
        for m in Q:
            running = running + z[m]
            worst = max(worst, schreier_seminorm(running, p)[0])
        if worst > 6:
            # scaling down keeps (1) and (2) and puts (3) on its boundary
            z = {m: v.scale(6 / worst) for m, v in z.items()}
        return L1pqInstance(p, q, tuple(P), G, a, Q, z)
    raise RuntimeError("could not draw a nonempty family of averages")


def toy_families(budget: int = DEFAULT_BUDGET):
    """Small layered families: N in {2, 3}, p_i in {1, 2}, L_i = 2, V an interval from 1, 2 or 3."""
    for N in (2, 3):
        for p in itertools.product((1, 2), repeat=N):
            for start in (1, 2, 3):
                params = ParamSet(N, p, (2,) * N)
                yield params, start


def buildable(fam: LayeredFamily, level: int, k: int) -> bool:
    """Try to build x_k^level within the family's budget; False if it does not fit."""
    try:
        fam.vector(level, k)
        return True
    except ConstructionTooLarge:
        return False
