"""Weight sequences (theta_n) and the conditions the layered construction needs.

All quantities are exact rationals.  Asymptotic notions (limsup, "for all n")
are evaluated over an explicit horizon that is carried in every report.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from tslab.core import format_rational, parse_rational
from tslab.report import NOT_APPLICABLE, VerificationReport

KINDS = ("geometric", "phi_harmonic", "constant_phi", "table")


class InfeasibleComposition(ValueError):
    pass


@dataclass(frozen=True)
class ThetaSpec:
    """A sequence theta_1, theta_2, ... in (0, 1).

    geometric:     theta^n
    phi_harmonic:  theta^n / (n + 1)
    constant_phi:  c * theta^n
    table:         the listed values, then a geometric tail with ratio ``tail``
    """

    kind: str
    theta: Fraction = Fraction(0)
    c: Fraction = Fraction(1)
    values: tuple = ()
    tail: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown theta kind {self.kind!r}")
        if self.kind == "table":
            if not self.values:
                raise ValueError("table needs at least one value")
            for v in self.values:
                if not 0 < v < 1:
                    raise ValueError(f"table value {v} not in (0,1)")
            if not 0 < self.tail < 1:
                raise ValueError("table tail ratio must lie in (0,1)")
        else:
            if not 0 < self.theta < 1:
                raise ValueError("theta must lie in (0,1)")
            if self.kind == "constant_phi" and not 0 < self.c <= 1:
                raise ValueError("c must lie in (0,1]")

    @classmethod
    def geometric(cls, theta) -> "ThetaSpec":
        return cls("geometric", theta=parse_rational(theta))

    @classmethod
    def phi_harmonic(cls, theta) -> "ThetaSpec":
        return cls("phi_harmonic", theta=parse_rational(theta))

    @classmethod
    def constant_phi(cls, theta, c) -> "ThetaSpec":
        return cls("constant_phi", theta=parse_rational(theta), c=parse_rational(c))

    @classmethod
    def table(cls, values: Sequence, tail) -> "ThetaSpec":
        return cls("table", values=tuple(parse_rational(v) for v in values),
                   tail=parse_rational(tail))

    def at(self, n: int) -> Fraction:
        if n < 1:
            raise ValueError("theta_n is defined for n >= 1")
        return _theta_at(self, n)

    def __call__(self, n: int) -> Fraction:
        return self.at(n)

    def to_json(self) -> dict:
        if self.kind == "table":
            return {"kind": "table", "values": [format_rational(v) for v in self.values],
                    "tail": format_rational(self.tail)}
        out = {"kind": self.kind, "theta": format_rational(self.theta)}
        if self.kind == "constant_phi":
            out["c"] = format_rational(self.c)
        return out

    def label(self) -> str:
        if self.kind == "table":
            vals = ",".join(format_rational(v) for v in self.values)
            return f"table:{vals};{format_rational(self.tail)}"
        if self.kind == "constant_phi":
            return f"constant_phi:{format_rational(self.theta)},{format_rational(self.c)}"
        return f"{self.kind}:{format_rational(self.theta)}"

    @classmethod
    def from_json(cls, data) -> "ThetaSpec":
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict) or "kind" not in data:
            raise ValueError("theta spec must be an object with a 'kind'")
        kind = data["kind"]
        allowed = {"geometric": {"theta"}, "phi_harmonic": {"theta"},
                   "constant_phi": {"theta", "c"}, "table": {"values", "tail"}}
        if kind not in allowed:
            raise ValueError(f"unknown theta kind {kind!r}")
        extra = set(data) - allowed[kind] - {"kind"}
        missing = allowed[kind] - set(data)
        if extra or missing:
            raise ValueError(f"bad keys for {kind}: extra {sorted(extra)}, missing {sorted(missing)}")
        if kind == "table":
            return cls.table(data["values"], data["tail"])
        if kind == "constant_phi":
            return cls.constant_phi(data["theta"], data["c"])
        return cls(kind, theta=parse_rational(data["theta"]))

    @classmethod
    def parse(cls, text: str) -> "ThetaSpec":
        """Parse ``kind:args`` (e.g. ``phi_harmonic:1/2``, ``constant_phi:1/2,1/2``,
        ``table:1/2,1/4;1/2``) or a JSON object."""
        text = text.strip()
        if text.startswith("{"):
            return cls.from_json(text)
        kind, sep, args = text.partition(":")
        kind = kind.strip().replace("-", "_")
        if not sep:
            raise ValueError(f"theta spec {text!r} must look like KIND:ARGS")
        if kind == "table":
            vals, sep, tail = args.partition(";")
            if not sep:
                raise ValueError("table spec must look like table:v1,v2,...;tail")
            return cls.table(vals.split(","), tail)
        parts = [a for a in args.split(",") if a]
        if kind == "constant_phi":
            if len(parts) != 2:
                raise ValueError("constant_phi takes THETA,C")
            return cls.constant_phi(*parts)
        if kind in ("geometric", "phi_harmonic"):
            if len(parts) != 1:
                raise ValueError(f"{kind} takes a single THETA")
            return cls(kind, theta=parse_rational(parts[0]))
        raise ValueError(f"unknown theta kind {kind!r}")


@lru_cache(maxsize=65536)
def _theta_at(spec: ThetaSpec, n: int) -> Fraction:
    if spec.kind == "geometric":
        return spec.theta ** n
    if spec.kind == "phi_harmonic":
        return spec.theta ** n / (n + 1)
    if spec.kind == "constant_phi":
        return spec.c * spec.theta ** n
    k = len(spec.values)
    if n <= k:
        return spec.values[n - 1]
    return spec.values[-1] * spec.tail ** (n - k)


def theta_at(spec: ThetaSpec, n: int) -> Fraction:
    return spec.at(n)


@dataclass
class RegularityReport:
    nonincreasing_ok: bool
    supermultiplicative_ok: bool
    horizon: int
    first_violation: Optional[tuple[int, int]] = None

    @property
    def ok(self) -> bool:
        return self.nonincreasing_ok and self.supermultiplicative_ok

    def to_json(self) -> dict:
        return {"nonincreasing_ok": self.nonincreasing_ok,
                "supermultiplicative_ok": self.supermultiplicative_ok,
                "horizon": self.horizon,
                "first_violation": list(self.first_violation) if self.first_violation else None}


def check_regular(spec: ThetaSpec, horizon: int) -> RegularityReport:
    """Check theta nonincreasing and theta_{m+n} >= theta_m theta_n for m+n <= horizon.

    Pairs are scanned by increasing m+n; the first violation of either kind is
    reported as (m, n), where a monotonicity failure at (s-1, s) means
    theta_s > theta_{s-1}.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    mono = sup = True
    first = None
    for s in range(2, horizon + 1):
        ts = spec.at(s)
        if mono and ts > spec.at(s - 1):
            mono = False
            first = first or (s - 1, s)
        if sup:
            for m in range(1, s // 2 + 1):
                if ts < spec.at(m) * spec.at(s - m):
                    sup = False
                    first = first or (m, s - m)
                    break
    return RegularityReport(mono, sup, horizon, first)


def delta_m(spec: ThetaSpec, m: int, horizon: int) -> Fraction:
    """Window estimate of limsup_n theta_{m+n}/theta_n: max over horizon/2 <= n <= horizon."""
    if m < 1:
        raise ValueError("m must be positive")
    if horizon <= 2 * m:
        raise ValueError("horizon must exceed 2m")
    lo = (horizon + 1) // 2
    return max(spec.at(m + n) / spec.at(n) for n in range(lo, horizon + 1))


@dataclass(frozen=True)
class FForm:
    """The modulus F(R) in the progression condition.

    ``two_over_r``: 2/R.  ``one_over_c2r``: 1/(c^2 R).  ``table``: F(R) = values[R-1].
    """

    kind: str
    c: Fraction = Fraction(1)
    values: tuple = ()

    @classmethod
    def two_over_r(cls) -> "FForm":
        return cls("two_over_r")

    @classmethod
    def one_over_c2r(cls, c) -> "FForm":
        return cls("one_over_c2r", c=parse_rational(c))

    @classmethod
    def tabulated(cls, values: Sequence) -> "FForm":
        return cls("table", values=tuple(parse_rational(v) for v in values))

    @classmethod
    def parse(cls, text: str) -> "FForm":
        name, _, arg = text.partition(":")
        name = name.strip().lower().replace("-", "_")
        if name in ("two_over_r", "2/r"):
            return cls.two_over_r()
        if name in ("one_over_c2r", "1/c2r"):
            return cls.one_over_c2r(arg)
        if name == "table":
            return cls.tabulated(arg.split(","))
        raise ValueError(f"unknown F form {text!r}")

    def __call__(self, R: int) -> Fraction:
        if R < 1:
            raise ValueError("F is defined on positive integers")
        if self.kind == "two_over_r":
            return Fraction(2, R)
        if self.kind == "one_over_c2r":
            return 1 / (self.c * self.c * R)
        if R > len(self.values):
            raise ValueError(f"tabulated F has no value at R={R}")
        return self.values[R - 1]

    def label(self) -> str:
        if self.kind == "one_over_c2r":
            return f"one_over_c2r:{format_rational(self.c)}"
        if self.kind == "table":
            return "table:" + ",".join(format_rational(v) for v in self.values)
        return self.kind


def default_fform(spec: ThetaSpec) -> FForm:
    """The modulus known to work for each closed form."""
    if spec.kind == "phi_harmonic":
        return FForm.two_over_r()
    if spec.kind == "constant_phi":
        return FForm.one_over_c2r(spec.c)
    return FForm.one_over_c2r(1)


def check_ddag(spec: ThetaSpec, F: FForm, R_max: int, horizon: int) -> VerificationReport:
    """max_i rho_i <= F(R) sum_i rho_i, rho_i = theta_{s_i+t}/theta_{s_i}, over progressions.

    Every progression s_i = s + (i-1)d (d >= 1) with R <= R_max, t <= horizon/2
    and s_R + t <= horizon is checked; one case per R carries the smallest
    slack F(R)*sum - max and, on failure, the first violating (t, s, d).
    """
    if R_max < 2:
        raise ValueError("R_max must be at least 2")
    rep = VerificationReport("ddag")
    ratio = {}
    for t in range(1, horizon // 2 + 1):
        for s in range(1, horizon - t + 1):
            ratio[t, s] = spec.at(s + t) / spec.at(s)
    slack: dict[int, Optional[Fraction]] = {R: None for R in range(1, R_max + 1)}
    witness: dict[int, Optional[tuple]] = {R: None for R in range(1, R_max + 1)}
    FR = {R: F(R) for R in range(1, R_max + 1)}
    for t in range(1, horizon // 2 + 1):
        top = horizon - t
        for s in range(1, top + 1):
            for d in range(1, max(1, top - s) + 1):
                total = Fraction(0)
                biggest = Fraction(0)
                for R in range(1, R_max + 1):
                    si = s + (R - 1) * d
                    if si > top:
                        break
                    rho = ratio[t, si]
                    total += rho
                    if rho > biggest:
                        biggest = rho
                    gap = FR[R] * total - biggest
                    if slack[R] is None or gap < slack[R]:
                        slack[R] = gap
                    if gap < 0 and witness[R] is None:
                        witness[R] = {"t": t, "s": s, "d": d, "R": R}
                if R == 1 and s + d > top:
                    # progressions of length >= 2 do not fit; larger d only shrinks them
                    break
    for R in range(1, R_max + 1):
        if slack[R] is None:
            rep.add(f"R={R}", NOT_APPLICABLE, note="no progression fits the horizon")
        else:
            rep.check(f"R={R}", witness[R] is None, witness[R],
                      {"min_slack": slack[R], "horizon": horizon})
    return rep


def big_theta(spec: ThetaSpec, N: int, p: int) -> tuple[Fraction, tuple[int, ...]]:
    """max prod theta_{l_i} over compositions of p into N positive parts.

    Dynamic programming over (parts used, total); the witness is the
    lexicographically smallest maximizer.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if p < N:
        raise InfeasibleComposition(f"cannot write {p} as a sum of {N} positive parts")
    table = _big_theta_table(spec, N, p)
    return table[N][p]


@lru_cache(maxsize=256)
def _big_theta_table(spec: ThetaSpec, N: int, p: int) -> list:
    # best[j][q] = (value, witness) for compositions of q into j parts
    best: list[dict] = [{0: (Fraction(1), ())}]
    for j in range(1, N + 1):
        row = {}
        for q in range(j, p - (N - j) + 1):
            choice = None
            for first in range(1, q - (j - 1) + 1):
                rest = best[j - 1].get(q - first)
                if rest is None:
                    continue
                value = spec.at(first) * rest[0]
                if choice is None or value > choice[0]:
                    choice = (value, (first,) + rest[1])
            row[q] = choice
        best.append(row)
    return best


def compositions(p: int, N: int):
    """All compositions of p into N positive parts, lexicographically."""
    for cuts in itertools.combinations(range(1, p), N - 1):
        bounds = (0,) + cuts + (p,)
        yield tuple(b - a for a, b in zip(bounds, bounds[1:]))


def big_theta_bruteforce(spec: ThetaSpec, N: int, p: int) -> Fraction:
    if p < N:
        raise InfeasibleComposition(f"cannot write {p} as a sum of {N} positive parts")
    return max(math.prod((spec.at(l) for l in comp), start=Fraction(1))
               for comp in compositions(p, N))


def theta_ratio_sup(spec: ThetaSpec, N: int, p_max: int) -> Fraction:
    """max over N <= p <= p_max of big_theta(N, p) / theta_p."""
    return theta_ratio_table(spec, N, p_max)[0]


def theta_ratio_table(spec: ThetaSpec, N: int, p_max: int) -> tuple[Fraction, int]:
    """(max ratio, first p attaining it)."""
    if p_max < N:
        raise ValueError("p_max must be at least N")
    best, arg = None, None
    for p in range(N, p_max + 1):
        r = big_theta(spec, N, p)[0] / spec.at(p)
        if best is None or r > best:
            best, arg = r, p
    return best, arg


@dataclass(frozen=True)
class ParamSet:
    N: int
    p: tuple
    L: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(v) for v in self.p))
        object.__setattr__(self, "L", tuple(int(v) for v in self.L))
        if self.N < 1:
            raise ValueError("N must be positive")
        if len(self.p) != self.N or len(self.L) != self.N:
            raise ValueError(f"p and L must have length N={self.N}")
        if any(v < 1 for v in self.p):
            raise ValueError("every p_i must be a positive integer")
        if any(v < 2 for v in self.L):
            raise ValueError("every L_i must be at least 2")

    def to_json(self) -> dict:
        return {"N": self.N, "p": list(self.p), "L": list(self.L)}

    @classmethod
    def from_json(cls, data) -> "ParamSet":
        if isinstance(data, str):
            data = json.loads(data)
        extra = set(data) - {"N", "p", "L"}
        if extra:
            raise ValueError(f"unknown parameter keys {sorted(extra)}")
        return cls(int(data["N"]), tuple(data["p"]), tuple(data["L"]))

    def weight_product(self, spec: ThetaSpec, upto: int) -> Fraction:
        """prod_{i <= upto} theta_{L_i p_i}; the empty product is 1."""
        return math.prod((spec.at(self.L[i] * self.p[i]) for i in range(upto)),
                         start=Fraction(1))


def check_ABC(spec: ThetaSpec, params: ParamSet, F: FForm, horizon: int) -> VerificationReport:
    """Check the parameter conditions (A), (B), (C).

    (A) theta_{p_{M+1}+n}/theta_n <= theta_1/(24 N^2) prod_{i<=M} theta_{L_i p_i}
        for 0 <= M <= N-2 and p_N <= n <= p_N + horizon.
    (B) p_{M+1} > sum_{i<=M} L_i p_i for 0 < M <= N-2.
    (C) F(L_{M+1}) <= theta_1/(144 N^2) prod_{i<=M} theta_{L_i p_i} for 0 <= M <= N-2.
    Clauses with an empty range of M are reported as not-applicable.
    """
    N, p, L = params.N, params.p, params.L
    rep = VerificationReport("abc")
    t1 = spec.at(1)
    if N < 2:
        for name in "ABC":
            rep.add(name, NOT_APPLICABLE, note="no M with 0 <= M <= N-2")
        return rep
    pN = p[-1]
    for M in range(0, N - 1):
        bound = t1 / (24 * N * N) * params.weight_product(spec, M)
        worst_n, worst = None, None
        for n in range(pN, pN + horizon + 1):
            r = spec.at(p[M] + n) / spec.at(n)
            if worst is None or r > worst:
                worst_n, worst = n, r
        rep.check(f"A:M={M}", worst <= bound, {"n": worst_n, "ratio": worst, "bound": bound},
                  {"max_ratio": worst, "bound": bound, "n_range": [pN, pN + horizon]})
    if N - 2 >= 1:
        for M in range(1, N - 1):
            lhs = sum(L[i] * p[i] for i in range(M))
            rep.check(f"B:M={M}", p[M] > lhs, {"p": p[M], "sum": lhs}, {"p": p[M], "sum": lhs})
    else:
        rep.add("B", NOT_APPLICABLE, note="no M with 0 < M <= N-2")
    for M in range(0, N - 1):
        bound = t1 / (144 * N * N) * params.weight_product(spec, M)
        value = F(L[M])
        rep.check(f"C:M={M}", value <= bound, {"F": value, "bound": bound},
                  {"F": value, "bound": bound})
    return rep


@dataclass
class NotFound:
    constraint: str
    level: int
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"not_found": self.constraint, "level": self.level, "detail": self.detail}


def find_parameters(spec: ThetaSpec, N: int, F: FForm, p_cap: int = 200,
                    L_cap: int = 10 ** 6, horizon: int = 100):
    """Greedy level-by-level search for (p_i), (L_i) satisfying (A), (B), (C).

    p_{M+1} is the least value above the (B) bound for which (A) holds at every
    n in 1..horizon (so it holds whatever p_N becomes); L_{M+1} is the least
    integer >= 2 meeting (C).  Finally p_N = 1 + sum_{i<N} L_i p_i and L_N = 2.
    Returns a ParamSet or a NotFound naming the binding constraint.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    t1 = spec.at(1)
    p: list[int] = []
    L: list[int] = []
    prod = Fraction(1)
    for M in range(0, N - 1):
        a_bound = t1 / (24 * N * N) * prod
        start = sum(L[i] * p[i] for i in range(M)) + 1 if M > 0 else 1
        chosen = None
        for cand in range(start, p_cap + 1):
            if all(spec.at(cand + n) / spec.at(n) <= a_bound for n in range(1, horizon + 1)):
                chosen = cand
                break
        if chosen is None:
            return NotFound("A", M, {"p_cap": p_cap, "bound": str(a_bound)})
        p.append(chosen)
        c_bound = t1 / (144 * N * N) * prod
        L_next = _least_L(F, c_bound, L_cap)
        if L_next is None:
            return NotFound("C", M, {"L_cap": L_cap, "bound": str(c_bound)})
        L.append(L_next)
        prod *= spec.at(L_next * chosen)
    p.append(1 + sum(l * q for l, q in zip(L, p)))
    L.append(2)
    return ParamSet(N, tuple(p), tuple(L))


def _least_L(F: FForm, bound: Fraction, cap: int) -> Optional[int]:
    if F.kind in ("two_over_r", "one_over_c2r"):
        # F(R) = a/R is decreasing: solve a/R <= bound directly
        a = F(1)
        least = max(2, math.ceil(a / bound))
        return least if least <= cap else None
    for L in range(2, min(cap, len(F.values)) + 1):
        if F(L) <= bound:
            return L
    return None


def minimal_k(spec: ThetaSpec, params: ParamSet) -> int:
    """Least k with k >= 42 N^2 prod_i L_i / theta_{L_i p_i}."""
    value = Fraction(42 * params.N ** 2)
    for L, p in zip(params.L, params.p):
        value *= L / spec.at(L * p)
    return math.ceil(value)


def prop5_theta(spec: ThetaSpec, N: int, horizon: int = 200) -> Optional[Fraction]:
    """Return theta = sup theta_n^{1/n} when theta_N = theta^N, else None.

    For closed forms the answer is exact.  For tables the supremum is
    certified over 1..max(horizon, len(values)) plus the geometric tail, and
    theta must be rational (an exact N-th root of theta_N).
    """
    if spec.kind == "geometric":
        return spec.theta
    if spec.kind in ("phi_harmonic", "constant_phi"):
        # theta_n^{1/n} -> theta from below and never reaches it
        if spec.kind == "constant_phi" and spec.c == 1:
            return spec.theta
        return None
    tN = spec.at(N)
    root = _rational_root(tN, N)
    if root is None:
        return None
    last = max(horizon, len(spec.values))
    for n in range(1, last + 1):
        if spec.at(n) > root ** n:
            return None
    if spec.tail > root:
        return None
    return root


def _rational_root(q: Fraction, n: int) -> Optional[Fraction]:
    num = _int_root(q.numerator, n)
    den = _int_root(q.denominator, n)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _int_root(v: int, n: int) -> Optional[int]:
    r = round(v ** (1.0 / n)) if v < 2 ** 1000 else int(math.exp(math.log(v) / n))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** n == v:
            return cand
    lo, hi = 0, v
    while lo <= hi:
        mid = (lo + hi) // 2
        m = mid ** n
        if m == v:
            return mid
        if m < v:
            lo = mid + 1
        else:
            hi = mid - 1
    return None
