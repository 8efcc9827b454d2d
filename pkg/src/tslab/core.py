"""Finite subsets of N, exact scalars and finitely supported vectors.

Scalars are :class:`fractions.Fraction`.  A finite set is a strictly
increasing tuple of positive integers.  Indices are 1-based throughout.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

Rational = Fraction
FinSet = tuple
Number = Union[int, Fraction, str]


class EmptyMember(ValueError):
    """A set in a sequence that must consist of nonempty sets is empty."""


class LengthMismatch(ValueError):
    pass


def parse_rational(value: Number) -> Fraction:
    """Parse ``3``, ``"3"``, ``"-1/2"`` or a Fraction into a Fraction.

    Floats are rejected because they silently carry binary rounding.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        try:
            return Fraction(text)
        except ValueError:
            raise ValueError(f"bad rational literal {value!r}") from None
    raise TypeError(f"cannot read {type(value).__name__} as an exact rational")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def finset(elements: Iterable[int] = ()) -> FinSet:
    """Normalize ``elements`` to a finite set (sorted tuple, no repeats)."""
    out = tuple(sorted(set(elements)))
    if out and (not isinstance(out[0], int) or out[0] < 1):
        raise ValueError(f"finite sets live in N = {{1, 2, ...}}, got {out[0]!r}")
    return out


def set_less(e: Sequence[int], f: Sequence[int]) -> bool:
    """``E < F`` meaning max E < min F; empty sets compare as smaller and larger."""
    if not e or not f:
        return True
    return e[-1] < f[0]


class SparseVector(Mapping[int, Fraction]):
    """An immutable element of c00: finitely many nonzero rational coordinates."""

    __slots__ = ("_entries", "_support", "_hash")

    def __init__(self, entries: Union[Mapping[int, Number], Iterable[tuple[int, Number]]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        acc: dict[int, Fraction] = {}
        for index, value in items:
            if isinstance(index, bool) or not isinstance(index, int) or index < 1:
                raise ValueError(f"vector indices must be positive integers, got {index!r}")
            acc[index] = acc.get(index, Fraction(0)) + parse_rational(value)
        self._entries = {k: acc[k] for k in sorted(acc) if acc[k] != 0}
        self._support = tuple(self._entries)
        self._hash = None

    @classmethod
    def basis(cls, k: int) -> "SparseVector":
        return cls({k: 1})

    @classmethod
    def indicator(cls, indices: Iterable[int]) -> "SparseVector":
        return cls({k: 1 for k in indices})

    def __getitem__(self, index: int) -> Fraction:
        return self._entries.get(index, Fraction(0))

    def __iter__(self) -> Iterator[int]:
        return iter(self._support)

    def __len__(self) -> int:
        return len(self._support)

    def __contains__(self, index: object) -> bool:
        return index in self._entries

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SparseVector):
            return self._entries == other._entries
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._entries.items()))
        return self._hash

    def __repr__(self) -> str:
        terms = ", ".join(f"{k}: {format_rational(v)}" for k, v in self._entries.items())
        return f"SparseVector({{{terms}}})"

    @property
    def support(self) -> FinSet:
        return self._support

    def items(self):
        return self._entries.items()

    def __add__(self, other: "SparseVector") -> "SparseVector":
        if not isinstance(other, SparseVector):
            return NotImplemented
        return SparseVector(list(self._entries.items()) + list(other._entries.items()))

    def __neg__(self) -> "SparseVector":
        return SparseVector({k: -v for k, v in self._entries.items()})

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + (-other)

    def scale(self, factor: Number) -> "SparseVector":
        c = parse_rational(factor)
        return SparseVector({k: c * v for k, v in self._entries.items()})

    __rmul__ = scale

    def abs(self) -> "SparseVector":
        return SparseVector({k: abs(v) for k, v in self._entries.items()})

    def restrict(self, indices: Iterable[int]) -> "SparseVector":
        keep = set(indices)
        return SparseVector({k: v for k, v in self._entries.items() if k in keep})

    def c0(self) -> Fraction:
        return max((abs(v) for v in self._entries.values()), default=Fraction(0))

    def ell1(self) -> Fraction:
        return sum((abs(v) for v in self._entries.values()), Fraction(0))

    def to_json(self) -> list:
        return [[k, format_rational(v)] for k, v in self._entries.items()]

    @classmethod
    def from_json(cls, data: Union[str, list]) -> "SparseVector":
        """Read the ``[[index, "num/den"], ...]`` literal; indices must increase."""
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, list):
            raise ValueError("vector literal must be a JSON array of [index, value] pairs")
        previous = 0
        pairs = []
        for item in data:
            if not isinstance(item, list) or len(item) != 2:
                raise ValueError(f"bad vector entry {item!r}")
            index, value = item
            if isinstance(index, bool) or not isinstance(index, int):
                raise ValueError(f"bad vector index {index!r}")
            if index <= previous:
                raise ValueError("vector indices must be strictly increasing positive integers")
            if isinstance(value, float):
                raise ValueError("coefficients must be integers or 'num/den' strings")
            previous = index
            pairs.append((index, parse_rational(value)))
        return cls(pairs)


def restrict(x: SparseVector, e: Iterable[int]) -> SparseVector:
    return x.restrict(e)


def seminorms(x: SparseVector) -> tuple[Fraction, Fraction]:
    """Return ``(sup norm, l1 norm)`` of ``x``."""
    return x.c0(), x.ell1()


def interval_partition_points(x: SparseVector) -> list[FinSet]:
    """The support of ``x`` as an ordered list of singletons."""
    return [(k,) for k in x.support]
