"""Ground values (atoms, tuples, finite sets) and multisets of them.

All values are immutable, hashable, and totally ordered by a canonical
key: atoms by name, tuples lexicographically, sets by their sorted
element sequence, with the kind as first tie-breaker.  This single order
is what makes enumeration, marking iteration, and printing deterministic
everywhere in the kernel.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class Value:
    """Base class of ground values."""

    __slots__ = ()

    def key(self) -> tuple:
        raise NotImplementedError

    def __lt__(self, other: "Value") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Value") -> bool:
        return self.key() <= other.key()


class Atom(Value):
    """An opaque named element, e.g. ``t1`` or ``Alice``."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def key(self) -> tuple:
        return (0, self.name)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Atom) and other.name == self.name

    def __hash__(self) -> int:
        return hash((Atom, self.name))

    def __repr__(self) -> str:
        return f"Atom({self.name!r})"


class TupleValue(Value):
    """An ordered, fixed-arity grouping of values."""

    __slots__ = ("items",)

    def __init__(self, items: Iterable[Value]):
        self.items = tuple(items)

    def key(self) -> tuple:
        return (1, tuple(v.key() for v in self.items))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TupleValue) and other.items == self.items

    def __hash__(self) -> int:
        return hash((TupleValue, self.items))

    def __repr__(self) -> str:
        return f"TupleValue({list(self.items)!r})"


class SetValue(Value):
    """An unordered, duplicate-free collection of values.

    Elements are stored sorted by canonical key, so iteration order is
    deterministic and equality is structural.
    """

    __slots__ = ("elements",)

    def __init__(self, elements: Iterable[Value] = ()):
        seen = {}
        for v in elements:
            seen[v] = None
        self.elements = tuple(sorted(seen, key=lambda v: v.key()))

    def key(self) -> tuple:
        return (2, tuple(v.key() for v in self.elements))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SetValue) and other.elements == self.elements

    def __hash__(self) -> int:
        return hash((SetValue, self.elements))

    def __contains__(self, v: Value) -> bool:
        return v in set(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Value]:
        return iter(self.elements)

    def issubset(self, other: "SetValue") -> bool:
        return set(self.elements) <= set(other.elements)

    def __repr__(self) -> str:
        return f"SetValue({list(self.elements)!r})"


def render_value(v: Value) -> str:
    if isinstance(v, Atom):
        return v.name
    if isinstance(v, TupleValue):
        return "(" + ", ".join(render_value(x) for x in v.items) + ")"
    if isinstance(v, SetValue):
        return "{" + ", ".join(render_value(x) for x in v.elements) + "}"
    raise TypeError(f"not a value: {v!r}")


class Multiset:
    """An immutable multiset of values with canonical iteration order."""

    __slots__ = ("_pairs",)

    def __init__(self, values: Iterable[Value] = ()):
        counts: dict[Value, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        self._pairs = tuple(sorted(counts.items(), key=lambda kv: kv[0].key()))

    @classmethod
    def _from_pairs(cls, pairs: Iterable[tuple[Value, int]]) -> "Multiset":
        m = cls.__new__(cls)
        m._pairs = tuple(sorted(
            ((v, n) for v, n in pairs if n > 0), key=lambda kv: kv[0].key()))
        return m

    def pairs(self) -> tuple[tuple[Value, int], ...]:
        return self._pairs

    def count(self, v: Value) -> int:
        for w, n in self._pairs:
            if w == v:
                return n
        return 0

    def total(self) -> int:
        return sum(n for _, n in self._pairs)

    def distinct(self) -> tuple[Value, ...]:
        return tuple(v for v, _ in self._pairs)

    def __iter__(self) -> Iterator[Value]:
        for v, n in self._pairs:
            for _ in range(n):
                yield v

    def __len__(self) -> int:
        return self.total()

    def __bool__(self) -> bool:
        return bool(self._pairs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Multiset) and other._pairs == self._pairs

    def __hash__(self) -> int:
        return hash(self._pairs)

    def __add__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._pairs)
        for v, n in other._pairs:
            counts[v] = counts.get(v, 0) + n
        return Multiset._from_pairs(counts.items())

    def __sub__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._pairs)
        for v, n in other._pairs:
            have = counts.get(v, 0)
            if have < n:
                raise ValueError(f"cannot remove {n} of {render_value(v)}, have {have}")
            counts[v] = have - n
        return Multiset._from_pairs(counts.items())

    def __le__(self, other: "Multiset") -> bool:
        """Multiset containment."""
        return all(other.count(v) >= n for v, n in self._pairs)

    def __repr__(self) -> str:
        return f"Multiset([{', '.join(render_value(v) for v in self)}])"
