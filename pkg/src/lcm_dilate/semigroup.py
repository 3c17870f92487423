"""Exact combinatorics of the two built-in right LCM monoid families.

Elements are plain tuples of ints interpreted by the monoid object: a word
over letters ``1..k`` for the free monoid, a vector of naturals for the free
abelian monoid.  Both families are left cancellative with trivial unit group,
so least common multiples (when they exist) are unique and the ``lcm``
operation below is well defined without any unit-orbit bookkeeping.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Sequence

from .errors import ResourceCapError, SpecMismatchError

Element = tuple[int, ...]

# Guard for enumerate_up_to / foundation-set decisions.
DEFAULT_ENUMERATION_CAP = 200_000


class Semigroup(ABC):
    """Interface for a right LCM monoid with trivial units.

    User-supplied instances must guarantee left cancellation and that
    ``lcm(p, q)`` returns the unique generator of the intersection of the
    principal right ideals pP and qP (or None when that intersection is
    empty); correctness of ``lcm`` is the instance's contract and is not
    re-derived here.
    """

    rank: int
    kind: str

    @property
    @abstractmethod
    def identity(self) -> Element: ...

    @property
    @abstractmethod
    def generators(self) -> tuple[Element, ...]: ...

    @abstractmethod
    def validate_element(self, p: Element) -> None: ...

    @abstractmethod
    def multiply(self, p: Element, q: Element) -> Element: ...

    @abstractmethod
    def lcm(self, p: Element, q: Element) -> Optional[Element]: ...

    @abstractmethod
    def left_divide(self, p: Element, r: Element) -> Optional[Element]:
        """The unique q with p*q = r, or None when r is not in pP."""

    @abstractmethod
    def length(self, p: Element) -> int:
        """Grading used for truncation (word length / max coordinate)."""

    @abstractmethod
    def as_word(self, p: Element) -> tuple[int, ...]:
        """A factorization of p into generator letters (1-based)."""

    @abstractmethod
    def enumerate_up_to(
        self, depth: int, cap: int = DEFAULT_ENUMERATION_CAP
    ) -> list[Element]: ...

    @abstractmethod
    def is_foundation_set(
        self, elements: Iterable[Element], cap: int = DEFAULT_ENUMERATION_CAP
    ) -> bool: ...

    def divides(self, p: Element, r: Element) -> bool:
        return self.left_divide(p, r) is not None

    def lcm_of(self, elements: Sequence[Element]) -> Optional[Element]:
        """Iterated lcm; the empty family has lcm e."""
        acc: Optional[Element] = self.identity
        for p in elements:
            if acc is None:
                return None
            acc = self.lcm(acc, p)
        return acc

    def gen_count(self, p: Element) -> int:
        return len(self.as_word(p))

    def to_json(self) -> dict:
        return {"kind": self.kind, "rank": self.rank}

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}({self.rank})"


def _check_rank(rank: int) -> None:
    if not isinstance(rank, int) or rank < 1:
        raise SpecMismatchError(f"rank must be a positive integer, got {rank!r}")


@dataclass(frozen=True, repr=False)
class FreeMonoid(Semigroup):
    """Words over letters 1..rank under concatenation."""

    rank: int
    kind = "free_monoid"

    def __post_init__(self):
        _check_rank(self.rank)

    @property
    def identity(self) -> Element:
        return ()

    @property
    def generators(self) -> tuple[Element, ...]:
        return tuple((i,) for i in range(1, self.rank + 1))

    def validate_element(self, p: Element) -> None:
        if not all(isinstance(x, int) and 1 <= x <= self.rank for x in p):
            raise SpecMismatchError(f"{p!r} is not a word over 1..{self.rank}")

    def multiply(self, p: Element, q: Element) -> Element:
        return tuple(p) + tuple(q)

    def lcm(self, p: Element, q: Element) -> Optional[Element]:
        # pP and qP intersect precisely when one word is a prefix of the
        # other, in which case the longer word generates the intersection.
        short, long_ = (p, q) if len(p) <= len(q) else (q, p)
        return tuple(long_) if tuple(long_[: len(short)]) == tuple(short) else None

    def left_divide(self, p: Element, r: Element) -> Optional[Element]:
        if len(r) >= len(p) and tuple(r[: len(p)]) == tuple(p):
            return tuple(r[len(p):])
        return None

    def length(self, p: Element) -> int:
        return len(p)

    def as_word(self, p: Element) -> tuple[int, ...]:
        return tuple(p)

    def count_up_to(self, depth: int) -> int:
        if self.rank == 1:
            return depth + 1
        return (self.rank ** (depth + 1) - 1) // (self.rank - 1)

    def enumerate_up_to(
        self, depth: int, cap: int = DEFAULT_ENUMERATION_CAP
    ) -> list[Element]:
        if depth < 0:
            raise SpecMismatchError("depth must be >= 0")
        total = self.count_up_to(depth)
        if total > cap:
            raise ResourceCapError(
                f"enumeration of {total} words exceeds cap {cap}"
            )
        out: list[Element] = []
        for n in range(depth + 1):
            out.extend(itertools.product(range(1, self.rank + 1), repeat=n))
        return out

    def is_foundation_set(
        self, elements: Iterable[Element], cap: int = DEFAULT_ENUMERATION_CAP
    ) -> bool:
        fs = [tuple(f) for f in elements]
        if not fs:
            raise SpecMismatchError("a foundation set must be nonempty")
        for f in fs:
            self.validate_element(f)
        max_len = max(len(f) for f in fs)
        # Every word of the maximal length in F must extend some element of
        # F.  Shorter and longer words then reduce to this case: prefixes of
        # a common word are comparable, and a longer word is comparable with
        # f iff its truncation is.
        if self.rank ** max_len > cap:
            raise ResourceCapError(
                f"foundation-set decision needs {self.rank ** max_len} words"
            )
        for w in itertools.product(range(1, self.rank + 1), repeat=max_len):
            if not any(w[: len(f)] == f for f in fs):
                return False
        return True


@dataclass(frozen=True, repr=False)
class FreeAbelian(Semigroup):
    """Vectors of naturals of fixed length under addition.

    The grading is the max coordinate, so lcm (coordinatewise max) never
    increases length; truncation bookkeeping downstream relies on this.
    """

    rank: int
    kind = "free_abelian"

    def __post_init__(self):
        _check_rank(self.rank)

    @property
    def identity(self) -> Element:
        return (0,) * self.rank

    @property
    def generators(self) -> tuple[Element, ...]:
        eye = []
        for i in range(self.rank):
            v = [0] * self.rank
            v[i] = 1
            eye.append(tuple(v))
        return tuple(eye)

    def validate_element(self, p: Element) -> None:
        if len(p) != self.rank or not all(isinstance(x, int) and x >= 0 for x in p):
            raise SpecMismatchError(
                f"{p!r} is not a vector of {self.rank} naturals"
            )

    def multiply(self, p: Element, q: Element) -> Element:
        return tuple(a + b for a, b in zip(p, q, strict=True))

    def lcm(self, p: Element, q: Element) -> Optional[Element]:
        return tuple(max(a, b) for a, b in zip(p, q, strict=True))

    def left_divide(self, p: Element, r: Element) -> Optional[Element]:
        if all(b >= a for a, b in zip(p, r, strict=True)):
            return tuple(b - a for a, b in zip(p, r, strict=True))
        return None

    def length(self, p: Element) -> int:
        return max(p)

    def as_word(self, p: Element) -> tuple[int, ...]:
        letters: list[int] = []
        for i, n in enumerate(p):
            letters.extend([i + 1] * n)
        return tuple(letters)

    def count_up_to(self, depth: int) -> int:
        return (depth + 1) ** self.rank

    def enumerate_up_to(
        self, depth: int, cap: int = DEFAULT_ENUMERATION_CAP
    ) -> list[Element]:
        if depth < 0:
            raise SpecMismatchError("depth must be >= 0")
        total = self.count_up_to(depth)
        if total > cap:
            raise ResourceCapError(
                f"enumeration of {total} vectors exceeds cap {cap}"
            )
        vs = itertools.product(range(depth + 1), repeat=self.rank)
        return sorted(vs, key=lambda v: (max(v), v))

    def is_foundation_set(
        self, elements: Iterable[Element], cap: int = DEFAULT_ENUMERATION_CAP
    ) -> bool:
        fs = list(elements)
        if not fs:
            raise SpecMismatchError("a foundation set must be nonempty")
        for f in fs:
            self.validate_element(f)
        # Directed: any pair has an upper bound, so any nonempty set works.
        return True


def semigroup_from_json(doc: dict) -> Semigroup:
    kind = doc.get("kind")
    rank = doc.get("rank")
    if kind == "free_monoid":
        return FreeMonoid(rank)
    if kind == "free_abelian":
        return FreeAbelian(rank)
    raise SpecMismatchError(f"unknown semigroup kind {kind!r}")


def element_from_json(sg: Semigroup, doc) -> Element:
    p = tuple(int(x) for x in doc)
    sg.validate_element(p)
    return p
