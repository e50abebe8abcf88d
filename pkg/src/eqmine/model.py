"""Candidate pairings and the specialization order between them.

A candidate is a set of (left column, right column) index pairs.  Because
reordering the pairs of a candidate does not change the joint distribution
being compared, candidates are stored in one canonical form: sorted by left
index.  One candidate specializes another when its pairs are a strict subset
of the other's pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence


class PairSetError(ValueError):
    """Raised when raw pairs cannot form a valid candidate."""


class EmptyPairSetError(PairSetError):
    pass


class DuplicateLeftError(PairSetError):
    pass


class DuplicateRightError(PairSetError):
    pass


class ArityOutOfRangeError(PairSetError):
    pass


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class ColumnRef:
    side: Side
    column_index: int
    column_name: str


@dataclass(frozen=True, order=True)
class PairSet:
    """Canonical candidate: pairs sorted by strictly increasing left index.

    Build instances with :func:`canonicalize`; the constructor only checks
    that the tuple it receives is already canonical.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise EmptyPairSetError("a candidate needs at least one pair")
        lefts = [a for a, _ in self.pairs]
        if any(x >= y for x, y in zip(lefts, lefts[1:])):
            raise PairSetError(f"pairs are not in canonical order: {self.pairs}")
        rights = [b for _, b in self.pairs]
        if len(set(rights)) != len(rights):
            raise DuplicateRightError(f"right column repeated in {self.pairs}")

    @property
    def arity(self) -> int:
        return len(self.pairs)

    @property
    def lefts(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.pairs)

    @property
    def rights(self) -> tuple[int, ...]:
        return tuple(b for _, b in self.pairs)

    def has_identity_pair(self) -> bool:
        return any(a == b for a, b in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def __repr__(self) -> str:
        inner = ", ".join(f"({a},{b})" for a, b in self.pairs)
        return f"PairSet[{inner}]"


@dataclass(frozen=True)
class SpecializationEdge:
    child: PairSet
    parent: PairSet

    def __post_init__(self) -> None:
        if not specializes(self.child, self.parent):
            raise PairSetError(f"{self.child} does not specialize {self.parent}")


def canonicalize(raw_pairs: Iterable[Sequence[int]]) -> PairSet:
    """Return the canonical candidate for ``raw_pairs`` in any order.

    >>> canonicalize([(1, 3), (0, 2)])
    PairSet[(0,2), (1,3)]
    """
    pairs = [(int(a), int(b)) for a, b in raw_pairs]
    if not pairs:
        raise EmptyPairSetError("a candidate needs at least one pair")
    lefts = [a for a, _ in pairs]
    if len(set(lefts)) != len(lefts):
        raise DuplicateLeftError(f"left column repeated in {pairs}")
    rights = [b for _, b in pairs]
    if len(set(rights)) != len(rights):
        raise DuplicateRightError(f"right column repeated in {pairs}")
    if any(a < 0 or b < 0 for a, b in pairs):
        raise PairSetError(f"negative column index in {pairs}")
    return PairSet(tuple(sorted(pairs)))


def specializes(p1: PairSet, p2: PairSet) -> bool:
    """True iff the pairs of ``p1`` are a strict subset of the pairs of ``p2``."""
    if p1.arity >= p2.arity:
        return False
    return set(p1.pairs) < set(p2.pairs)


def subsets_of_arity(p: PairSet, k: int) -> list[PairSet]:
    """All projections of ``p`` onto ``k`` of its pairs, in lexicographic order."""
    if not 1 <= k < p.arity:
        raise ArityOutOfRangeError(f"k={k} outside [1, {p.arity - 1}]")
    # pairs are sorted, so combinations come out canonical and lexicographic
    return [PairSet(c) for c in itertools.combinations(p.pairs, k)]


def proper_subsets(p: PairSet) -> Iterator[PairSet]:
    """Every strict, non-empty specialization of ``p``, by increasing arity."""
    for k in range(1, p.arity):
        yield from (PairSet(c) for c in itertools.combinations(p.pairs, k))


def is_valid(p: PairSet, same_relation: bool, include_identity: bool) -> bool:
    """Whether ``p`` is admissible given how the two sides relate."""
    return include_identity or not same_relation or not p.has_identity_pair()


def union(p: PairSet, extra: tuple[int, int]) -> PairSet:
    return canonicalize(p.pairs + (extra,))
