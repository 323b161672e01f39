"""Words, pair partitions, position sets and the interval bookkeeping on [1, 2k].

Positions are 1-based throughout; the 0-based convention appears only in array
code at serialization or numeric boundaries.  All objects are immutable after
construction and safe to share between threads.

Text formats (shared with the CLI):

- word:          "6,3,1,3,6,6,1,5,6,5"
- pair partition: "1-7,2-8,3-5,4-6,9-11,10-18,12-17,13-14,15-16"
- position set:  "2-8,10-11,13-17"   (singletons written bare: "12")
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import (
    DimensionError,
    InternalConsistencyError,
    InvalidPairError,
    ParseError,
)

__all__ = [
    "Interval",
    "Word",
    "PairPartition",
    "PositionSet",
    "interval_of_pair",
    "interval_set",
    "refines",
    "enumerate_refining",
    "all_pair_partitions",
    "bracket_count",
    "augmentation",
    "deficiency",
    "bracket_count_via_aug_def",
    "double_factorial",
    "parse_word",
    "parse_pairs",
    "parse_position_set",
    "format_word",
    "format_pairs",
    "format_position_set",
]


@dataclass(frozen=True, order=True)
class Interval:
    """Integer interval [lo, hi]; the singleton [n] is Interval(n, n)."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not (1 <= self.lo <= self.hi):
            raise InvalidPairError(f"bad interval bounds [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, p: int) -> bool:
        return self.lo <= p <= self.hi

    def members(self) -> range:
        return range(self.lo, self.hi + 1)

    def issubset(self, members: frozenset[int]) -> bool:
        return all(p in members for p in self.members())

    def __str__(self) -> str:
        return str(self.lo) if self.lo == self.hi else f"{self.lo}-{self.hi}"


class Word:
    """A finite sequence of positive letters of even length 2k.

    >>> Word((1, 2, 1, 2)).level_sets
    (frozenset({1, 3}), frozenset({2, 4}))
    """

    __slots__ = ("letters", "level_sets")

    def __init__(self, letters: Sequence[int]):
        letters = tuple(int(a) for a in letters)
        if len(letters) < 2 or len(letters) % 2:
            raise DimensionError(f"word length must be even and >= 2, got {len(letters)}")
        if any(a < 1 for a in letters):
            raise ParseError("letters must be positive integers")
        object.__setattr__(self, "letters", letters)
        blocks: dict[int, list[int]] = {}
        for pos, a in enumerate(letters, start=1):
            blocks.setdefault(a, []).append(pos)
        # ordered by first occurrence, the canonical block order
        object.__setattr__(
            self, "level_sets", tuple(frozenset(b) for b in blocks.values())
        )

    def __setattr__(self, *a):  # immutable
        raise AttributeError("Word is immutable")

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def k(self) -> int:
        return len(self.letters) // 2

    def canonical_relabel(self) -> Word:
        """Relabel letters by first occurrence: (7,3,7,3) -> (1,2,1,2)."""
        tr: dict[int, int] = {}
        out = []
        for a in self.letters:
            if a not in tr:
                tr[a] = len(tr) + 1
            out.append(tr[a])
        return Word(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self) -> int:
        return hash(self.letters)

    def __repr__(self) -> str:
        return f"Word({self.letters})"


class PairPartition:
    """A perfect matching of [1, 2k] into k unordered pairs.

    Canonical form: within each pair the smaller element first, pairs sorted
    by first element.  Equality, hashing and ordering use the canonical form.
    """

    __slots__ = ("pairs", "_partner", "_intervals")

    def __init__(self, pairs: Iterable[tuple[int, int] | frozenset[int]]):
        canon = []
        for p in pairs:
            a, b = sorted(p)
            if a == b:
                raise InvalidPairError(f"pair {{{a},{b}}} has equal elements")
            canon.append((a, b))
        canon.sort()
        seen = [x for p in canon for x in p]
        n = len(seen)
        if n == 0:
            raise DimensionError("pair partition must be nonempty")
        if sorted(seen) != list(range(1, n + 1)):
            raise InvalidPairError(
                f"pairs must partition [1,{n}] exactly, got positions {sorted(seen)}"
            )
        object.__setattr__(self, "pairs", tuple(canon))
        partner = {}
        for a, b in canon:
            partner[a] = b
            partner[b] = a
        object.__setattr__(self, "_partner", partner)
        object.__setattr__(self, "_intervals", None)

    def __setattr__(self, *a):
        raise AttributeError("PairPartition is immutable")

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def size(self) -> int:
        """Number of positions, 2k."""
        return 2 * len(self.pairs)

    def partner(self, p: int) -> int:
        return self._partner[p]

    @property
    def interval_image(self) -> tuple[Interval, ...]:
        """The image of the interval map over the pairs (multiset, sorted)."""
        cached = self._intervals
        if cached is None:
            cached = tuple(sorted(interval_of_pair(a, b) for a, b in self.pairs))
            object.__setattr__(self, "_intervals", cached)
        return cached

    def reversed(self) -> PairPartition:
        """The reflection induced by position reversal p -> 2k+1-p."""
        n = self.size
        return PairPartition((n + 1 - a, n + 1 - b) for a, b in self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, PairPartition) and self.pairs == other.pairs

    def __lt__(self, other: PairPartition) -> bool:
        return self.pairs < other.pairs

    def __hash__(self) -> int:
        return hash(self.pairs)

    def __repr__(self) -> str:
        return f"PairPartition({format_pairs(self)!r})"


class PositionSet:
    """A subset of [1, 2k] together with its maximal interval decomposition.

    Consecutive maximal intervals are separated by a gap of at least one
    missing position, so any interval contained in the set is contained in a
    single component.
    """

    __slots__ = ("members", "maximal_intervals")

    def __init__(self, members: Iterable[int]):
        mem = frozenset(int(p) for p in members)
        if any(p < 1 for p in mem):
            raise InvalidPairError("positions must be >= 1")
        object.__setattr__(self, "members", mem)
        runs: list[Interval] = []
        for p in sorted(mem):
            if runs and p == runs[-1].hi + 1:
                runs[-1] = Interval(runs[-1].lo, p)
            else:
                runs.append(Interval(p, p))
        object.__setattr__(self, "maximal_intervals", tuple(runs))

    def __setattr__(self, *a):
        raise AttributeError("PositionSet is immutable")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, p: int) -> bool:
        return p in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))

    def __eq__(self, other) -> bool:
        return isinstance(other, PositionSet) and self.members == other.members

    def __hash__(self) -> int:
        return hash(self.members)

    def __repr__(self) -> str:
        return f"PositionSet({format_position_set(self)!r})"


def interval_of_pair(a: int, b: int, size: int | None = None) -> Interval:
    """Map an unordered pair {a, b} of positions to the interval [min+1, max].

    >>> interval_of_pair(10, 6)
    Interval(lo=7, hi=10)
    >>> interval_of_pair(1, 2)
    Interval(lo=2, hi=2)
    """
    a, b = int(a), int(b)
    if a == b:
        raise InvalidPairError(f"pair {{{a},{b}}} has equal elements")
    if a < 1 or b < 1 or (size is not None and max(a, b) > size):
        raise InvalidPairError(f"pair {{{a},{b}}} out of range")
    return Interval(min(a, b) + 1, max(a, b))


def interval_set(partition: PairPartition) -> tuple[Interval, ...]:
    """Multiset image of the interval map over all pairs (size exactly k)."""
    return partition.interval_image


def refines(partition: PairPartition, word: Word) -> bool:
    """True iff every pair of the partition joins equal letters of the word."""
    if partition.size != len(word):
        raise DimensionError(
            f"partition on [1,{partition.size}] vs word of length {len(word)}"
        )
    letters = word.letters
    return all(letters[a - 1] == letters[b - 1] for a, b in partition.pairs)


def _pairings_of(block: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of an even-sized block, smallest element leading."""
    if not block:
        yield []
        return
    rest = list(block)
    first = rest.pop(0)
    for i, other in enumerate(rest):
        for tail in _pairings_of(rest[:i] + rest[i + 1 :]):
            yield [(first, other)] + tail


def enumerate_refining(word: Word) -> list[PairPartition]:
    """All pair partitions refining the word, in canonical lexicographic order.

    Empty (not an error) when some letter occurs an odd number of times.
    The count is the product of (|block| - 1)!! over the level-set blocks.
    """
    blocks = [sorted(b) for b in word.level_sets]
    if any(len(b) % 2 for b in blocks):
        return []
    out = [
        PairPartition(itertools.chain.from_iterable(choice))
        for choice in itertools.product(*(_pairings_of(b) for b in blocks))
    ]
    out.sort()
    return out


def all_pair_partitions(size: int) -> list[PairPartition]:
    """All (size-1)!! pair partitions of [1, size], canonical order."""
    if size < 2 or size % 2:
        raise DimensionError(f"size must be even and >= 2, got {size}")
    return [PairPartition(m) for m in _pairings_of(list(range(1, size + 1)))]


def double_factorial(n: int) -> int:
    """n!! for odd n >= -1 (used for matching counts)."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def bracket_count(s: PositionSet, partition: PairPartition) -> int:
    """Number of intervals of the partition's interval image contained in s.

    Counted with multiplicity over the multiset image.
    """
    members = s.members
    return sum(1 for iv in partition.interval_image if iv.issubset(members))


def augmentation(iv: Interval, partition: PairPartition) -> PositionSet:
    """The interval, plus its left neighbour when that neighbour is paired in.

    The element immediately left adjacent to [lo, hi] joins the set exactly
    when lo >= 2 and its partner lies inside the interval.
    """
    if iv.lo >= 2 and iv.lo - 1 <= partition.size:
        left = iv.lo - 1
        if left in partition._partner and partition.partner(left) in iv:
            return PositionSet(list(iv.members()) + [left])
    return PositionSet(iv.members())


def deficiency(iv: Interval, partition: PairPartition) -> PositionSet:
    """Elements of the interval not paired with an element of its augmentation."""
    aug = augmentation(iv, partition).members
    return PositionSet(
        p for p in iv.members() if partition.partner(p) not in aug
    )


def bracket_count_via_aug_def(s: PositionSet, partition: PairPartition) -> int:
    """Bracket count via 2[I|P] = |Aug(I)| - |Def(I)| over maximal intervals."""
    total = 0
    for iv in s.maximal_intervals:
        total += len(augmentation(iv, partition)) - len(deficiency(iv, partition))
    if total % 2:
        raise InternalConsistencyError(
            f"augmentation/deficiency total {total} is odd for {s!r}"
        )
    return total // 2


# ---------------------------------------------------------------------------
# Text formats

def parse_word(text: str) -> Word:
    """Parse "6,3,1,3,6,6,1,5,6,5" into a Word."""
    try:
        letters = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ParseError(f"bad word spec {text!r}") from exc
    if not letters:
        raise ParseError(f"empty word spec {text!r}")
    try:
        return Word(letters)
    except (DimensionError, ParseError) as exc:
        raise ParseError(f"bad word spec {text!r}: {exc}") from exc


def parse_pairs(text: str) -> PairPartition:
    """Parse "1-7,2-8,..." into a PairPartition."""
    pairs = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        parts = tok.split("-")
        if len(parts) != 2:
            raise ParseError(f"bad pair token {tok!r} in {text!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise ParseError(f"bad pair token {tok!r} in {text!r}") from exc
    if not pairs:
        raise ParseError(f"empty pair spec {text!r}")
    try:
        return PairPartition(pairs)
    except (InvalidPairError, DimensionError) as exc:
        raise ParseError(f"bad pair spec {text!r}: {exc}") from exc


def parse_position_set(text: str) -> PositionSet:
    """Parse "2-8,10-11,13-17" (singletons bare, e.g. "12") into a PositionSet."""
    members: list[int] = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        parts = tok.split("-")
        try:
            if len(parts) == 1:
                members.append(int(parts[0]))
            elif len(parts) == 2:
                lo, hi = int(parts[0]), int(parts[1])
                if lo > hi:
                    raise ParseError(f"descending interval {tok!r} in {text!r}")
                members.extend(range(lo, hi + 1))
            else:
                raise ParseError(f"bad interval token {tok!r} in {text!r}")
        except ValueError as exc:
            raise ParseError(f"bad interval token {tok!r} in {text!r}") from exc
    try:
        return PositionSet(members)
    except InvalidPairError as exc:
        raise ParseError(f"bad position set {text!r}: {exc}") from exc


def format_word(word: Word) -> str:
    return ",".join(str(a) for a in word.letters)


def format_pairs(partition: PairPartition) -> str:
    return ",".join(f"{a}-{b}" for a, b in partition.pairs)


def format_position_set(s: PositionSet) -> str:
    return ",".join(str(iv) for iv in s.maximal_intervals)
