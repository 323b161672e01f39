"""Exact candidate-singularity sets for pair-partition simplex integrals.

Everything here is arbitrary-precision rational arithmetic; no floating point
enters this module.  A candidate pole of the continuation attached to a pair
partition P is a rational of the form 1 - (|S| + l) / (2 [S|P]) with l >= 0,
for a position set S with positive bracket count.  No claim is made that the
candidates are actual poles.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, SizeError
from .pairings import (
    Interval,
    PairPartition,
    PositionSet,
    Word,
    augmentation,
    bracket_count,
    deficiency,
    enumerate_refining,
    format_position_set,
)

__all__ = [
    "RationalProgression",
    "PoleSet",
    "HyperplaneFamily",
    "progression_of_set",
    "candidate_poles",
    "candidate_poles_for_word",
    "is_candidate",
    "hyperplane_candidates",
]

# Exhaustive subset scan up to this many positions; the interval-family walk
# takes over beyond (identical result, avoids the 2^(2k) blowup).
EXHAUSTIVE_LIMIT = 16


@dataclass(frozen=True, order=True)
class RationalProgression:
    """The decreasing progression {offset - step*l : l = 0, 1, 2, ...}."""

    offset: Fraction
    step: Fraction

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise DomainError(f"progression step must be positive, got {self.step}")

    def __contains__(self, x) -> bool:
        return self.index_of(x) is not None

    def index_of(self, x) -> int | None:
        """The l with offset - step*l == x, or None."""
        l = (self.offset - Fraction(x)) / self.step
        if l >= 0 and l.denominator == 1:
            return int(l)
        return None

    def is_subset_of(self, other: RationalProgression) -> bool:
        ratio = self.step / other.step
        return ratio.denominator == 1 and self.offset in other

    def as_record(self) -> dict[str, str]:
        return {"offset": str(self.offset), "step": str(self.step)}

    def __str__(self) -> str:
        return f"{{{self.offset} - {self.step}*l}}"


class PoleSet:
    """A finite union of rational progressions.

    Two views are kept.  ``contributions`` lists every distinct progression
    as contributed, with the witness position set whose bracket count
    produced it.  ``progressions`` is the canonical merged form: a
    progression whose offset lies in a kept one with an integer step ratio
    is absorbed, so no stored progression is a subset of another.  Both are
    sorted by descending offset, then ascending step.  Equality compares the
    merged form (the two views describe the same set of numbers).
    """

    __slots__ = ("progressions", "contributions", "witnesses")

    def __init__(
        self,
        progressions: Iterable[RationalProgression],
        witnesses: Mapping[RationalProgression, PositionSet] | None = None,
    ):
        witnesses = dict(witnesses or {})
        distinct = sorted(set(progressions), key=lambda pr: (-pr.offset, pr.step))
        for pr in distinct:
            if pr.offset > Fraction(1, 2):
                raise DomainError(f"candidate offset {pr.offset} exceeds 1/2")
        kept: list[RationalProgression] = []
        # finest steps first so any potential absorber is already kept
        for pr in sorted(distinct, key=lambda pr: (pr.step, -pr.offset)):
            if not any(pr.is_subset_of(a) for a in kept):
                kept.append(pr)
        kept.sort(key=lambda pr: (-pr.offset, pr.step))
        object.__setattr__(self, "progressions", tuple(kept))
        object.__setattr__(
            self,
            "contributions",
            tuple((pr, witnesses.get(pr)) for pr in distinct),
        )
        object.__setattr__(
            self, "witnesses", {pr: w for pr, w in self.contributions if w is not None}
        )

    def __setattr__(self, *a):
        raise AttributeError("PoleSet is immutable")

    def __len__(self) -> int:
        return len(self.progressions)

    def __iter__(self):
        return iter(self.progressions)

    def __eq__(self, other) -> bool:
        return isinstance(other, PoleSet) and self.progressions == other.progressions

    def __contains__(self, x) -> bool:
        return any(x in pr for pr in self.progressions)

    def locate(self, x) -> tuple[RationalProgression, int] | None:
        """The first contributed progression containing x, with its index l."""
        for pr, _ in self.contributions:
            l = pr.index_of(x)
            if l is not None:
                return pr, l
        return None

    @property
    def max_offset(self) -> Fraction | None:
        return self.progressions[0].offset if self.progressions else None

    def union(self, other: PoleSet) -> PoleSet:
        return PoleSet(
            [pr for pr, _ in self.contributions]
            + [pr for pr, _ in other.contributions],
            {**other.witnesses, **self.witnesses},
        )

    def as_records(self) -> list[dict[str, str]]:
        return [pr.as_record() for pr in self.progressions]

    def contribution_records(self) -> list[dict]:
        out = []
        for pr, w in self.contributions:
            rec = pr.as_record()
            if w is not None:
                rec["set"] = format_position_set(w)
                rec["set_size"] = len(w)
            out.append(rec)
        return out

    def __repr__(self) -> str:
        return f"PoleSet({len(self.progressions)} progressions, max={self.max_offset})"


def progression_of_set(
    partition: PairPartition, s: PositionSet
) -> RationalProgression | None:
    """The progression contributed by one position set; None if [S|P] = 0."""
    c = bracket_count(s, partition)
    if c == 0:
        return None
    return RationalProgression(
        Fraction(1) - Fraction(len(s), 2 * c), Fraction(1, 2 * c)
    )


def _interval_weights(partition: PairPartition) -> dict[tuple[int, int], int]:
    """2[I|P] = |Aug(I)| - |Def(I)| for every subinterval [a, b] of [1, 2k]."""
    n = partition.size
    out = {}
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            iv = Interval(a, b)
            out[(a, b)] = len(augmentation(iv, partition)) - len(
                deficiency(iv, partition)
            )
    return out


def _realized_exhaustive(partition: PairPartition) -> dict[tuple[int, int], int]:
    """(|S|, 2[S|P]) -> witness bitmask, scanning all subsets."""
    n = partition.size
    ivmasks = []
    for iv in partition.interval_image:
        m = 0
        for p in iv.members():
            m |= 1 << (p - 1)
        ivmasks.append(m)
    realized: dict[tuple[int, int], int] = {}
    for mask in range(1, 1 << n):
        c = sum(1 for m in ivmasks if mask & m == m)
        if c == 0:
            continue
        key = (mask.bit_count(), 2 * c)
        if key not in realized:
            realized[key] = mask
    return realized


def _realized_by_intervals(partition: PairPartition) -> dict[tuple[int, int], int]:
    """Same realized pairs, walking families of pairwise nonadjacent intervals.

    Nonadjacent interval families are in bijection with subsets via the
    maximal interval decomposition, so the realized (|S|, 2[S|P]) pairs agree
    with the exhaustive scan while the work stays polynomial in 2k.
    """
    n = partition.size
    w = _interval_weights(partition)
    # reach[p]: (size, weight) -> witness mask, over families inside [p, n]
    reach: list[dict[tuple[int, int], int]] = [dict() for _ in range(n + 3)]
    empty_mask = 0
    for p in range(n, 0, -1):
        here = dict(reach[p + 1])
        for b in range(p, n + 1):
            ivsize = b - p + 1
            ivweight = w[(p, b)]
            ivmask = ((1 << ivsize) - 1) << (p - 1)
            tail = reach[b + 2] if b + 2 <= n else {}
            for (s2, c2), m2 in list(tail.items()) + [((0, 0), empty_mask)]:
                key = (ivsize + s2, ivweight + c2)
                if key not in here:
                    here[key] = ivmask | m2
        reach[p] = here
    return {k: m for k, m in reach[1].items() if k[1] > 0 and k[0] > 0}


def _mask_to_set(mask: int) -> PositionSet:
    return PositionSet(p + 1 for p in range(mask.bit_length()) if mask >> p & 1)


def candidate_poles(partition: PairPartition) -> PoleSet:
    """Union of progressions 1 - (|S|+l)/(2[S|P]) over sets with [S|P] > 0."""
    if partition.size <= EXHAUSTIVE_LIMIT:
        realized = _realized_exhaustive(partition)
    else:
        realized = _realized_by_intervals(partition)
    progressions = []
    witnesses = {}
    for (size, c2), mask in sorted(realized.items()):
        pr = RationalProgression(Fraction(1) - Fraction(size, c2), Fraction(1, c2))
        progressions.append(pr)
        witnesses.setdefault(pr, _mask_to_set(mask))
    return PoleSet(progressions, witnesses)


def candidate_poles_for_word(word: Word) -> PoleSet:
    """Union of candidate_poles over all pair partitions refining the word."""
    out = PoleSet([])
    for p in enumerate_refining(word):
        out = out.union(candidate_poles(p))
    return out


def is_candidate(
    partition: PairPartition, h0, pole_set: PoleSet | None = None
) -> tuple[bool, dict | None]:
    """Exact membership query, with a witness (S, l) when the answer is yes."""
    h0 = Fraction(h0)
    ps = pole_set if pole_set is not None else candidate_poles(partition)
    hit = ps.locate(h0)
    if hit is None:
        return False, None
    pr, l = hit
    witness_set = ps.witnesses.get(pr)
    return True, {
        "progression": pr,
        "l": l,
        "set": witness_set,
        "bracket_count": None
        if witness_set is None
        else bracket_count(witness_set, partition),
    }


class HyperplaneFamily:
    """Candidate pole hyperplanes of the general simplex integral.

    For each nonempty index set S of [1, n], exponents supported on subsets
    of S trigger the affine condition |S| + sum of those exponents in the
    nonpositive integers.  Sets with no supported subset are vacuous for
    nonempty S and are dropped.
    """

    __slots__ = ("n", "support", "entries")

    def __init__(self, n: int, support: Sequence[frozenset[int]]):
        entries: dict[frozenset[int], tuple[frozenset[int], ...]] = {}
        full = range(1, n + 1)
        for mask in range(1, 1 << n):
            s = frozenset(p for p in full if mask >> (p - 1) & 1)
            triggers = tuple(t for t in support if t <= s)
            if triggers:
                entries[s] = triggers
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "support", tuple(support))
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, *a):
        raise AttributeError("HyperplaneFamily is immutable")

    def __len__(self) -> int:
        return len(self.entries)

    def condition(self, s: frozenset[int]) -> tuple[int, int] | None:
        """(|S|, number of supported subsets of S), or None when vacuous."""
        triggers = self.entries.get(s)
        if triggers is None:
            return None
        return len(s), len(triggers)

    def specialize_diagonal(self) -> PoleSet:
        """Set every supported exponent to 2H - 2 and solve for H.

        |S| + c*(2H - 2) in the nonpositive integers gives the progression
        with offset 1 - |S|/(2c) and step 1/(2c).
        """
        progressions = []
        witnesses = {}
        for s, triggers in sorted(
            self.entries.items(), key=lambda kv: sorted(kv[0])
        ):
            c = len(triggers)
            pr = RationalProgression(
                Fraction(1) - Fraction(len(s), 2 * c), Fraction(1, 2 * c)
            )
            progressions.append(pr)
            witnesses.setdefault(pr, PositionSet(s))
        return PoleSet(progressions, witnesses)


def hyperplane_candidates(
    n: int, support: Iterable[frozenset[int] | Interval]
) -> HyperplaneFamily:
    """Build the hyperplane family for exponents supported on given subsets."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    if n > 20:
        raise SizeError(f"hyperplane enumeration over 2^{n} subsets refused")
    norm: list[frozenset[int]] = []
    for t in support:
        members = frozenset(t.members()) if isinstance(t, Interval) else frozenset(t)
        if not members:
            raise DomainError("support subsets must be nonempty")
        if not all(1 <= p <= n for p in members):
            raise DomainError(f"support subset {sorted(members)} not within [1,{n}]")
        norm.append(members)
    return HyperplaneFamily(n, norm)
