"""Candidate pole sets: exact progressions, merging, hyperplane families."""
from __future__ import annotations

from fractions import Fraction as F

import pytest

from sigpole.errors import DomainError
from sigpole.pairings import (
    PairPartition,
    PositionSet,
    Word,
    all_pair_partitions,
    parse_pairs,
    parse_position_set,
)
from sigpole.poles import (
    EXHAUSTIVE_LIMIT,
    PoleSet,
    RationalProgression,
    _realized_by_intervals,
    _realized_exhaustive,
    candidate_poles,
    candidate_poles_for_word,
    hyperplane_candidates,
    is_candidate,
    progression_of_set,
)

DIAGRAM_PARTITION = parse_pairs("1-7,2-8,3-5,4-6,9-11,10-18,12-17,13-14,15-16")

# (set spec, offset, step) for the five worked diagrams
DIAGRAM_PROGRESSIONS = [
    ("2-8,10-11,13-17", F(1, 8), F(1, 16)),
    ("3-4,6-11,13-14,17-18", F(-2), F(1, 4)),
    ("1-3,5-6,8-9,12,14,16,18", F(-5, 6), F(1, 6)),
    ("4-6,14,16", F(3, 8), F(1, 8)),
    ("2-7,10-11,13-17", F(1, 14), F(1, 14)),
]


def adjacent_partition(k: int) -> PairPartition:
    return PairPartition([(2 * l - 1, 2 * l) for l in range(1, k + 1)])


def test_progression_membership():
    pr = RationalProgression(F(1, 2), F(1, 2))
    assert F(1, 2) in pr and F(0) in pr and F(-3) in pr
    assert F(1, 4) not in pr and F(3, 4) not in pr
    assert pr.index_of(F(-1)) == 3
    with pytest.raises(DomainError):
        RationalProgression(F(0), F(0))


def test_progression_subset_relation():
    fine = RationalProgression(F(1, 8), F(1, 16))
    coarse = RationalProgression(F(-2), F(1, 4))
    assert coarse.is_subset_of(fine)
    assert not fine.is_subset_of(coarse)
    incomm = RationalProgression(F(1, 14), F(1, 14))
    assert not incomm.is_subset_of(fine)
    assert not fine.is_subset_of(incomm)


@pytest.mark.parametrize("spec,offset,step", DIAGRAM_PROGRESSIONS)
def test_diagram_contributed_progressions(spec, offset, step):
    pr = progression_of_set(DIAGRAM_PARTITION, parse_position_set(spec))
    assert pr == RationalProgression(offset, step)


def test_progression_of_set_zero_bracket():
    assert progression_of_set(DIAGRAM_PARTITION, PositionSet([1])) is None


def test_k1_candidate_poles():
    ps = candidate_poles(adjacent_partition(1))
    # contributions: S={2} and S={1,2}
    contributed = {pr for pr, _ in ps.contributions}
    assert contributed == {
        RationalProgression(F(1, 2), F(1, 2)),
        RationalProgression(F(0), F(1, 2)),
    }
    # {0 - l/2} is absorbed into {1/2 - l/2} in the merged view
    assert ps.progressions == (RationalProgression(F(1, 2), F(1, 2)),)
    # the union is {1/2, 0, -1/2, -1, ...}
    for x in (F(1, 2), F(0), F(-1, 2), F(-1), F(-7, 2)):
        assert x in ps
    for x in (F(3, 4), F(1, 4), F(-1, 4)):
        assert x not in ps


def test_witnesses_recorded():
    ps = candidate_poles(adjacent_partition(1))
    w = ps.witnesses[RationalProgression(F(1, 2), F(1, 2))]
    assert w == PositionSet([2])


def test_is_candidate_k1():
    p = adjacent_partition(1)
    ok, witness = is_candidate(p, F(1, 2))
    assert ok
    assert witness["l"] == 0
    assert witness["set"] == PositionSet([2])
    assert witness["bracket_count"] == 1
    ok, witness = is_candidate(p, F(3, 4))
    assert not ok and witness is None


def test_singleton_interval_attains_half():
    # every adjacent pair contributes the right-endpoint singleton at 1/2
    for k in (1, 2, 3):
        ps = candidate_poles(adjacent_partition(k))
        assert ps.max_offset == F(1, 2)
        ok, witness = is_candidate(adjacent_partition(k), F(1, 2), ps)
        assert ok and witness["l"] == 0


def test_max_offset_bound_exhaustive():
    for p in all_pair_partitions(6):
        assert candidate_poles(p).max_offset <= F(1, 2)


def test_diagram_poleset_contains_all_contributions():
    ps = candidate_poles(DIAGRAM_PARTITION)
    for spec, offset, step in DIAGRAM_PROGRESSIONS:
        pr = RationalProgression(offset, step)
        assert pr in {q for q, _ in ps.contributions}
        # spot-check membership of a few members of each progression
        for l in (0, 1, 5):
            assert offset - step * l in ps
    assert ps.progressions == tuple(sorted(
        ps.progressions, key=lambda pr: (-pr.offset, pr.step)
    ))
    # canonical view keeps no nested progression
    for a in ps.progressions:
        for b in ps.progressions:
            assert a is b or not a.is_subset_of(b)


def test_interval_walk_matches_exhaustive():
    for p in all_pair_partitions(6) + [adjacent_partition(4)]:
        assert _realized_by_intervals(p).keys() == _realized_exhaustive(p).keys()


def test_large_partition_uses_interval_walk():
    assert DIAGRAM_PARTITION.size > EXHAUSTIVE_LIMIT
    ps = candidate_poles(DIAGRAM_PARTITION)
    assert len(ps.contributions) > 5


def test_candidate_poles_for_word():
    # unique refining partition
    w = Word([1, 2, 1, 2])
    assert candidate_poles_for_word(w) == candidate_poles(
        PairPartition([(1, 3), (2, 4)])
    )
    # no refining partitions at all
    assert len(candidate_poles_for_word(Word([1, 2, 2, 3])).contributions) == 0
    # k=1 repeated letter
    ps = candidate_poles_for_word(Word([1, 1]))
    assert F(1, 2) in ps and F(0) in ps and F(-5, 2) in ps


def test_hyperplane_family_single_support():
    fam = hyperplane_candidates(2, [frozenset({2})])
    # S={2} triggers 1 + (2H-2) nonpositive; S={1,2} triggers 2 + (2H-2)
    assert fam.condition(frozenset({2})) == (1, 1)
    assert fam.condition(frozenset({1, 2})) == (2, 1)
    assert fam.condition(frozenset({1})) is None
    ps = fam.specialize_diagonal()
    for x in (F(1, 2), F(0), F(-1, 2)):
        assert x in ps
    assert F(1, 4) not in ps


def test_hyperplane_empty_support():
    fam = hyperplane_candidates(3, [])
    assert len(fam) == 0
    assert fam.specialize_diagonal() == PoleSet([])


@pytest.mark.parametrize("size", [2, 4, 6])
def test_specialization_consistency(size):
    for p in all_pair_partitions(size):
        support = [frozenset(iv.members()) for iv in p.interval_image]
        fam = hyperplane_candidates(size, support)
        assert fam.specialize_diagonal() == candidate_poles(p)


def gamma_ratio_poles(k: int, terms: int = 40) -> list[F]:
    """Exact poles of gamma(2H-1)^k / gamma(2kH+1) in H (order bookkeeping).

    The numerator contributes order k at H=(1-m)/2 for integer m >= 0; the
    reciprocal denominator has a simple zero there when k(1-m)+1 <= 0.
    """
    out = []
    for m in range(terms):
        h = F(1 - m, 2)
        order = k - (1 if k * (1 - m) + 1 <= 0 else 0)
        if order > 0:
            out.append(h)
    return out


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gamma_closed_form_pole_containment(k):
    p = adjacent_partition(k)
    ps = candidate_poles(p)
    for h in gamma_ratio_poles(k):
        assert h in ps, f"gamma ratio pole {h} missing for k={k}"


def test_poleset_merge_determinism_and_union():
    a = candidate_poles(adjacent_partition(2))
    b = candidate_poles(PairPartition([(1, 3), (2, 4)]))
    u = a.union(b)
    assert u == b.union(a)
    for pr in list(a.progressions) + list(b.progressions):
        assert any(pr.offset - pr.step * l in u for l in (0,)), pr


def test_no_floats_in_records():
    ps = candidate_poles(adjacent_partition(2))
    for rec in ps.as_records() + ps.contribution_records():
        assert isinstance(rec["offset"], str) and isinstance(rec["step"], str)
