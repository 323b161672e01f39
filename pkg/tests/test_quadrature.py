"""Quadrature routes and the deterministic moment oracle."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from sigpole.errors import DomainError, NumericError, SizeError
from sigpole.pairings import PairPartition, Word, all_pair_partitions
from sigpole.quadrature import (
    DEFAULT_SEED,
    EvalResult,
    FbmCovariance,
    _increasing_pair_sum,
    dirichlet_closed_form,
    l_adaptive,
    l_closed_form,
    l_direct_mc,
    l_pullback_mc,
    wick_grid_oracle,
    worker_seeds,
)

PAIR = PairPartition([(1, 2)])
ADJ2 = PairPartition([(1, 2), (3, 4)])
CROSS2 = PairPartition([(1, 3), (2, 4)])
NEST2 = PairPartition([(1, 4), (2, 3)])


def pair_exact(h: float) -> float:
    """Independent symbolic oracle for the single-pair integral."""
    import sympy

    s1, s2, hh = sympy.symbols("s1 s2 h", positive=True)
    inner = sympy.integrate((s2 - s1) ** (2 * hh - 2), (s1, 0, s2))
    outer = sympy.integrate(inner, (s2, 0, 1))
    return float(sympy.simplify(outer).subs(hh, sympy.Rational(h).limit_denominator()))


def test_symbolic_oracle_matches_closed_form():
    for h in (0.6, 0.75, 0.9):
        assert pair_exact(h) == pytest.approx(1 / (2 * h * (2 * h - 1)), rel=1e-12)


@pytest.mark.parametrize("h", [0.6, 0.75, 0.9])
def test_adaptive_pair_against_oracle(h):
    r = l_adaptive(PAIR, h, tol=1e-9)
    assert r.method == "adaptive"
    assert abs(r.value - pair_exact(h)) <= 1e-8 * pair_exact(h)


def test_adaptive_unit_integrand_values():
    assert l_adaptive(PAIR, 1.0, tol=1e-10).value == pytest.approx(0.5, abs=1e-10)
    assert l_adaptive(CROSS2, 1.0, tol=1e-9).value == pytest.approx(1 / 24, abs=1e-9)


def test_adaptive_matches_beta_ratio_k2():
    for h in (0.75, 0.8, 0.9):
        exact = float(gamma_fn(2 * h - 1) ** 2 / gamma_fn(4 * h + 1))
        r = l_adaptive(ADJ2, h, tol=1e-6)
        assert abs(r.value - exact) <= 1e-6 * exact


def test_adaptive_guards():
    with pytest.raises(DomainError):
        l_adaptive(PAIR, 0.5)
    with pytest.raises(SizeError):
        l_adaptive(PairPartition([(1, 2), (3, 4), (5, 6)]), 0.8)
    with pytest.raises(NumericError) as err:
        l_adaptive(ADJ2, 0.75, tol=1e-12, max_level=2)
    assert "best" in err.value.diagnostics


def test_dirichlet_closed_form_values():
    assert dirichlet_closed_form([0.0, 0.0]) == pytest.approx(0.5)
    assert dirichlet_closed_form([1.5]) == pytest.approx(1 / 2.5)
    with pytest.raises(DomainError):
        dirichlet_closed_form([-1.0, 0.0])


def test_closed_form_adjacent():
    for k in (1, 2, 3):
        p = PairPartition([(2 * l - 1, 2 * l) for l in range(1, k + 1)])
        for h in (0.75, 0.9):
            r = l_closed_form(p, h)
            exact = float(gamma_fn(2 * h - 1) ** k / gamma_fn(2 * k * h + 1))
            assert r.value == pytest.approx(exact, rel=1e-12)
            assert r.method == "closed-form"


def test_disjoint_interval_image_forces_adjacent_pairs():
    # a non-adjacent pair's interval always meets the interval of the pair
    # of its inner neighbour, so disjoint images occur exactly for the
    # all-adjacent matching; the closed form declines everything else
    for size in (4, 6):
        for p in all_pair_partitions(size):
            members = [set(iv.members()) for iv in p.interval_image]
            disjoint = all(
                not (a & b) for a, b in itertools.combinations(members, 2)
            )
            adjacent = all(b - a == 1 for a, b in p.pairs)
            assert disjoint == adjacent
            if not disjoint:
                with pytest.raises(DomainError):
                    l_closed_form(p, 0.8)


def test_direct_mc_unit_case_is_exact():
    r = l_direct_mc(ADJ2, 1.0, samples=10_000, seed=1)
    assert r.value == pytest.approx(1 / 24, rel=1e-12)
    assert r.stderr == pytest.approx(0.0, abs=1e-15)


def test_direct_mc_pair_within_three_sigma():
    r = l_direct_mc(PAIR, 0.75, samples=200_000, seed=42)
    assert abs(r.value - 4 / 3) <= 3 * r.stderr
    assert "robust_stderr" in r.extra


def test_direct_mc_reproducible_and_worker_rule():
    a = l_direct_mc(PAIR, 0.8, samples=50_000, seed=7)
    b = l_direct_mc(PAIR, 0.8, samples=50_000, seed=7)
    assert a.value == b.value and a.stderr == b.stderr
    c = l_direct_mc(PAIR, 0.8, samples=50_000, seed=7, workers=4)
    d = l_direct_mc(PAIR, 0.8, samples=50_000, seed=7, workers=4)
    assert c.value == d.value
    assert c.value != a.value  # different documented stream split
    seqs = worker_seeds(7, 3)
    assert [s.spawn_key for s in seqs] == [(0,), (1,), (2,)]


def test_direct_mc_domain_error():
    with pytest.raises(DomainError):
        l_direct_mc(PAIR, 0.5, samples=100)


def test_pullback_agrees_with_direct_k1():
    d = l_direct_mc(PAIR, 0.75, samples=300_000, seed=99)
    p = l_pullback_mc(PAIR, 0.75, samples=300_000, seed=99)
    assert abs(d.value - p.value) <= 3 * math.hypot(d.stderr, p.stderr)


def test_pullback_volume_sanity():
    r2 = l_pullback_mc(PAIR, 1.0, samples=150_000, seed=7)
    assert abs(r2.value - 0.5) <= 3 * r2.stderr
    r4 = l_pullback_mc(ADJ2, 1.0, samples=400_000, seed=4)
    assert abs(r4.value - 1 / 24) <= 3 * r4.stderr


def test_pullback_k2_against_closed_form():
    exact = float(gamma_fn(0.8) ** 2 / gamma_fn(4.6))
    r = l_pullback_mc(ADJ2, 0.9, samples=1_000_000, seed=13)
    assert abs(r.value - exact) <= 3 * r.stderr


def test_pullback_guards():
    with pytest.raises(SizeError):
        l_pullback_mc(PairPartition([(i, i + 4) for i in (1, 2, 3, 4)]), 0.8)
    with pytest.raises(NumericError):
        # bounding construction beyond the float probing limit
        l_pullback_mc(PairPartition([(1, 2), (3, 4), (5, 6)]), 0.8, samples=100)


def test_estimator_consistency_grid():
    # every route that applies agrees pairwise, k <= 2
    for p, h in itertools.product((PAIR, ADJ2, CROSS2), (0.75, 0.9, 1.0)):
        results: list[EvalResult] = [l_adaptive(p, h, tol=1e-7)]
        try:
            results.append(l_closed_form(p, h))
        except DomainError:
            pass
        results.append(l_direct_mc(p, h, samples=150_000, seed=11))
        for a, b in itertools.combinations(results, 2):
            sigma = math.hypot(a.stderr or 0.0, b.stderr or 0.0)
            tol = 3 * sigma + (a.tol or 0) + (b.tol or 0) + 1e-12
            assert abs(a.value - b.value) <= max(tol, 1e-6 * abs(a.value)), (
                p,
                h,
                a.method,
                b.method,
            )


def test_reflection_symmetry_numeric():
    for p in (CROSS2, NEST2):
        a = l_adaptive(p, 0.8, tol=1e-7)
        b = l_adaptive(p.reversed(), 0.8, tol=1e-7)
        assert a.value == pytest.approx(b.value, rel=1e-6)
    # 2k = 6 via matching Monte Carlo budgets
    p6 = PairPartition([(1, 5), (2, 3), (4, 6)])
    a = l_direct_mc(p6, 0.85, samples=200_000, seed=21)
    b = l_direct_mc(p6.reversed(), 0.85, samples=200_000, seed=22)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_positive_and_finite_on_h_grid():
    for h in (0.6, 0.75, 0.9, 1.0):
        v = l_adaptive(CROSS2, h, tol=1e-6).value
        assert np.isfinite(v) and v > 0


# ---------------------------------------------------------------------------
# Moment oracle

def naive_increasing_sum(partition: PairPartition, cov: np.ndarray) -> float:
    total = 0.0
    for idx in itertools.combinations(range(cov.shape[0]), partition.size):
        prod = 1.0
        for a, b in partition.pairs:
            prod *= cov[idx[a - 1], idx[b - 1]]
        total += prod
    return total


def test_increasing_sum_matches_enumeration():
    rng = np.random.default_rng(3)
    m = 8
    c = rng.standard_normal((m, m))
    c = (c + c.T) / 2
    for size in (2, 4):
        for p in all_pair_partitions(size):
            fast = _increasing_pair_sum(p, c)
            slow = naive_increasing_sum(p, c)
            assert fast == pytest.approx(slow, rel=1e-12, abs=1e-12)
    p6 = PairPartition([(1, 4), (2, 6), (3, 5)])
    assert _increasing_pair_sum(p6, c) == pytest.approx(
        naive_increasing_sum(p6, c), rel=1e-12
    )


def test_fbm_covariance():
    cov = FbmCovariance(0.75)
    assert cov.cov(1.0, 1.0) == pytest.approx(1.0)
    inc = cov.increment_cov(16)
    assert inc.shape == (16, 16)
    assert np.allclose(inc, inc.T)
    # total variance of the path at t=1
    assert inc.sum() == pytest.approx(1.0)
    with pytest.raises(DomainError):
        FbmCovariance(0.0)
    with pytest.raises(DomainError):
        FbmCovariance(1.5)


@pytest.mark.parametrize("h", [0.6, 0.75, 0.9, 1.0])
def test_oracle_second_moment(h):
    r = wick_grid_oracle(Word([1, 1]), h, m=64)
    assert r.method == "wick-grid"
    assert abs(r.value - 0.5) <= 1e-5


def test_oracle_fourth_moment():
    r = wick_grid_oracle(Word([1, 1, 1, 1]), 1.0, m=64)
    assert abs(r.value - 0.125) <= 1e-3
    r = wick_grid_oracle(Word([1, 1, 1, 1]), 0.75, m=48)
    assert abs(r.value - 0.125) <= 5e-3


def test_oracle_empty_sum_and_guards():
    assert wick_grid_oracle(Word([1, 2, 2, 3]), 0.8).value == 0.0
    with pytest.raises(DomainError):
        wick_grid_oracle(Word([1, 1]), 0.8, m=4)


def test_oracle_rank_one_limit():
    # at H=1 all increments are perfectly correlated: the sum reduces to
    # counting increasing tuples, and the extrapolated value matches the
    # closed-form moment over the factorial
    m = 32
    r = wick_grid_oracle(Word([1, 1, 1, 1]), 1.0, m=m, richardson=False)
    expected = 3 * math.comb(m, 4) / m**4
    assert r.value == pytest.approx(expected, rel=1e-12)


def test_eval_result_validation():
    with pytest.raises(DomainError):
        EvalResult(value=1.0, method="direct-mc")  # missing stderr
    with pytest.raises(DomainError):
        EvalResult(value=1.0, method="nonsense", tol=0.1)
    r = EvalResult(value=1.0, method="adaptive", tol=1e-8, cells=100, h=0.8)
    d = r.to_json_dict()
    assert d["tol"] == 1e-8 and "stderr" not in d


def test_default_seed_spelling():
    assert DEFAULT_SEED == int.from_bytes(b"FBM0", "big")
