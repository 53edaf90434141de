from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import general_opt
from wpaging.core import ScheduleReplay, serve
from wpaging.lp import covering_lp_exact, covering_lp_float
from wpaging.offline import (SizeLimitError, batch_optimal, belady, opt_dp, opt_plus1_dp,
                             opt_plus1_lp, plus1_lp_instance)

a, b, c, d = 0, 1, 2, 3
W3 = {a: 1, b: 2, c: 4}


def test_frozen_weighted_example():
    # brute-force value (general_opt) frozen here
    assert opt_dp([a, b, c, a, b], W3, 2, "fetch").cost == 8
    assert opt_dp([a, b, c, a, b], W3, 2, "evict").cost == 3


def test_frozen_belady_examples():
    assert belady([a, b, a, c, d, b], 2) == 4
    assert belady([a, b, c, a, b, c], 2) == 4
    assert opt_dp([a, b, a, c, d, b], {p: 1 for p in range(4)}, 2).cost == 4


def test_belady_rejects_weighted_input():
    with pytest.raises(ValueError):
        belady([a, b], 1, {a: 1, b: 2})


def test_memoryless_slot_example():
    # k=1: a, b, a -> bypass b instead of evicting a
    w = {a: 1, b: 2}
    assert opt_dp([a, b, a], w, 1).cost == 4
    assert opt_plus1_dp([a, b, a], w, 1).cost == 2
    assert opt_plus1_lp([a, b, a], w, 1) == 2


def test_batch_from_warm_cache():
    sol = batch_optimal([a, b], [c], W3, 1)
    assert sol.cost == 4 + 1  # evict c for a, then a for b
    assert sol.final_cache == frozenset({b})


def test_size_limit_points_to_lp():
    seq = list(range(16))
    with pytest.raises(SizeLimitError, match="opt_plus1_lp"):
        opt_dp(seq, {p: 1 for p in seq}, 2)


def test_cheaper_page_evicted_on_ties():
    # fetch charging makes every eviction free; the schedule still drops the lightest page
    sol = opt_dp([c, a, b], W3, 2, "fetch")
    assert sol.schedule[2].evict == (a,)


def test_lp_rows_only_where_pressure_exists():
    _, costs, rows, rhs = plus1_lp_instance([a, b, c, a], W3, 2)
    assert rhs == [1, 1]
    assert costs == [1, 2, 4, 1]
    assert rows == [(0, 1, 2), (1, 2, 3)]


def test_lp_without_pressure_is_zero():
    assert opt_plus1_lp([a, b, a], W3, 2) == 0


def test_exact_lp_certificate_on_fractional_instance():
    # triangle cover: x0+x1>=1, x1+x2>=1, x0+x2>=1 has optimum 3/2 at x = 1/2
    sol = covering_lp_exact([1, 1, 1], [(0, 1), (1, 2), (0, 2)], [1, 1, 1])
    assert sol.value == Fraction(3, 2)
    assert sol.x == (Fraction(1, 2),) * 3
    # dual feasibility plus equal objectives certifies optimality
    assert all(y >= 0 for y in sol.y)
    assert sol.y[0] + sol.y[2] <= 1 and sol.y[0] + sol.y[1] <= 1 and sol.y[1] + sol.y[2] <= 1
    assert sum(sol.y) == sol.value
    assert covering_lp_float([1, 1, 1], [(0, 1), (1, 2), (0, 2)], [1, 1, 1]) == pytest.approx(1.5)


weights_st = st.fixed_dictionaries({p: st.sampled_from([1, 2, 3, 5]) for p in range(4)})
seq_st = st.lists(st.integers(0, 3), min_size=1, max_size=9)


@settings(max_examples=120, deadline=None)
@given(seq_st, weights_st, st.integers(1, 3), st.sampled_from(["fetch", "evict"]))
def test_dp_matches_unrestricted_oracle(seq, weights, k, mode):
    assert opt_dp(seq, weights, k, mode).cost == general_opt(seq, weights, k, mode)


@settings(max_examples=120, deadline=None)
@given(seq_st, weights_st, st.integers(1, 3))
def test_plus1_dp_matches_unrestricted_oracle(seq, weights, k):
    assert opt_plus1_dp(seq, weights, k).cost == general_opt(seq, weights, k, "evict", memoryless=True)


@settings(max_examples=80, deadline=None)
@given(seq_st, weights_st, st.integers(1, 3), st.sampled_from(["fetch", "evict"]))
def test_schedules_replay_to_their_cost(seq, weights, k, mode):
    sol = opt_dp(seq, weights, k, mode)
    assert serve(ScheduleReplay(sol.schedule), seq, None, weights, k, mode).total == sol.cost
    plus = opt_plus1_dp(seq, weights, k)
    replay = serve(ScheduleReplay(plus.schedule), seq, None, weights, k, "evict", extra_slot=True)
    assert replay.total == plus.cost


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=14), st.integers(1, 3))
def test_relaxation_chain_and_float_agreement(seq, k):
    w = {p: 2 ** p for p in range(5)}
    lp = opt_plus1_lp(seq, w, k)
    assert lp <= opt_plus1_dp(seq, w, k).cost <= opt_dp(seq, w, k, "evict").cost
    assert float(lp) == pytest.approx(opt_plus1_lp(seq, w, k, exact=False), abs=1e-7)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=14), st.integers(1, 3))
def test_belady_is_optimal_for_unit_weights(seq, k):
    assert belady(seq, k) == opt_dp(seq, {p: 1 for p in range(5)}, k).cost
