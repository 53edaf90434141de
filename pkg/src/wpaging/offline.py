"""Exact offline optima for weighted paging.

The dynamic programs walk (time, resident set) with the resident set as a
bitmask.  Demand paging is enough: an optimal schedule only fetches the
requested page and only evicts when the cache is full.
"""

from __future__ import annotations

from typing import Iterable, Mapping, NamedTuple, Sequence

from .core import HIT, Action, Charging
from .lp import covering_lp_exact, covering_lp_float

DEFAULT_PAGE_LIMIT = 14


class SizeLimitError(ValueError):
    """Instance too large for the exact dynamic program."""


class OfflineSolution(NamedTuple):
    cost: object
    schedule: list[Action]
    final_cache: frozenset


def _solve(sequence: Sequence[int], weights: Mapping[int, object], k: int, mode: Charging,
           start: Iterable[int] = (), memoryless: bool = False,
           limit: int = DEFAULT_PAGE_LIMIT) -> OfflineSolution:
    mode = Charging.parse(mode)
    start = frozenset(start)
    # bit order = (weight, id): among equal-cost schedules the cheaper page is evicted
    pages = sorted(set(sequence) | start, key=lambda p: (weights[p], p))
    if len(pages) > limit:
        raise SizeLimitError(
            f"{len(pages)} distinct pages exceeds the exact-DP limit of {limit}; "
            "use the LP lower bound (opt_plus1_lp) for instances this large")
    if len(start) > k:
        raise ValueError(f"start cache holds {len(start)} pages, capacity {k}")
    bit = {p: 1 << i for i, p in enumerate(pages)}
    w = [weights[p] for p in pages]
    fetch_mode = mode is Charging.FETCH

    init = 0
    for p in start:
        init |= bit[p]
    layer = {init: 0}
    back: list[dict[int, tuple[int, Action]]] = []
    for p in sequence:
        b = bit[p]
        wp = weights[p]
        nxt: dict[int, object] = {}
        bp: dict[int, tuple[int, Action]] = {}

        def relax(state, cost, prev, action):
            old = nxt.get(state)
            if old is None or cost < old:
                nxt[state] = cost
                bp[state] = (prev, action)

        for state in sorted(layer):
            cost = layer[state]
            if state & b:
                relax(state, cost, state, HIT)
                continue
            base = cost + wp if fetch_mode else cost
            if state.bit_count() < k:
                relax(state | b, base, state, Action((), (p,)))
            else:
                rest = state
                while rest:
                    low = rest & -rest
                    rest ^= low
                    idx = low.bit_length() - 1
                    extra = 0 if fetch_mode else w[idx]
                    relax((state ^ low) | b, base + extra, state, Action((pages[idx],), (p,)))
            if memoryless:
                relax(state, cost + wp, state, Action(bypass=True))
        layer = nxt
        back.append(bp)

    best_state = min(layer, key=lambda s: (layer[s], -s))  # ties: keep heavier pages
    schedule = []
    state = best_state
    for bp in reversed(back):
        prev, action = bp[state]
        schedule.append(action)
        state = prev
    schedule.reverse()
    final = frozenset(p for p in pages if best_state & bit[p])
    return OfflineSolution(layer[best_state], schedule, final)


def opt_dp(sequence: Sequence[int], weights: Mapping[int, object], k: int,
           mode: Charging | str = Charging.FETCH, limit: int = DEFAULT_PAGE_LIMIT) -> OfflineSolution:
    """Optimal offline cost and schedule from an empty cache."""
    return _solve(sequence, weights, k, mode, limit=limit)


def batch_optimal(batch: Sequence[int], start_cache: Iterable[int], weights: Mapping[int, object],
                  k: int, memoryless: bool = False, mode: Charging | str = Charging.EVICT,
                  limit: int = DEFAULT_PAGE_LIMIT) -> OfflineSolution:
    """Optimal way to serve ``batch`` starting from ``start_cache``."""
    return _solve(batch, weights, k, mode, start=start_cache, memoryless=memoryless, limit=limit)


def opt_plus1_dp(sequence: Sequence[int], weights: Mapping[int, object], k: int,
                 limit: int = DEFAULT_PAGE_LIMIT,
                 mode: Charging | str = Charging.EVICT) -> OfflineSolution:
    """Optimum with ``k`` normal slots plus one memoryless slot (eviction charging by default)."""
    return _solve(sequence, weights, k, mode, memoryless=True, limit=limit)


def belady(sequence: Sequence[int], k: int, weights: Mapping[int, object] | None = None) -> int:
    """Miss count of farthest-in-future eviction (optimal for unit weights only)."""
    if weights is not None and any(weights[p] != 1 for p in set(sequence)):
        raise ValueError("Belady's rule is only optimal for unit weights")
    n = len(sequence)
    nxt = [n + 1] * n
    last: dict[int, int] = {}
    for i in range(n - 1, -1, -1):
        nxt[i] = last.get(sequence[i], n + 1)
        last[sequence[i]] = i
    cache: dict[int, int] = {}  # page -> index of its next request
    misses = 0
    for i, p in enumerate(sequence):
        if p not in cache:
            misses += 1
            if len(cache) >= k:
                victim = max(cache, key=lambda q: (cache[q], -q))
                del cache[victim]
        cache[p] = nxt[i]
    return misses


def plus1_lp_instance(sequence: Sequence[int], weights: Mapping[int, object], k: int):
    """Variables, objective and covering rows of the OPT+1 relaxation.

    Variable ``(page, j)`` is the fraction of ``page`` outside the normal
    cache between its ``j``-th and ``(j+1)``-th request.  At each time the
    pages requested so far must have at least ``|B(t)| - k`` total mass out.
    """
    variables: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    count: dict[int, int] = {}
    rows: list[tuple[int, ...]] = []
    rhs: list[int] = []
    for p in sequence:
        count[p] = count.get(p, 0) + 1
        key = (p, count[p])
        index[key] = len(variables)
        variables.append(key)
        need = len(count) - k
        if need > 0:
            rows.append(tuple(sorted(index[(q, r)] for q, r in count.items())))
            rhs.append(need)
    costs = [weights[p] for p, _ in variables]
    return variables, costs, rows, rhs


def opt_plus1_lp(sequence: Sequence[int], weights: Mapping[int, object], k: int,
                 exact: bool = True):
    """Optimal value of the OPT+1 linear relaxation (exact rational by default)."""
    _, costs, rows, rhs = plus1_lp_instance(sequence, weights, k)
    if exact:
        return covering_lp_exact(costs, rows, rhs).value
    return covering_lp_float(costs, rows, rhs)
