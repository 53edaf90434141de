"""Error measures between a prediction sequence A and an input sequence B.

All positions are 1-based.  Two requests ``A_i == B_j`` may be matched only
when ``i`` is the first occurrence of that page in A after ``prev(j)``, the
previous request of the same page in B (the first occurrence in A when B_j
is a first request); matchings may not cross.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .predictions import next_occurrences


@dataclass(frozen=True)
class IndexMaps:
    """``prev[t-1]``, ``next[t-1]``, ``pnext[t-1]`` for each time ``t`` of B."""

    prev: tuple[int, ...]
    next: tuple[int, ...]
    pnext: tuple[int, ...]


def _positions(seq: Sequence[int]) -> dict[int, list[int]]:
    pos: dict[int, list[int]] = defaultdict(list)
    for i, p in enumerate(seq, 1):
        pos[p].append(i)
    return pos


def _first_after(pos: Mapping[int, list[int]], page: int, t: int, sentinel: int) -> int:
    lst = pos.get(page, ())
    idx = bisect_right(lst, t)
    return lst[idx] if idx < len(lst) else sentinel


def _prev(B: Sequence[int]) -> list[int]:
    last: dict[int, int] = {}
    out = []
    for j, p in enumerate(B, 1):
        out.append(last.get(p, 0))
        last[p] = j
    return out


def index_maps(A: Sequence[int], B: Sequence[int]) -> IndexMaps:
    posA = _positions(A)
    m = len(A)
    pnext = tuple(_first_after(posA, p, t, m + 1) for t, p in enumerate(B, 1))
    return IndexMaps(tuple(_prev(B)), tuple(next_occurrences(B)), pnext)


def l1(A: Sequence[int], B: Sequence[int], weights: Mapping[int, object]):
    """Weighted positional mismatch; an unpaired tail position costs its own weight."""
    total = 0
    for i in range(max(len(A), len(B))):
        a = A[i] if i < len(A) else None
        b = B[i] if i < len(B) else None
        if a == b:
            continue
        if a is not None:
            total += weights[a]
        if b is not None:
            total += weights[b]
    return total


def lpd(A: Sequence[int], B: Sequence[int], weights: Mapping[int, object]):
    maps = index_maps(A, B)
    return sum((weights[p] * abs(nx - pn) for p, nx, pn in zip(B, maps.next, maps.pnext)), 0)


def match_candidates(A: Sequence[int], B: Sequence[int], constrained: bool = False) -> list[int]:
    """``cand[j-1]`` is the only A-position B_j may be matched with (0 if none).

    In the constrained variant an A-position with several candidate partners
    keeps only the latest one.
    """
    posA = _positions(A)
    cand = [_first_after(posA, p, pv, 0) for p, pv in zip(B, _prev(B))]
    if constrained:
        latest: dict[int, int] = {}
        for j, i in enumerate(cand, 1):
            if i:
                latest[i] = j
        cand = [i if i and latest[i] == j else 0 for j, i in enumerate(cand, 1)]
    return cand


@dataclass(frozen=True)
class AlignmentResult:
    matched: tuple[tuple[int, int], ...]
    unmatched_weight: object
    constrained: bool


def led(A: Sequence[int], B: Sequence[int], weights: Mapping[int, object],
        constrained: bool = False) -> AlignmentResult:
    """Minimum-weight unmatched elements over all feasible non-crossing matchings.

    Among optimal matchings the one that matches earliest is returned.
    """
    m, n = len(A), len(B)
    cand = match_candidates(A, B, constrained)
    wa = [weights[p] for p in A]
    wb = [weights[p] for p in B]
    # suffix table: E[i][j] = cost of aligning A[i:] with B[j:]
    E = [[0] * (n + 1) for _ in range(m + 1)]
    for j in range(n - 1, -1, -1):
        E[m][j] = E[m][j + 1] + wb[j]
    for i in range(m - 1, -1, -1):
        row, below = E[i], E[i + 1]
        row[n] = below[n] + wa[i]
        for j in range(n - 1, -1, -1):
            best = below[j] + wa[i]
            other = row[j + 1] + wb[j]
            if other < best:
                best = other
            if cand[j] == i + 1 and below[j + 1] < best:
                best = below[j + 1]
            row[j] = best
    pairs = []
    i = j = 0
    while i < m and j < n:
        if cand[j] == i + 1 and E[i][j] == E[i + 1][j + 1]:
            pairs.append((i + 1, j + 1))
            i += 1
            j += 1
        elif E[i][j] == E[i + 1][j] + wa[i]:
            i += 1
        else:
            j += 1
    return AlignmentResult(tuple(pairs), E[0][0], constrained)


def led_value(A, B, weights, constrained: bool = False):
    return led(A, B, weights, constrained).unmatched_weight


def led_prefix_values(A: Sequence[int], B: Sequence[int], weights: Mapping[int, object],
                      constrained: bool = False) -> Iterator:
    """Yield the distance between ``A[:t]`` and all of B for ``t = 0, 1, ..., len(A)``.

    Matchability is a property of the pair ``(i, j)`` alone, so one prefix
    table serves every A-prefix at once.
    """
    cand = match_candidates(A, B, constrained)
    by_i: dict[int, list[int]] = defaultdict(list)
    for j, i in enumerate(cand, 1):
        if i:
            by_i[i].append(j)
    wb = [weights[p] for p in B]
    row = [0]
    for w in wb:
        row.append(row[-1] + w)
    yield row[-1]
    for i, p in enumerate(A, 1):
        wa = weights[p]
        new = [row[0] + wa]
        matches = by_i.get(i, ())
        for j in range(1, len(row)):
            best = row[j] + wa
            other = new[j - 1] + wb[j - 1]
            if other < best:
                best = other
            if j in matches and row[j - 1] < best:
                best = row[j - 1]
            new.append(best)
        row = new
        yield row[-1]


def led_subrange(A: Sequence[int], B: Sequence[int], a1: int, a2: int, b1: int, b2: int,
                 weights: Mapping[int, object], constrained: bool = False):
    """Distance between ``A[a1..a2]`` and ``B[b1..b2]`` (1-based, inclusive).

    The subsequences are treated as standalone sequences; an empty range is
    written ``a2 == a1 - 1``.
    """
    for lo, hi, seq, name in ((a1, a2, A, "A"), (b1, b2, B, "B")):
        if lo < 1 or hi < lo - 1 or hi > len(seq):
            raise ValueError(f"invalid {name} range [{lo}, {hi}] for length {len(seq)}")
    return led_value(A[a1 - 1:a2], B[b1 - 1:b2], weights, constrained)
