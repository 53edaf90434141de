"""Paging state machine, cost accounting and the online-algorithm stepping contract.

Pages are non-negative integers, weights are exact rationals and time is
1-based: the request at time ``t`` is ``sequence[t - 1]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Protocol, Sequence


class ProtocolViolation(RuntimeError):
    """An online algorithm broke the paging contract."""


class Charging(str, enum.Enum):
    FETCH = "fetch"
    EVICT = "evict"

    @classmethod
    def parse(cls, value: "Charging | str") -> "Charging":
        if isinstance(value, Charging):
            return value
        return cls(str(value).lower())


def exact(x) -> Fraction | int:
    """Exact rational for ``x``; integral values come back as ``int`` for speed."""
    if isinstance(x, int):
        return x
    f = Fraction(x) if not isinstance(x, float) else Fraction(str(x))
    return f.numerator if f.denominator == 1 else f


def check_weights(weights: Mapping[int, object], pages: Iterable[int] = ()) -> dict:
    """Return a normalised copy of ``weights``; every weight must be positive."""
    table = {}
    for page, w in weights.items():
        if int(page) < 0:
            raise ValueError(f"negative page id {page}")
        w = exact(w)
        if w <= 0:
            raise ValueError(f"weight of page {page} must be positive, got {w}")
        table[int(page)] = w
    missing = sorted(set(pages) - set(table))
    if missing:
        raise ValueError(f"pages without a weight: {missing}")
    return table


def unit_weights(pages: Iterable[int]) -> dict[int, int]:
    return {p: 1 for p in pages}


def total_weight(pages: Iterable[int], weights: Mapping[int, object]):
    return sum((weights[p] for p in pages), 0)


@dataclass(frozen=True)
class Action:
    """What an algorithm does at one request.

    ``evict`` is applied before ``fetch``.  ``bypass`` serves the request
    through the memoryless slot: the page is fetched and evicted at once.
    """

    evict: tuple[int, ...] = ()
    fetch: tuple[int, ...] = ()
    bypass: bool = False


HIT = Action()


@dataclass(frozen=True)
class LedgerEntry:
    time: int
    page: int
    kind: str  # "fetch" or "evict"
    amount: Fraction | int


@dataclass(frozen=True)
class StepRecord:
    time: int
    page: int
    hit: bool
    evicted: tuple[int, ...]
    fetched: tuple[int, ...]
    bypass: bool
    cache: frozenset


@dataclass
class CostLedger:
    mode: Charging
    entries: list[LedgerEntry] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)
    total: Fraction | int = 0

    def charge(self, time: int, page: int, kind: str, amount) -> None:
        self.entries.append(LedgerEntry(time, page, kind, amount))
        self.total += amount

    def final_cache(self) -> frozenset:
        return self.steps[-1].cache if self.steps else frozenset()


def ledger_total_between(ledger: CostLedger, t1: int, t2: int):
    """Sum of the charges made at times ``t1..t2`` inclusive."""
    if t1 > t2:
        raise ValueError(f"empty time range [{t1}, {t2}]")
    return sum((e.amount for e in ledger.entries if t1 <= e.time <= t2), 0)


class OnlineAlgorithm(Protocol):
    """Behavioural contract shared by every paging policy.

    ``reset`` is called once before the first request.  ``step`` receives
    the current request, the prediction view for that time (or ``None``)
    and a read-only snapshot of the resident set, and returns an
    :class:`Action`.
    """

    def reset(self, k: int, weights: Mapping[int, object], mode: Charging) -> None: ...

    def step(self, t: int, page: int, view, cache: frozenset) -> Action: ...


class PagingRun:
    """Authoritative cache for one algorithm; validates and charges every step.

    With ``extra_slot`` the algorithm may serve a request by bypass
    (one memoryless slot on top of the ``k`` normal ones).
    """

    def __init__(self, algorithm: OnlineAlgorithm, weights: Mapping[int, object], k: int,
                 mode: Charging | str = Charging.FETCH, extra_slot: bool = False):
        if k < 1:
            raise ValueError("cache size k must be positive")
        self.algorithm = algorithm
        self.weights = weights
        self.k = k
        self.mode = Charging.parse(mode)
        self.extra_slot = extra_slot
        self.cache: set[int] = set()
        self.ledger = CostLedger(self.mode)
        algorithm.reset(k, weights, self.mode)

    def step(self, t: int, page: int, view=None) -> StepRecord:
        if page not in self.weights:
            raise ProtocolViolation(f"request for page {page} without a weight")
        was_resident = page in self.cache
        action = self.algorithm.step(t, page, view, frozenset(self.cache))
        w = self.weights
        if action.bypass:
            if not self.extra_slot:
                raise ProtocolViolation(f"t={t}: bypass without a memoryless slot")
            if was_resident:
                raise ProtocolViolation(f"t={t}: bypass of resident page {page}")
            self._charge(t, page, "fetch")
            self._charge(t, page, "evict")
        for p in action.evict:
            if p not in self.cache:
                raise ProtocolViolation(f"t={t}: eviction of non-resident page {p}")
            self.cache.remove(p)
            self._charge(t, p, "evict")
        for p in action.fetch:
            if p in self.cache:
                continue
            if p not in w:
                raise ProtocolViolation(f"t={t}: fetch of unknown page {p}")
            self.cache.add(p)
            self._charge(t, p, "fetch")
        if len(self.cache) > self.k:
            raise ProtocolViolation(f"t={t}: {len(self.cache)} pages resident, capacity {self.k}")
        if not (was_resident or page in self.cache or action.bypass):
            raise ProtocolViolation(f"t={t}: request for page {page} left unserved")
        rec = StepRecord(t, page, was_resident, tuple(action.evict), tuple(action.fetch),
                         action.bypass, frozenset(self.cache))
        self.ledger.steps.append(rec)
        return rec

    def _charge(self, t: int, page: int, kind: str) -> None:
        if kind == self.mode.value:
            self.ledger.charge(t, page, kind, self.weights[page])


def serve(algorithm: OnlineAlgorithm, sequence: Sequence[int], predictions=None,
          weights: Mapping[int, object] | None = None, k: int = 1,
          mode: Charging | str = Charging.FETCH, extra_slot: bool = False) -> CostLedger:
    """Run ``algorithm`` on ``sequence`` from an empty cache and return its ledger.

    ``predictions`` is a :class:`~wpaging.predictions.PredictionStream` (or
    ``None``); the SPRP view for each time step is handed to the algorithm.
    """
    if weights is None:
        weights = unit_weights(set(sequence))
    weights = check_weights(weights, set(sequence))
    run = PagingRun(algorithm, weights, k, mode, extra_slot)
    for t, page in enumerate(sequence, 1):
        view = predictions.sprp(t, page) if predictions is not None else None
        run.step(t, page, view)
    return run.ledger


class ScheduleReplay:
    """Plays back a fixed per-step schedule; ``schedule[t-1]`` is the action at time ``t``."""

    def __init__(self, schedule: Sequence[Action]):
        self.schedule = list(schedule)

    def reset(self, k, weights, mode):
        pass

    def step(self, t, page, view, cache):
        return self.schedule[t - 1]


# --- plain-text file formats -------------------------------------------------

def read_trace(path) -> list[int]:
    """One page id per line; blank lines are ignored."""
    with open(path) as fh:
        return [int(line) for line in (ln.strip() for ln in fh) if line]


def write_trace(path, sequence: Iterable[int]) -> None:
    with open(path, "w") as fh:
        for p in sequence:
            fh.write(f"{p}\n")


def read_weights(path) -> dict[int, Fraction | int]:
    """Lines ``page_id weight``; the weight is a decimal (``p/q`` is also accepted)."""
    table = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"malformed weights line: {line!r}")
            table[int(parts[0])] = exact(Fraction(parts[1]))
    return check_weights(table)


def format_weight(w) -> str:
    """Exact decimal when it terminates, otherwise ``p/q``."""
    f = Fraction(w)
    d = f.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return f"{f.numerator}/{f.denominator}"
    if f.denominator == 1:
        return str(f.numerator)
    digits = 0
    scaled = f
    while scaled.denominator != 1:
        scaled *= 10
        digits += 1
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def write_weights(path, weights: Mapping[int, object]) -> None:
    with open(path, "w") as fh:
        for p in sorted(weights):
            fh.write(f"{p} {format_weight(weights[p])}\n")
