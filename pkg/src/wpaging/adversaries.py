"""Lower-bound input generators over the universe ``a_0..a_k`` (page ``i`` is ``a_i``).

The block generators produce astronomically long streams (next-arrival
times grow like ``G**i``), so streams are kept as runs of one repeated
page.  Runs of one page are consecutive requests of the page just served;
for lazy policies (everything in this package) the repeats are free hits,
so each run is fed to the algorithm as a single request.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .core import Charging, CostLedger, PagingRun


@dataclass(frozen=True)
class Run:
    page: int
    start: int
    length: int
    next_time: int  # predicted (and realised) next request of ``page`` after the run

    @property
    def end(self) -> int:
        return self.start + self.length - 1


@dataclass(frozen=True)
class BlockRecord:
    index: int
    level: int
    regular: bool
    requested_level: int  # level before the threshold bump
    start: int
    end: int
    u: tuple[int, ...]  # next-arrival times at block start
    runs: tuple[Run, ...]

    def is_contiguous(self) -> bool:
        """A run of each of pages ``0..level`` in order, the last one a single request."""
        pages = [r.page for r in self.runs]
        if pages != list(range(self.level + 1)) or self.runs[-1].length != 1:
            return False
        if self.runs[0].start != self.start or self.runs[-1].end != self.end:
            return False
        return all(a.end + 1 == b.start for a, b in zip(self.runs, self.runs[1:]))


@dataclass
class BlockStream:
    """A generated request stream in run-length form."""

    k: int
    c: int
    growth: int
    blocks: list[BlockRecord] = field(default_factory=list)
    final_u: tuple[int, ...] = ()

    @property
    def runs(self) -> list[Run]:
        return [r for b in self.blocks for r in b.runs]

    @property
    def length(self) -> int:
        return self.blocks[-1].end if self.blocks else 0

    def weights(self) -> dict[int, int]:
        return power_weights(self.k, self.c)

    def collapsed(self) -> list[int]:
        """One request per run: same optimum and same lazy-policy costs as the full stream."""
        return [r.page for r in self.runs]

    def expand(self, max_length: int = 1_000_000) -> list[int]:
        if self.length > max_length:
            raise ValueError(f"stream has {self.length} requests, over the {max_length} cap")
        return [r.page for r in self.runs for _ in range(r.length)]

    def prp(self, max_length: int = 1_000_000) -> list[int]:
        """Per-request predicted next times of the expanded stream."""
        if self.length > max_length:
            raise ValueError(f"stream has {self.length} requests, over the {max_length} cap")
        out = []
        for r in self.runs:
            out.extend(range(r.start + 1, r.end + 1))
            out.append(r.next_time)
        return out

    def regular_count(self) -> int:
        return sum(b.regular for b in self.blocks)

    def irregular_count(self) -> int:
        return len(self.blocks) - self.regular_count()

    def predictions_consistent(self) -> bool:
        """Every run's prediction is the start of the next run of that page (or the final ``u``)."""
        upcoming: dict[int, int] = {p: self.final_u[p] for p in range(self.k + 1)}
        for r in reversed(self.runs):
            if r.next_time != upcoming[r.page]:
                return False
            upcoming[r.page] = r.start
        return True

    def u_ordered(self) -> bool:
        return all(list(b.u) == sorted(set(b.u)) for b in self.blocks)


def power_weights(k: int, c: int) -> dict[int, int]:
    return {i: c ** i for i in range(k + 1)}


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, i) for i in range(1, k + 1)), Fraction(0))


class _BlockBuilder:
    """Shared state machine: next-arrival times ``u`` and level counters ``y``."""

    def __init__(self, k: int, c: int, growth: int, threshold):
        if c < 2:
            raise ValueError("weight base c must be at least 2")
        if k < 1:
            raise ValueError("cache size k must be positive")
        self.k, self.c, self.growth, self.threshold = k, c, growth, threshold
        self.u = [growth ** i for i in range(k + 1)]
        self.y = [0] * k
        self.t = 0
        self.stream = BlockStream(k, c, growth)

    def bump(self, level: int) -> int:
        while level < self.k and self.y[level] >= self.threshold:
            level += 1
        return level

    def emit(self, requested: int) -> BlockRecord:
        k, u = self.k, self.u
        if u != sorted(set(u)):
            raise AssertionError(f"next-arrival times out of order at t={self.t}: {u}")
        level = self.bump(requested)
        u_before = tuple(u)
        start = self.t + 1
        # a_j sits at u_j and the gap up to u_{j+1} is filled with a_j
        t = self.t
        end = u[level]
        for j in range(level + 1):
            if u[j] <= t:
                raise AssertionError(f"u_{j}={u[j]} is not after t={t}")
            t = u[j]
        new_u = list(u)
        for j in range(level + 1):
            new_u[j] = end + self.growth ** j
        runs = []
        for j in range(level + 1):
            last = u[j + 1] - 1 if j < level else u[j]
            runs.append(Run(j, u[j], last - u[j] + 1, new_u[j]))
        self.u = new_u
        self.t = end
        for j in range(level):
            self.y[j] = 0
        if level < k:
            self.y[level] += 1
        rec = BlockRecord(len(self.stream.blocks), level, level == requested, requested,
                          start, end, u_before, tuple(runs))
        self.stream.blocks.append(rec)
        self.stream.final_u = tuple(self.u)
        return rec


@dataclass
class DetAdversaryResult:
    stream: BlockStream
    ledger: CostLedger  # the algorithm's charges, one step per run

    @property
    def sequence(self) -> list[int]:
        return self.stream.collapsed()


def det_prp_adversary(algorithm, k: int, c: int = 2, num_blocks: int = 200,
                      mode: Charging | str = Charging.FETCH) -> DetAdversaryResult:
    """Closed-loop adversary: every block ends with the largest page the algorithm lacks.

    The view handed to the algorithm at each run is the predicted next time
    of the page after that run.
    """
    builder = _BlockBuilder(k, c, 2 * c + 2, 2 * c)
    weights = power_weights(k, c)
    run = PagingRun(algorithm, weights, k, mode)
    for _ in range(num_blocks):
        missing = [i for i in range(k + 1) if i not in run.cache]
        if not missing:
            raise AssertionError("algorithm holds all k+1 pages in a cache of size k")
        block = builder.emit(max(missing))
        for r in block.runs:
            run.step(r.start, r.page, r.next_time)
    return DetAdversaryResult(builder.stream, run.ledger)


def level_distribution(k: int, c: int) -> list[Fraction]:
    """Block-level probabilities before the threshold bump."""
    probs = [Fraction(c - 1, c ** (j + 1)) for j in range(k)]
    probs.append(Fraction(1, c ** k))
    return probs


def _sample_level(rng: random.Random, k: int, c: int) -> int:
    # exact draw: level j owns (c-1)*c^(k-j-1) of the c^k equally likely outcomes
    r = rng.randrange(c ** k)
    for j in range(k):
        share = (c - 1) * c ** (k - j - 1)
        if r < share:
            return j
        r -= share
    return k


def rand_threshold(k: int, c: int) -> Fraction:
    return 2 * c * k * harmonic(k)


def rand_growth(k: int, c: int) -> int:
    """Integer base for the next-arrival times: the threshold plus two, rounded up."""
    return math.ceil(rand_threshold(k, c) + 2)


def rand_prp_generator(k: int, c: int = 2, num_iterations: int = 200, seed=0) -> BlockStream:
    """Oblivious block stream with randomly drawn levels."""
    builder = _BlockBuilder(k, c, rand_growth(k, c), rand_threshold(k, c))
    rng = random.Random(seed)
    for _ in range(num_iterations):
        builder.emit(_sample_level(rng, k, c))
    return builder.stream


def alg_i_cost(pages: Sequence[int], i: int, k: int, weights: Mapping[int, object],
               mode: Charging | str = Charging.FETCH):
    """Cost of ALG_i on ``pages`` by direct simulation (same policy as :class:`AlgI`)."""
    fetch_mode = Charging.parse(mode) is Charging.FETCH
    cache: set[int] = set()
    cost = 0
    for p in pages:
        if p in cache:
            continue
        if len(cache) >= k:
            victim = i if i in cache else 0
            cache.remove(victim)
            if not fetch_mode:
                cost += weights[victim]
        cache.add(p)
        if fetch_mode:
            cost += weights[p]
    return cost


def alg_i_costs(stream_pages: Sequence[int], k: int, c: int,
                mode: Charging | str = Charging.FETCH) -> list:
    """Costs of ALG_1..ALG_k on a (collapsed) block stream."""
    weights = power_weights(k, c)
    return [alg_i_cost(stream_pages, i, k, weights, mode) for i in range(1, k + 1)]


# --- lookahead padding -----------------------------------------------------------

@dataclass(frozen=True)
class PaddedInstance:
    sequence: tuple[int, ...]
    weights: dict
    pads_per_gap: int
    pad_pages: tuple[int, ...]

    def effective_lookahead(self, ell: int) -> int:
        """Lookahead left for normal-weight pages once the pads take their share."""
        return ell - self.pads_per_gap


def lookahead_padding(sequence: Sequence[int], weights: Mapping[int, object], n_total: int,
                      k: int, eps) -> PaddedInstance:
    """Put the same ``n_total - k - 1`` fresh pages of weight ``eps`` between consecutive requests."""
    eps = Fraction(eps) if not isinstance(eps, float) else Fraction(str(eps))
    if eps <= 0:
        raise ValueError("padding weight eps must be positive")
    pads = max(n_total - k - 1, 0)
    original = sorted(set(sequence) | set(weights))
    if len(set(sequence)) + pads > n_total:
        raise ValueError(f"{len(set(sequence))} pages plus {pads} pads exceed n_total={n_total}")
    first = (max(original) + 1) if original else 0
    pad_pages = tuple(range(first, first + pads))
    table = dict(weights)
    for p in pad_pages:
        table[p] = eps.numerator if eps.denominator == 1 else eps
    out: list[int] = []
    for i, p in enumerate(sequence):
        if i:
            out.extend(pad_pages)
        out.append(p)
    return PaddedInstance(tuple(out), table, pads, pad_pages)


# --- S-strings -------------------------------------------------------------------

def s_string_repeat(k_prime: int, c: int = 2) -> int:
    """Repetition factor ``2 c k' H_k' + 1``, rounded up when fractional."""
    return math.ceil(2 * c * k_prime * harmonic(k_prime) + 1)


def s_string(k_prime: int, c: int = 2, M: int = 1) -> list[int]:
    if k_prime < 0 or M < 1:
        raise ValueError("need k_prime >= 0 and M >= 1")
    L = s_string_repeat(k_prime, c)
    s = [0, 0]
    for i in range(1, k_prime + 1):
        s = s * L + [i]
    return s * M


def inject_page(sequence: Sequence[int], positions: Sequence[int], page: int | None = None,
                weights: Mapping[int, object] | None = None, v: int = 10 ** 6):
    """Insert a fresh page of weight ``1/v`` before each 1-based position in ``positions``.

    Returns the new sequence, the extended weight table and the page id.
    A position of ``len(sequence) + 1`` appends at the end.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    if page is None:
        page = max(set(sequence) | set(weights or {}), default=-1) + 1
    marks = sorted(positions)
    if any(not 1 <= p <= len(sequence) + 1 for p in marks):
        raise ValueError("insertion positions must lie in 1..len+1")
    out: list[int] = []
    it = iter(marks)
    nxt = next(it, None)
    for i, q in enumerate(list(sequence) + [None], 1):
        while nxt == i:
            out.append(page)
            nxt = next(it, None)
        if q is not None:
            out.append(q)
    table = dict(weights or {})
    table[page] = Fraction(1, v)
    return out, table, page
