"""Online paging policies: prediction-driven batching, imitation and classic baselines.

Every class implements the :class:`~wpaging.core.OnlineAlgorithm` contract.
The factories at the bottom (``static_algo``, ``follow``, ...) are the
public constructors used by the CLI and the experiment harness.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Mapping, Sequence

from .core import HIT, Action, Charging, serve
from .metrics import led_prefix_values
from .offline import DEFAULT_PAGE_LIMIT, batch_optimal
from .predictions import PredictionStream, derive_sprp


class InfeasibleStep(AssertionError):
    """LEARN chose an imitation point whose predicted page differs from the request."""


def _cheapest(cache, weights) -> int:
    return min(cache, key=lambda p: (weights[p], p))


class Static:
    """Plays offline-optimal schedules on batches of predicted requests.

    A batch starts at the current request and extends to the furthest
    position covered by any prediction window received so far.  Windows
    from one predictor are prefixes of the same sequence, so the known
    future is always contiguous.  When a request disagrees with the plan
    (or the plan runs out) a new batch is planned from the current cache.

    With ``memoryless=True`` the planner may use the extra bypass slot;
    that variant is IDLE and must be run with ``extra_slot=True``.
    """

    def __init__(self, memoryless: bool = False, limit: int = DEFAULT_PAGE_LIMIT):
        self.memoryless = memoryless
        self.limit = limit

    def reset(self, k, weights, mode):
        self.k, self.weights, self.mode = k, weights, Charging.parse(mode)
        self.known: dict[int, int] = {}
        self.horizon = 0
        self.plan: list[Action] = []
        self.plan_pages: list[int] = []
        self.plan_start = 0
        self.batches: list[tuple[int, int]] = []  # (first time, last time) as planned

    def _learn(self, t, view):
        if view is None:
            return
        end = t + len(view.window)
        for pos in range(max(t, self.horizon) + 1, end + 1):
            self.known[pos] = view.window[pos - t - 1]
        self.horizon = max(self.horizon, end)

    def step(self, t, page, view, cache):
        self._learn(t, view)
        offset = t - self.plan_start
        if offset >= len(self.plan) or self.plan_pages[offset] != page:
            end = max(t, self.horizon)
            batch = [page] + [self.known[i] for i in range(t + 1, end + 1)]
            # planning always minimises eviction cost: fetch totals differ from it
            # only by the final cache, and the guarantee is stated for evictions
            sol = batch_optimal(batch, cache, self.weights, self.k, self.memoryless,
                                Charging.EVICT, self.limit)
            self.plan, self.plan_pages, self.plan_start = sol.schedule, batch, t
            self.batches.append((t, end))
            offset = 0
        return self.plan[offset]

    def batch_page_sets(self, sequence: Sequence[int]) -> list[frozenset]:
        """Distinct pages of each planned batch, read off ``sequence``."""
        return [frozenset(sequence[a - 1:b]) for a, b in self.batches]


class Follow:
    """Replays STATIC-on-the-prediction slot by slot against the real input.

    Each cache slot of the simulated STATIC run is mapped to at most one
    real page.  STATIC's evictions empty the mapped slot; whenever the real
    request is missing it is fetched into the slot STATIC uses at that time.
    Past the end of the prediction, missing pages evict the cheapest slot.
    """

    def __init__(self, predicted: Sequence[int], limit: int = DEFAULT_PAGE_LIMIT):
        self.predicted = tuple(predicted)
        self.limit = limit

    def reset(self, k, weights, mode):
        self.k, self.weights = k, weights
        self.static_steps = []
        self.static_cost = 0
        if self.predicted:
            ledger = serve(Static(limit=self.limit), self.predicted, derive_sprp(self.predicted),
                           weights, k, mode)
            self.static_steps = ledger.steps
            self.static_cost = ledger.total
        self.slots: dict[object, int | None] = {}

    def step(self, t, page, view, cache):
        resident = set(cache)
        evict, fetch = [], []

        def vacate(key):
            held = self.slots.get(key)
            if held is not None and held in resident:
                evict.append(held)
                resident.discard(held)

        if t <= len(self.static_steps):
            rec = self.static_steps[t - 1]
            for gone in rec.evicted:
                vacate(gone)
                self.slots.pop(gone, None)
            key = rec.page
            self.slots.setdefault(key, None)
        else:
            if page in resident:
                return HIT
            free = [s for s, held in self.slots.items() if held is None]
            if free:
                key = free[0]
            elif len(self.slots) < self.k:
                key = ("tail", t)
                self.slots[key] = None
            else:
                victim = _cheapest(resident, self.weights)
                key = next(s for s, held in self.slots.items() if held == victim)
        if page not in resident:
            vacate(key)
            fetch.append(page)
            self.slots[key] = page
        if not evict and not fetch:
            return HIT
        return Action(tuple(evict), tuple(fetch))


class Learn:
    """Imitates IDLE on the prediction while the input agrees with it.

    ``s`` is the prediction position imitated through and ``queue`` holds
    requests not yet reconciled.  On each request the smallest ``t > s``
    whose constrained edit distance to the queue is below a third of their
    joint weight is sought; if found the cache jumps to IDLE's state after
    ``t`` and the queue empties, otherwise the request is served through the
    extra slot.  Runs with ``k`` normal slots plus ``extra_slot=True``.
    """

    def __init__(self, predicted: Sequence[int], limit: int = DEFAULT_PAGE_LIMIT):
        self.predicted = tuple(predicted)
        self.limit = limit

    def reset(self, k, weights, mode):
        self.k, self.weights = k, weights
        A = self.predicted
        self.idle_states = [frozenset()]
        self.idle_cost = 0
        if A:
            ledger = serve(Static(memoryless=True, limit=self.limit), A, derive_sprp(A),
                           weights, k, mode, extra_slot=True)
            self.idle_states += [rec.cache for rec in ledger.steps]
            self.idle_cost = ledger.total
        self.s = 0
        self.queue: list[int] = []
        self.firings: list[tuple[int, int]] = []  # (input time, prediction position)

    def _match_point(self) -> int | None:
        A, w = self.predicted, self.weights
        rest = A[self.s:]
        budget = sum((w[p] for p in self.queue), 0)
        prefix_w = 0
        values = led_prefix_values(rest, self.queue, w, constrained=True)
        next(values)
        for offset, value in enumerate(values, 1):
            prefix_w += w[rest[offset - 1]]
            if 3 * value < prefix_w + budget:
                return self.s + offset
        return None

    def step(self, t, page, view, cache):
        if cache != self.idle_states[self.s]:
            raise InfeasibleStep(f"t={t}: cache drifted from the imitated state")
        self.queue.append(page)
        target_pos = self._match_point()
        if target_pos is None:
            return HIT if page in cache else Action(bypass=True)
        if self.predicted[target_pos - 1] != page:
            raise InfeasibleStep(
                f"t={t}: imitation point {target_pos} predicts page "
                f"{self.predicted[target_pos - 1]}, request is {page}")
        target = self.idle_states[target_pos]
        self.s = target_pos
        self.queue.clear()
        self.firings.append((t, target_pos))
        evict = tuple(sorted(cache - target))
        fetch = tuple(sorted(target - cache))
        bypass = page not in cache and page not in target
        return Action(evict, fetch, bypass)


class LRU:
    def reset(self, k, weights, mode):
        self.k = k
        self.order: OrderedDict[int, None] = OrderedDict()

    def step(self, t, page, view, cache):
        if page in self.order:
            self.order.move_to_end(page)
            return HIT
        evict = ()
        if len(self.order) >= self.k:
            victim, _ = self.order.popitem(last=False)
            evict = (victim,)
        self.order[page] = None
        return Action(evict, (page,))


class EvictCheapest:
    """On a miss with a full cache, evict the lightest page (smallest id on ties)."""

    def reset(self, k, weights, mode):
        self.k, self.weights = k, weights

    def step(self, t, page, view, cache):
        if page in cache:
            return HIT
        evict = (_cheapest(cache, self.weights),) if len(cache) >= self.k else ()
        return Action(evict, (page,))


class AlgI:
    """Over pages ``0..k``: on a miss evict page ``i`` if resident, else page 0."""

    def __init__(self, i: int):
        if i < 1:
            raise ValueError("ALG_i is defined for i >= 1")
        self.i = i

    def reset(self, k, weights, mode):
        if self.i > k:
            raise ValueError(f"ALG_{self.i} needs i <= k = {k}")
        self.k = k

    def step(self, t, page, view, cache):
        if not 0 <= page <= self.k:
            raise ValueError(f"ALG_{self.i} serves pages 0..{self.k}, got {page}")
        if page in cache:
            return HIT
        if len(cache) < self.k:
            return Action((), (page,))
        victim = self.i if self.i in cache else 0
        assert victim in (0, self.i) and victim in cache
        return Action((victim,), (page,))


# --- factories -----------------------------------------------------------------

def static_algo(predictions: PredictionStream | None = None, limit: int = DEFAULT_PAGE_LIMIT) -> Static:
    """STATIC; it reads predictions from the per-step views, so the stream is optional."""
    return Static(limit=limit)


def idle(predictions: PredictionStream | None = None, k: int | None = None,
         limit: int = DEFAULT_PAGE_LIMIT) -> Static:
    """IDLE: STATIC planning with one memoryless slot (serve with ``extra_slot=True``)."""
    return Static(memoryless=True, limit=limit)


def follow(predictions: PredictionStream, limit: int = DEFAULT_PAGE_LIMIT) -> Follow:
    return Follow(predictions.predicted, limit)


def learn(predictions: PredictionStream, k: int | None = None, limit: int = DEFAULT_PAGE_LIMIT) -> Learn:
    return Learn(predictions.predicted, limit)


def lru(k: int | None = None) -> LRU:
    return LRU()


def evict_cheapest(k: int | None = None) -> EvictCheapest:
    return EvictCheapest()


def alg_i_family(i: int, k: int | None = None) -> AlgI:
    return AlgI(i)


ALGORITHM_NAMES = ("static", "follow", "idle", "learn", "lru", "cheapest", "alg_i:<i>")

# algorithms that serve with the memoryless extra slot
EXTRA_SLOT = frozenset({"idle", "learn"})


def make_algorithm(name: str, predictions: PredictionStream | None = None,
                   limit: int = DEFAULT_PAGE_LIMIT):
    """Build an algorithm by its CLI/config name."""
    if name.startswith("alg_i:"):
        return AlgI(int(name.split(":", 1)[1]))
    needs_prediction = name in ("follow", "learn")
    if needs_prediction and predictions is None:
        raise ValueError(f"algorithm {name!r} needs a prediction sequence")
    table = {
        "static": lambda: Static(limit=limit),
        "idle": lambda: Static(memoryless=True, limit=limit),
        "follow": lambda: Follow(predictions.predicted, limit),
        "learn": lambda: Learn(predictions.predicted, limit),
        "lru": LRU,
        "cheapest": EvictCheapest,
    }
    if name not in table:
        raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHM_NAMES)}")
    return table[name]()


def run_algorithm(name: str, sequence: Sequence[int], predictions: PredictionStream | None,
                  weights: Mapping[int, object], k: int, mode: Charging | str = Charging.FETCH,
                  limit: int = DEFAULT_PAGE_LIMIT):
    """Serve ``sequence`` with the named algorithm; returns ``(algorithm, ledger)``."""
    algo = make_algorithm(name, predictions, limit)
    ledger = serve(algo, sequence, predictions, weights, k, mode, extra_slot=name in EXTRA_SLOT)
    return algo, ledger
