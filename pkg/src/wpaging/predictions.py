"""Prediction models: per-request next times (PRP), l-strong lookahead and SPRP.

A :class:`PredictionStream` wraps a predicted sequence ``A``.  Views are
computed against the page actually requested, so the same stream serves
both perfect predictors (``A == B``) and noisy ones.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class PrpAnnotation:
    """``next_times[t-1]`` is the predicted time of the next request of the page seen at ``t``."""

    next_times: tuple[int, ...]

    def at(self, t: int) -> int:
        return self.next_times[t - 1]

    def __len__(self):
        return len(self.next_times)


@dataclass(frozen=True)
class SprpView:
    """Prediction handed over at one request.

    ``window`` lists the predicted requests at times ``t+1 .. t+len(window)``.
    When the page is predicted to recur, the window ends with it at
    ``next_time``; otherwise ``next_time`` is the sentinel ``m+1`` and the
    window is the whole predicted remainder.
    """

    time: int
    next_time: int
    window: tuple[int, ...]

    @property
    def recurs(self) -> bool:
        return bool(self.window) and self.next_time == self.time + len(self.window)


def next_occurrences(seq: Sequence[int]) -> list[int]:
    """1-based next-occurrence times, ``len(seq)+1`` when the page never recurs."""
    n = len(seq)
    out = [n + 1] * n
    last: dict[int, int] = {}
    for i in range(n - 1, -1, -1):
        out[i] = last.get(seq[i], n + 1)
        last[seq[i]] = i + 1
    return out


def derive_perfect_prp(sequence: Sequence[int]) -> PrpAnnotation:
    if not sequence:
        raise ValueError("empty sequence")
    return PrpAnnotation(tuple(next_occurrences(sequence)))


class PredictionStream:
    """A predicted request sequence and the per-model views derived from it."""

    def __init__(self, predicted: Sequence[int]):
        self.predicted = tuple(predicted)
        self._positions: dict[int, list[int]] = defaultdict(list)
        for i, p in enumerate(self.predicted, 1):
            self._positions[p].append(i)

    def __len__(self):
        return len(self.predicted)

    def pnext(self, t: int, page: int) -> int:
        """Smallest ``i > t`` with ``A_i == page``, else ``m+1``."""
        pos = self._positions.get(page, ())
        idx = bisect_right(pos, t)
        return pos[idx] if idx < len(pos) else len(self.predicted) + 1

    def prp(self, t: int, page: int) -> int:
        return self.pnext(t, page)

    def sprp(self, t: int, page: int) -> SprpView:
        nxt = self.pnext(t, page)
        m = len(self.predicted)
        end = nxt if nxt <= m else m
        return SprpView(t, nxt, self.predicted[t:end])

    def lookahead(self, t: int, ell: int) -> tuple[int, ...]:
        """Shortest predicted prefix after ``t`` holding ``ell`` distinct pages."""
        seen: set[int] = set()
        out = []
        for p in self.predicted[t:]:
            if p not in seen:
                if len(seen) == ell:
                    break
                seen.add(p)
            out.append(p)
        return tuple(out)

    def prp_annotation(self, sequence: Sequence[int]) -> PrpAnnotation:
        return PrpAnnotation(tuple(self.pnext(t, p) for t, p in enumerate(sequence, 1)))


def derive_sprp(sequence: Sequence[int]) -> PredictionStream:
    """Perfect SPRP predictor for ``sequence``."""
    if not sequence:
        raise ValueError("empty sequence")
    return PredictionStream(sequence)


def derive_lookahead(sequence: Sequence[int], ell: int, universe: int | None = None) -> list[tuple[int, ...]]:
    """Perfect ``ell``-strong lookahead windows; entry ``t-1`` is the window at time ``t``."""
    if universe is None:
        universe = max(sequence, default=0) + 1
    if not 1 <= ell <= universe - 1:
        raise ValueError(f"lookahead {ell} outside [1, {universe - 1}]")
    stream = PredictionStream(sequence)
    return [stream.lookahead(t, ell) for t in range(1, len(sequence) + 1)]


@dataclass(frozen=True)
class NoiseSpec:
    """Per-position edit rates used by :func:`perturb`.

    Each position is deleted with probability ``deletion``; a surviving one
    is substituted with probability ``substitution`` and followed by a
    random insertion with probability ``insertion``.  Replacement pages are
    drawn from ``universe`` (uniformly, or proportional to ``page_weights``).
    """

    substitution: float = 0.0
    insertion: float = 0.0
    deletion: float = 0.0
    universe: tuple[int, ...] | None = None
    page_weights: Mapping[int, float] | None = None

    def __post_init__(self):
        for name in ("substitution", "insertion", "deletion"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} rate {rate} outside [0, 1]")


def perturb(sequence: Sequence[int], noise: NoiseSpec, seed) -> list[int]:
    rng = random.Random(seed)
    universe = sorted(noise.universe if noise.universe is not None else set(sequence))
    if not universe:
        return list(sequence)
    cum = None
    if noise.page_weights is not None:
        cum = [float(noise.page_weights.get(p, 0.0)) for p in universe]

    def draw(exclude=None):
        choices = [p for p in universe if p != exclude] or universe
        if cum is None:
            return rng.choice(choices)
        ws = [cum[universe.index(p)] for p in choices]
        return rng.choices(choices, weights=ws)[0]

    out = []
    for p in sequence:
        if noise.deletion and rng.random() < noise.deletion:
            continue
        if noise.substitution and rng.random() < noise.substitution:
            p = draw(exclude=p)
        out.append(p)
        if noise.insertion and rng.random() < noise.insertion:
            out.append(draw())
    return out
