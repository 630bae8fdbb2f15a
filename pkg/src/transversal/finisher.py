"""Resampling finisher for instances with lists at least ``factor`` times the
maximum average colour degree.

Start from a uniform total assignment; while some conflict edge joins two
chosen colours, take the lexicographically least such edge and redraw the
colours of both of its parts.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from ._rng import substream
from .cover import CoverInstance, PartialColouring, is_independent_transversal, stats


@dataclass(frozen=True)
class FinisherParams:
    max_resamples: int = 1_000_000
    seed: int = 0
    enforce_precondition: bool = False
    factor: float = 4.0

    def __post_init__(self):
        if self.max_resamples < 1:
            raise ValueError("max_resamples must be >= 1")


@dataclass(frozen=True)
class FinishResult:
    status: Literal["found", "resample_limit"]
    colouring: Optional[PartialColouring]
    resamples: int


class PreconditionError(ValueError):
    pass


def check_precondition(instance: CoverInstance, factor: float = 4.0) -> bool:
    st = stats(instance)
    return instance.num_parts == 0 or st.min_list_size >= factor * st.max_avg_colour_degree


def resample_steps(instance: CoverInstance, params: FinisherParams):
    """Yield ``(edge_row, assignment)`` before resampling the parts of
    ``edge_row``; the final yield is ``(None, assignment)`` once no conflict
    edge is violated.

    ``assignment`` is the live per-part slot array; copy it to keep a snapshot.
    """
    rng = substream(params.seed, 0)
    sizes = instance.sizes
    offsets = instance.offsets
    P = instance.num_parts
    slot = np.floor(rng.random(P) * sizes).astype(np.int64)
    chosen = np.zeros(instance.num_colours, dtype=bool)
    chosen[offsets[:-1] + slot] = True
    ei = instance.edge_index
    part_of = instance.part_of
    conf = instance.conflicts

    heap = list(np.flatnonzero(chosen[conf[:, 0]] & chosen[conf[:, 1]]))
    heapq.heapify(heap)

    def violated(row):
        a, b = conf[row]
        return chosen[a] and chosen[b]

    while True:
        while heap and not violated(heap[0]):
            heapq.heappop(heap)
        if not heap:
            yield None, slot
            return
        row = heap[0]
        yield row, slot
        for v in (int(part_of[conf[row, 0]]), int(part_of[conf[row, 1]])):
            chosen[offsets[v] + slot[v]] = False
            slot[v] = int(rng.random() * sizes[v])
            g = offsets[v] + slot[v]
            chosen[g] = True
            lo, hi = ei.indptr[g], ei.indptr[g + 1]
            nb = ei.indices[lo:hi]
            hit = chosen[nb]
            for r in ei.data[lo:hi][hit]:
                heapq.heappush(heap, int(r) - 1)


def finish(instance: CoverInstance, params: FinisherParams = FinisherParams()) -> FinishResult:
    if params.enforce_precondition and not check_precondition(instance, params.factor):
        raise PreconditionError(f"min list size is below {params.factor} x max average colour degree")
    n = 0
    for row, slot in resample_steps(instance, params):
        if row is None:
            col = PartialColouring({v: int(s) for v, s in enumerate(slot)})
            if not is_independent_transversal(instance, col):
                raise AssertionError("finisher produced a dependent assignment")
            return FinishResult("found", col, n)
        if n >= params.max_resamples:
            return FinishResult("resample_limit", None, n)
        n += 1
    raise AssertionError("unreachable")
