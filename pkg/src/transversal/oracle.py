"""Exhaustive independent-transversal search, used as ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

from .cover import CoverInstance, PartialColouring


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int = 10_000_000
    mode: Literal["find-one", "count-all"] = "find-one"

    def __post_init__(self):
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be >= 1")


@dataclass(frozen=True)
class SearchResult:
    status: Literal["found", "none", "budget_exhausted"]
    colouring: Optional[PartialColouring] = None
    nodes: int = 0
    count: Optional[int] = None


def _kill_masks(instance: CoverInstance) -> list[dict[int, int]]:
    """For each colour: other part -> bitmask of slots it conflicts with."""
    kill: list[dict[int, int]] = [dict() for _ in range(instance.num_colours)]
    po, so = instance.part_of, instance.slot_of
    for a, b in instance.conflicts:
        a, b = int(a), int(b)
        pa, pb = int(po[a]), int(po[b])
        kill[a][pb] = kill[a].get(pb, 0) | (1 << int(so[b]))
        kill[b][pa] = kill[b].get(pa, 0) | (1 << int(so[a]))
    return kill


def _slots(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _Search:
    def __init__(self, instance: CoverInstance, max_nodes: int, count_all: bool, prune: bool):
        self.inst = instance
        self.kill = _kill_masks(instance)
        self.max_nodes = max_nodes
        self.count_all = count_all
        self.prune = prune
        self.nodes = 0
        self.count = 0
        self.found: Optional[dict[int, int]] = None

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise BudgetExhausted(f"search exceeded {self.max_nodes} nodes")

    def run(self):
        P = self.inst.num_parts
        domains = {v: (1 << int(n)) - 1 for v, n in enumerate(self.inst.sizes)}
        if self.prune:
            self._fc(domains, {})
        else:
            self._plain(0, {})

    # forward checking, smallest remaining domain first (lowest index on ties)
    def _fc(self, domains: dict[int, int], assigned: dict[int, int]) -> bool:
        self._tick()
        if not domains:
            self.count += 1
            if self.found is None:
                self.found = dict(assigned)
            return not self.count_all
        v = min(domains, key=lambda u: (domains[u].bit_count(), u))
        off = int(self.inst.offsets[v])
        rest = {u: m for u, m in domains.items() if u != v}
        for s in _slots(domains[v]):
            kills = self.kill[off + s]
            nxt = {}
            for u, m in rest.items():
                k = kills.get(u)
                if k is not None:
                    m &= ~k
                    if not m:
                        break
                nxt[u] = m
            else:
                assigned[v] = s
                if self._fc(nxt, assigned):
                    return True
                del assigned[v]
        return False

    # plain backtracking in index order, checking against earlier parts only
    def _plain(self, v: int, assigned: dict[int, int]) -> bool:
        self._tick()
        if v == self.inst.num_parts:
            self.count += 1
            if self.found is None:
                self.found = dict(assigned)
            return not self.count_all
        off = int(self.inst.offsets[v])
        for s in range(int(self.inst.sizes[v])):
            kills = self.kill[off + s]
            if any(kills.get(u, 0) >> t & 1 for u, t in assigned.items()):
                continue
            assigned[v] = s
            if self._plain(v + 1, assigned):
                return True
            del assigned[v]
        return False


def find_transversal_exact(
    instance: CoverInstance, budget: SearchBudget = SearchBudget(), prune: bool = True
) -> SearchResult:
    s = _Search(instance, budget.max_nodes, budget.mode == "count-all", prune)
    try:
        s.run()
    except BudgetExhausted:
        return SearchResult("budget_exhausted", None, s.nodes)
    count = s.count if budget.mode == "count-all" else None
    if s.found is None:
        return SearchResult("none", None, s.nodes, count)
    return SearchResult("found", PartialColouring(s.found), s.nodes, count)


def count_transversals(instance: CoverInstance, budget: SearchBudget = SearchBudget(), prune: bool = True) -> int:
    s = _Search(instance, budget.max_nodes, True, prune)
    s.run()
    return s.count
