"""Cover graphs built from list, correspondence and single-conflict assignments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cover import CoverInstance


@dataclass(frozen=True)
class ListAssignment:
    num_vertices: int
    edges: tuple[tuple[int, int, int], ...]
    lists: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        lists = []
        for lst in self.lists:
            seen = list(dict.fromkeys(str(c) for c in lst))
            if not seen:
                raise ValueError("lists must be non-empty")
            lists.append(tuple(seen))
        if len(lists) != self.num_vertices:
            raise ValueError("need one list per vertex")
        object.__setattr__(self, "lists", tuple(lists))
        object.__setattr__(self, "edges", tuple(_edge(e) for e in self.edges))


@dataclass(frozen=True)
class CorrespondenceAssignment:
    """Lists plus one matching per base-edge occurrence.

    ``edges[i] = (u, v)`` and ``matchings[i]`` is a sequence of
    ``(slot in lists[u], slot in lists[v])`` pairs.
    """

    num_vertices: int
    edges: tuple[tuple[int, int], ...]
    lists: tuple[tuple[str, ...], ...]
    matchings: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "lists", tuple(tuple(str(c) for c in lst) for lst in self.lists))
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(
            self, "matchings", tuple(tuple((int(a), int(b)) for a, b in m) for m in self.matchings)
        )
        if len(self.edges) != len(self.matchings):
            raise ValueError("need one matching per edge occurrence")
        if len(self.lists) != self.num_vertices:
            raise ValueError("need one list per vertex")

    @classmethod
    def from_dict(cls, obj: Mapping) -> "CorrespondenceAssignment":
        """Read the instance JSON shape extended with ``matchings``.

        ``base_edges`` rows ``[u, v, m]`` expand to m occurrences in order;
        ``matchings`` has one entry per occurrence.
        """
        edges = []
        for e in obj.get("base_edges", []):
            m = int(e[2]) if len(e) > 2 else 1
            edges.extend([(int(e[0]), int(e[1]))] * m)
        return cls(len(obj["parts"]), tuple(edges), tuple(obj["parts"]), tuple(obj["matchings"]))

    def to_dict(self) -> dict:
        return {
            "parts": [list(x) for x in self.lists],
            "base_edges": [[u, v, 1] for u, v in self.edges],
            "matchings": [[list(p) for p in m] for m in self.matchings],
        }


def _edge(e) -> tuple[int, int, int]:
    u, v = int(e[0]), int(e[1])
    m = int(e[2]) if len(e) > 2 else 1
    return (u, v, m)


def build_list_cover(assignment: ListAssignment) -> CoverInstance:
    slot = [{c: i for i, c in enumerate(lst)} for lst in assignment.lists]
    conflicts = set()
    for u, v, _ in assignment.edges:
        for c in slot[u].keys() & slot[v].keys():
            a, b = (u, slot[u][c]), (v, slot[v][c])
            conflicts.add((min(a, b), max(a, b)))
    return CoverInstance.from_refs(assignment.lists, assignment.edges, sorted(conflicts))


def _matching_pairs(assignment: CorrespondenceAssignment, i: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    u, v = assignment.edges[i]
    m = assignment.matchings[i]
    left = [a for a, _ in m]
    right = [b for _, b in m]
    if len(set(left)) != len(left) or len(set(right)) != len(right):
        raise ValueError(f"pairing on edge occurrence {i} ({u}, {v}) is not a matching")
    out = []
    for a, b in m:
        if not (0 <= a < len(assignment.lists[u]) and 0 <= b < len(assignment.lists[v])):
            raise ValueError(f"pair ({a}, {b}) on edge occurrence {i} is out of range")
        x, y = (u, a), (v, b)
        out.append((min(x, y), max(x, y)))
    return out


def build_dp_cover(assignment: CorrespondenceAssignment) -> CoverInstance:
    conflicts = set()
    for i in range(len(assignment.edges)):
        conflicts.update(_matching_pairs(assignment, i))
    edges = [(u, v, 1) for u, v in assignment.edges]
    return CoverInstance.from_refs(assignment.lists, edges, sorted(conflicts))


def build_single_conflict_cover(assignment: CorrespondenceAssignment) -> CoverInstance:
    """DP cover where every edge occurrence carries exactly one conflicting pair.

    Parallel occurrences must use distinct pairs, so that the number of
    conflicts between two lists equals the edge multiplicity.
    """
    seen = set()
    for i, m in enumerate(assignment.matchings):
        if len(m) != 1:
            raise ValueError(f"edge occurrence {i} has a matching of size {len(m)}, expected 1")
        (pair,) = _matching_pairs(assignment, i)
        if pair in seen:
            raise ValueError(f"edge occurrence {i} repeats conflict {pair}")
        seen.add(pair)
    inst = build_dp_cover(assignment)
    sums, base = degree_identity(inst)
    assert np.array_equal(sums, base)
    return inst


def degree_identity(instance: CoverInstance) -> tuple[np.ndarray, np.ndarray]:
    """Per part: (sum of colour degrees, base degree with multiplicity)."""
    sums = np.bincount(instance.part_of, weights=instance.degrees, minlength=instance.num_parts)
    return sums.round().astype(np.int64), instance.base_degrees


def check_adaptable(assignment: CorrespondenceAssignment) -> bool:
    for (u, v), m in zip(assignment.edges, assignment.matchings):
        for a, b in m:
            if assignment.lists[u][a] != assignment.lists[v][b]:
                return False
    return True


def identity_correspondence(assignment: ListAssignment) -> CorrespondenceAssignment:
    """Matchings that pair equal labels on every edge occurrence."""
    edges, matchings = [], []
    for u, v, mult in assignment.edges:
        pos = {c: i for i, c in enumerate(assignment.lists[v])}
        pairs = tuple((i, pos[c]) for i, c in enumerate(assignment.lists[u]) if c in pos)
        for _ in range(mult):
            edges.append((u, v))
            matchings.append(pairs)
    return CorrespondenceAssignment(assignment.num_vertices, tuple(edges), assignment.lists, tuple(matchings))

