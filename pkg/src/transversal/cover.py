"""Vertex-partitioned cover graphs.

A cover instance is a base multigraph G on parts 0..P-1, an ordered list of
colours per part, and a conflict graph H whose vertices are the colours.
Colours are addressed by ``ColourRef(part, slot)``; internally every colour
also has a global id ``offset[part] + slot`` so that H can be stored as a
sorted (E, 2) integer array and a CSR adjacency matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp


class ColourRef(NamedTuple):
    part: int
    slot: int


class InstanceError(ValueError):
    """Raised when an instance violates the cover-graph invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid instance")


class EmptyListError(ValueError):
    pass


class Violation(NamedTuple):
    kind: str
    where: tuple

    def __str__(self):
        return f"{self.kind} at {self.where}"


@dataclass(frozen=True, eq=False)
class CoverInstance:
    """Immutable cover instance.

    ``conflicts`` holds global colour ids, each row ``(lo, hi)`` with
    ``lo < hi``, rows sorted lexicographically. Use :meth:`from_refs` to build
    one from (part, slot) pairs.
    """

    lists: tuple[tuple[str, ...], ...]
    base_edges: tuple[tuple[int, int, int], ...]
    conflicts: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.conflicts, dtype=np.int64).reshape(-1, 2)
        if len(c):
            c = np.sort(c, axis=1)
            c = c[np.lexsort((c[:, 1], c[:, 0]))]
        c.setflags(write=False)
        object.__setattr__(self, "conflicts", c)

    @classmethod
    def from_refs(
        cls,
        lists: Sequence[Sequence[str]],
        base_edges: Iterable[Sequence[int]],
        conflicts: Iterable[tuple[Sequence[int], Sequence[int]]],
        check: bool = True,
    ) -> "CoverInstance":
        lists = tuple(tuple(str(x) for x in lst) for lst in lists)
        merged: dict[tuple[int, int], int] = {}
        for e in base_edges:
            u, v = int(e[0]), int(e[1])
            m = int(e[2]) if len(e) > 2 else 1
            key = (min(u, v), max(u, v))
            merged[key] = merged.get(key, 0) + m
        edges = tuple(sorted((u, v, m) for (u, v), m in merged.items()))
        sizes = [len(lst) for lst in lists]
        offsets = np.concatenate([[0], np.cumsum(sizes, dtype=np.int64)])
        refs = conflicts if isinstance(conflicts, np.ndarray) else list(conflicts)
        refs = np.asarray(refs, dtype=np.int64).reshape(-1, 2, 2)
        part, slot = refs[..., 0], refs[..., 1]
        size_arr = np.asarray(sizes, dtype=np.int64)
        ok = (part >= 0) & (part < len(lists))
        ok[ok] &= (slot[ok] >= 0) & (slot[ok] < size_arr[part[ok]])
        if not ok.all():
            i, j = np.argwhere(~ok)[0]
            raise InstanceError([Violation("colour out of range", (int(part[i, j]), int(slot[i, j])))])
        inst = cls(lists, edges, offsets[part] + slot)
        if check:
            problems = validate(inst)
            if problems:
                raise InstanceError(problems)
        return inst

    # -- derived structure -------------------------------------------------

    @property
    def num_parts(self) -> int:
        return len(self.lists)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([len(x) for x in self.lists], dtype=np.int64)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)

    @property
    def num_colours(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def part_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_parts, dtype=np.int64), self.sizes)

    @cached_property
    def slot_of(self) -> np.ndarray:
        return np.arange(self.num_colours, dtype=np.int64) - self.offsets[self.part_of]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.conflicts.ravel(), minlength=self.num_colours).astype(np.int64)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 CSR matrix of H over global colour ids."""
        n = self.num_colours
        c = self.conflicts
        r = np.concatenate([c[:, 0], c[:, 1]])
        q = np.concatenate([c[:, 1], c[:, 0]])
        m = sp.csr_matrix((np.ones(len(r), dtype=np.int64), (r, q)), shape=(n, n))
        m.sum_duplicates()
        m.sort_indices()
        return m

    @cached_property
    def edge_index(self) -> sp.csr_matrix:
        """CSR matrix whose entry (a, b) is 1 + the row index of conflict {a, b}."""
        n = self.num_colours
        c = self.conflicts
        idx = np.arange(1, len(c) + 1, dtype=np.int64)
        m = sp.csr_matrix(
            (np.concatenate([idx, idx]), (np.concatenate([c[:, 0], c[:, 1]]), np.concatenate([c[:, 1], c[:, 0]]))),
            shape=(n, n),
        )
        m.sort_indices()
        return m

    def neighbours(self, colour: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[colour]:a.indptr[colour + 1]]

    @cached_property
    def base_neighbours(self) -> tuple[frozenset, ...]:
        nb = [set() for _ in range(self.num_parts)]
        for u, v, _ in self.base_edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(frozenset(s) for s in nb)

    @cached_property
    def base_matrix(self) -> sp.csr_matrix:
        """Simple 0/1 base adjacency over parts (multiplicity ignored)."""
        P = self.num_parts
        if not self.base_edges:
            return sp.csr_matrix((P, P), dtype=np.int64)
        e = np.array([(u, v) for u, v, _ in self.base_edges], dtype=np.int64)
        r = np.concatenate([e[:, 0], e[:, 1]])
        q = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((np.ones(len(r), dtype=np.int64), (r, q)), shape=(P, P))

    @cached_property
    def base_degrees(self) -> np.ndarray:
        d = np.zeros(self.num_parts, dtype=np.int64)
        for u, v, m in self.base_edges:
            d[u] += m
            d[v] += m
        return d

    def gid(self, part: int, slot: int) -> int:
        return int(self.offsets[part]) + int(slot)

    def ref(self, colour: int) -> ColourRef:
        return ColourRef(int(self.part_of[colour]), int(self.slot_of[colour]))

    def conflict_refs(self) -> list[tuple[ColourRef, ColourRef]]:
        return [(self.ref(a), self.ref(b)) for a, b in self.conflicts]

    def label(self, ref: ColourRef) -> str:
        return self.lists[ref.part][ref.slot]

    def __eq__(self, other):
        if not isinstance(other, CoverInstance):
            return NotImplemented
        return (
            self.lists == other.lists
            and self.base_edges == other.base_edges
            and np.array_equal(self.conflicts, other.conflicts)
        )

    __hash__ = None

    # -- canonical JSON ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "parts": [list(x) for x in self.lists],
            "base_edges": [list(e) for e in self.base_edges],
            "conflicts": [[list(a), list(b)] for a, b in self.conflict_refs()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, obj: Mapping) -> "CoverInstance":
        try:
            parts = obj["parts"]
            edges = obj.get("base_edges", [])
            conflicts = obj.get("conflicts", [])
        except (KeyError, TypeError, AttributeError) as exc:
            raise InstanceError([Violation("malformed instance object", (str(exc),))]) from exc
        return cls.from_refs(parts, edges, [(a, b) for a, b in conflicts])

    @classmethod
    def from_json(cls, text: str) -> "CoverInstance":
        return cls.from_dict(json.loads(text))


def validate(instance: CoverInstance) -> list[Violation]:
    out: list[Violation] = []
    P = instance.num_parts
    for v, lst in enumerate(instance.lists):
        if not lst:
            out.append(Violation("empty list", (v,)))
    base = set()
    for u, v, m in instance.base_edges:
        if not (0 <= u < P and 0 <= v < P):
            out.append(Violation("base edge out of range", (u, v)))
        elif u == v:
            out.append(Violation("base loop", (u,)))
        if m < 1:
            out.append(Violation("non-positive multiplicity", (u, v, m)))
        base.add((u, v))
    c = instance.conflicts
    if len(c) == 0:
        return out
    if c.min() < 0 or c.max() >= instance.num_colours:
        out.append(Violation("colour out of range", ()))
        return out
    po = instance.part_of
    for i in np.flatnonzero(c[:, 0] == c[:, 1]):
        out.append(Violation("self-loop conflict", tuple(instance.ref(c[i, 0]))))
    dup = np.flatnonzero(np.all(c[1:] == c[:-1], axis=1))
    for i in dup:
        out.append(Violation("parallel conflict edge", (tuple(instance.ref(c[i, 0])), tuple(instance.ref(c[i, 1])))))
    pa, pb = po[c[:, 0]], po[c[:, 1]]
    for i in np.flatnonzero((pa == pb) & (c[:, 0] != c[:, 1])):
        out.append(Violation("intra-part edge", (tuple(instance.ref(c[i, 0])), tuple(instance.ref(c[i, 1])))))
    base_keys = np.array(sorted(u * P + v for u, v in base if 0 <= u < P and 0 <= v < P), dtype=np.int64)
    keys = np.minimum(pa, pb) * P + np.maximum(pa, pb)
    for i in np.flatnonzero((pa != pb) & ~np.isin(keys, base_keys)):
        out.append(Violation("cover-graph property", (tuple(instance.ref(c[i, 0])), tuple(instance.ref(c[i, 1])))))
    return out


@dataclass(frozen=True)
class InstanceStats:
    max_degree: int
    max_avg_colour_degree: Fraction
    max_colour_multiplicity: int
    max_avg_colour_multiplicity: Fraction
    base_max_degree: int
    min_list_size: int
    max_list_size: int

    def to_dict(self) -> dict:
        return {
            "max_degree": self.max_degree,
            "max_avg_colour_degree": str(self.max_avg_colour_degree),
            "mu": self.max_colour_multiplicity,
            "mu_bar": str(self.max_avg_colour_multiplicity),
            "base_max_degree": self.base_max_degree,
            "min_list_size": self.min_list_size,
            "max_list_size": self.max_list_size,
        }


def colour_part_counts(instance: CoverInstance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (colour, other_part, count) for every colour with a neighbour in other_part."""
    c = instance.conflicts
    if len(c) == 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    po = instance.part_of
    src = np.concatenate([c[:, 0], c[:, 1]])
    dst_part = po[np.concatenate([c[:, 1], c[:, 0]])]
    keys = src * max(instance.num_parts, 1) + dst_part
    uniq, counts = np.unique(keys, return_counts=True)
    P = max(instance.num_parts, 1)
    return uniq // P, uniq % P, counts


def stats(instance: CoverInstance) -> InstanceStats:
    sizes = instance.sizes
    deg = instance.degrees
    P = instance.num_parts
    sums = [int(x) for x in np.bincount(instance.part_of, weights=deg, minlength=P).round()] if P else []
    avg = max((Fraction(s, int(n)) for s, n in zip(sums, sizes) if n), default=Fraction(0))
    _, _, counts = colour_part_counts(instance)
    mu = int(counts.max()) if len(counts) else 0
    # conflicts between each base pair, averaged over the smaller list
    mu_bar = Fraction(0)
    if instance.base_edges:
        po = instance.part_of
        c = instance.conflicts
        between: dict[tuple[int, int], int] = {}
        if len(c):
            pa, pb = po[c[:, 0]], po[c[:, 1]]
            keys, cnt = np.unique(np.minimum(pa, pb) * P + np.maximum(pa, pb), return_counts=True)
            between = {(int(k) // P, int(k) % P): int(n) for k, n in zip(keys, cnt)}
        for u, v, _ in instance.base_edges:
            e = between.get((u, v), 0)
            mu_bar = max(mu_bar, Fraction(e, int(sizes[u])), Fraction(e, int(sizes[v])))
    return InstanceStats(
        max_degree=int(deg.max()) if len(deg) else 0,
        max_avg_colour_degree=avg,
        max_colour_multiplicity=mu,
        max_avg_colour_multiplicity=mu_bar,
        base_max_degree=int(instance.base_degrees.max()) if P else 0,
        min_list_size=int(sizes.min()) if P else 0,
        max_list_size=int(sizes.max()) if P else 0,
    )


def avg_colour_degrees(instance: CoverInstance) -> list[Fraction]:
    """Exact per-part average colour degree."""
    sums = np.bincount(instance.part_of, weights=instance.degrees, minlength=instance.num_parts)
    return [Fraction(int(round(s)), int(n)) for s, n in zip(sums, instance.sizes)]


@dataclass(frozen=True)
class PartialColouring:
    """Map part -> slot on a subset of parts."""

    assignment: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignment", {int(k): int(v) for k, v in dict(self.assignment).items()})

    @classmethod
    def from_refs(cls, refs: Iterable[Sequence[int]]) -> "PartialColouring":
        out = {}
        for part, slot in refs:
            if int(part) in out:
                raise ValueError(f"part {part} coloured twice")
            out[int(part)] = int(slot)
        return cls(out)

    def refs(self) -> list[ColourRef]:
        return [ColourRef(v, s) for v, s in sorted(self.assignment.items())]

    def __len__(self):
        return len(self.assignment)

    def __contains__(self, part):
        return part in self.assignment

    def colour(self, part: int) -> ColourRef:
        return ColourRef(part, self.assignment[part])

    def merged(self, other: "PartialColouring") -> "PartialColouring":
        overlap = set(self.assignment) & set(other.assignment)
        if overlap:
            raise ValueError(f"colourings overlap on parts {sorted(overlap)}")
        return PartialColouring({**self.assignment, **other.assignment})

    def chosen(self, instance: CoverInstance) -> np.ndarray:
        if not self.assignment:
            return np.zeros(0, dtype=np.int64)
        parts = np.fromiter(self.assignment.keys(), dtype=np.int64)
        slots = np.fromiter(self.assignment.values(), dtype=np.int64)
        if (parts < 0).any() or (parts >= instance.num_parts).any():
            raise ValueError("colouring references a part outside the instance")
        if (slots < 0).any() or (slots >= instance.sizes[parts]).any():
            raise ValueError("colouring references a slot outside its list")
        return instance.offsets[parts] + slots


def conflicting_pairs(instance: CoverInstance, colouring: PartialColouring) -> np.ndarray:
    """Rows of ``instance.conflicts`` whose endpoints are both chosen."""
    mask = np.zeros(instance.num_colours, dtype=bool)
    mask[colouring.chosen(instance)] = True
    c = instance.conflicts
    return c[mask[c[:, 0]] & mask[c[:, 1]]]


def is_proper(instance: CoverInstance, colouring: PartialColouring) -> bool:
    return len(conflicting_pairs(instance, colouring)) == 0


def is_independent_transversal(instance: CoverInstance, colouring: PartialColouring) -> bool:
    if set(colouring.assignment) != set(range(instance.num_parts)):
        return False
    try:
        return is_proper(instance, colouring)
    except ValueError:
        return False


@dataclass(frozen=True)
class Embedding:
    """Injection of a derived instance into its parent.

    ``parts[i]`` is the parent part of derived part i and ``slots[i][k]`` is
    the parent slot of derived colour (i, k).
    """

    parts: tuple[int, ...]
    slots: tuple[tuple[int, ...], ...]

    @classmethod
    def identity(cls, instance: CoverInstance) -> "Embedding":
        return cls(tuple(range(instance.num_parts)), tuple(tuple(range(len(x))) for x in instance.lists))

    def lift(self, part: int, slot: int) -> ColourRef:
        return ColourRef(self.parts[part], self.slots[part][slot])

    def compose(self, inner: "Embedding") -> "Embedding":
        """``inner`` maps C -> B and ``self`` maps B -> A; the result maps C -> A."""
        return Embedding(
            tuple(self.parts[p] for p in inner.parts),
            tuple(tuple(self.slots[p][s] for s in ss) for p, ss in zip(inner.parts, inner.slots)),
        )

    def lift_colouring(self, colouring: PartialColouring) -> PartialColouring:
        return PartialColouring({self.parts[v]: self.slots[v][s] for v, s in colouring.assignment.items()})


def restrict(instance: CoverInstance, keep: Mapping[int, Sequence[int]]) -> tuple[CoverInstance, Embedding]:
    """Sub-instance induced on the given parts (ascending) and kept slots (ascending)."""
    parts = sorted(keep)
    new_gid = np.full(instance.num_colours, -1, dtype=np.int64)
    lists = []
    slots = []
    nxt = 0
    for p in parts:
        ss = sorted(set(int(s) for s in keep[p]))
        slots.append(tuple(ss))
        lists.append(tuple(instance.lists[p][s] for s in ss))
        if ss:
            new_gid[instance.offsets[p] + np.array(ss, dtype=np.int64)] = np.arange(nxt, nxt + len(ss))
        nxt += len(ss)
    c = instance.conflicts
    if len(c):
        a, b = new_gid[c[:, 0]], new_gid[c[:, 1]]
        ok = (a >= 0) & (b >= 0)
        conf = np.stack([a[ok], b[ok]], axis=1)
    else:
        conf = np.zeros((0, 2), dtype=np.int64)
    new_part = {p: i for i, p in enumerate(parts)}
    edges = tuple(
        (new_part[u], new_part[v], m) for u, v, m in instance.base_edges if u in new_part and v in new_part
    )
    sub = CoverInstance(tuple(lists), tuple(sorted(edges)), conf)
    return sub, Embedding(tuple(parts), tuple(slots))


@dataclass(frozen=True)
class ResidualView:
    parent: CoverInstance
    colouring: PartialColouring
    surviving: Mapping[int, tuple[int, ...]]

    def materialize(self) -> tuple[CoverInstance, Embedding]:
        empty = [v for v, ss in self.surviving.items() if not ss]
        if empty:
            raise EmptyListError(f"no useable colour left for parts {empty}")
        return restrict(self.parent, self.surviving)


def useable_mask(instance: CoverInstance, colouring: PartialColouring) -> np.ndarray:
    chosen = np.zeros(instance.num_colours, dtype=np.int64)
    chosen[colouring.chosen(instance)] = 1
    return (instance.adjacency @ chosen) == 0


def apply_colouring(instance: CoverInstance, colouring: PartialColouring) -> ResidualView:
    bad = conflicting_pairs(instance, colouring)
    if len(bad):
        a, b = bad[0]
        raise ValueError(f"colouring is not proper: {instance.ref(a)} conflicts with {instance.ref(b)}")
    ok = useable_mask(instance, colouring)
    surviving = {}
    for v in range(instance.num_parts):
        if v in colouring:
            continue
        lo, hi = instance.offsets[v], instance.offsets[v + 1]
        surviving[v] = tuple(int(s) for s in np.flatnonzero(ok[lo:hi]))
    return ResidualView(instance, colouring, surviving)


class TruncationStep(NamedTuple):
    part: int
    slot: int
    degree: int
    part_avg_before: Fraction


def truncation_steps(instance: CoverInstance, targets: Sequence[int]) -> Iterator[TruncationStep]:
    """Removals in order: parts ascending, each time a colour of maximum current
    degree (lowest slot on ties), with degrees updated after every removal."""
    if len(targets) != instance.num_parts:
        raise ValueError("need one target per part")
    for v, t in enumerate(targets):
        if t < 1 or t > instance.sizes[v]:
            raise ValueError(f"target {t} invalid for part {v} of size {instance.sizes[v]}")
    deg = instance.degrees.copy()
    alive = np.ones(instance.num_colours, dtype=bool)
    adj = instance.adjacency
    for v, t in enumerate(targets):
        lo, hi = int(instance.offsets[v]), int(instance.offsets[v + 1])
        for _ in range(hi - lo - int(t)):
            idx = np.flatnonzero(alive[lo:hi])
            d = deg[lo + idx]
            avg = Fraction(int(d.sum()), len(idx))
            k = idx[int(np.argmax(d))]  # argmax returns the first maximum
            g = lo + int(k)
            yield TruncationStep(v, int(k), int(deg[g]), avg)
            alive[g] = False
            nb = adj.indices[adj.indptr[g]:adj.indptr[g + 1]]
            nb = nb[alive[nb]]
            deg[nb] -= 1


def truncate_lists(instance: CoverInstance, targets: Sequence[int]) -> tuple[CoverInstance, Embedding]:
    removed: dict[int, set[int]] = {}
    for step in truncation_steps(instance, targets):
        removed.setdefault(step.part, set()).add(step.slot)
    keep = {v: [s for s in range(n) if s not in removed.get(v, ())] for v, n in enumerate(instance.sizes)}
    return restrict(instance, keep)
