"""Seeded instance families."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from ._rng import substream
from .cover import CoverInstance, stats, validate
from .reductions import CorrespondenceAssignment, build_single_conflict_cover


def _labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def gen_random_cover(
    parts: int,
    list_size: int,
    edge_prob: float,
    base_density: float,
    max_multiplicity_cap: int,
    seed: int,
) -> CoverInstance:
    if list_size < 1 or max_multiplicity_cap < 1 or parts < 0:
        raise ValueError("list_size and cap must be >= 1")
    if not (0 <= edge_prob <= 1 and 0 <= base_density <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = substream(seed)
    s, cap = list_size, max_multiplicity_cap
    base, conflicts = [], []
    for u, v in itertools.combinations(range(parts), 2):
        if rng.random() >= base_density:
            continue
        base.append((u, v, 1))
        m = rng.random((s, s)) < edge_prob
        # thin rows, then columns, deleting random excess entries
        for axis in (1, 0):
            mm = m if axis == 1 else m.T
            for r in np.flatnonzero(mm.sum(axis=1) > cap):
                on = np.flatnonzero(mm[r])
                mm[r, rng.choice(on, size=len(on) - cap, replace=False)] = False
        a, b = np.nonzero(m)
        conflicts.extend(((u, int(x)), (v, int(y))) for x, y in zip(a, b))
    return CoverInstance.from_refs([_labels(s)] * parts, base, conflicts)


def gen_matching_cover(parts: int, list_size: int, pair_prob: float, base_density: float, seed: int) -> CoverInstance:
    """Correspondence-style cover: every base edge carries a random partial
    matching whose size is Binomial(list_size, pair_prob), so mu <= 1."""
    if list_size < 1 or parts < 0:
        raise ValueError("list_size must be >= 1")
    if not (0 <= pair_prob <= 1 and 0 <= base_density <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = substream(seed)
    s = list_size
    base, rows = [], []
    for u, v in itertools.combinations(range(parts), 2):
        if rng.random() >= base_density:
            continue
        base.append((u, v, 1))
        m = rng.binomial(s, pair_prob)
        left = rng.choice(s, size=m, replace=False)
        right = rng.choice(s, size=m, replace=False)
        rows.append(np.stack([np.full(m, u), left, np.full(m, v), right], axis=1))
    refs = np.concatenate(rows) if rows else np.zeros((0, 4), dtype=np.int64)
    return CoverInstance.from_refs([_labels(s)] * parts, base, refs.reshape(-1, 2, 2))


def tune_edge_prob(
    parts: int, list_size: int, base_density: float, target_d: float, seeds: Sequence[int] = range(3),
    cap: int | None = None,
) -> float:
    """Edge probability whose expected max average degree is near ``target_d``,
    found by bisection on the mean over ``seeds``."""
    cap = cap or list_size

    def mean_d(q):
        return np.mean([
            float(stats(gen_random_cover(parts, list_size, q, base_density, cap, s)).max_avg_colour_degree)
            for s in seeds
        ])

    lo, hi = 0.0, 1.0
    for _ in range(12):
        mid = (lo + hi) / 2
        if mean_d(mid) < target_d:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def random_regular_multigraph(n: int, k: int, seed: int) -> list[tuple[int, int, int]]:
    """Loopless k-regular multigraph on n vertices from the configuration model.

    Loops are removed by swapping an endpoint with a random other pairing.
    """
    if n * k % 2:
        raise ValueError("n * k must be even")
    if n < 2 and k > 0:
        raise ValueError("need at least two vertices")
    rng = substream(seed)
    stubs = rng.permutation(np.repeat(np.arange(n), k)).reshape(-1, 2)
    M = len(stubs)
    for _ in range(100 * max(M, 1)):
        loops = np.flatnonzero(stubs[:, 0] == stubs[:, 1])
        if not len(loops):
            break
        i = int(loops[0])
        j = int(rng.integers(M))
        if j == i:
            continue
        a, b = stubs[j]
        x = stubs[i, 0]
        if a != x and b != x:
            stubs[i, 1], stubs[j, 0] = a, x
    else:
        raise RuntimeError("could not remove loops")
    pairs = np.sort(stubs, axis=1)
    keys, counts = np.unique(pairs, axis=0, return_counts=True)
    return [(int(u), int(v), int(m)) for (u, v), m in zip(keys, counts)]


def gen_single_conflict(base: Sequence[Sequence[int]], num_vertices: int, list_size: int, seed: int) -> CoverInstance:
    """One random conflict per base-edge occurrence; parallel occurrences get
    distinct pairs (sampled without replacement)."""
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    rng = substream(seed)
    s = list_size
    edges, matchings = [], []
    for e in base:
        u, v = int(e[0]), int(e[1])
        m = int(e[2]) if len(e) > 2 else 1
        if m > s * s:
            raise ValueError(f"multiplicity {m} on ({u}, {v}) exceeds the {s * s} available pairs")
        for code in rng.choice(s * s, size=m, replace=False):
            edges.append((u, v))
            matchings.append(((int(code) // s, int(code) % s),))
    ca = CorrespondenceAssignment(num_vertices, tuple(edges), (_labels(s),) * num_vertices, tuple(matchings))
    return build_single_conflict_cover(ca)


def gen_egl(n: int, k: int, pair_edge_prob: float, seed: int) -> CoverInstance:
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    rng = substream(seed)
    base, conflicts = [], []
    for u, v in itertools.combinations(range(n), 2):
        base.append((u, v, 1))
        if rng.random() < pair_edge_prob:
            a, b = rng.integers(k, size=2)
            conflicts.append(((u, int(a)), (v, int(b))))
    inst = CoverInstance.from_refs([_labels(k)] * n, base, conflicts)
    assert stats(inst).max_avg_colour_degree <= Fraction(n - 1, k)
    return inst


@dataclass
class GenSpec:
    family: Literal["random_cover", "matching_cover", "list_cover", "single_conflict", "egl"]
    seed: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def generate(spec: GenSpec) -> CoverInstance:
    """Dispatch on ``spec.family``.

    ``single_conflict`` takes ``parts``, ``degree`` (regular base) and
    ``list_size``; ``list_cover`` takes ``parts``, ``base_density``,
    ``list_size`` and ``palette`` (lists are random subsets of the palette).
    """
    p = dict(spec.params)
    if spec.family == "random_cover":
        inst = gen_random_cover(
            p["parts"], p["list_size"], p.get("edge_prob", 0.1), p.get("base_density", 1.0),
            p.get("cap", p["list_size"]), spec.seed,
        )
    elif spec.family == "single_conflict":
        n = p["parts"]
        base = random_regular_multigraph(n, p["degree"], int(substream(spec.seed, 7).integers(2**63)))
        inst = gen_single_conflict(base, n, p["list_size"], spec.seed)
    elif spec.family == "matching_cover":
        inst = gen_matching_cover(p["parts"], p["list_size"], p.get("pair_prob", 0.5), p.get("base_density", 1.0),
                                  spec.seed)
    elif spec.family == "egl":
        inst = gen_egl(p["n"], p["k"], p.get("pair_edge_prob", 1.0), spec.seed)
    elif spec.family == "list_cover":
        inst = gen_list_cover(p["parts"], p["list_size"], p.get("palette", 2 * p["list_size"]),
                              p.get("base_density", 0.5), spec.seed)
    else:
        raise ValueError(f"unknown family {spec.family!r}")
    assert not validate(inst)
    return inst


def gen_list_cover(parts: int, list_size: int, palette: int, base_density: float, seed: int) -> CoverInstance:
    from .reductions import ListAssignment, build_list_cover

    if not 1 <= list_size <= palette:
        raise ValueError("need 1 <= list_size <= palette")
    rng = substream(seed)
    edges = [(u, v, 1) for u, v in itertools.combinations(range(parts), 2) if rng.random() < base_density]
    lists = tuple(tuple(str(c) for c in sorted(rng.choice(palette, size=list_size, replace=False))) for _ in range(parts))
    return build_list_cover(ListAssignment(parts, tuple(edges), lists))
