"""Shared fixtures and independent reference implementations for tests."""

from __future__ import annotations

import itertools

import numpy as np
from hypothesis import strategies as st

from transversal.cover import CoverInstance

# G = one edge uv; L(u) = [a, b]; L(v) = [c, d]; conflicts a-c, a-d, b-c.
A, B, C, D = (0, 0), (0, 1), (1, 0), (1, 1)
TINY1 = CoverInstance.from_refs([["a", "b"], ["c", "d"]], [(0, 1, 1)], [(A, C), (A, D), (B, C)])


def naive_count(inst: CoverInstance) -> int:
    """Product-space enumeration with a direct double loop over conflict edges."""
    conf = [(inst.ref(int(a)), inst.ref(int(b))) for a, b in inst.conflicts]
    n = 0
    for choice in itertools.product(*[range(len(l)) for l in inst.lists]):
        if all(choice[x.part] != x.slot or choice[y.part] != y.slot for x, y in conf):
            n += 1
    return n


def naive_is_it(inst: CoverInstance, assignment: dict) -> bool:
    if set(assignment) != set(range(inst.num_parts)):
        return False
    for a, b in inst.conflicts:
        x, y = inst.ref(int(a)), inst.ref(int(b))
        if assignment[x.part] == x.slot and assignment[y.part] == y.slot:
            return False
    return True


@st.composite
def small_instances(draw, max_parts=6, max_list=4, min_parts=1):
    n = draw(st.integers(min_parts, max_parts))
    sizes = [draw(st.integers(1, max_list)) for _ in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    base = [e for e in pairs if draw(st.booleans())]
    density = draw(st.floats(0, 1))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    conflicts = []
    for u, v in base:
        for a in range(sizes[u]):
            for b in range(sizes[v]):
                if rng.random() < density:
                    conflicts.append(((u, a), (v, b)))
    lists = [[f"{v}.{i}" for i in range(s)] for v, s in enumerate(sizes)]
    return CoverInstance.from_refs(lists, [(u, v, 1) for u, v in base], conflicts)


def random_small_instance(rng: np.random.Generator, max_parts=6, max_list=4) -> CoverInstance:
    n = int(rng.integers(1, max_parts + 1))
    sizes = rng.integers(1, max_list + 1, size=n)
    density = rng.random()
    base, conflicts = [], []
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < 0.6:
            base.append((u, v, 1))
            for a in range(sizes[u]):
                for b in range(sizes[v]):
                    if rng.random() < density:
                        conflicts.append(((u, a), (v, b)))
    return CoverInstance.from_refs([[str(i) for i in range(s)] for s in sizes], base, conflicts)
