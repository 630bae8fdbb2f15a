"""Phase 1: trim high-degree colours, then halve lists repeatedly until the
colour multiplicity is small compared with the degree budget."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Optional

import numpy as np

from ._rng import substream
from .cover import (
    CoverInstance,
    Embedding,
    InstanceStats,
    colour_part_counts,
    restrict,
    stats,
    truncate_lists,
)


def trim_threshold(d: float) -> float:
    return d * math.sqrt(math.log(d))


def trim_high_degree(instance: CoverInstance, d: float, check: bool = True) -> tuple[CoverInstance, Embedding]:
    """Drop every colour of degree above d * sqrt(log d).

    With ``check`` the precondition avg degree <= d is enforced and the
    Markov bound on removals per part is asserted.
    """
    if d <= 1:
        raise ValueError("d must exceed 1")
    st = stats(instance)
    if check and st.max_avg_colour_degree > d:
        raise ValueError(f"max average colour degree {st.max_avg_colour_degree} exceeds d={d}")
    thr = trim_threshold(d)
    keep = {}
    for v in range(instance.num_parts):
        lo, hi = instance.offsets[v], instance.offsets[v + 1]
        deg = instance.degrees[lo:hi]
        kept = [int(s) for s in np.flatnonzero(deg <= thr)]
        if not kept:
            raise ValueError(f"trimming would empty the list of part {v}")
        if check:
            assert len(deg) - len(kept) <= len(deg) / math.sqrt(math.log(d)) + 1e-9
        keep[v] = kept
    return restrict(instance, keep)


def mate_pairs(instance: CoverInstance, part: int) -> list[tuple[int, int]]:
    """Slots sorted by (degree, slot) and paired consecutively."""
    lo, hi = instance.offsets[part], instance.offsets[part + 1]
    deg = instance.degrees[lo:hi]
    order = sorted(range(hi - lo), key=lambda s: (int(deg[s]), s))
    return [(order[2 * i], order[2 * i + 1]) for i in range(len(order) // 2)]


@dataclass
class HalvingOutcome:
    status: Literal["halved", "attempts_exhausted"]
    instance: Optional[CoverInstance] = None
    embedding: Optional[Embedding] = None
    attempts: int = 0
    accepted_clean: bool = False
    bad_events: int = 0
    mates: Optional[list] = None


def halving_bad_events(instance: CoverInstance, keep_mask: np.ndarray, d: float, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Colours violating the degree bound, and (colour, part) pairs violating
    the multiplicity bound, given the kept colours."""
    A = instance.adjacency
    new_deg = A @ keep_mask.astype(np.int64)
    bad_a = np.flatnonzero(new_deg > instance.degrees / 2 + d ** (4 / 7))
    c = instance.conflicts
    if len(c) == 0:
        return bad_a, np.zeros((0, 2), dtype=np.int64)
    src = np.concatenate([c[:, 0], c[:, 1]])
    dst = np.concatenate([c[:, 1], c[:, 0]])
    live = keep_mask[dst]
    src, dst = src[live], dst[live]
    P = max(instance.num_parts, 1)
    keys, counts = np.unique(src * P + instance.part_of[dst], return_counts=True)
    hit = keys[counts > mu / 2 + mu ** (4 / 7)]
    return bad_a, np.stack([hit // P, hit % P], axis=1)


def halve_lists(
    instance: CoverInstance,
    d: float,
    mu: float,
    seed: int,
    max_attempts: int = 100,
    strict: bool = False,
) -> HalvingOutcome:
    sizes = set(int(n) for n in instance.sizes)
    if len(sizes) > 1 or (sizes and next(iter(sizes)) % 2):
        raise ValueError(f"lists must have equal even sizes, got {sorted(sizes)}")
    if strict:
        _check_halving_hypotheses(instance, d, mu)
    pairs = [mate_pairs(instance, v) for v in range(instance.num_parts)]
    lo_idx = np.array([instance.offsets[v] + a for v, pp in enumerate(pairs) for a, _ in pp], dtype=np.int64)
    hi_idx = np.array([instance.offsets[v] + b for v, pp in enumerate(pairs) for _, b in pp], dtype=np.int64)
    best = None
    for attempt in range(max_attempts):
        rng = substream(seed, 2, attempt)
        pick_hi = rng.random(len(lo_idx)) < 0.5
        keep_mask = np.zeros(instance.num_colours, dtype=bool)
        keep_mask[np.where(pick_hi, hi_idx, lo_idx)] = True
        bad_a, bad_b = halving_bad_events(instance, keep_mask, d, mu)
        n_bad = len(bad_a) + len(bad_b)
        if n_bad == 0:
            return _halved(instance, keep_mask, attempt + 1, True, 0, pairs, d, mu, strict)
        if best is None or n_bad < best[0]:
            best = (n_bad, keep_mask, attempt)
    if strict or best is None:
        return HalvingOutcome("attempts_exhausted", attempts=max_attempts, bad_events=best[0] if best else 0)
    return _halved(instance, best[1], max_attempts, False, best[0], pairs, d, mu, strict)


def _halved(instance, keep_mask, attempts, clean, n_bad, pairs, d, mu, strict) -> HalvingOutcome:
    keep = {}
    for v in range(instance.num_parts):
        lo = instance.offsets[v]
        keep[v] = [int(s) for s in np.flatnonzero(keep_mask[lo:instance.offsets[v + 1]])]
    sub, emb = restrict(instance, keep)
    if strict:
        ok, msg = halving_conclusions(sub, d, mu)
        if not ok:
            raise AssertionError(msg)
    return HalvingOutcome("halved", sub, emb, attempts, clean, n_bad, pairs)


def halving_conclusions(out: CoverInstance, d: float, mu: float) -> tuple[bool, str]:
    st = stats(out)
    problems = []
    if st.max_avg_colour_degree > d / 2 + d ** 0.6:
        problems.append(f"avg degree {float(st.max_avg_colour_degree):.3f} > d/2 + d^(3/5)")
    if st.max_degree > d * math.log(d) / 2 + d ** 0.6:
        problems.append(f"max degree {st.max_degree} > (d log d)/2 + d^(3/5)")
    if st.max_colour_multiplicity > mu / 2 + mu ** 0.6:
        problems.append(f"multiplicity {st.max_colour_multiplicity} > mu/2 + mu^(3/5)")
    return not problems, "; ".join(problems)


def _check_halving_hypotheses(instance: CoverInstance, d: float, mu: float):
    st = stats(instance)
    s = st.min_list_size // 2
    problems = []
    if s < d / 2:
        problems.append("need s >= d/2")
    if st.max_avg_colour_degree > d:
        problems.append("avg degree exceeds d")
    if st.max_degree > d * math.log(d):
        problems.append("max degree exceeds d log d")
    if st.max_colour_multiplicity > mu:
        problems.append("multiplicity exceeds mu")
    if not mu > math.log(d) ** 10:
        problems.append("need mu > log^10 d")
    if problems:
        raise ValueError("; ".join(problems))


# -- full reduction -----------------------------------------------------------


def halving_rounds(gamma: float, d: float) -> int:
    """The integer j >= 1 with 2^(j-1) < gamma^(6/5) d <= 2^j."""
    x = gamma ** 1.2 * d
    j = max(1, math.ceil(math.log2(x)))
    while j > 1 and 2 ** (j - 1) >= x:
        j -= 1
    while 2**j < x:
        j += 1
    return j


def next_d(d: float) -> float:
    return d / 2 + d ** (2 / 3)


@dataclass
class TraceStep:
    d: float
    s: int
    mu: float
    attempts_used: int = 0
    accepted_clean: bool = True
    bad_events: int = 0


@dataclass
class ReductionTrace:
    gamma: float
    d: float
    epsilon: float
    j: int = 0
    s0: int = 0
    steps: list = field(default_factory=list)
    conditions: dict = field(default_factory=dict)
    final_stats: Optional[InstanceStats] = None

    def to_dict(self) -> dict:
        out = {
            "gamma": self.gamma,
            "d": self.d,
            "epsilon": self.epsilon,
            "j": self.j,
            "s0": self.s0,
            "steps": [asdict(s) for s in self.steps],
            "conditions": self.conditions,
        }
        if self.final_stats is not None:
            out["final_stats"] = self.final_stats.to_dict()
        return out


@dataclass
class ReduceOutcome:
    status: Literal["reduced", "shortcut", "attempts_exhausted"]
    instance: Optional[CoverInstance]
    embedding: Optional[Embedding]
    trace: ReductionTrace
    d_out: float = 0.0


def reduce(
    instance: CoverInstance,
    epsilon: float,
    gamma: float,
    seed: int,
    max_attempts: int = 100,
    strict: bool = False,
    d: Optional[float] = None,
) -> ReduceOutcome:
    """Trim, truncate to a common size divisible by 2^j, halve j times, trim again.

    ``d`` defaults to the measured maximum average colour degree.
    """
    st = stats(instance)
    if d is None:
        d = float(st.max_avg_colour_degree)
    if epsilon <= 0 or gamma <= 0:
        raise ValueError("epsilon and gamma must be positive")
    if d <= 1:
        raise ValueError("d must exceed 1")
    problems = []
    if st.min_list_size < (1 + epsilon) * d:
        problems.append(f"min list size {st.min_list_size} < (1+eps) d = {(1 + epsilon) * d:.3f}")
    if st.max_avg_colour_degree > d:
        problems.append("max average colour degree exceeds d")
    if st.max_colour_multiplicity > gamma * d:
        problems.append(f"multiplicity {st.max_colour_multiplicity} > gamma d = {gamma * d:.3f}")
    if problems:
        raise ValueError("; ".join(problems))

    trace = ReductionTrace(gamma=gamma, d=d, epsilon=epsilon)
    h0, emb = trim_high_degree(instance, d)
    if gamma ** (-1.2) >= d:
        trace.final_stats = stats(h0)
        return ReduceOutcome("shortcut", h0, emb, trace, d)

    j = halving_rounds(gamma, d)
    block = 2**j
    s0 = (int(h0.sizes.min()) // block) * block
    trace.j = j
    trace.s0 = s0
    trace.conditions["s0_lower_bound"] = s0 >= (1 + 9 * epsilon / 10) * d - block
    if s0 == 0:
        raise ValueError(f"lists too short to halve {j} times")
    if strict and not trace.conditions["s0_lower_bound"]:
        raise ValueError("s0 below (1 + 9 eps/10) d - 2^j")
    cur, e2 = truncate_lists(h0, [s0] * h0.num_parts)
    emb = emb.compose(e2)

    d_t, s_t, mu_t = d, s0, gamma * d
    trace.steps.append(TraceStep(d_t, s_t, mu_t))
    for t in range(j):
        out = halve_lists(cur, d_t, mu_t, seed=_step_seed(seed, t), max_attempts=max_attempts, strict=strict)
        if out.status != "halved":
            trace.steps[-1].attempts_used = out.attempts
            return ReduceOutcome("attempts_exhausted", None, None, trace, d_t)
        cur = out.instance
        emb = emb.compose(out.embedding)
        d_t, s_t, mu_t = next_d(d_t), s_t // 2, next_d(mu_t)
        trace.steps.append(TraceStep(d_t, s_t, mu_t, out.attempts, out.accepted_clean, out.bad_events))

    ds = [s.d for s in trace.steps]
    mus = [s.mu for s in trace.steps]
    trace.conditions["degree_bound"] = gamma ** (-1.2) / 2 < ds[-1] <= (1 + epsilon / 10) * d / block
    trace.conditions["multiplicity_ub"] = mus[-1] <= 8 * ds[-1] ** (1 / 6)
    trace.conditions["multiplicity_lb"] = all(mus[t] > math.log(ds[t]) ** 10 for t in range(j))
    if strict:
        failed = [k for k in ("degree_bound", "multiplicity_ub", "multiplicity_lb") if not trace.conditions[k]]
        if failed:
            raise AssertionError(f"reduction conditions failed: {failed}")

    # adaptive runs may end above the recurrence budget
    d_final = d_t if strict else max(d_t, float(stats(cur).max_avg_colour_degree))
    final, e3 = trim_high_degree(cur, d_final, check=strict)
    emb = emb.compose(e3)
    trace.final_stats = stats(final)
    return ReduceOutcome("reduced", final, emb, trace, d_final)


def _step_seed(seed: int, t: int) -> int:
    return int(substream(seed, 3, t).integers(0, 2**63))
