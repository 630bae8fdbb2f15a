"""Two-phase driver: reduce, a scheduled sequence of nibble rounds, then the
resampling finisher. Every partial colouring is lifted back to the input
instance through the composed slot embeddings before stitching."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from ._rng import substream
from .cover import (
    CoverInstance,
    Embedding,
    PartialColouring,
    is_independent_transversal,
    stats,
    truncate_lists,
)
from .finisher import FinisherParams, PreconditionError, finish
from .nibble import NibbleParams, nibble_round
from .phase1 import reduce

log = logging.getLogger(__name__)


@dataclass
class Schedule:
    p: float
    epsilon: float
    d: list
    Lambda: list
    ratio: list
    i_star: int

    def to_dict(self) -> dict:
        return {"p": self.p, "epsilon": self.epsilon, "d": self.d, "Lambda": self.Lambda,
                "ratio": self.ratio, "i_star": self.i_star}


def ratio_growth(epsilon: float, p: float) -> float:
    return (1 - p / (1 + 3 * epsilon / 4)) / (1 - p / (1 + epsilon / 4))


def build_schedule(d: float, Lambda0: float, epsilon: float, p: Optional[float] = None) -> Schedule:
    """Iterate the degree and list-size recurrences until ceil(Lambda_i)/d_i >= 4.

    ``p`` defaults to 1/log d; passing it explicitly decouples the two, which
    is only useful for checking the arithmetic at extreme d.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if Lambda0 < (1 + epsilon) * d * (1 - 1e-12):
        raise ValueError("need Lambda0 >= (1 + epsilon) d")
    if p is None:
        if d <= math.e:
            raise ValueError("need d > e so that p = 1/log d lies in (0, 1)")
        p = 1 / math.log(d)
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    a = 1 - p / (1 + epsilon / 4)
    b = 1 - p / (1 + 3 * epsilon / 4)
    n = int(12 / (epsilon * p)) + 2
    ds, ls = [float(d)], [float(Lambda0)]
    # chunked so that small p does not allocate the whole bound at once
    while True:
        k = min(n, 1 << 16)
        da = ds[-1] * np.cumprod(np.full(k, a))
        la = ls[-1] * np.cumprod(np.full(k, b))
        start = len(ds)
        ds.extend(da.tolist())
        ls.extend(la.tolist())
        r = np.ceil(np.array(ls[start - 1:])) / np.array(ds[start - 1:])
        hit = np.flatnonzero(r >= 4)
        if len(hit):
            i_star = start - 1 + int(hit[0])
            break
        if len(ds) > 100 * n:
            raise RuntimeError("schedule did not reach ratio 4")
    ds, ls = ds[: i_star + 1], ls[: i_star + 1]
    ratio = [math.ceil(x) / y for x, y in zip(ls, ds)]
    return Schedule(p, epsilon, ds, ls, ratio, i_star)


# -- run report ---------------------------------------------------------------


def instance_digest(instance: CoverInstance) -> str:
    return hashlib.sha256(instance.to_json().encode()).hexdigest()


@dataclass
class StageRecord:
    name: str
    status: str
    attempts: int
    wall_time: float
    stats_before: Optional[dict]
    stats_after: Optional[dict]
    extra: dict = field(default_factory=dict)
    artifact: Optional[CoverInstance] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("name", "status", "attempts", "wall_time", "stats_before", "stats_after", "extra")}


@dataclass
class RunReport:
    instance_digest: str
    epsilon: float
    gamma: float
    seed: int
    strict: bool
    stages: list = field(default_factory=list)
    schedule: Optional[Schedule] = None
    outcome: str = "pending"
    failed_stage: Optional[str] = None
    colouring: Optional[list] = None
    shortfalls: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "instance_digest": self.instance_digest,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "seed": self.seed,
            "strict": self.strict,
            "stages": [s.to_dict() for s in self.stages],
            "schedule": self.schedule.to_dict() if self.schedule else None,
            "outcome": self.outcome,
            "failed_stage": self.failed_stage,
            "colouring": self.colouring,
            "shortfalls": self.shortfalls,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


@dataclass(frozen=True)
class Budgets:
    max_attempts: int = 100
    max_resamples: int = 1_000_000


@dataclass
class PipelineOutcome:
    status: Literal["found", "failed"]
    colouring: Optional[PartialColouring]
    report: RunReport
    stage: Optional[str] = None


def _stage_seed(seed: int, k: int, i: int = 0) -> int:
    return int(substream(seed, 4, k, i).integers(0, 2**63))


def run_pipeline(
    instance: CoverInstance,
    epsilon: float,
    gamma: float,
    seed: int,
    budgets: Budgets = Budgets(),
    strict: bool = False,
) -> PipelineOutcome:
    st0 = stats(instance)
    d0 = float(st0.max_avg_colour_degree)
    report = RunReport(instance_digest(instance), epsilon, gamma, seed, strict)
    if st0.min_list_size < (1 + epsilon) * d0:
        raise ValueError(f"min list size {st0.min_list_size} < (1 + eps) * {d0}")
    if st0.max_colour_multiplicity > gamma * d0:
        raise ValueError(f"multiplicity {st0.max_colour_multiplicity} > gamma * {d0}")

    def fail(stage):
        report.outcome, report.failed_stage = "failed", stage
        return PipelineOutcome("failed", None, report, stage)

    cur, emb = instance, Embedding.identity(instance)
    pieces: list[PartialColouring] = []

    # lists already four times the average degree: the finisher alone suffices
    finisher_only = instance.num_parts == 0 or st0.min_list_size >= 4 * st0.max_avg_colour_degree
    if finisher_only:
        report.schedule = Schedule(0.0, epsilon, [d0], [float(st0.min_list_size)], [], 0)

    # phase 1
    if d0 > math.e and not finisher_only:
        t = time.perf_counter()
        try:
            red = reduce(cur, epsilon, gamma, seed=_stage_seed(seed, 0), max_attempts=budgets.max_attempts,
                         strict=strict)
        except ValueError as e:
            if not strict:
                raise
            report.stages.append(StageRecord("phase1", "hypothesis_violated", 0, time.perf_counter() - t,
                                             stats(cur).to_dict(), None, {"error": str(e)}))
            return fail("phase1")
        attempts = sum(s.attempts_used for s in red.trace.steps)
        rec = StageRecord("phase1", red.status, attempts, time.perf_counter() - t, stats(cur).to_dict(), None,
                          {"trace": red.trace.to_dict()})
        report.stages.append(rec)
        if red.status == "attempts_exhausted":
            return fail("phase1")
        cur, emb = red.instance, emb.compose(red.embedding)
        rec.stats_after, rec.artifact = stats(cur).to_dict(), cur
        if not strict:
            report.shortfalls += [f"phase1 condition {k} not met" for k, ok in red.trace.conditions.items() if not ok]

    # equalize lists, re-measure slack, schedule
    st = stats(cur)
    d = float(st.max_avg_colour_degree)
    if cur.num_parts and st.max_list_size > st.min_list_size:
        cur, e2 = truncate_lists(cur, [st.min_list_size] * cur.num_parts)
        emb = emb.compose(e2)
        st = stats(cur)
        d = float(st.max_avg_colour_degree)
    run_nibble = cur.num_parts > 0 and d > math.e and not finisher_only
    if run_nibble:
        eps1 = st.min_list_size / d - 1
        if eps1 <= 0:
            if strict:
                return fail("phase1")
            report.shortfalls.append(f"no slack after phase 1 (ratio {st.min_list_size / d:.4f}); skipping nibble")
            run_nibble = False
    if run_nibble:
        report.schedule = sched = build_schedule(d, st.min_list_size, eps1)
        log.info("schedule: p=%.4f eps'=%.4f i_star=%d", sched.p, eps1, sched.i_star)
        for i in range(sched.i_star):
            if not cur.num_parts:
                break
            sti = stats(cur)
            if not strict and sti.min_list_size >= 4 * sti.max_avg_colour_degree:
                report.shortfalls.append(f"stopped nibble early at round {i}: ratio already >= 4")
                break
            t = time.perf_counter()
            try:
                params = NibbleParams(sched.p, eps1, sched.d[i], sched.Lambda[i], seed=_stage_seed(seed, 1, i),
                                      max_attempts=budgets.max_attempts, strict=strict)
                out = nibble_round(cur, params)
            except ValueError as e:
                report.shortfalls.append(f"nibble round {i}: {e}")
                if strict:
                    return fail(f"nibble[{i}]")
                # small d: the scheduled degree fell out of range before the ratio reached 4
                break
            rec = StageRecord(f"nibble[{i}]", out.status, out.attempts, time.perf_counter() - t, sti.to_dict(), None,
                              {"accepted_clean": out.accepted_clean, "target_list_size": out.target_list_size,
                               "achieved_avg_degree": out.achieved_avg_degree})
            report.stages.append(rec)
            if out.status != "advanced":
                if strict:
                    return fail(f"nibble[{i}]")
                report.shortfalls.append(f"nibble round {i} exhausted its attempts; moving to finisher")
                break
            pieces.append(emb.lift_colouring(out.colouring))
            cur, emb = out.residual, emb.compose(out.embedding)
            rec.stats_after, rec.artifact = stats(cur).to_dict(), cur
            if not out.accepted_clean:
                report.shortfalls.append(f"nibble round {i} accepted with bad events")

    # finisher
    t = time.perf_counter()
    sbefore = stats(cur).to_dict()
    try:
        fin = finish(cur, FinisherParams(budgets.max_resamples, _stage_seed(seed, 2), enforce_precondition=strict))
    except PreconditionError as e:
        report.stages.append(StageRecord("finisher", "precondition", 0, time.perf_counter() - t, sbefore, None,
                                         {"error": str(e)}))
        return fail("finisher")
    report.stages.append(StageRecord("finisher", fin.status, fin.resamples, time.perf_counter() - t, sbefore,
                                     sbefore, artifact=cur))
    if fin.status != "found":
        return fail("finisher")
    pieces.append(emb.lift_colouring(fin.colouring))

    total = PartialColouring({})
    for piece in pieces:
        total = total.merged(piece)
    if len(total) != instance.num_parts or not is_independent_transversal(instance, total):
        raise AssertionError("stitched colouring is not an independent transversal of the input")
    report.outcome = "found"
    report.colouring = [[v, s] for v, s in sorted(total.assignment.items())]
    return PipelineOutcome("found", total, report)
