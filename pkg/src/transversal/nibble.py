"""One round of the wasteful random colouring procedure.

Every part is activated with probability p and activated parts pick a
uniform colour from their list. A colour is useable when none of its
neighbours was picked; an activated part keeps its colour (joins ``a_col``)
when its colour is itself useable. The round statistics, the bad events and
the closed-form expectations live here, together with a batched Monte Carlo
estimator.

All logarithms are natural.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from ._rng import substream
from .cover import (
    CoverInstance,
    Embedding,
    PartialColouring,
    apply_colouring,
    avg_colour_degrees,
    stats,
    truncate_lists,
)


@dataclass(frozen=True)
class NibbleParams:
    p: float
    epsilon: float
    d: float
    Lambda: float
    seed: int = 0
    max_attempts: int = 100
    strict: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.epsilon <= 0 or self.Lambda <= 0:
            raise ValueError("epsilon and Lambda must be positive")
        if self.d <= 1:
            raise ValueError("d must exceed 1 (thresholds use log d)")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.strict:
            ld = math.log(self.d)
            if not (1 / ld >= self.p >= 1 / ld**2):
                raise ValueError(f"strict mode needs 1/log d >= p >= 1/log^2 d, got p={self.p}")
            if not ((1 + self.epsilon) * self.d <= self.Lambda <= 4 * self.d):
                raise ValueError("strict mode needs (1+eps) d <= Lambda <= 4 d")

    @property
    def target_list_size(self) -> int:
        return math.ceil((1 - self.p / (1 + 3 * self.epsilon / 4)) * self.Lambda)

    @property
    def target_avg_degree(self) -> float:
        return (1 - self.p / (1 + self.epsilon / 4)) * self.d


@dataclass(frozen=True)
class WastefulColouring:
    activated: frozenset
    phi: dict  # part -> slot, defined on activated
    a_col: frozenset

    def colouring(self) -> PartialColouring:
        return PartialColouring({v: self.phi[v] for v in self.a_col})


class BadEvent(NamedTuple):
    kind: Literal["A_v", "A_vc", "A_prime_v", "Omega_star_v"]
    part: int
    slot: Optional[int] = None


@dataclass
class NibbleRoundReport:
    """Per-part arrays have length P; per-colour arrays are indexed by global colour id."""

    part_of: np.ndarray
    offsets: np.ndarray
    degrees: np.ndarray
    useable_cols: np.ndarray
    unuseable_cols: np.ndarray
    coloured_nbrs: np.ndarray
    activated_nbrs: np.ndarray
    uncoloured_nbrs: np.ndarray
    conflicts: np.ndarray
    useable: np.ndarray
    remaining_cols_old_deg: np.ndarray
    relevant_cols_lost_deg: np.ndarray
    omega_star: np.ndarray
    triggered_bad_events: list = field(default_factory=list)

    def at(self, part: int, slot: int) -> dict:
        g = int(self.offsets[part]) + slot
        return {
            "coloured_nbrs": int(self.coloured_nbrs[g]),
            "activated_nbrs": int(self.activated_nbrs[g]),
            "uncoloured_nbrs": int(self.uncoloured_nbrs[g]),
            "conflicts": int(self.conflicts[g]),
            "useable": bool(self.useable[g]),
        }


def keep_probability(deg, p: float, Lambda: float):
    """(1 - p/Lambda) ** deg; works elementwise on arrays."""
    if Lambda <= 0:
        raise ValueError("Lambda must be positive")
    if p / Lambda > 1:
        raise ValueError("p / Lambda must not exceed 1")
    if np.ndim(deg):
        return (1.0 - p / Lambda) ** np.asarray(deg, dtype=float)
    return (1.0 - p / Lambda) ** deg


def expected_useable(instance: CoverInstance, p: float, Lambda: float) -> np.ndarray:
    """Closed form sum over L(v) of Keep(v, c), per part."""
    keep = keep_probability(instance.degrees, p, Lambda)
    return np.bincount(instance.part_of, weights=keep, minlength=instance.num_parts)


def relevance_threshold(d: float) -> float:
    return d / math.log(d) ** 3


def omega_threshold(d: float) -> float:
    return math.log(d) ** 2


# -- batched core ---------------------------------------------------------------


def _sample(instance: CoverInstance, p: float, rng: np.random.Generator, T: int):
    P = instance.num_parts
    act = rng.random((T, P)) < p
    slot = np.floor(rng.random((T, P)) * instance.sizes).astype(np.int64)
    return act, slot


def _part_sum(instance: CoverInstance, x: np.ndarray) -> np.ndarray:
    """Sum a (T, N) array over the colours of each part -> (T, P)."""
    if instance.num_colours == 0:
        return np.zeros((x.shape[0], instance.num_parts), dtype=x.dtype)
    return np.add.reduceat(x, instance.offsets[:-1], axis=1)


def _part_max(instance: CoverInstance, x: np.ndarray) -> np.ndarray:
    if instance.num_colours == 0:
        return np.zeros((x.shape[0], instance.num_parts), dtype=x.dtype)
    return np.maximum.reduceat(x, instance.offsets[:-1], axis=1)


def _evaluate_batch(instance: CoverInstance, act: np.ndarray, slot: np.ndarray, d: float, full: bool = True) -> dict:
    """All round statistics for T rounds given activation and colour draws.

    ``full=False`` skips the activated/uncoloured neighbour counts, which the
    Monte Carlo estimator does not use.
    """
    T, P = act.shape
    N = instance.num_colours
    A = instance.adjacency
    gids = instance.offsets[:-1][None, :] + slot
    t_idx, v_idx = np.nonzero(act)
    S = sp.csr_matrix((np.ones(len(t_idx), dtype=np.int64), (t_idx, gids[t_idx, v_idx])), shape=(T, N))
    hits = np.asarray((S @ A).todense()) if N else np.zeros((T, 0), dtype=np.int64)
    useable = hits == 0
    a_col = np.zeros((T, P), dtype=bool)
    a_col[t_idx, v_idx] = useable[t_idx, gids[t_idx, v_idx]]

    po = instance.part_of

    membership = sp.csr_matrix((np.ones(N, dtype=np.int64), (po, np.arange(N))), shape=(P, N))

    def nbr_count(part_mask):
        if not N:
            return np.zeros((T, 0), dtype=np.int64)
        x = sp.csr_matrix(part_mask.astype(np.int64)) @ membership
        return (x @ A).toarray()

    coloured = nbr_count(a_col)
    activated = nbr_count(act) if full else None
    uncoloured = nbr_count(act & ~a_col) if full else None

    deg = instance.degrees
    useable_cols = _part_sum(instance, useable.astype(np.int64))
    remaining = _part_sum(instance, np.where(useable, deg[None, :], 0))
    relevant = deg >= relevance_threshold(d)
    lost = _part_sum(instance, np.where(relevant[None, :] & ~useable, deg[None, :], 0))

    exceptional = (_part_max(instance, hits) >= omega_threshold(d)).astype(np.int64)
    R = instance.base_matrix + sp.identity(P, dtype=np.int64, format="csr")
    reach = np.asarray((R @ np.asarray((R @ exceptional.T))).T) if P else exceptional
    omega = reach > 0

    return dict(
        act=act, slot=slot, a_col=a_col, hits=hits, useable=useable,
        coloured=coloured, activated=activated, uncoloured=uncoloured,
        useable_cols=useable_cols, unuseable_cols=instance.sizes[None, :] - useable_cols,
        remaining=remaining, lost=lost, omega=omega,
    )


def _bad_event_masks(instance: CoverInstance, batch: dict, params: NibbleParams, expected: np.ndarray):
    """Boolean masks (T, P), (T, N), (T, P) for A_v, A_vc, A'_v."""
    p, d, eps = params.p, params.d, params.epsilon
    q = p ** 1.25
    E = expected[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        a_v = np.where(E > 0, batch["useable_cols"] / E < 1 - q, False)
        a_prime = np.where(E > 0, batch["remaining"] / (d * E) > 1 + q, False)
    denom = np.maximum(p * instance.degrees, d ** (6 / 7))[None, :]
    a_vc = batch["coloured"] / denom < 1 / (1 + eps / 8)
    return a_v, a_vc, a_prime


# -- single round ---------------------------------------------------------------


def sample_wasteful(instance: CoverInstance, params: NibbleParams, rng: np.random.Generator) -> WastefulColouring:
    act, slot = _sample(instance, params.p, rng, 1)
    return wasteful_from_draws(instance, act[0], slot[0])


def wasteful_from_draws(instance: CoverInstance, act: np.ndarray, slot: np.ndarray) -> WastefulColouring:
    activated = [int(v) for v in np.flatnonzero(act)]
    phi = {v: int(slot[v]) for v in activated}
    chosen = np.zeros(instance.num_colours, dtype=np.int64)
    for v in activated:
        chosen[instance.gid(v, phi[v])] = 1
    hits = instance.adjacency @ chosen
    a_col = frozenset(v for v in activated if hits[instance.gid(v, phi[v])] == 0)
    return WastefulColouring(frozenset(activated), phi, a_col)


def evaluate_round(instance: CoverInstance, w: WastefulColouring, d: float) -> NibbleRoundReport:
    P = instance.num_parts
    act = np.zeros((1, P), dtype=bool)
    slot = np.zeros((1, P), dtype=np.int64)
    for v, s in w.phi.items():
        act[0, v] = True
        slot[0, v] = s
    b = _evaluate_batch(instance, act, slot, d)
    if set(np.flatnonzero(b["a_col"][0])) != set(w.a_col):
        raise ValueError("wasteful colouring does not belong to this instance")
    rep = NibbleRoundReport(
        part_of=instance.part_of,
        offsets=instance.offsets,
        degrees=instance.degrees,
        useable_cols=b["useable_cols"][0],
        unuseable_cols=b["unuseable_cols"][0],
        coloured_nbrs=b["coloured"][0],
        activated_nbrs=b["activated"][0],
        uncoloured_nbrs=b["uncoloured"][0],
        conflicts=b["hits"][0],
        useable=b["useable"][0],
        remaining_cols_old_deg=b["remaining"][0],
        relevant_cols_lost_deg=b["lost"][0],
        omega_star=b["omega"][0],
    )
    rep.triggered_bad_events = [BadEvent("Omega_star_v", int(v)) for v in np.flatnonzero(rep.omega_star)]
    return rep


def detect_bad_events(report: NibbleRoundReport, params: NibbleParams, expectations: np.ndarray) -> list[BadEvent]:
    """A_v, A_vc and A'_v, each compared at strict inequality."""
    p, d, eps = params.p, params.d, params.epsilon
    q = p ** 1.25
    E = np.asarray(expectations, dtype=float)
    out: list[BadEvent] = []
    for v in range(len(E)):
        if E[v] > 0 and report.useable_cols[v] / E[v] < 1 - q:
            out.append(BadEvent("A_v", v))
    denom = np.maximum(p * report.degrees, d ** (6 / 7))
    for g in np.flatnonzero(report.coloured_nbrs / denom < 1 / (1 + eps / 8)):
        v = int(report.part_of[g])
        out.append(BadEvent("A_vc", v, int(g - report.offsets[v])))
    for v in range(len(E)):
        if E[v] > 0 and report.remaining_cols_old_deg[v] / (d * E[v]) > 1 + q:
            out.append(BadEvent("A_prime_v", v))
    return out


@dataclass
class NibbleOutcome:
    status: Literal["advanced", "attempts_exhausted"]
    colouring: Optional[PartialColouring] = None
    residual: Optional[CoverInstance] = None
    embedding: Optional[Embedding] = None
    report: Optional[NibbleRoundReport] = None
    attempts: int = 0
    accepted_clean: bool = False
    target_list_size: int = 0
    achieved_avg_degree: Optional[float] = None
    min_residual_list: Optional[int] = None


def check_hypotheses(instance: CoverInstance, params: NibbleParams) -> list[str]:
    st = stats(instance)
    d = params.d
    out = []
    if instance.num_parts and (st.min_list_size != math.ceil(params.Lambda) or st.max_list_size != math.ceil(params.Lambda)):
        out.append("lists must all have size ceil(Lambda)")
    if st.max_avg_colour_degree > d:
        out.append("max average colour degree exceeds d")
    if st.max_degree > d * math.log(d):
        out.append("max degree exceeds d log d")
    if st.max_colour_multiplicity > d ** 0.25:
        out.append("colour multiplicity exceeds d^(1/4)")
    return out


def nibble_round(instance: CoverInstance, params: NibbleParams) -> NibbleOutcome:
    """Rejection-sample rounds until one has no bad event, then colour a_col
    and truncate the residual lists.

    Strict mode also rejects rounds whose residual misses the target list size
    or average-degree bound, and reports ``attempts_exhausted`` when none
    passes. Adaptive mode falls back to the sampled round with the fewest bad
    events, truncating lists to ``min(target, actual)``.
    """
    if params.strict:
        problems = check_hypotheses(instance, params)
        if problems:
            raise ValueError("; ".join(problems))
    expected = expected_useable(instance, params.p, params.Lambda)
    target = params.target_list_size
    best = None
    for attempt in range(params.max_attempts):
        rng = substream(params.seed, 0, attempt)
        w = sample_wasteful(instance, params, rng)
        report = evaluate_round(instance, w, params.d)
        events = detect_bad_events(report, params, expected)
        report.triggered_bad_events += events
        uncoloured = [v for v in range(instance.num_parts) if v not in w.a_col]
        if any(report.useable_cols[v] == 0 for v in uncoloured):
            continue
        if not events:
            out = _advance(instance, w, report, params, attempt + 1, clean=True)
            if out is not None:
                return out
            continue
        if best is None or len(events) < best[0]:
            best = (len(events), w, report)
    if not params.strict and best is not None:
        out = _advance(instance, best[1], best[2], params, params.max_attempts, clean=False)
        if out is not None:
            return out
    return NibbleOutcome("attempts_exhausted", attempts=params.max_attempts, target_list_size=target)


def _advance(instance, w, report, params, attempts, clean) -> Optional[NibbleOutcome]:
    colouring = w.colouring()
    view = apply_colouring(instance, colouring)
    residual, emb = view.materialize()
    target = params.target_list_size
    if params.strict and residual.num_parts and residual.sizes.min() < target:
        return None
    targets = [min(target, int(n)) for n in residual.sizes]
    truncated, emb2 = truncate_lists(residual, targets)
    achieved = float(max(avg_colour_degrees(truncated), default=0))
    if params.strict and achieved > params.target_avg_degree:
        return None
    return NibbleOutcome(
        "advanced",
        colouring=colouring,
        residual=truncated,
        embedding=emb.compose(emb2),
        report=report,
        attempts=attempts,
        accepted_clean=clean,
        target_list_size=target,
        achieved_avg_degree=achieved,
        min_residual_list=int(truncated.sizes.min()) if truncated.num_parts else None,
    )


# -- Monte Carlo ----------------------------------------------------------------


@dataclass
class EstimateReport:
    trials: int
    useable_mean: np.ndarray
    useable_se: np.ndarray
    useable_analytic: np.ndarray
    useable_bound: np.ndarray
    keep_freq: np.ndarray
    keep_analytic: np.ndarray
    coloured_mean: np.ndarray
    coloured_se: np.ndarray
    coloured_bound: np.ndarray
    activation_freq: np.ndarray
    event_freq: dict
    any_event_freq: dict
    omega_freq: np.ndarray
    per_trial: Optional[dict] = None
    total_mean: float = float("nan")
    total_se: float = float("nan")


def _batch_size(instance: CoverInstance) -> int:
    return int(max(1, min(1024, 4_000_000 // max(1, instance.num_colours))))


def _mc_batch(instance: CoverInstance, params: NibbleParams, b: int, T: int, keep_trials: bool) -> dict:
    rng = substream(params.seed, 1, b)
    act, slot = _sample(instance, params.p, rng, T)
    batch = _evaluate_batch(instance, act, slot, params.d, full=False)
    expected = expected_useable(instance, params.p, params.Lambda)
    a_v, a_vc, a_prime = _bad_event_masks(instance, batch, params, expected)
    u = batch["useable_cols"].astype(float)
    c = batch["coloured"].astype(float)
    tot = u.sum(1)
    out = dict(
        n=T,
        u_sum=u.sum(0), u_sq=(u * u).sum(0), t_sum=tot.sum(), t_sq=(tot * tot).sum(),
        keep_sum=batch["useable"].sum(0),
        c_sum=c.sum(0), c_sq=(c * c).sum(0),
        act_sum=act.sum(0),
        a_v=a_v.sum(0), a_vc=a_vc.sum(0), a_prime=a_prime.sum(0), omega=batch["omega"].sum(0),
        any_a_v=int(a_v.any(1).sum()), any_a_vc=int(a_vc.any(1).sum()),
        any_a_prime=int(a_prime.any(1).sum()), any_omega=int(batch["omega"].any(1).sum()),
    )
    if keep_trials:
        per_part_vc = _part_sum(instance, a_vc.astype(np.int64))
        out["trial"] = dict(
            useable=batch["useable_cols"],
            bad_events=a_v.astype(np.int64) + per_part_vc + a_prime.astype(np.int64),
            omega=batch["omega"],
        )
    return out


def _mc_batch_useable(instance: CoverInstance, params: NibbleParams, b: int, T: int) -> dict:
    """Useable-colour statistics only, kept sparse throughout."""
    rng = substream(params.seed, 1, b)
    act, slot = _sample(instance, params.p, rng, T)
    P, N = instance.num_parts, instance.num_colours
    gids = instance.offsets[:-1][None, :] + slot
    t_idx, v_idx = np.nonzero(act)
    S = sp.csr_matrix((np.ones(len(t_idx), dtype=np.int64), (t_idx, gids[t_idx, v_idx])), shape=(T, N))
    hit = (S @ instance.adjacency).tocoo()
    lost = np.bincount(hit.row * P + instance.part_of[hit.col], minlength=T * P).reshape(T, P)
    u = (instance.sizes[None, :] - lost).astype(float)
    tot = u.sum(1)
    return dict(n=T, u_sum=u.sum(0), u_sq=(u * u).sum(0), t_sum=tot.sum(), t_sq=(tot * tot).sum(),
                keep_sum=T - np.bincount(hit.col, minlength=N), act_sum=act.sum(0))


def _estimate_useable(instance: CoverInstance, params: NibbleParams, trials: int) -> EstimateReport:
    bs = max(1, min(4096, 20_000_000 // max(1, instance.num_colours)))
    parts = [_mc_batch_useable(instance, params, b, min(bs, trials - s))
             for b, s in enumerate(range(0, trials, bs))]
    n = trials
    u_mean = sum(r["u_sum"] for r in parts) / n
    u_var = np.maximum(sum(r["u_sq"] for r in parts) / n - u_mean**2, 0) * n / max(n - 1, 1)
    p, eps, Lam = params.p, params.epsilon, params.Lambda
    return EstimateReport(
        trials=n,
        useable_mean=u_mean,
        useable_se=np.sqrt(u_var / n),
        useable_analytic=expected_useable(instance, p, Lam),
        useable_bound=(1 - p / (1 + eps)) * instance.sizes,
        keep_freq=sum(r["keep_sum"] for r in parts) / n,
        keep_analytic=keep_probability(instance.degrees, p, Lam),
        coloured_mean=None, coloured_se=None, coloured_bound=None,
        activation_freq=sum(r["act_sum"] for r in parts) / n,
        event_freq={}, any_event_freq={}, omega_freq=None,
        **_totals(parts, n),
    )


def _totals(parts: list, n: int) -> dict:
    """Mean and standard error of the per-trial total of useable colours."""
    m = sum(r["t_sum"] for r in parts) / n
    var = max(sum(r["t_sq"] for r in parts) / n - m * m, 0.0) * n / max(n - 1, 1)
    return {"total_mean": float(m), "total_se": math.sqrt(var / n)}


def monte_carlo_check(
    instance: CoverInstance,
    params: NibbleParams,
    trials: int,
    keep_trials: bool = False,
    jobs: int = 1,
    track: Literal["all", "useable"] = "all",
) -> EstimateReport:
    """Independent rounds in batches; batch b draws from substream (seed, 1, b).

    ``track="useable"`` estimates only the useable-colour and Keep statistics
    (coloured-neighbour and bad-event fields are None); it draws the same
    activations per batch index but uses larger batches, so its samples differ.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if track == "useable":
        return _estimate_useable(instance, params, trials)
    bs = _batch_size(instance)
    sizes = [min(bs, trials - s) for s in range(0, trials, bs)]
    args = [(instance, params, b, T, keep_trials) for b, T in enumerate(sizes)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_mc_batch_star, args))
    else:
        parts = [_mc_batch(*a) for a in args]

    def total(key):
        acc = parts[0][key]
        for r in parts[1:]:
            acc = acc + r[key]
        return acc

    n = trials
    u_mean = total("u_sum") / n
    u_var = np.maximum(total("u_sq") / n - u_mean**2, 0) * n / max(n - 1, 1)
    c_mean = total("c_sum") / n
    c_var = np.maximum(total("c_sq") / n - c_mean**2, 0) * n / max(n - 1, 1)
    p, eps, Lam = params.p, params.epsilon, params.Lambda
    deg = instance.degrees
    per_trial = None
    if keep_trials:
        per_trial = {k: np.concatenate([r["trial"][k] for r in parts]) for k in ("useable", "bad_events", "omega")}
    return EstimateReport(
        trials=n,
        useable_mean=u_mean,
        useable_se=np.sqrt(u_var / n),
        useable_analytic=expected_useable(instance, p, Lam),
        useable_bound=(1 - p / (1 + eps)) * instance.sizes,
        keep_freq=total("keep_sum") / n,
        keep_analytic=keep_probability(deg, p, Lam),
        coloured_mean=c_mean,
        coloured_se=np.sqrt(c_var / n),
        coloured_bound=p * (1 - p / (1 + eps)) * deg,
        activation_freq=total("act_sum") / n,
        event_freq={"A_v": total("a_v") / n, "A_vc": total("a_vc") / n, "A_prime_v": total("a_prime") / n},
        any_event_freq={
            "A_v": total("any_a_v") / n,
            "A_vc": total("any_a_vc") / n,
            "A_prime_v": total("any_a_prime") / n,
            "Omega_star_v": total("any_omega") / n,
        },
        omega_freq=total("omega") / n,
        per_trial=per_trial,
        **_totals(parts, n),
    )


def _mc_batch_star(a):
    return _mc_batch(*a)
