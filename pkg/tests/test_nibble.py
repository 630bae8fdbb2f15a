import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import TINY1, small_instances
from transversal.cover import CoverInstance, PartialColouring, is_proper, stats
from transversal.generators import gen_matching_cover
from transversal.nibble import (
    NibbleParams,
    NibbleRoundReport,
    detect_bad_events,
    evaluate_round,
    expected_useable,
    keep_probability,
    monte_carlo_check,
    nibble_round,
    sample_wasteful,
    wasteful_from_draws,
)


def exact_useable_probability(inst: CoverInstance, p: float) -> np.ndarray:
    """Pr[colour is useable] by enumerating every (activation, colour) outcome."""
    P = inst.num_parts
    outcomes = []
    for v in range(P):
        opts = [(None, 1 - p)] + [(s, p / len(inst.lists[v])) for s in range(len(inst.lists[v]))]
        outcomes.append(opts)
    prob = np.zeros(inst.num_colours)
    for combo in itertools.product(*outcomes):
        w = math.prod(q for _, q in combo)
        chosen = np.zeros(inst.num_colours, dtype=np.int64)
        for v, (s, _) in enumerate(combo):
            if s is not None:
                chosen[inst.gid(v, s)] = 1
        prob += w * ((inst.adjacency @ chosen) == 0)
    return prob


# -- Keep ---------------------------------------------------------------------


def test_keep_examples():
    assert keep_probability(0, 0.3, 2.0) == 1
    assert keep_probability(5, 0.0, 2.0) == 1
    assert keep_probability(2, 0.5, 2.0) == 0.5625
    with pytest.raises(ValueError):
        keep_probability(1, 1.0, 0.5)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 50), st.floats(1, 10))
def test_keep_monotone_in_p(p1, p2, deg, lam):
    lo, hi = sorted((p1, p2))
    assert keep_probability(deg, hi, lam) <= keep_probability(deg, lo, lam)


def test_keep_exact_when_multiplicity_is_one():
    # path u - v - w, lists of size 2, crossing matchings: mu = 1
    inst = CoverInstance.from_refs(
        [["a", "b"], ["c", "d"], ["e", "f"]], [(0, 1), (1, 2)],
        [((0, 0), (1, 1)), ((0, 1), (1, 0)), ((1, 0), (2, 0))],
    )
    exact = exact_useable_probability(inst, 0.4)
    assert np.allclose(exact, keep_probability(inst.degrees, 0.4, 2.0))


def test_keep_differs_from_truth_on_tiny1():
    # a conflicts with both colours of v, so a is blocked whenever v activates
    exact = exact_useable_probability(TINY1, 0.5)
    assert np.allclose(exact, [0.5, 0.75, 0.5, 0.75])
    assert np.allclose(keep_probability(TINY1.degrees, 0.5, 2.0), [0.5625, 0.75, 0.5625, 0.75])


@settings(max_examples=50)
@given(small_instances(max_parts=5), st.floats(0.01, 1))
def test_jensen_lower_bound(inst, p):
    sizes = inst.sizes
    for v in range(inst.num_parts):
        lam = float(sizes[v])
        degs = inst.degrees[inst.offsets[v]:inst.offsets[v + 1]]
        d = degs.sum() / lam
        lhs = keep_probability(degs, p, lam).sum()
        assert lhs >= (1 - p / lam) ** d * lam * (1 - 1e-9)


# -- sampling and round variables --------------------------------------------


def test_p_zero_activates_nothing():
    w = sample_wasteful(TINY1, NibbleParams(0.0, 0.5, 2.0, 2.0), np.random.default_rng(0))
    assert w.activated == frozenset() and w.a_col == frozenset()


def test_a_col_definition_on_tiny1():
    w = wasteful_from_draws(TINY1, np.array([True, True]), np.array([0, 0]))
    assert w.a_col == frozenset()
    w = wasteful_from_draws(TINY1, np.array([True, True]), np.array([1, 1]))
    assert w.a_col == frozenset({0, 1})


def test_activation_frequency():
    inst = CoverInstance.from_refs([["a"]] * 5, [], [])
    rep = monte_carlo_check(inst, NibbleParams(0.3, 0.5, 2.0, 1.0, seed=1), 100_000)
    assert np.all(np.abs(rep.activation_freq - 0.3) < 0.005)


def test_evaluate_round_tiny1_example():
    w = wasteful_from_draws(TINY1, np.array([False, True]), np.array([0, 0]))
    assert w.a_col == frozenset({1})
    rep = evaluate_round(TINY1, w, d=2.0)
    assert rep.useable_cols[0] == 0
    assert rep.at(0, 0)["coloured_nbrs"] == 2


def test_evaluate_round_empty_activation():
    w = wasteful_from_draws(TINY1, np.array([False, False]), np.array([0, 0]))
    rep = evaluate_round(TINY1, w, d=2.0)
    assert list(rep.useable_cols) == [2, 2]
    assert not rep.coloured_nbrs.any() and not rep.activated_nbrs.any() and not rep.conflicts.any()
    assert list(rep.remaining_cols_old_deg) == [3, 3]


def test_round_identities_and_properness():
    inst = gen_matching_cover(12, 6, 0.5, 0.6, seed=2)
    params = NibbleParams(0.4, 0.5, 4.0, 6.0)
    rng = np.random.default_rng(8)
    for _ in range(1000):
        w = sample_wasteful(inst, params, rng)
        rep = evaluate_round(inst, w, params.d)
        assert np.array_equal(rep.useable_cols + rep.unuseable_cols, inst.sizes)
        assert np.array_equal(rep.coloured_nbrs + rep.uncoloured_nbrs, rep.activated_nbrs)
        assert is_proper(inst, w.colouring())


def _report(useable, remaining, coloured, degrees):
    P, N = len(useable), len(coloured)
    z = np.zeros(N, dtype=np.int64)
    return NibbleRoundReport(
        part_of=np.zeros(N, dtype=np.int64), offsets=np.array([0, N]), degrees=np.asarray(degrees),
        useable_cols=np.asarray(useable, dtype=float), unuseable_cols=np.zeros(P),
        coloured_nbrs=np.asarray(coloured), activated_nbrs=z, uncoloured_nbrs=z, conflicts=z,
        useable=np.ones(N, dtype=bool), remaining_cols_old_deg=np.asarray(remaining, dtype=float),
        relevant_cols_lost_deg=np.zeros(P), omega_star=np.zeros(P, dtype=bool),
    )


def test_bad_event_boundaries():
    params = NibbleParams(0.1, 0.5, 100.0, 150.0)
    q = 0.1 ** 1.25
    E = np.array([1.0])
    # exactly on the threshold: not triggered
    rep = _report([1 - q], [0.0], [100], [100])
    kinds = {e.kind for e in detect_bad_events(rep, params, E)}
    assert "A_v" not in kinds
    rep = _report([1.0], [2 * 100 * 1.0], [100], [100])
    assert "A_prime_v" in {e.kind for e in detect_bad_events(rep, params, E)}
    rep = _report([1.0], [0.0], [0], [100])
    assert "A_vc" in {e.kind for e in detect_bad_events(rep, params, E)}


# -- nibble_round ----------------------------------------------------------------


def test_target_size_formula():
    assert NibbleParams(0.1, 0.5, 100.0, 300.0).target_list_size == 279
    assert NibbleParams(1e-6, 0.5, 100.0, 300.0).target_list_size == 300


def test_nibble_round_conflict_free():
    inst = CoverInstance.from_refs([[str(i) for i in range(10)]] * 8, [(0, 1), (2, 3)], [])
    params = NibbleParams(0.3, 0.5, 5.0, 10.0, seed=3, max_attempts=20)
    out = nibble_round(inst, params)
    assert out.status == "advanced"
    assert out.residual.num_parts == inst.num_parts - len(out.colouring)
    assert all(n == params.target_list_size for n in out.residual.sizes)
    assert len(out.residual.conflicts) == 0


def test_nibble_residual_is_induced_subcover():
    inst = gen_matching_cover(30, 12, 0.4, 0.5, seed=6)
    d = float(stats(inst).max_avg_colour_degree)
    out = nibble_round(inst, NibbleParams(1 / math.log(d), 0.2, d, 12.0, seed=1, max_attempts=10))
    assert out.status == "advanced"
    col = out.colouring
    uncoloured = [v for v in range(inst.num_parts) if v not in col]
    assert list(out.embedding.parts) == uncoloured
    chosen = set(col.chosen(inst).tolist())
    parent = {tuple(r) for r in inst.conflicts.tolist()}
    emb = out.embedding
    for a, b in out.residual.conflicts:
        x, y = out.residual.ref(int(a)), out.residual.ref(int(b))
        ga, gb = inst.gid(*emb.lift(*x)), inst.gid(*emb.lift(*y))
        assert (min(ga, gb), max(ga, gb)) in parent
    for v in range(out.residual.num_parts):
        for s in range(len(out.residual.lists[v])):
            g = inst.gid(*emb.lift(v, s))
            assert not chosen & set(inst.neighbours(g).tolist())


def test_strict_mode_rejects_bad_hypotheses():
    with pytest.raises(ValueError):
        NibbleParams(0.9, 0.5, 100.0, 150.0, strict=True)
    with pytest.raises(ValueError):
        nibble_round(TINY1, NibbleParams(0.5, 0.5, 2.0, 3.0, strict=True))


# -- Monte Carlo ----------------------------------------------------------------


def test_monte_carlo_single_part():
    inst = CoverInstance.from_refs([["a", "b", "c"]], [], [])
    rep = monte_carlo_check(inst, NibbleParams(0.5, 0.5, 2.0, 3.0, seed=2), 500, keep_trials=True)
    assert np.all(rep.per_trial["useable"] == 3)


def test_monte_carlo_matches_exact_on_tiny1():
    params = NibbleParams(0.5, 0.5, 2.0, 2.0, seed=0)
    rep = monte_carlo_check(TINY1, params, 20_000)
    exact = exact_useable_probability(TINY1, 0.5)
    se = np.sqrt(exact * (1 - exact) / rep.trials)
    assert np.all(np.abs(rep.keep_freq - exact) <= 4 * se)
    assert np.allclose(rep.useable_analytic, [1.3125, 1.3125])


def test_monte_carlo_modes_agree():
    inst = gen_matching_cover(10, 6, 0.5, 0.7, seed=1)
    params = NibbleParams(0.3, 0.5, 4.0, 6.0, seed=5)
    full = monte_carlo_check(inst, params, 4000)
    fast = monte_carlo_check(inst, params, 4000, track="useable")
    se = np.hypot(full.useable_se, fast.useable_se)
    assert np.all(np.abs(full.useable_mean - fast.useable_mean) <= 5 * se + 1e-12)
    assert fast.coloured_mean is None


def test_monte_carlo_jobs_do_not_change_results():
    inst = gen_matching_cover(8, 4, 0.5, 0.7, seed=2)
    params = NibbleParams(0.3, 0.5, 3.0, 4.0, seed=5)
    a = monte_carlo_check(inst, params, 3000, jobs=1)
    b = monte_carlo_check(inst, params, 3000, jobs=2)
    assert np.array_equal(a.useable_mean, b.useable_mean)


def test_monte_carlo_rejects_few_trials():
    with pytest.raises(ValueError):
        monte_carlo_check(TINY1, NibbleParams(0.5, 0.5, 2.0, 2.0), 50)


def test_expected_useable_is_sum_of_keep():
    assert np.allclose(expected_useable(TINY1, 0.5, 2.0), [0.5625 + 0.75, 0.5625 + 0.75])
