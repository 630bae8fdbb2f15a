import numpy as np
import pytest
from hypothesis import given, settings

from support import TINY1, small_instances
from transversal.cover import CoverInstance, is_independent_transversal
from transversal.finisher import FinisherParams, PreconditionError, check_precondition, finish, resample_steps
from transversal.oracle import count_transversals


def test_conflict_free_zero_resamples():
    inst = CoverInstance.from_refs([["a", "b"], ["c"]], [(0, 1)], [])
    res = finish(inst, FinisherParams(seed=1))
    assert res.status == "found" and res.resamples == 0


def test_tiny1_seed_sweep():
    for seed in range(100):
        res = finish(TINY1, FinisherParams(seed=seed))
        assert res.status == "found" and res.colouring.assignment == {0: 1, 1: 1}


def test_precondition_enforced_before_sampling():
    assert not check_precondition(TINY1)
    with pytest.raises(PreconditionError):
        finish(TINY1, FinisherParams(enforce_precondition=True))


def test_resample_limit():
    inst = CoverInstance.from_refs([["x"], ["y"]], [(0, 1)], [((0, 0), (1, 0))])
    res = finish(inst, FinisherParams(max_resamples=5))
    assert res.status == "resample_limit" and res.colouring is None and res.resamples == 5


def test_deterministic_given_seed():
    assert finish(TINY1, FinisherParams(seed=9)) == finish(TINY1, FinisherParams(seed=9))


@settings(max_examples=60)
@given(small_instances())
def test_found_results_are_transversals(inst):
    res = finish(inst, FinisherParams(seed=len(inst.conflicts), max_resamples=2000))
    if res.status == "found":
        assert is_independent_transversal(inst, res.colouring)
    else:
        # cannot prove absence, but on tiny instances it usually means there is none
        assert res.resamples == 2000


@settings(max_examples=40)
@given(small_instances())
def test_resampling_touches_only_edge_endpoints(inst):
    steps = resample_steps(inst, FinisherParams(seed=4))
    prev_row, prev = None, None
    for n, (row, slot) in enumerate(steps):
        cur = slot.copy()
        if prev_row is not None:
            a, b = inst.conflicts[prev_row]
            touched = {int(inst.part_of[a]), int(inst.part_of[b])}
            changed = set(np.flatnonzero(cur != prev).tolist())
            assert changed <= touched
        if row is not None:
            # the selected edge is the lexicographically least violated one
            chosen = np.zeros(inst.num_colours, dtype=bool)
            chosen[inst.offsets[:-1] + cur] = True
            c = inst.conflicts
            violated = np.flatnonzero(chosen[c[:, 0]] & chosen[c[:, 1]])
            assert row == violated.min()
        prev_row, prev = row, cur
        if row is None or n > 200:
            break


def test_unique_transversal_cross_checked_with_oracle():
    assert count_transversals(TINY1) == 1
