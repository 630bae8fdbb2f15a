import numpy as np
from hypothesis import given, settings

from support import TINY1, naive_count, random_small_instance, small_instances
from transversal.cover import CoverInstance, is_independent_transversal
from transversal.oracle import SearchBudget, count_transversals, find_transversal_exact


def test_tiny1_found_and_count():
    res = find_transversal_exact(TINY1)
    assert res.status == "found" and res.colouring.assignment == {0: 1, 1: 1}
    assert count_transversals(TINY1) == 1


def test_blocked_pair_is_none():
    inst = CoverInstance.from_refs([["x"], ["y"]], [(0, 1)], [((0, 0), (1, 0))])
    assert find_transversal_exact(inst).status == "none"
    assert count_transversals(inst) == 0


def test_conflict_free_count_is_product():
    inst = CoverInstance.from_refs([["a", "b"], ["c", "d", "e"]], [(0, 1)], [])
    res = find_transversal_exact(inst, SearchBudget(mode="count-all"))
    assert res.status == "found" and res.count == 6


def test_list_cover_k2_count():
    inst = CoverInstance.from_refs([["1", "2"], ["1", "2"]], [(0, 1)], [((0, 0), (1, 0)), ((0, 1), (1, 1))])
    assert count_transversals(inst) == 2


def test_single_part():
    assert count_transversals(CoverInstance.from_refs([["a", "b", "c"]], [], [])) == 3


def test_budget_exhausted_reported():
    inst = CoverInstance.from_refs([[str(i) for i in range(3)]] * 6, [], [])
    res = find_transversal_exact(inst, SearchBudget(max_nodes=3, mode="count-all"))
    assert res.status == "budget_exhausted"


@settings(max_examples=80)
@given(small_instances(max_parts=8, max_list=3))
def test_completeness_against_enumeration(inst):
    n = naive_count(inst)
    assert count_transversals(inst) == n
    res = find_transversal_exact(inst)
    assert (res.status == "found") == (n > 0)
    if res.status == "found":
        assert is_independent_transversal(inst, res.colouring)


def test_pruning_never_changes_answer():
    rng = np.random.default_rng(11)
    for _ in range(100):
        inst = random_small_instance(rng)
        assert count_transversals(inst, prune=True) == count_transversals(inst, prune=False)
        a = find_transversal_exact(inst, prune=True)
        b = find_transversal_exact(inst, prune=False)
        assert a.status == b.status


def test_deterministic():
    rng = np.random.default_rng(3)
    inst = random_small_instance(rng, max_parts=6, max_list=4)
    assert find_transversal_exact(inst) == find_transversal_exact(inst)
