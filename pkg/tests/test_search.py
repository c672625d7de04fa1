# tests/test_search.py
from math import comb

import pytest

from src.probmodel.process import CapExceeded, exact_hit_count
from src.search.backtrack import (
    BUDGET_EXCEEDED,
    EXHAUSTED,
    FOUND,
    SearchConfig,
    count_large_sets,
    enumerate_designs,
    max_disjoint_designs,
    search_design,
    search_large_set,
)
from src.setsys.incidence import InstanceParams, ParameterError, build_incidence
from src.verify.checks import verify_design, verify_large_set


def test_search_design_fano():
    outcome = search_design(7, 3, 2, 1)
    assert outcome.status == FOUND
    assert len(outcome.result.blocks) == 7
    assert verify_design(outcome.result).passed


def test_search_design_divisibility_precheck():
    outcome = search_design(8, 3, 2, 1)
    assert outcome.status == EXHAUSTED
    assert outcome.reason == "divisibility"
    assert outcome.nodes == 0


def test_search_design_complete():
    outcome = search_design(6, 3, 2, comb(4, 1))
    assert outcome.found
    assert len(outcome.result.blocks) == comb(6, 3)
    assert verify_design(outcome.result).passed


@pytest.mark.parametrize("n,k,t,lam", [(9, 3, 2, 1), (6, 3, 2, 2), (8, 4, 3, 1)])
def test_search_design_finds_known_designs(n, k, t, lam):
    outcome = search_design(n, k, t, lam)
    assert outcome.found
    assert verify_design(outcome.result).passed


def test_search_design_budget():
    outcome = search_design(9, 3, 2, 1, SearchConfig(budget_nodes=3))
    assert outcome.status == BUDGET_EXCEEDED
    assert outcome.reason == "node budget"
    assert outcome.result is None


def test_search_config_validation():
    with pytest.raises(ParameterError):
        SearchConfig(strategy="greedy")
    with pytest.raises(ParameterError):
        SearchConfig(block_order="reverse")
    with pytest.raises(ParameterError):
        SearchConfig(budget_nodes=0)


def test_enumerate_fano_planes():
    outcome = enumerate_designs(7, 3, 2, 1)
    assert outcome.status == EXHAUSTED
    assert outcome.count == 30
    assert len(set(outcome.result)) == 30


def test_enumerate_designs_cap():
    with pytest.raises(CapExceeded):
        enumerate_designs(7, 3, 2, 1, cap=5)


def test_max_disjoint_fano():
    outcome = max_disjoint_designs(7, 3, 2, 1)
    assert outcome.count == 2
    assert outcome.details["designs_enumerated"] == 30
    assert outcome.details["upper_bound"] == 5
    a, b = outcome.result
    assert verify_design(a).passed and verify_design(b).passed
    assert not set(a.blocks) & set(b.blocks)


def test_max_disjoint_k4_matchings():
    outcome = max_disjoint_designs(4, 2, 1, 1)
    assert outcome.count == 3 == outcome.details["upper_bound"]
    blocks = [b for d in outcome.result for b in d.blocks]
    assert len(blocks) == len(set(blocks)) == 6


def test_search_large_set_k4():
    outcome = search_large_set(InstanceParams(4, 2, 1, 3))
    assert outcome.found
    assert verify_large_set(outcome.result).passed


def test_search_large_set_trivial():
    outcome = search_large_set(InstanceParams(5, 3, 2, 1))
    assert outcome.found
    assert len(outcome.result.parts) == 1
    assert len(outcome.result.parts[0]) == comb(5, 3)


def test_search_large_set_divisibility():
    outcome = search_large_set(InstanceParams(9, 3, 2, 6))
    assert outcome.status == EXHAUSTED
    assert outcome.reason == "divisibility"
    assert outcome.details["failed_check"]["s"] == 1


def test_no_five_disjoint_fano_planes_is_reproducible():
    params = InstanceParams(7, 3, 2, 5)
    first = search_large_set(params)
    second = search_large_set(params)
    assert first.status == second.status == EXHAUSTED
    assert first.reason is None
    assert first.nodes == second.nodes


def test_restart_strategy_is_deterministic():
    cfg = SearchConfig(strategy="restart", seed=3, block_order="random", restart_nodes=200)
    params = InstanceParams(6, 2, 1, 5)
    a, b = search_large_set(params, cfg), search_large_set(params, cfg)
    assert a.found and b.found
    assert a.to_dict() == b.to_dict()
    assert verify_large_set(a.result).passed


@pytest.mark.parametrize("order", ["colex", "random", "dynamic"])
def test_block_orders_all_find_k6_factorization(order):
    outcome = search_large_set(InstanceParams(6, 2, 1, 5), SearchConfig(block_order=order, seed=1))
    assert outcome.found
    assert verify_large_set(outcome.result).passed


def test_count_ordered_one_factorizations():
    assert count_large_sets(InstanceParams(4, 2, 1, 3)).count == 6
    assert count_large_sets(InstanceParams(6, 2, 1, 5)).count == 720


def test_count_matches_exact_hit_numerator(k4):
    hits, _ = exact_hit_count(k4, 3)
    assert count_large_sets(InstanceParams(4, 2, 1, 3)).count == hits


def test_count_with_failed_divisibility():
    outcome = count_large_sets(InstanceParams(9, 3, 2, 6))
    assert outcome.count == 0 and outcome.reason == "divisibility"


@pytest.mark.slow
def test_kirkman_large_set():
    cfg = SearchConfig(budget_nodes=20_000_000, budget_seconds=1800)
    outcome = search_large_set(InstanceParams(9, 3, 2, 7), cfg)
    assert outcome.status == FOUND
    report = verify_large_set(outcome.result)
    assert report.passed
    assert all(len(part) == 12 for part in outcome.result.parts)
    sys_ = build_incidence(9, 3, 2)
    assert sys_.num_blocks == sum(len(p) for p in outcome.result.parts)
