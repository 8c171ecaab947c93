from __future__ import annotations

import dataclasses
import random

import numpy as np
import pytest

from conftest import make_record
from fairaudit.canonical import round_sig
from fairaudit.dataset import SplitSpec, encode, split, synth_generate, synth_schema
from fairaudit.errors import ConfigError, EmptyPool, NoOffFrontierCandidate, UnknownId
from fairaudit.learners import Intervention
from fairaudit.metrics import accuracy, disparity_stats, group_rates
from fairaudit.search import (
    BaselinePolicy,
    CandidatePool,
    ConfigSearch,
    SearchPlan,
    parse_baseline_policy,
    plan_from_dict,
    pool_from_dict,
    run_search,
    select_baseline,
)


@pytest.fixture(scope="module")
def small_split():
    table = synth_generate(400, 0.5, 1.5, 2.0, seed=5)
    matrix = encode(table, synth_schema())
    return split(matrix, SplitSpec(0.2, 11))


def lr_search(name="s0", n_rates=4, seed_base=0, interventions=(Intervention(),)):
    rates = tuple(round(0.02 + 0.01 * i, 4) for i in range(n_rates))
    return ConfigSearch(
        name=name,
        family="logistic_regression",
        hyper_grid=(("iterations", (40,)), ("learning_rate", rates)),
        interventions=tuple(interventions),
        seed_base=seed_base,
    )


class TestPlanParsing:
    def test_cross_product_and_seeds(self):
        s = lr_search(n_rates=3, interventions=(Intervention(), Intervention("reweigh", 1.0)))
        specs = s.specs()
        assert len(specs) == 6
        assert [sp.seed for sp in specs] == list(range(6))

    def test_plan_from_dict(self):
        plan = plan_from_dict(
            {
                "retention": 0.5,
                "searches": [
                    {
                        "family": "decision_tree",
                        "hyperparams": {"max_depth": [2, 3]},
                        "interventions": [{"kind": "none"}],
                    }
                ],
            }
        )
        assert plan.retention == 0.5
        assert plan.searches[0].name == "search-000"
        assert len(plan.searches[0].specs()) == 2

    def test_invalid_retention(self):
        with pytest.raises(ConfigError):
            SearchPlan(searches=(lr_search(),), retention=0.0)

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            ConfigSearch("x", "decision_tree", hyper_grid=(("max_depth", ()),))


class TestRunSearch:
    def test_retention_ceil_37(self, small_split):
        tr, ho = small_split
        plan = SearchPlan(searches=(lr_search(n_rates=37),), retention=0.05)
        pool = run_search(plan, tr, ho)
        assert pool.provenance[0] == {"search": "s0", "kept": 2, "total": 37}

    def test_drop_filter_floor(self, small_split):
        tr, ho = small_split
        plan = SearchPlan(searches=(lr_search(n_rates=8),), retention=1.0, drop_tolerance=0.10)
        pool = run_search(plan, tr, ho)
        max_acc = max(r.accuracy for r in pool.records)
        assert pool.accuracy_floor == round_sig(0.9 * max_acc)
        assert all(r.accuracy >= pool.accuracy_floor for r in pool.records)

    def test_max_accuracy_model_survives(self, small_split):
        tr, ho = small_split
        plan = SearchPlan(searches=(lr_search(n_rates=8),), retention=1.0, drop_tolerance=0.0)
        pool = run_search(plan, tr, ho)
        assert pool.records  # the max survives even a zero-tolerance filter

    def test_duplicate_searches_union(self, small_split):
        tr, ho = small_split
        plan = SearchPlan(
            searches=(lr_search("a", 4, seed_base=0), lr_search("b", 4, seed_base=0)),
            retention=1.0,
        )
        pool = run_search(plan, tr, ho)
        ids = [r.id for r in pool.records]
        assert len(ids) == len(set(ids))
        assert {p["search"] for p in pool.provenance} == {"a", "b"}
        assert all(p["total"] == 4 for p in pool.provenance)

    def test_retention_bounds_invariant(self, small_split):
        tr, ho = small_split
        for retention in (0.01, 0.3, 1.0):
            plan = SearchPlan(searches=(lr_search(n_rates=5),), retention=retention)
            pool = run_search(plan, tr, ho)
            kept = pool.provenance[0]["kept"]
            assert 1 <= kept <= 5

    def test_schedule_invariance(self, small_split):
        tr, ho = small_split
        searches = (
            lr_search("a", 3, seed_base=0),
            ConfigSearch(
                "b",
                "decision_tree",
                hyper_grid=(("max_depth", (2, 3)),),
                interventions=(Intervention(), Intervention("group_threshold_postprocess", 0.0)),
                seed_base=50,
            ),
        )
        plan = SearchPlan(searches=searches, retention=1.0)
        plan_permuted = SearchPlan(searches=searches[::-1], retention=1.0)

        def shuffled_map(fn, jobs):
            jobs = list(jobs)
            order = list(range(len(jobs)))
            random.Random(99).shuffle(order)
            results: dict[int, object] = {i: fn(jobs[i]) for i in order}
            return [results[i] for i in range(len(jobs))]

        a = run_search(plan, tr, ho)
        b = run_search(plan_permuted, tr, ho, map_fn=shuffled_map)
        assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]

    def test_metrics_recompute_from_stored_predictions(self, small_split):
        tr, ho = small_split
        plan = SearchPlan(searches=(lr_search(n_rates=4),), retention=1.0)
        pool = run_search(plan, tr, ho)
        labels = np.array(pool.holdout_labels)
        groups = np.array(pool.holdout_groups)
        for r in pool.records:
            preds = np.array([int(c) for c in r.prediction_bits])
            assert round_sig(accuracy(preds, labels)) == r.accuracy
            rates = group_rates(preds, groups)
            stats = disparity_stats(rates)
            assert round_sig(stats.disparity) == r.disparity
            assert round_sig(stats.p) == r.p

    def test_empty_plan(self, small_split):
        tr, ho = small_split
        with pytest.raises(EmptyPool):
            run_search(SearchPlan(searches=()), tr, ho)

    def test_pool_roundtrip_dict(self, small_split):
        tr, ho = small_split
        plan = SearchPlan(searches=(lr_search(n_rates=3),), retention=1.0)
        pool = run_search(plan, tr, ho)
        assert pool_from_dict(pool.to_dict()).to_dict() == pool.to_dict()


def two_record_pool(records) -> CandidatePool:
    return CandidatePool(
        fingerprint={"n_holdout": 1000},
        records=tuple(records),
        provenance=({"search": "t", "kept": len(records), "total": len(records)},),
        accuracy_floor=0.0,
    )


def with_frontier(records):
    from fairaudit.metrics import pareto_frontier

    flags = pareto_frontier([(r.accuracy, r.disparity) for r in records])
    return [dataclasses.replace(r, on_frontier=f) for r, f in zip(records, flags)]


class TestSelectBaseline:
    def test_max_accuracy(self):
        pool = two_record_pool(
            with_frontier([make_record("hi", 0.90, 0.10), make_record("lo", 0.85, 0.05)])
        )
        assert select_baseline(pool, BaselinePolicy("max_accuracy")) == "hi"

    def test_max_accuracy_tie_prefers_higher_disparity(self):
        pool = two_record_pool(
            with_frontier([make_record("fair", 0.90, 0.02), make_record("unfair", 0.90, 0.20)])
        )
        assert select_baseline(pool, BaselinePolicy("max_accuracy")) == "unfair"

    def test_off_frontier_none_available(self):
        pool = two_record_pool(
            with_frontier([make_record("a", 0.90, 0.10), make_record("b", 0.85, 0.05)])
        )
        with pytest.raises(NoOffFrontierCandidate):
            select_baseline(pool, BaselinePolicy("off_frontier_near", eps=0.01))

    def test_off_frontier_picks_dominated_near_max(self):
        pool = two_record_pool(
            with_frontier(
                [
                    make_record("top", 0.90, 0.10),
                    make_record("dominated", 0.895, 0.12),
                    make_record("fair", 0.85, 0.05),
                ]
            )
        )
        assert select_baseline(pool, BaselinePolicy("off_frontier_near", eps=0.01)) == "dominated"

    def test_specified_id(self):
        pool = two_record_pool(with_frontier([make_record("a", 0.9, 0.1)]))
        assert select_baseline(pool, BaselinePolicy("specified_id", model_id="a")) == "a"
        with pytest.raises(UnknownId):
            select_baseline(pool, BaselinePolicy("specified_id", model_id="nope"))

    def test_policy_parsing(self):
        assert parse_baseline_policy("max-accuracy").kind == "max_accuracy"
        assert parse_baseline_policy("id:xyz").model_id == "xyz"
        assert parse_baseline_policy("off-frontier:0.02").eps == 0.02
        with pytest.raises(ConfigError):
            parse_baseline_policy("bogus")
