from __future__ import annotations

import json
from fractions import Fraction as F

import pytest
from builders import market, vec
from conftest import scenario

from hierarb.aggregation import ConstantMap, DemandImpactMap, InjectiveMap
from hierarb.dominance import compute_ladders
from hierarb.errors import ConfigError, DomainError
from hierarb.io import dumps, parse_scenario, scenario_doc
from hierarb.market import Sdf
from hierarb.oracle import (
    FAIL,
    GAP,
    PASS,
    SKIPPED,
    THREADS_ENV,
    VACUOUS,
    InstanceBounds,
    check_scenario,
    enumerate_scenarios,
    generate_scenario,
    minimal_order,
    run_suite,
    thread_count,
    verify_prop1_corollary1,
    verify_prop4,
    verify_prop5,
    verify_prop6,
    verify_stabilization_bound,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
)
from hierarb.tatonnement import run


def _statuses(verdicts, claim):
    return [v.status for v in verdicts if v.claim == claim]


def test_bounds_validation():
    for bad in (dict(max_states=0), dict(count=0), dict(prob_weights=(0, 0)), dict(sdf_pool=()),
                dict(sdf_pool=("0",)), dict(kinds=("quadratic",)), dict(payoff_pool=("-1",)),
                dict(rate_pool=("0",)), dict(prob_weights=(-1, 2))):
        with pytest.raises(ConfigError):
            InstanceBounds(**bad)


def test_minimal_bounds_give_minimal_scenarios():
    for sc in enumerate_scenarios(InstanceBounds.minimal(count=20)):
        assert sc.space.size == 1 and sc.assets.count == 1
        assert sc.n_agents == 1 and len(sc.grids[0]) == 1


def test_same_seed_same_stream():
    b = InstanceBounds(count=30, seed=7)
    one = [dumps(scenario_doc(sc)) for sc in enumerate_scenarios(b)]
    two = [dumps(scenario_doc(sc)) for sc in enumerate_scenarios(b)]
    assert one == two


def test_distinct_seeds_differ_early():
    a = [dumps(scenario_doc(sc)) for sc in enumerate_scenarios(InstanceBounds(count=100, seed=0))]
    b = [dumps(scenario_doc(sc)) for sc in enumerate_scenarios(InstanceBounds(count=100, seed=1))]
    assert a != b


def test_stream_is_index_addressable():
    b = InstanceBounds(count=10, seed=3)
    assert [scenario_doc(s) for s in enumerate_scenarios(b)][7] == scenario_doc(generate_scenario(b, 7))


def test_generated_scenarios_cover_every_kind():
    kinds = {generate_scenario(InstanceBounds(), k).aggregation.kind for k in range(60)}
    assert kinds == {"constant", "injective", "demand_impact", "tabular"}


def test_minimal_bounds_verify_cleanly():
    report = run_suite(InstanceBounds.minimal(count=10))
    assert report.failures == 0
    assert report.counterexamples == []
    for claim in ("prop1_corollary1", "theorem1", "theorem2", "prop6_alpha"):
        assert report.claims[claim].as_dict()["vacuous"] == 10


def test_prop1_examples():
    optimal = market([[(0, 0), (1, 0)], [(0, 0)]])
    assert verify_prop1_corollary1(optimal, (0, 0)).status == VACUOUS
    single = market([[(0, 1)]])
    assert verify_prop1_corollary1(single, (0,)).status == VACUOUS
    assert verify_prop1_corollary1(scenario("arbitrage"), (1, 0)).status == PASS


def test_theorem1_examples():
    sc = scenario("arbitrage")
    ladders = compute_ladders(sc)
    strict, weak = verify_theorem1(sc, (1, 0), ladders)
    assert (strict.status, weak.status) == (PASS, PASS)
    assert strict.detail["arbitrageurs"] == [0]
    quiet = market([[(0, 0), (1, 0)]])
    assert [v.status for v in verify_theorem1(quiet, (0,), compute_ladders(quiet))] == [VACUOUS, VACUOUS]


def test_theorem1_constant_map_first_level_has_no_arbitrage():
    sc = market([[(0, 0), (0, F(1, 2)), (0, 1)], [(0, 0), (1, 0)]], ConstantMap(Sdf(vec(0, 2))))
    ladders = compute_ladders(sc)
    for p in sc.profiles():
        if all(p[i] in ladders[i].ud(1) for i in range(2)):
            assert verify_prop1_corollary1(sc, p).status == VACUOUS


def test_theorem1_skips_order_zero_profiles():
    sc = market([[(0, 0), (0, F(1, 2))]], ConstantMap(Sdf(vec(0, 2))))
    statuses = [v.status for v in verify_theorem1(sc, (0,), compute_ladders(sc))]
    assert statuses == [SKIPPED, SKIPPED]


def test_theorem2_examples():
    sc = scenario("injective")
    ladders = compute_ladders(sc)
    assert verify_theorem2(sc, (0, 0), ladders).status == PASS
    stable = tuple(min(lad.stable) for lad in ladders)
    assert verify_theorem2(sc, stable, ladders).status == VACUOUS


def test_theorem3_gap_is_flagged_not_failed():
    sc = scenario("thm3_gap")
    out = verify_theorem3(sc, [(1, 3)], compute_ladders(sc))
    assert [v.status for v in out] == [VACUOUS, VACUOUS, GAP]


def test_theorem3_stabilized_profiles_pass():
    sc = scenario("thm3_gap")
    out = verify_theorem3(sc, [(1, 1)], compute_ladders(sc))
    assert _statuses(out, "theorem3_i") == [PASS]


def test_theorem3_known_counterexample():
    # stabilized for both agents, yet agent 1 can improve against the single
    # opponent profile consistent with the observed SDF
    sc = scenario("counterexample_thm3")
    out = verify_theorem3(sc, [(0, 2)], compute_ladders(sc))
    assert _statuses(out, "theorem3_i") == [FAIL]
    assert sc.fiber(1, (0, 2)).profiles == ((0,),)
    assert sc.gain(1, (0, 1)) == (-1, 1)
    assert sc.gain(1, (0, 2)) == (F(-5, 4), F(3, 4))


def test_stabilization_bound_examples():
    sc = scenario("fig2")
    assert verify_stabilization_bound(sc, compute_ladders(sc)).status == PASS
    # agent 1 prunes only in round 2, after agent 0 did in round 1
    stall = scenario("stall")
    ladders = compute_ladders(stall)
    assert [sorted(d) for d in ladders[1].dominated] == [[], [0], []]
    out = verify_stabilization_bound(stall, ladders)
    assert out.status == FAIL
    assert out.detail["agents"] == [0, 1, 2] and out.detail["K"] == 3


def test_prop4_examples():
    singles = market([[(0, 1)], [(1, 0)]], InjectiveMap(Sdf(vec(1, 1)), 0, F(1, 4)))
    assert verify_prop4(singles, compute_ladders(singles)).status == PASS
    sc = scenario("injective")
    assert verify_prop4(sc, compute_ladders(sc)).status == PASS
    with pytest.raises(DomainError):
        flat = market([[(0, 1), (1, 0)]])
        verify_prop4(flat, compute_ladders(flat))


def test_prop5_examples():
    sc = scenario("fig2")
    ladders = compute_ladders(sc)
    assert verify_prop5(sc.aggregation, sc.aggregation, sc, ladders).status == PASS
    const = ConstantMap(sc.sdf((0, 0)))
    assert verify_prop5(const, sc.aggregation, sc, ladders).status == PASS
    zero = DemandImpactMap(const.base, ((F(0),) * 3,) * 2)
    assert verify_prop5(const, zero, sc, ladders).status == PASS
    assert verify_prop5(sc.aggregation, const, sc, ladders).status == SKIPPED


def test_minimal_order_of_full_product_is_first_shrink():
    sc = scenario("fig2")
    ladders = compute_ladders(sc)
    full = set(sc.opponent_profiles(0))
    first = next(k for k in range(9) if len(ladders[1].ud(k)) < 8)
    assert minimal_order(full, ladders, 0) == first
    assert minimal_order({(7,)}, ladders, 0) is None


def test_prop6_examples():
    sc = scenario("fig2")
    ladders = compute_ladders(sc)
    assert [v.status for v in verify_prop6(sc, run(sc, (7, 7), 5), ladders)] == [VACUOUS, VACUOUS]
    out = verify_prop6(sc, run(sc, (3, 5), 20), ladders)
    alpha = [v for v in out if v.claim == "prop6_alpha"]
    assert alpha[0].detail["alpha"] == 3
    assert all(v.status == PASS for v in alpha)


def test_report_stores_replayable_counterexamples():
    bad = scenario("counterexample_thm3")
    report = run_suite(InstanceBounds.minimal(count=1), extra=[("bad", bad)])
    assert report.failures_for("theorem3_i") == 1
    cex = [c for c in report.counterexamples if c["claim"] == "theorem3_i"]
    assert len(cex) == 1
    replay = parse_scenario(json.dumps(cex[0]["scenario"]))
    assert _statuses(check_scenario(replay, "bad"), "theorem3_i").count(FAIL) == 1


def test_report_has_no_wall_time_unless_asked():
    report = run_suite(InstanceBounds.minimal(count=2))
    assert "wallTime" not in report.as_dict()
    assert "wallTime" in report.as_dict(timing=True)


def test_thread_count(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert thread_count() == 1
    assert thread_count(0) == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        thread_count()
