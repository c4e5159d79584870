"""Acceptance gate: one test per primary criterion, each printing a single
pass/fail line under ``pytest -v``.  Everything here reuses the shared
oracles, property checks, and scenario builders from the sibling modules.
"""

import random
import time

import pytest

from anycastte.catchment import catchment_from_assignment, diff_catchments
from anycastte.estimator import EstimatorSample, estimate_offered
from anycastte.playbook import BIN_LABELS
from anycastte.routing import compute_routes

from oracles import check_stable, oracle_routes
from properties import run_property_suite, small_world, small_world_configs
from scenarios import (
    make_runner,
    overload_cleared_by,
    random_closed_loop_case,
    scenario_2017,
    scenario_enterprise,
    scenario_iterating,
    scenario_super_site,
)
from test_controller import (
    ALL_OK,
    SITES,
    exhaustive_oracle,
    make_state,
    overload_statuses,
)
from test_playbook import OPTION_COUNTS, TABLE6

from anycastte.controller import MAX_ATTEMPTS, Phase, assess, step


def test_acceptance_estimator_table2_goldens():
    start = time.perf_counter()
    rows = [
        # (known_offered, known_observed, observed, alpha, tol_a, t_hat, rel)
        (33.08, 1.85, 0.37e6, 0.0559, 0.0005, 6.6e6, 0.05),
        (36.58, 0.33, 0.10e6, 0.0091, 0.0005, 11e6, 0.05),
        (425.2, 207.0, 16.3e3, 0.49, 0.01, 33.2e3, 0.02),
    ]
    for ko, kobs, obs, alpha, tol_a, t_hat, rel in rows:
        result = estimate_offered(EstimatorSample(
            site_id="site", window=(0.0, 60.0),
            t_observed=obs, t_known_observed=kobs, t_known_offered=ko,
        ))
        assert result.alpha == pytest.approx(alpha, abs=tol_a)
        assert result.t_offered_hat == pytest.approx(t_hat, rel=rel)
    assert time.perf_counter() - start < 1.0


def test_acceptance_playbook_inversion(table5_playbook):
    for site, by_bin in TABLE6.items():
        for label in BIN_LABELS:
            expected = by_bin.get(label, set())
            assert set(table5_playbook.policies_in_bin(site, label)) == expected, \
                f"{site} {label}"
    assert table5_playbook.policies_in_bin("AMS", "60-70") == {"q", "r"}
    for site, count in OPTION_COUNTS.items():
        assert table5_playbook.option_count(site) == count


def test_acceptance_estimator_closed_loop():
    threshold = 40.0 / 60.0  # 40 queries/minute of known-good per site
    checked = 0
    for seed in range(20):
        runner, known_good, cmap = random_closed_loop_case(seed)
        while not runner.done:
            runner.step()
            statuses = {s.site_id: s for s in runner.site_statuses()}
            for site, sample in runner.state.per_site.items():
                expected = sum(rate for src, rate in known_good.items()
                               if cmap.assignment[src] == site)
                if expected < threshold or sample.offered == 0:
                    continue
                est = statuses[site].estimated_offered
                assert est == pytest.approx(sample.offered, rel=0.05), \
                    f"seed {seed} site {site} t {runner.state.now}"
                checked += 1
    assert checked > 100


def test_acceptance_routing_properties():
    assert run_property_suite(n_seeds=50) == []
    for seed in range(60):
        graph = small_world(seed)
        for cfg in small_world_configs(graph):
            engine = compute_routes(graph, cfg)
            oracle = oracle_routes(graph, cfg)
            assert engine.best == oracle.best, f"seed {seed} {cfg.policy_id}"
            assert check_stable(graph, cfg, engine) == []


def test_acceptance_controller_state_machine(table5_playbook):
    caps = {s: 450.0 for s in SITES}
    stuck = overload_statuses(table5_playbook, "q", 1000.0, caps)

    # (a) escalation exactly at the 3rd failed attempt, (b) deploys spaced
    # >= 300 s, (c) candidate set only ever narrows within the incident.
    state = make_state()
    deploys, candidate_sets = [], []
    now = 0.0
    while state.phase != Phase.ESCALATED:
        state, decision = step(state, stuck, 1000.0, table5_playbook, now,
                               use_load_fractions=False)
        if decision and decision.kind == "deploy":
            deploys.append(now)
        if state.candidate_set is not None:
            candidate_sets.append(state.candidate_set)
        now += 100.0
        assert now <= 5000.0, "never escalated"
    assert len(deploys) == MAX_ATTEMPTS
    for earlier, later in zip(deploys, deploys[1:]):
        assert later - earlier >= 300.0
    for earlier, later in zip(candidate_sets, candidate_sets[1:]):
        assert later <= earlier

    # (d) revert to baseline after the quiet period.
    state = make_state(active_policy="f", phase=Phase.MITIGATING)
    state, decision = step(state, ALL_OK, 30.0, table5_playbook, 0.0)
    assert decision is None
    state, decision = step(state, ALL_OK, 30.0, table5_playbook, 1800.0)
    assert decision is not None and decision.policy_id == "q"
    assert state.active_policy == "q"

    # (e) assess agrees with the exhaustive-search oracle on the fixture.
    rng = random.Random(42)
    for _ in range(40):
        caps = {s: rng.choice((80.0, 150.0, 300.0, 400.0, 700.0))
                for s in SITES}
        total = rng.choice((300.0, 600.0, 1000.0, 2000.0))
        active = rng.choice(table5_playbook.policy_ids())
        statuses = overload_statuses(table5_playbook, active, total, caps)
        decision = assess(statuses, total, table5_playbook, active,
                          use_load_fractions=False)
        kind, policy = exhaustive_oracle(statuses, total, table5_playbook, active)
        assert (decision.kind, decision.policy_id) == (kind, policy)


def test_acceptance_scenario_replays():
    # Single-site overload cleared by the selective-announcement option.
    report = make_runner(scenario_2017).run()
    assert report.outcome == "mitigated"
    assert [a["policy_id"] for a in report.actions] == ["transit1"]
    assert overload_cleared_by(report) <= report.actions[0]["time"] + 300.0

    # Super-site: negative prepend pulls the load into the big site.
    report = make_runner(scenario_super_site).run()
    assert report.outcome == "mitigated"
    assert [a["policy_id"] for a in report.actions] == ["neg1xBOS"]
    assert overload_cleared_by(report) <= report.actions[0]["time"] + 300.0

    # Polymorphic attack: one deployment persists across both waves.
    report = make_runner(scenario_enterprise).run()
    assert report.outcome == "mitigated"
    assert [a["policy_id"] for a in report.actions] == ["spread"]
    assert report.timeline[-1]["active_policy"] == "spread"
    assert overload_cleared_by(report) <= report.actions[0]["time"] + 300.0

    # Iterating: the first attempt misfires, a second corrective deployment
    # finishes the job.
    report = make_runner(scenario_iterating).run()
    assert report.outcome == "mitigated"
    assert len(report.actions) == 2
    assert overload_cleared_by(report) > report.actions[0]["time"] + 300.0
    assert overload_cleared_by(report) <= report.actions[1]["time"] + 300.0


def test_acceptance_catchment_diff_exactness():
    rng = random.Random(11)
    for k, n in ((0, 10), (1, 10), (7, 200), (65, 10_000)):
        blocks = [f"b{i:05d}" for i in range(n)]
        base = {b: "AMS" for b in blocks}
        flipped = dict(base)
        planted = rng.sample(blocks, k)
        for b in planted:
            flipped[b] = "BOS"
        diff = diff_catchments(
            catchment_from_assignment("a", base, site_ids=("AMS", "BOS")),
            catchment_from_assignment("b", flipped, site_ids=("AMS", "BOS")),
        )
        assert diff.changed == frozenset(planted)
        assert diff.changed_fraction == k / n
