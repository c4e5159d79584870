import random
import statistics

import pytest

from anycastte.controller import (
    MAX_ATTEMPTS,
    OVERLOAD_UTIL,
    ControllerState,
    Decision,
    Phase,
    SiteStatus,
    assess,
    manual_deploy,
    predicted_loads,
    step,
)
from anycastte.routing import policy_distance

SITES = ("AMS", "BOS", "CNF")


def make_state(**kw):
    defaults = dict(baseline_id="q", active_policy="q")
    defaults.update(kw)
    return ControllerState(**defaults)


def statuses_for(total, fractions, capacities):
    return [
        SiteStatus(
            site_id=s,
            capacity=capacities[s],
            estimated_offered=total * fractions[s],
            observed=min(total * fractions[s], capacities[s]),
        )
        for s in SITES
    ]


def overload_statuses(pb, policy_id, total, capacities):
    return statuses_for(total, pb.entry(policy_id).fractions, capacities)


ALL_OK = [SiteStatus(s, capacity=100.0, estimated_offered=10.0, observed=10.0)
          for s in SITES]


class TestSiteStatus:
    def test_hysteresis_band(self):
        hot = SiteStatus("A", capacity=100, estimated_offered=101, observed=100)
        warm = SiteStatus("A", capacity=100, estimated_offered=95, observed=95)
        cool = SiteStatus("A", capacity=100, estimated_offered=90, observed=90)
        assert hot.overloaded and not hot.ok
        assert not warm.overloaded and not warm.ok
        assert not cool.overloaded and cool.ok

    def test_unreachable_is_saturated(self):
        status = SiteStatus("A", capacity=100, estimated_offered=0,
                            observed=0, reachable=False)
        assert status.utilization == float("inf")
        assert status.overloaded


class TestAssess:
    def test_no_overload(self, table5_playbook):
        decision = assess(ALL_OK, 30.0, table5_playbook, "q")
        assert decision.kind == "no-action"

    def test_feasible_choice_ties_broken_lexicographically(self, table5_playbook):
        # caps 400 / total 1000: only f and o (both 35/25/35) fit; both sit
        # at distance 1 from the baseline with identical spreads, so the
        # policy_id tie-break picks f.
        caps = {s: 400.0 for s in SITES}
        statuses = overload_statuses(table5_playbook, "q", 1000.0, caps)
        decision = assess(statuses, 1000.0, table5_playbook, "q",
                          use_load_fractions=False)
        assert decision.kind == "deploy"
        assert decision.policy_id == "f"
        assert decision.feasible_set == {"f", "o"}

    def test_active_policy_excluded(self, table5_playbook):
        # The active policy predicts a fit but the site is demonstrably hot,
        # so it must not be re-proposed; the twin option o wins instead.
        caps = {s: 400.0 for s in SITES}
        statuses = [
            SiteStatus("AMS", capacity=400.0, estimated_offered=450.0, observed=400.0),
            SiteStatus("BOS", capacity=400.0, estimated_offered=250.0, observed=250.0),
            SiteStatus("CNF", capacity=400.0, estimated_offered=250.0, observed=250.0),
        ]
        decision = assess(statuses, 950.0, table5_playbook, "f",
                          use_load_fractions=False)
        assert decision.kind == "deploy"
        assert decision.policy_id == "o"
        assert "f" not in decision.feasible_set

    def test_candidate_set_respected(self, table5_playbook):
        caps = {s: 400.0 for s in SITES}
        statuses = overload_statuses(table5_playbook, "q", 1000.0, caps)
        decision = assess(statuses, 1000.0, table5_playbook, "q",
                          candidate_set=frozenset({"o", "u"}),
                          use_load_fractions=False)
        assert decision.policy_id == "o"

    def test_least_bad_when_nothing_fits(self, table5_playbook):
        caps = {s: 100.0 for s in SITES}
        statuses = overload_statuses(table5_playbook, "q", 1000.0, caps)
        decision = assess(statuses, 1000.0, table5_playbook, "q",
                          use_load_fractions=False)
        assert decision.kind == "deploy"
        # Least total predicted excess: the most even splits (f/o at
        # 350+250+350 over 300 capacity) minimize the overflow.
        assert decision.policy_id == "f"
        assert "least-bad" in decision.rationale

    def test_escalates_with_no_candidates(self, table5_playbook):
        caps = {s: 100.0 for s in SITES}
        statuses = overload_statuses(table5_playbook, "q", 1000.0, caps)
        decision = assess(statuses, 1000.0, table5_playbook, "q",
                          candidate_set=frozenset({"q"}),
                          use_load_fractions=False)
        assert decision.kind == "escalate"


def exhaustive_oracle(statuses, total, pb, active, candidate_set=None):
    """Brute-force re-derivation of the selection rule."""
    caps = {s.site_id: s.capacity for s in statuses}
    if not any(s.overloaded for s in statuses):
        return ("no-action", None)
    active_cfg = pb.entry(active).config
    pool = [e for e in pb.entries
            if e.policy_id != active
            and (candidate_set is None or e.policy_id in candidate_set)]
    if not pool:
        return ("escalate", None)

    def loads(e):
        return {s: total * e.fractions[s] for s in caps}

    def var(e):
        utils = [loads(e)[s] / caps[s] for s in sorted(caps)]
        return statistics.pvariance(utils)

    feasible = [
        e for e in pool
        if all(loads(e)[s] <= caps[s] * OVERLOAD_UTIL for s in caps)
    ]
    if feasible:
        ranked = sorted(
            feasible,
            key=lambda e: (policy_distance(active_cfg, e.config), var(e), e.policy_id),
        )
        return ("deploy", ranked[0].policy_id)
    ranked = sorted(
        pool,
        key=lambda e: (
            sum(max(0.0, loads(e)[s] - caps[s]) for s in caps),
            policy_distance(active_cfg, e.config),
            e.policy_id,
        ),
    )
    return ("deploy", ranked[0].policy_id)


@pytest.mark.parametrize("seed", range(40))
def test_assess_matches_exhaustive_oracle(table5_playbook, seed):
    rng = random.Random(seed)
    caps = {s: rng.choice((80.0, 150.0, 300.0, 400.0, 700.0)) for s in SITES}
    total = rng.choice((300.0, 600.0, 1000.0, 2000.0))
    active = rng.choice(table5_playbook.policy_ids())
    candidate_set = None
    if rng.random() < 0.3:
        candidate_set = frozenset(
            rng.sample(table5_playbook.policy_ids(), rng.randint(1, 8))
        )
    statuses = overload_statuses(table5_playbook, active, total, caps)
    decision = assess(statuses, total, table5_playbook, active,
                      candidate_set=candidate_set, use_load_fractions=False)
    kind, policy = exhaustive_oracle(statuses, total, table5_playbook,
                                     active, candidate_set)
    assert (decision.kind, decision.policy_id) == (kind, policy)


class TestStateMachine:
    # A stubborn attack: the real split stays baseline-shaped (AMS hot) no
    # matter what gets deployed, so every mitigation attempt "fails".
    CAPS = {s: 450.0 for s in SITES}

    def _stuck_overload(self, pb):
        return overload_statuses(pb, "q", 1000.0, self.CAPS)

    def test_three_attempts_then_escalate(self, table5_playbook):
        state = make_state()
        deploys = []
        now = 0.0
        for _ in range(10):
            state, decision = step(state, self._stuck_overload(table5_playbook),
                                   1000.0, table5_playbook, now,
                                   use_load_fractions=False)
            if decision and decision.kind == "deploy":
                deploys.append((now, decision.policy_id))
            if state.phase == Phase.ESCALATED:
                break
            now += 300.0
        assert len(deploys) == MAX_ATTEMPTS
        assert state.phase == Phase.ESCALATED
        # The escalation is the 4th evaluation, after exactly 3 deploys.
        assert now == 900.0

    def test_rate_limit_one_deploy_per_interval(self, table5_playbook):
        state = make_state()
        state, decision = step(state, self._stuck_overload(table5_playbook),
                               1000.0, table5_playbook, 0.0,
                               use_load_fractions=False)
        assert decision.kind == "deploy"
        for now in (50.0, 150.0, 299.0):
            state, decision = step(state, self._stuck_overload(table5_playbook),
                                   1000.0, table5_playbook, now,
                                   use_load_fractions=False)
            assert decision is None
        state, decision = step(state, self._stuck_overload(table5_playbook),
                               1000.0, table5_playbook, 300.0,
                               use_load_fractions=False)
        assert decision is not None

    def test_candidate_set_narrows_monotonically(self, table5_playbook):
        state = make_state()
        seen = []
        now = 0.0
        while state.phase != Phase.ESCALATED:
            state, decision = step(state, self._stuck_overload(table5_playbook),
                                   1000.0, table5_playbook, now,
                                   use_load_fractions=False)
            if state.candidate_set is not None:
                seen.append(state.candidate_set)
            now += 300.0
            assert now <= 3000.0, "incident never escalated"
        for earlier, later in zip(seen, seen[1:]):
            assert later <= earlier
        assert len(seen) >= 2

    def test_escalated_is_hands_off(self, table5_playbook):
        state = make_state(phase=Phase.ESCALATED, attempt=3)
        statuses = self._stuck_overload(table5_playbook)
        new, decision = step(state, statuses, 1000.0, table5_playbook, 0.0,
                             use_load_fractions=False)
        assert decision is None
        assert new.phase == Phase.ESCALATED
        assert new.active_policy == "q"

    def test_revert_after_quiet_period(self, table5_playbook):
        state = make_state(active_policy="f", phase=Phase.MITIGATING)
        state, decision = step(state, ALL_OK, 30.0, table5_playbook, 0.0)
        assert decision is None
        state, decision = step(state, ALL_OK, 30.0, table5_playbook, 1799.0)
        assert decision is None
        state, decision = step(state, ALL_OK, 30.0, table5_playbook, 1800.0)
        assert decision.policy_id == "q"
        assert state.active_policy == "q"
        assert state.phase == Phase.IDLE

    def test_overload_resets_quiet_timer(self, table5_playbook):
        state = make_state(active_policy="f", phase=Phase.MITIGATING)
        state, _ = step(state, ALL_OK, 30.0, table5_playbook, 0.0)
        assert state.quiet_since == 0.0
        state, _ = step(state, self._stuck_overload(table5_playbook),
                        1000.0, table5_playbook, 900.0,
                        use_load_fractions=False)
        assert state.quiet_since is None

    def test_all_ok_resets_attempt_budget(self, table5_playbook):
        state = make_state(attempt=2, candidate_set=frozenset({"f", "o"}),
                           phase=Phase.MITIGATING, active_policy="f")
        state, _ = step(state, ALL_OK, 30.0, table5_playbook, 0.0)
        assert state.attempt == 0
        assert state.candidate_set is None

    def test_hysteresis_band_keeps_attempt_budget(self, table5_playbook):
        # Utilization between 0.9 and 1.0: not overloaded, but not OK either.
        warm = [SiteStatus(s, capacity=100.0, estimated_offered=95.0,
                           observed=95.0) for s in SITES]
        state = make_state(attempt=2, phase=Phase.MITIGATING, active_policy="f")
        state, decision = step(state, warm, 285.0, table5_playbook, 0.0)
        assert decision is None
        assert state.attempt == 2

    def test_manual_deploy_resets(self, table5_playbook):
        state = make_state(phase=Phase.ESCALATED, attempt=3,
                           candidate_set=frozenset({"f"}))
        state = manual_deploy(state, "u", 100.0)
        assert state.active_policy == "u"
        assert state.attempt == 0
        assert state.candidate_set is None
        assert state.phase == Phase.MITIGATING
        assert state.log[-1]["rationale"] == "operator override"

    def test_log_records_decisions(self, table5_playbook):
        state = make_state()
        statuses = self._stuck_overload(table5_playbook)
        state, decision = step(state, statuses, 1000.0, table5_playbook, 0.0,
                               use_load_fractions=False)
        assert state.log[-1]["policy_id"] == decision.policy_id
        assert state.log[-1]["decision"] == "deploy"


def test_predicted_loads_uses_selected_fraction_kind(table5_playbook):
    entry = table5_playbook.entry("f")
    loads = predicted_loads(entry, 1000.0, use_load_fractions=False)
    assert loads == {"AMS": 350.0, "BOS": 250.0, "CNF": 350.0}
