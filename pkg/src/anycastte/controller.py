"""Automated defense loop: detect overload, pick a playbook option, deploy,
re-evaluate, escalate to the operator after three failed attempts, and revert
to the baseline after a quiet period.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace
from enum import Enum

from .playbook import Playbook, PlaybookEntry
from .routing import policy_distance

MAX_ATTEMPTS = 3
DEFAULT_EVAL_INTERVAL_S = 300.0
DEFAULT_REVERT_AFTER_S = 1800.0
# Hysteresis: overloaded above 1.0 utilization, OK again at or below 0.9.
OVERLOAD_UTIL = 1.0
OK_UTIL = 0.9


class Phase(str, Enum):
    IDLE = "idle"
    MITIGATING = "mitigating"
    ESCALATED = "escalated"
    REVERTING = "reverting"


@dataclass(frozen=True)
class SiteStatus:
    site_id: str
    capacity: float
    estimated_offered: float
    observed: float
    reachable: bool = True

    @property
    def utilization(self) -> float:
        if not self.reachable:
            return float("inf")  # unreachable counts as saturated
        return self.estimated_offered / self.capacity if self.capacity else float("inf")

    @property
    def overloaded(self) -> bool:
        return self.utilization > OVERLOAD_UTIL

    @property
    def ok(self) -> bool:
        return self.utilization <= OK_UTIL


@dataclass(frozen=True)
class Decision:
    kind: str  # no-action | deploy | escalate
    policy_id: str | None = None
    rationale: str = ""
    feasible_set: frozenset[str] = frozenset()


@dataclass
class ControllerState:
    baseline_id: str
    active_policy: str
    phase: Phase = Phase.IDLE
    attempt: int = 0
    candidate_set: frozenset[str] | None = None  # None = unrestricted
    eval_interval: float = DEFAULT_EVAL_INTERVAL_S
    revert_after: float = DEFAULT_REVERT_AFTER_S
    last_action_at: float | None = None
    quiet_since: float | None = None
    log: list[dict] = field(default_factory=list)

    def snapshot(self) -> dict:
        return {
            "phase": self.phase.value,
            "active_policy": self.active_policy,
            "attempt": self.attempt,
            "candidate_set": sorted(self.candidate_set) if self.candidate_set is not None else None,
            "eval_interval": self.eval_interval,
            "revert_after": self.revert_after,
            "last_action_at": self.last_action_at,
        }


def predicted_loads(entry: PlaybookEntry, total_offered: float,
                    use_load_fractions: bool) -> dict[str, float]:
    fr = entry.load_fractions if use_load_fractions else entry.fractions
    return {s: total_offered * f for s, f in fr.items()}


def assess(
    statuses: list[SiteStatus],
    total_offered: float,
    pb: Playbook,
    active_policy: str,
    candidate_set: frozenset[str] | None = None,
    use_load_fractions: bool = True,
) -> Decision:
    """One decision: pick the playbook option predicted to clear the overload.

    Feasible = every site's predicted load fits its capacity.  Among feasible
    options prefer the smallest routing change from the active policy, then
    the most uniform predicted utilization, then lexicographic policy_id.
    With nothing feasible, fall back to the least total predicted excess.
    """
    by_site = {s.site_id: s for s in statuses}
    overloaded = [s.site_id for s in statuses if s.overloaded]
    if not overloaded:
        return Decision(kind="no-action", rationale="no site over capacity")

    active_cfg = pb.entry(active_policy).config
    candidates = [
        e for e in pb.entries
        if (candidate_set is None or e.policy_id in candidate_set)
        and e.policy_id != active_policy  # the active one demonstrably failed
    ]

    def fits(entry: PlaybookEntry) -> bool:
        loads = predicted_loads(entry, total_offered, use_load_fractions)
        return all(
            loads.get(s, 0.0) <= by_site[s].capacity * OVERLOAD_UTIL
            for s in by_site
        )

    def util_variance(entry: PlaybookEntry) -> float:
        loads = predicted_loads(entry, total_offered, use_load_fractions)
        utils = [loads.get(s, 0.0) / by_site[s].capacity for s in sorted(by_site)]
        return statistics.pvariance(utils) if len(utils) > 1 else 0.0

    feasible = [e for e in candidates if fits(e)]
    if feasible:
        chosen = min(
            feasible,
            key=lambda e: (
                policy_distance(active_cfg, e.config),
                util_variance(e),
                e.policy_id,
            ),
        )
        return Decision(
            kind="deploy",
            policy_id=chosen.policy_id,
            rationale=f"feasible option at distance "
                      f"{policy_distance(active_cfg, chosen.config)} "
                      f"clearing {overloaded}",
            feasible_set=frozenset(e.policy_id for e in feasible),
        )

    if not candidates:
        return Decision(kind="escalate", rationale="no candidate options remain")

    def excess(entry: PlaybookEntry) -> float:
        loads = predicted_loads(entry, total_offered, use_load_fractions)
        return sum(
            max(0.0, loads.get(s, 0.0) - by_site[s].capacity) for s in by_site
        )

    chosen = min(
        candidates,
        key=lambda e: (excess(e), policy_distance(active_cfg, e.config), e.policy_id),
    )
    # feasible_set stays empty: nothing was predicted to fit, so there is
    # no basis for narrowing the candidate set.
    return Decision(
        kind="deploy",
        policy_id=chosen.policy_id,
        rationale="least-bad option (no feasible choice); "
                  f"residual excess {excess(chosen):.1f}",
    )


def step(
    state: ControllerState,
    statuses: list[SiteStatus],
    total_offered: float,
    pb: Playbook,
    now: float,
    use_load_fractions: bool = True,
) -> tuple[ControllerState, Decision | None]:
    """Advance the control loop by one evaluation at simulated time ``now``.

    Deploys are rate-limited to one per eval_interval; three failed attempts
    within an incident escalate; a sustained all-clear reverts to baseline.
    Returns the decision acted on this step, or None when holding.
    """
    any_overload = any(s.overloaded for s in statuses)
    all_ok = all(s.ok for s in statuses)

    if state.phase == Phase.ESCALATED:
        # Hands off until the operator intervenes (manual_deploy resets us).
        return state, None

    if not any_overload:
        quiet_since = state.quiet_since if state.quiet_since is not None else now
        if all_ok:
            # Incident over for attempt-budget purposes.
            state = _with(state, attempt=0, candidate_set=None)
        state = _with(state, quiet_since=quiet_since)
        if (
            state.active_policy != state.baseline_id
            and now - quiet_since >= state.revert_after
        ):
            decision = Decision(
                kind="deploy",
                policy_id=state.baseline_id,
                rationale=f"quiet for {now - quiet_since:.0f}s, reverting to baseline",
            )
            state = _apply_deploy(state, decision, now, phase=Phase.IDLE)
            return state, decision
        if state.active_policy == state.baseline_id and state.phase == Phase.MITIGATING:
            state = _with(state, phase=Phase.IDLE)
        return state, None

    # Overload present.
    state = _with(state, quiet_since=None)
    if state.last_action_at is not None and now - state.last_action_at < state.eval_interval:
        return state, None  # let the previous change take effect

    if state.attempt >= MAX_ATTEMPTS:
        decision = Decision(
            kind="escalate",
            rationale=f"still overloaded after {MAX_ATTEMPTS} attempts",
        )
        state = _with(state, phase=Phase.ESCALATED)
        state.log.append(_log_record(now, statuses, decision, state))
        return state, decision

    decision = assess(
        statuses, total_offered, pb, state.active_policy,
        candidate_set=state.candidate_set,
        use_load_fractions=use_load_fractions,
    )
    if decision.kind == "deploy":
        # Subsequent iterations only reconsider what was viable this time.
        state = _apply_deploy(
            state, decision, now,
            phase=Phase.MITIGATING,
            attempt=state.attempt + 1,
            candidate_set=decision.feasible_set or state.candidate_set,
        )
        return state, decision
    if decision.kind == "escalate":
        state = _with(state, phase=Phase.ESCALATED)
        state.log.append(_log_record(now, statuses, decision, state))
        return state, decision
    return state, None


def manual_deploy(state: ControllerState, policy_id: str, now: float) -> ControllerState:
    """Operator override: deploy a policy and reset the attempt budget."""
    decision = Decision(kind="deploy", policy_id=policy_id, rationale="operator override")
    return _apply_deploy(
        state, decision, now,
        phase=Phase.MITIGATING, attempt=0, candidate_set=None,
    )


_KEEP = object()


def _with(state: ControllerState, **kw) -> ControllerState:
    return replace(state, **kw)


def _apply_deploy(state, decision, now, phase, attempt=_KEEP, candidate_set=_KEEP):
    new = _with(
        state,
        active_policy=decision.policy_id,
        phase=phase,
        last_action_at=now,
        attempt=state.attempt if attempt is _KEEP else attempt,
        candidate_set=state.candidate_set if candidate_set is _KEEP else candidate_set,
    )
    new.log.append(_log_record(now, None, decision, new))
    return new


def _log_record(now, statuses, decision, state) -> dict:
    return {
        "time": now,
        "statuses": [
            {
                "site_id": s.site_id,
                "capacity": s.capacity,
                "estimated_offered": s.estimated_offered,
                "observed": s.observed,
                "reachable": s.reachable,
            }
            for s in statuses
        ] if statuses else None,
        "decision": decision.kind,
        "policy_id": decision.policy_id,
        "rationale": decision.rationale,
        "attempt": state.attempt,
        "phase": state.phase.value,
    }
