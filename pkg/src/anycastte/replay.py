"""Attack replay on a simulated clock.

Traffic from a trace is assigned to sites by the active catchment map; policy
deployments cut over atomically after a propagation delay; overloaded sites
drop proportionally across all sources (which is exactly what makes the
known-good attenuation estimate work).
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

from .catchment import CatchmentMap
from .controller import (
    DEFAULT_EVAL_INTERVAL_S,
    DEFAULT_REVERT_AFTER_S,
    ControllerState,
    Phase,
    SiteStatus,
    manual_deploy,
    step as controller_step,
)
from .errors import TraceError
from .estimator import ALPHA_FLOOR, EstimatorSample, estimate_offered
from .playbook import Playbook

TRACE_CLASSES = ("legit", "known-good", "attack")

DEFAULT_TICK_S = 10.0
DEFAULT_PROPAGATION_DELAY_S = 300.0

OUTCOME_MITIGATED = "mitigated"
OUTCOME_ESCALATED = "escalated"
OUTCOME_ENDED_UNDER_ATTACK = "ended-under-attack"


@dataclass(frozen=True)
class TraceEvent:
    t: float
    src: str
    rate: float
    traffic_class: str

    def __post_init__(self):
        if self.rate < 0:
            raise TraceError(f"negative rate at t={self.t} src={self.src}")
        if self.traffic_class not in TRACE_CLASSES:
            raise TraceError(f"unknown traffic class {self.traffic_class!r}")


@dataclass
class SiteSample:
    offered: float = 0.0
    observed: float = 0.0
    dropped: float = 0.0
    capacity: float = 0.0
    known_offered: float = 0.0
    known_observed: float = 0.0
    overloaded: bool = False


@dataclass
class ScenarioState:
    now: float
    active_map: CatchmentMap
    active_policy: str
    pending: tuple[str, CatchmentMap, float] | None  # policy, map, effective_at
    per_site: dict[str, SiteSample]
    controller_phase: str
    unreachable_rate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "now": self.now,
            "active_policy": self.active_policy,
            "pending": (
                {"policy_id": self.pending[0], "effective_at": self.pending[2]}
                if self.pending else None
            ),
            "per_site": {
                s: {
                    "offered": v.offered,
                    "observed": v.observed,
                    "dropped": v.dropped,
                    "capacity": v.capacity,
                    "overloaded": v.overloaded,
                }
                for s, v in self.per_site.items()
            },
            "controller_phase": self.controller_phase,
            "unreachable_rate": self.unreachable_rate,
        }


@dataclass
class ScenarioReport:
    timeline: list[dict]
    actions: list[dict]
    outcome: str
    controller_log: list[dict]

    def to_dict(self) -> dict:
        return {
            "timeline": self.timeline,
            "actions": self.actions,
            "outcome": self.outcome,
            "controller_log": self.controller_log,
        }


class ScenarioRunner:
    """Tick-by-tick scenario execution; run_scenario drives it to the end.

    ``maps`` supplies a catchment map per deployable policy (simulated from a
    topology or injected from fixtures).  The controller is optional; manual
    deployments go through :meth:`deploy`.
    """

    def __init__(
        self,
        pb: Playbook,
        maps: dict[str, CatchmentMap],
        trace: list[TraceEvent],
        capacities: dict[str, float],
        known_good_rates: dict[str, float] | None = None,
        controller_enabled: bool = True,
        tick: float = DEFAULT_TICK_S,
        propagation_delay: float = DEFAULT_PROPAGATION_DELAY_S,
        eval_interval: float | None = None,
        revert_after: float | None = None,
        duration: float | None = None,
        use_load_fractions: bool = False,
    ):
        if propagation_delay % tick != 0:
            raise TraceError("propagation_delay must be a multiple of the tick")
        for pid in pb.policy_ids():
            if pid not in maps:
                raise TraceError(f"no catchment map for playbook policy {pid!r}")
        self.pb = pb
        self.maps = maps
        self.capacities = dict(capacities)
        self.tick = tick
        self.propagation_delay = propagation_delay
        self.controller_enabled = controller_enabled
        self.use_load_fractions = use_load_fractions

        baseline_map = maps[pb.baseline_id]
        self.blocks = set(baseline_map.assignment)
        events = sorted(trace, key=lambda e: e.t)
        for ev in events:
            if ev.src not in self.blocks:
                raise TraceError(f"trace source {ev.src!r} not in the block universe")
        self.events = events
        self.known_good_rates = dict(known_good_rates or {})

        end = max((e.t for e in events), default=0.0)
        self.duration = duration if duration is not None else end + tick
        self.state = ScenarioState(
            now=0.0,
            active_map=baseline_map,
            active_policy=pb.baseline_id,
            pending=None,
            per_site={
                s: SiteSample(capacity=capacities.get(s, 0.0))
                for s in pb.site_ids()
            },
            controller_phase=Phase.IDLE.value,
        )
        self.controller = ControllerState(
            baseline_id=pb.baseline_id,
            active_policy=pb.baseline_id,
            eval_interval=eval_interval if eval_interval is not None else DEFAULT_EVAL_INTERVAL_S,
            revert_after=revert_after if revert_after is not None else DEFAULT_REVERT_AFTER_S,
        )
        self.timeline: list[dict] = []
        self.actions: list[dict] = []
        self._event_pos = 0
        self._rates: dict[tuple[str, str], float] = {}  # (src, class) -> rate
        self.done = False

    # -- deployment ---------------------------------------------------------

    def deploy(self, policy_id: str, trigger: str) -> None:
        """Schedule a policy change; takes effect one propagation delay out."""
        if policy_id not in self.maps:
            raise TraceError(f"unknown policy {policy_id!r}")
        if self.in_propagation_window():
            raise TraceError("a deployment is already propagating")
        if policy_id == self.state.active_policy:
            return
        effective = self.state.now + self.propagation_delay
        self.state.pending = (policy_id, self.maps[policy_id], effective)
        self.actions.append(
            {"time": self.state.now, "policy_id": policy_id, "trigger": trigger}
        )

    def manual_deploy(self, policy_id: str) -> None:
        self.deploy(policy_id, trigger="operator")
        self.controller = manual_deploy(self.controller, policy_id, self.state.now)

    def in_propagation_window(self) -> bool:
        return self.state.pending is not None

    def propagation_remaining(self) -> float:
        if not self.state.pending:
            return 0.0
        return max(0.0, self.state.pending[2] - self.state.now)

    # -- clock --------------------------------------------------------------

    def step(self) -> ScenarioState:
        """Advance one tick: cutover, traffic assignment, drops, controller."""
        st = self.state

        if st.pending and st.now >= st.pending[2]:
            policy_id, cmap, _ = st.pending
            st.active_map = cmap
            st.active_policy = policy_id
            st.pending = None

        self._advance_rates(st.now)

        offered = {s: 0.0 for s in self.pb.site_ids()}
        known_offered = {s: 0.0 for s in self.pb.site_ids()}
        unreachable = 0.0
        for (src, cls), rate in self._rates.items():
            if rate <= 0:
                continue
            site = st.active_map.assignment.get(src)
            if site is None or site == "UNREACHABLE":
                unreachable += rate
                continue
            offered[site] += rate
            if cls == "known-good":
                known_offered[site] += rate

        for site, sample in st.per_site.items():
            load = offered[site]
            cap = sample.capacity
            keep = 1.0 if load <= cap or load == 0 else cap / load
            sample.offered = load
            sample.observed = load * keep
            sample.dropped = load - sample.observed
            sample.known_offered = known_offered[site]
            sample.known_observed = known_offered[site] * keep
            sample.overloaded = load > cap
        st.unreachable_rate = unreachable

        if self.controller_enabled and not self.in_propagation_window():
            self._run_controller()
        st.controller_phase = self.controller.phase.value

        self.timeline.append(self._sample_record())
        st.now += self.tick
        if st.now >= self.duration:
            self.done = True
        return st

    def _advance_rates(self, now: float) -> None:
        while self._event_pos < len(self.events) and self.events[self._event_pos].t <= now:
            ev = self.events[self._event_pos]
            self._rates[(ev.src, ev.traffic_class)] = ev.rate
            self._event_pos += 1

    def site_statuses(self) -> list[SiteStatus]:
        """Controller inputs for the current tick, via the estimator."""
        statuses = []
        for site, sample in self.state.per_site.items():
            expected = self._expected_known_good(site)
            if expected <= 0:
                # No known-good vantage behind this site right now; fall back
                # to the observed rate (no attenuation evidence).
                statuses.append(SiteStatus(
                    site_id=site,
                    capacity=sample.capacity,
                    estimated_offered=sample.observed,
                    observed=sample.observed,
                    reachable=True,
                ))
                continue
            est = estimate_offered(EstimatorSample(
                site_id=site,
                window=(self.state.now - self.tick, self.state.now),
                t_observed=sample.observed,
                t_known_observed=min(sample.known_observed, sample.observed),
                t_known_offered=expected,
            ))
            statuses.append(SiteStatus(
                site_id=site,
                capacity=sample.capacity,
                estimated_offered=est.t_offered_hat,
                observed=sample.observed,
                reachable=est.alpha > ALPHA_FLOOR,
            ))
        return statuses

    def _expected_known_good(self, site: str) -> float:
        # Membership follows the *active* map: vantage points move with the
        # catchment, and their normal rates are the configured constants.
        total = 0.0
        for src, rate in self.known_good_rates.items():
            if self.state.active_map.assignment.get(src) == site:
                total += rate
        return total

    def _run_controller(self) -> None:
        statuses = self.site_statuses()
        total = sum(s.estimated_offered for s in statuses)
        self.controller, decision = controller_step(
            self.controller, statuses, total, self.pb, self.state.now,
            use_load_fractions=self.use_load_fractions,
        )
        if decision and decision.kind == "deploy" and not self.in_propagation_window():
            if decision.policy_id != self.state.active_policy:
                self.deploy(decision.policy_id, trigger="controller")

    def _sample_record(self) -> dict:
        st = self.state
        return {
            "t": st.now,
            "sites": {
                s: {
                    "offered": v.offered,
                    "observed": v.observed,
                    "capacity": v.capacity,
                    "overloaded": v.overloaded,
                }
                for s, v in st.per_site.items()
            },
            "unreachable_rate": st.unreachable_rate,
            "active_policy": st.active_policy,
        }

    def run(self) -> ScenarioReport:
        while not self.done:
            self.step()
        return self.report()

    def report(self) -> ScenarioReport:
        outcome = self._outcome()
        return ScenarioReport(
            timeline=self.timeline,
            actions=self.actions,
            outcome=outcome,
            controller_log=list(self.controller.log),
        )

    def _outcome(self) -> str:
        if self.controller.phase == Phase.ESCALATED:
            return OUTCOME_ESCALATED
        window_start = max(0.0, self.duration - DEFAULT_PROPAGATION_DELAY_S)
        final = [r for r in self.timeline if r["t"] >= window_start] or self.timeline[-1:]
        overloaded = any(
            v["overloaded"] for r in final for v in r["sites"].values()
        )
        return OUTCOME_ENDED_UNDER_ATTACK if overloaded else OUTCOME_MITIGATED


def run_scenario(
    pb: Playbook,
    maps: dict[str, CatchmentMap],
    trace: list[TraceEvent],
    capacities: dict[str, float],
    **options,
) -> ScenarioReport:
    return ScenarioRunner(pb, maps, trace, capacities, **options).run()


def synthesize_trace(spec: dict) -> list[TraceEvent]:
    """Deterministic trace synthesis from a phase description.

    spec keys: seed; sources (block ids); known_good ({src: rate}, constant
    for the whole scenario); phases, each {start, duration, total_rate,
    source_skew (Zipf-ish exponent, 0 = uniform), attack_fraction}.
    """
    try:
        seed = int(spec["seed"])
        sources = list(spec["sources"])
        phases = list(spec["phases"])
    except (KeyError, TypeError) as exc:
        raise TraceError(f"invalid trace spec: {exc}") from exc
    if not sources:
        raise TraceError("trace spec has no sources")
    prev_start = None
    for ph in phases:
        if prev_start is not None and ph["start"] < prev_start:
            raise TraceError("phases must be sorted by start time")
        if ph.get("duration", 0) <= 0 or ph.get("total_rate", -1) < 0:
            raise TraceError(f"invalid phase {ph!r}")
        prev_start = ph["start"]

    rng = random.Random(seed)
    events: list[TraceEvent] = []
    for src, rate in sorted(dict(spec.get("known_good", {})).items()):
        events.append(TraceEvent(0.0, src, float(rate), "known-good"))

    for ph in phases:
        start = float(ph["start"])
        duration = float(ph["duration"])
        total = float(ph["total_rate"])
        skew = float(ph.get("source_skew", 0.0))
        attack_fraction = float(ph.get("attack_fraction", 1.0))
        order = sources[:]
        rng.shuffle(order)
        weights = [1.0 / (i + 1) ** skew for i in range(len(order))]
        wsum = sum(weights)
        n_attack = round(len(order) * attack_fraction)
        for i, src in enumerate(order):
            rate = total * weights[i] / wsum
            cls = "attack" if i < n_attack else "legit"
            events.append(TraceEvent(start, src, rate, cls))
            events.append(TraceEvent(start + duration, src, 0.0, cls))
    events.sort(key=lambda e: e.t)
    return events


def load_trace_csv(path) -> list[TraceEvent]:
    events = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"t", "src", "rate", "class"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise TraceError(f"trace {path} must have columns {sorted(required)}")
        last_t = float("-inf")
        for row in reader:
            try:
                ev = TraceEvent(
                    t=float(row["t"]), src=row["src"],
                    rate=float(row["rate"]), traffic_class=row["class"],
                )
            except ValueError as exc:
                raise TraceError(f"malformed trace row {row}: {exc}") from exc
            if ev.t < last_t:
                raise TraceError("trace timestamps must be nondecreasing")
            last_t = ev.t
            events.append(ev)
    return events


def save_trace_csv(events: list[TraceEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "src", "rate", "class"])
        for ev in events:
            writer.writerow([ev.t, ev.src, ev.rate, ev.traffic_class])
