"""HTTP service behind the operator console, plus run persistence.

Thin adapter: every endpoint calls the underlying module operation with the
same inputs a library caller would use.  Persistence is append-only JSON
files under the data directory; a reloaded run reproduces its report exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .catchment import CatchmentMap, catchment_from_assignment
from .errors import AnycastError, TraceError
from .playbook import Playbook, load_playbook
from .replay import ScenarioRunner, load_trace_csv
from .topology import AsGraph, load_topology


@dataclass
class AppConfig:
    topology_path: str | None = None
    playbook_path: str | None = None
    data_dir: str = "./data"
    bind_host: str = "127.0.0.1"
    bind_port: int = 8400
    default_capacities: dict[str, float] = field(default_factory=dict)
    eval_interval: float | None = None
    revert_after: float | None = None

    @classmethod
    def from_file(cls, path: str) -> "AppConfig":
        with open(path) as fh:
            raw = json.load(fh)
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def from_env(cls) -> "AppConfig":
        path = os.environ.get("ANYCASTTE_CONFIG")
        cfg = cls.from_file(path) if path else cls()
        if os.environ.get("ANYCASTTE_BIND"):
            host, _, port = os.environ["ANYCASTTE_BIND"].partition(":")
            cfg.bind_host = host or cfg.bind_host
            if port:
                cfg.bind_port = int(port)
        return cfg

    def validate(self) -> None:
        for p in (self.topology_path, self.playbook_path):
            if p and not Path(p).exists():
                raise AnycastError(f"configured file does not exist: {p}")
        for name in ("eval_interval", "revert_after"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise AnycastError(f"{name} must be positive")


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    inputs: dict[str, str]  # sha256 of topology/playbook/trace documents
    report: dict
    created_at: float

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "inputs": self.inputs,
            "report": self.report,
            "created_at": self.created_at,
        }


def content_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_run(record: RunRecord, data_dir) -> Path:
    runs = Path(data_dir) / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    out = runs / f"{record.run_id}.json"
    with open(out, "w") as fh:
        json.dump(record.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_run(run_id: str, data_dir) -> RunRecord:
    path = Path(data_dir) / "runs" / f"{run_id}.json"
    with open(path) as fh:
        raw = json.load(fh)
    return RunRecord(
        run_id=raw["run_id"], inputs=raw["inputs"],
        report=raw["report"], created_at=raw["created_at"],
    )


class ScenarioRequest(BaseModel):
    trace_path: str
    capacities: dict[str, float] = {}
    controller: bool = True
    tick: float = 10.0
    propagation_delay: float = 300.0
    known_good: dict[str, float] = {}
    duration: float | None = None


class DeployRequest(BaseModel):
    policy_id: str


def create_app(
    config: AppConfig | None = None,
    playbook: Playbook | None = None,
    graph: AsGraph | None = None,
    maps: dict[str, CatchmentMap] | None = None,
) -> FastAPI:
    """Assemble the API.  Playbook/graph may be passed directly (tests) or
    loaded from the config paths."""
    config = config or AppConfig()
    config.validate()
    if playbook is None and config.playbook_path:
        playbook = load_playbook(config.playbook_path)
    if graph is None and config.topology_path:
        graph = load_topology(config.topology_path)
    if playbook is None:
        raise AnycastError("service needs a playbook (config or argument)")
    if maps is None:
        maps = _maps_for(playbook, graph)

    app = FastAPI(title="anycastte")
    scenarios: dict[str, ScenarioRunner] = {}
    app.state.playbook = playbook
    app.state.scenarios = scenarios

    @app.get("/playbook")
    def get_playbook():
        return {
            "baseline_id": playbook.baseline_id,
            "sites": playbook.site_ids(),
            "entries": [
                {
                    "policy_id": e.policy_id,
                    "fractions": e.fractions,
                    "load_fractions": e.load_fractions,
                    "bins": e.bins,
                    "measured_at": e.measured_at,
                    "config": e.config.to_dict(),
                }
                for e in playbook.entries
            ],
            "option_counts": {
                s: playbook.option_count(s) for s in playbook.site_ids()
            },
        }

    @app.post("/scenario")
    def start_scenario(req: ScenarioRequest):
        try:
            trace = load_trace_csv(req.trace_path)
            runner = ScenarioRunner(
                playbook, maps, trace,
                capacities={**config.default_capacities, **req.capacities},
                known_good_rates=req.known_good,
                controller_enabled=req.controller,
                tick=req.tick,
                propagation_delay=req.propagation_delay,
                eval_interval=config.eval_interval,
                revert_after=config.revert_after,
                duration=req.duration,
            )
        except (OSError, AnycastError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        scenario_id = uuid.uuid4().hex[:12]
        scenarios[scenario_id] = runner
        return {"scenario_id": scenario_id, "tick": runner.tick}

    def _runner(scenario_id: str) -> ScenarioRunner:
        runner = scenarios.get(scenario_id)
        if runner is None:
            raise HTTPException(status_code=404, detail=f"unknown scenario {scenario_id}")
        return runner

    @app.get("/scenario/{scenario_id}/state")
    def scenario_state(scenario_id: str, advance: int = 1):
        # Polling drives the simulated clock: each poll advances the
        # requested number of ticks (0 = peek).
        runner = _runner(scenario_id)
        for _ in range(advance):
            if runner.done:
                break
            runner.step()
        return {
            "done": runner.done,
            "state": runner.state.to_dict(),
            "propagation_remaining": runner.propagation_remaining(),
        }

    @app.get("/scenario/{scenario_id}/report")
    def scenario_report(scenario_id: str):
        runner = _runner(scenario_id)
        return runner.report().to_dict()

    @app.post("/controller/deploy")
    def controller_deploy(req: DeployRequest, scenario_id: str | None = None):
        runner = _current_runner(scenario_id)
        if req.policy_id not in playbook.policy_ids():
            raise HTTPException(status_code=404, detail=f"unknown policy {req.policy_id!r}")
        if runner.in_propagation_window():
            raise HTTPException(
                status_code=409,
                detail={
                    "error": "deployment already propagating",
                    "retry_after": runner.propagation_remaining(),
                },
            )
        try:
            runner.manual_deploy(req.policy_id)
        except TraceError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"deployed": req.policy_id, "effective_in": runner.propagation_remaining()}

    @app.get("/controller/state")
    def controller_state(scenario_id: str | None = None):
        runner = _current_runner(scenario_id)
        return runner.controller.snapshot()

    @app.get("/controller/log")
    def controller_log(scenario_id: str | None = None):
        runner = _current_runner(scenario_id)
        return {"log": runner.controller.log}

    @app.get("/estimate/{site_id}")
    def estimate_site(site_id: str, scenario_id: str | None = None):
        runner = _current_runner(scenario_id)
        if site_id not in playbook.site_ids():
            raise HTTPException(status_code=404, detail=f"unknown site {site_id!r}")
        for status in runner.site_statuses():
            if status.site_id == site_id:
                return {
                    "site_id": site_id,
                    "observed": status.observed,
                    "estimated_offered": status.estimated_offered,
                    "capacity": status.capacity,
                    "reachable": status.reachable,
                }
        raise HTTPException(status_code=404, detail=f"unknown site {site_id!r}")

    def _current_runner(scenario_id: str | None) -> ScenarioRunner:
        if scenario_id:
            return _runner(scenario_id)
        if len(scenarios) == 1:
            return next(iter(scenarios.values()))
        raise HTTPException(
            status_code=400,
            detail="no (or ambiguous) running scenario; pass scenario_id",
        )

    return app


def _maps_for(playbook: Playbook, graph: AsGraph | None) -> dict[str, CatchmentMap]:
    if graph is not None:
        from .catchment import map_catchment
        return {
            e.policy_id: map_catchment(graph, e.config) for e in playbook.entries
        }
    # Without a topology, synthesize block assignments consistent with each
    # entry's fractions (100 synthetic blocks, uniform weight).
    maps = {}
    for e in playbook.entries:
        assignment = {}
        i = 0
        sites = sorted(e.fractions)
        for site in sites:
            count = round(e.fractions[site] * 100)
            for _ in range(count):
                assignment[f"blk{i:04d}"] = site
                i += 1
        while i < 100:
            assignment[f"blk{i:04d}"] = sites[-1]
            i += 1
        maps[e.policy_id] = catchment_from_assignment(
            e.policy_id, assignment, site_ids=tuple(sites)
        )
    return maps


def make_run_record(report: dict, input_paths: dict[str, str]) -> RunRecord:
    return RunRecord(
        run_id=uuid.uuid4().hex[:12],
        inputs={name: content_hash(p) for name, p in input_paths.items() if p},
        report=report,
        created_at=time.time(),
    )


def serve(config: AppConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port)
