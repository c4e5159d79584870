import json

import pytest
from fastapi.testclient import TestClient

from anycastte.errors import AnycastError
from anycastte.replay import save_trace_csv
from anycastte.service import (
    AppConfig,
    create_app,
    load_run,
    make_run_record,
    save_run,
)

from scenarios import scenario_2017


@pytest.fixture
def table5_client(table5_playbook):
    return TestClient(create_app(playbook=table5_playbook))


@pytest.fixture
def scenario_env(tmp_path):
    pb, maps, trace, capacities, known_good = scenario_2017()
    trace_path = tmp_path / "trace.csv"
    save_trace_csv(sorted(trace, key=lambda e: e.t), trace_path)
    client = TestClient(create_app(playbook=pb, maps=maps))
    request = {
        "trace_path": str(trace_path),
        "capacities": capacities,
        "known_good": known_good,
        "duration": 1800.0,
    }
    return client, request


def start(client, request, **overrides):
    response = client.post("/scenario", json={**request, **overrides})
    assert response.status_code == 200
    return response.json()["scenario_id"]


class TestPlaybookEndpoint:
    def test_entries_and_option_counts(self, table5_client):
        doc = table5_client.get("/playbook").json()
        assert doc["baseline_id"] == "q"
        assert [e["policy_id"] for e in doc["entries"]] == list("abcdefghijklmnopqrstu")
        assert doc["option_counts"] == {"AMS": 9, "BOS": 6, "CNF": 7}
        assert doc["sites"] == ["AMS", "BOS", "CNF"]

    def test_entry_payload_carries_bins_and_config(self, table5_client):
        doc = table5_client.get("/playbook").json()
        f = next(e for e in doc["entries"] if e["policy_id"] == "f")
        assert f["fractions"] == {"AMS": 0.35, "BOS": 0.25, "CNF": 0.35}
        assert f["bins"]["AMS"] == "30-40"
        assert f["config"]["per_site"]["AMS"]["prepend"] == 1


class TestScenarioLifecycle:
    def test_polling_advances_clock_monotonically(self, scenario_env):
        client, request = scenario_env
        sid = start(client, request)
        seen = []
        for _ in range(5):
            state = client.get(f"/scenario/{sid}/state").json()
            seen.append(state["state"]["now"])
        assert seen == sorted(seen)
        assert len(set(seen)) == len(seen)

    def test_peek_does_not_advance(self, scenario_env):
        client, request = scenario_env
        sid = start(client, request)
        a = client.get(f"/scenario/{sid}/state", params={"advance": 0}).json()
        b = client.get(f"/scenario/{sid}/state", params={"advance": 0}).json()
        assert a["state"]["now"] == b["state"]["now"]

    def test_full_run_report(self, scenario_env):
        client, request = scenario_env
        sid = start(client, request)
        client.get(f"/scenario/{sid}/state", params={"advance": 200})
        report = client.get(f"/scenario/{sid}/report").json()
        assert report["outcome"] == "mitigated"
        assert [a["policy_id"] for a in report["actions"]] == ["transit1"]

    def test_unknown_scenario_404(self, scenario_env):
        client, _ = scenario_env
        assert client.get("/scenario/nope/state").status_code == 404

    def test_bad_trace_path_400(self, scenario_env):
        client, request = scenario_env
        response = client.post(
            "/scenario", json={**request, "trace_path": "/nonexistent.csv"}
        )
        assert response.status_code == 400


class TestDeployEndpoint:
    def test_manual_deploy_and_409_while_propagating(self, scenario_env):
        client, request = scenario_env
        sid = start(client, request, controller=False)
        client.get(f"/scenario/{sid}/state")
        response = client.post("/controller/deploy", json={"policy_id": "transit1"})
        assert response.status_code == 200
        assert response.json()["effective_in"] == 300.0

        again = client.post("/controller/deploy", json={"policy_id": "prepend1xAMS"})
        assert again.status_code == 409
        detail = again.json()["detail"]
        assert detail["retry_after"] > 0

        # The countdown shrinks as the scenario advances.
        client.get(f"/scenario/{sid}/state", params={"advance": 5})
        later = client.post("/controller/deploy", json={"policy_id": "prepend1xAMS"})
        assert later.json()["detail"]["retry_after"] < detail["retry_after"]

    def test_unknown_policy_404(self, scenario_env):
        client, request = scenario_env
        start(client, request, controller=False)
        response = client.post("/controller/deploy", json={"policy_id": "nope"})
        assert response.status_code == 404

    def test_no_scenario_400(self, table5_client):
        response = table5_client.post("/controller/deploy", json={"policy_id": "f"})
        assert response.status_code == 400


class TestControllerEndpoints:
    def test_state_and_log(self, scenario_env):
        client, request = scenario_env
        sid = start(client, request)
        client.get(f"/scenario/{sid}/state", params={"advance": 10})
        state = client.get("/controller/state").json()
        assert state["phase"] == "mitigating"
        assert state["active_policy"] == "transit1"
        log = client.get("/controller/log").json()["log"]
        assert log and log[-1]["policy_id"] == "transit1"


class TestEstimateEndpoint:
    def test_overloaded_site_estimate(self, scenario_env):
        client, request = scenario_env
        sid = start(client, request, controller=False)
        client.get(f"/scenario/{sid}/state", params={"advance": 8})
        doc = client.get("/estimate/AMS").json()
        # AMS sees its 60 kpps capacity but the estimator recovers ~65 kpps.
        assert doc["observed"] == pytest.approx(60_000.0)
        assert doc["estimated_offered"] == pytest.approx(65_050.0)
        assert doc["reachable"] is True

    def test_unknown_site_404(self, scenario_env):
        client, request = scenario_env
        start(client, request, controller=False)
        assert client.get("/estimate/SFO").status_code == 404


class TestAppConfig:
    def test_from_file_and_validation(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"data_dir": str(tmp_path), "bind_port": 9000}))
        cfg = AppConfig.from_file(path)
        assert cfg.bind_port == 9000

    def test_missing_referenced_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"playbook_path": "/nonexistent.json"}))
        with pytest.raises(AnycastError, match="does not exist"):
            AppConfig.from_file(path)

    def test_bad_interval(self):
        cfg = AppConfig(eval_interval=-1)
        with pytest.raises(AnycastError, match="positive"):
            cfg.validate()

    def test_from_env_bind_override(self, monkeypatch):
        monkeypatch.setenv("ANYCASTTE_BIND", "0.0.0.0:9999")
        cfg = AppConfig.from_env()
        assert (cfg.bind_host, cfg.bind_port) == ("0.0.0.0", 9999)

    def test_service_requires_playbook(self):
        with pytest.raises(AnycastError, match="needs a playbook"):
            create_app(AppConfig())


class TestRunPersistence:
    def test_roundtrip_reproduces_report(self, tmp_path):
        from scenarios import make_runner

        report = make_runner(scenario_2017).run().to_dict()
        trace = tmp_path / "trace.csv"
        trace.write_text("t,src,rate,class\n")
        record = make_run_record(report, {"trace": str(trace)})
        save_run(record, tmp_path)
        loaded = load_run(record.run_id, tmp_path)
        assert loaded.report == report
        assert loaded.inputs == record.inputs
        assert len(loaded.inputs["trace"]) == 64  # sha256 hex
