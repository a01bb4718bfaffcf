import warnings

import pytest

warnings.simplefilter("ignore")
from fastapi.testclient import TestClient

from hoabench.service import create_app
from hoabench.taskgen import GRADING_MARKER, tasks_from_jsonl

from support import FIXTURES, load_fixture_text


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def _automata_payload():
    return [
        {"name": p.stem, "hoa": p.read_text(encoding="utf-8")}
        for p in sorted(FIXTURES.glob("*.hoa"))
    ]


def _generate(client, count=6, seed=1):
    response = client.post(
        "/datasets/generate",
        json={"automata": _automata_payload(), "config": {"masterSeed": seed},
              "tte_count": count, "tce_count": count},
    )
    assert response.status_code == 200, response.text
    return response.json()


class TestAutomataEndpoints:
    def test_parse_summary(self, client):
        response = client.post("/automata/parse", json={"hoa": load_fixture_text("grant")})
        body = response.json()
        assert body["states"] == 6
        assert body["transition_count"] == 8
        assert [ap["kind"] for ap in body["aps"]] == ["output", "input"]
        assert body["canonical_hoa"].startswith("HOA: v1")

    def test_parse_error_is_400(self, client):
        response = client.post("/automata/parse", json={"hoa": "not hoa at all"})
        assert response.status_code == 400
        assert "detail" in response.json()

    def test_validate_reports_holes(self, client):
        response = client.post("/automata/validate", json={"hoa": load_fixture_text("grant")})
        body = response.json()
        assert body["deterministic"] is True
        assert {"state": 3, "assignment": {"g": True, "r": False}} in body["holes"]


class TestTraceEndpoints:
    def test_random_then_check_roundtrip(self, client):
        hoa = load_fixture_text("arbiter2")
        r1 = client.post("/traces/random", json={"hoa": hoa, "length": 8, "seed": 5, "style": "tuples"})
        trace = r1.json()["trace"]
        r2 = client.post("/traces/check", json={"hoa": hoa, "trace": trace})
        assert r2.json()["accepted"] is True
        assert len(r2.json()["resolved"]) == 8

    def test_same_seed_same_trace(self, client):
        hoa = load_fixture_text("latch")
        payload = {"hoa": hoa, "length": 6, "seed": 9, "style": "semicolon"}
        assert (
            client.post("/traces/random", json=payload).json()
            == client.post("/traces/random", json=payload).json()
        )

    def test_mutate_produces_rejected_trace(self, client):
        hoa = load_fixture_text("counter8")
        trace = client.post(
            "/traces/random", json={"hoa": hoa, "length": 8, "seed": 2, "style": "tuples"}
        ).json()["trace"]
        mutated = client.post(
            "/traces/mutate", json={"hoa": hoa, "trace": trace, "seed": 3}
        ).json()["trace"]
        verdict = client.post("/traces/check", json={"hoa": hoa, "trace": mutated}).json()
        assert verdict["accepted"] is False

    def test_incorrigible_trace_is_422(self, client):
        hoa = (FIXTURES.parent / "tests" / "data" / "loop1.hoa").read_text(encoding="utf-8")
        trace = client.post(
            "/traces/random", json={"hoa": hoa, "length": 4, "seed": 1, "style": "tuples"}
        ).json()["trace"]
        response = client.post("/traces/mutate", json={"hoa": hoa, "trace": trace, "seed": 1})
        assert response.status_code == 422


class TestCausalityEndpoint:
    def test_golden_instance(self, client):
        response = client.post(
            "/causality/analyze",
            json={
                "hoa": load_fixture_text("grant"),
                "trace": "!g&!r;!g&r;!g&!r;g&r",
                "effect": "XXX g",
            },
        )
        body = response.json()
        assert body["effect"] == "XXX g"
        assert body["per_step"] == {
            "0": ["no constraints"],
            "1": ["no constraints"],
            "2": ["no constraints"],
            "3": ["r"],
        }

    def test_effect_over_input_is_400(self, client):
        response = client.post(
            "/causality/analyze",
            json={"hoa": load_fixture_text("grant"), "trace": "!g&!r", "effect": "r"},
        )
        assert response.status_code == 400


class TestDatasetEndpoints:
    def test_generate_is_deterministic(self, client):
        assert _generate(client, seed=7) == _generate(client, seed=7)

    def test_split_endpoint(self, client):
        data = _generate(client, count=10)
        response = client.post(
            "/datasets/split", json={"tasks_jsonl": data["tce_jsonl"], "top_n": 2}
        )
        body = response.json()
        hard = tasks_from_jsonl(body["hard_jsonl"])
        normal = tasks_from_jsonl(body["normal_jsonl"])
        assert len(hard) + len(normal) == 10
        assert set(body["hard_ids"]) == {t.id for t in hard}
        assert all(t.difficulty == "hard" for t in hard)

    def test_prompt_endpoint_includes_marker(self, client):
        data = _generate(client, count=2)
        task = tasks_from_jsonl(data["tce_jsonl"])[0]
        response = client.post("/prompts/build", json={"task": task.to_record()})
        assert GRADING_MARKER in response.json()["prompt"]


class TestMockEndpoint:
    def test_requires_loaded_dataset(self, client):
        response = client.post(
            "/mock/v1/chat/completions",
            json={"model": "mock-gt", "messages": [{"role": "user", "content": "Task id: nope"}]},
        )
        assert response.status_code == 409

    def test_echo_mode(self, client):
        response = client.post(
            "/mock/v1/chat/completions",
            json={"model": "mock-echo", "messages": [{"role": "user", "content": "ping"}]},
        )
        assert response.json()["choices"][0]["message"]["content"] == "ping"

    def test_gt_replay_scores_perfectly(self, client):
        data = _generate(client, count=4)
        jsonl = data["tte_jsonl"] + data["tce_jsonl"]
        assert client.post("/mock/dataset", json={"tasks_jsonl": jsonl}).json()["loaded"] == 8
        completions = {}
        for task in tasks_from_jsonl(jsonl):
            prompt = client.post("/prompts/build", json={"task": task.to_record()}).json()["prompt"]
            r = client.post(
                "/mock/v1/chat/completions",
                json={"model": "mock-gt", "messages": [{"role": "user", "content": prompt}]},
            )
            completions[task.id] = r.json()["choices"][0]["message"]["content"]
        scored = client.post(
            "/score/batch",
            json={"tasks_jsonl": jsonl, "completions": completions, "model": "mock-gt"},
        ).json()
        assert all(row["f1_ap"] == 1.0 and row["f1_ts"] == 1.0 for row in scored["summary"])

    def test_no_constraints_mode_underpredicts(self, client):
        data = _generate(client, count=6)
        client.post("/mock/dataset", json={"tasks_jsonl": data["tce_jsonl"]})
        tasks = tasks_from_jsonl(data["tce_jsonl"])
        completions = {}
        for task in tasks:
            r = client.post(
                "/mock/v1/chat/completions",
                json={
                    "model": "mock-no-constraints",
                    "messages": [{"role": "user", "content": f"Task id: {task.id}"}],
                },
            )
            completions[task.id] = r.json()["choices"][0]["message"]["content"]
        scored = client.post(
            "/score/batch",
            json={"tasks_jsonl": data["tce_jsonl"], "completions": completions, "model": "mnc"},
        ).json()
        for row in scored["rows"]:
            task = next(t for t in tasks if t.id == row["task_id"])
            has_literal = any(
                c != ["no constraints"]
                for step_map in task.ground_truth.values()
                for c in [step_map[k] for k in step_map]
            )
            if has_literal:
                assert row["recall_ap"] < 1.0

    def test_garbage_mode_is_parse_failure(self, client):
        data = _generate(client, count=2)
        client.post("/mock/dataset", json={"tasks_jsonl": data["tce_jsonl"]})
        task = tasks_from_jsonl(data["tce_jsonl"])[0]
        r = client.post(
            "/mock/v1/chat/completions",
            json={"model": "mock-garbage", "messages": [{"role": "user", "content": f"Task id: {task.id}"}]},
        )
        completion = r.json()["choices"][0]["message"]["content"]
        scored = client.post(
            "/score/batch",
            json={"tasks_jsonl": data["tce_jsonl"], "completions": {task.id: completion}, "model": "g"},
        ).json()
        row = next(x for x in scored["rows"] if x["task_id"] == task.id)
        assert row["parse_failed"] is True
