import json
import threading
import time

import httpx
import pytest

from hoabench.runner import EndpointConfig, RunnerError, read_transcripts, run_suite, run_task
from hoabench.taskgen import build_tte_task

from support import load_fixture


def canned_client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


def chat_response(text: str) -> httpx.Response:
    return httpx.Response(
        200,
        json={
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 1, "completion_tokens": 1},
        },
    )


CFG = EndpointConfig(base_url="http://mock/v1", model="m", retries=2, backoff_base=0.0)


class TestRunTask:
    def test_returns_first_choice_text(self):
        client = canned_client(lambda request: chat_response("the canned label"))
        transcript = run_task(CFG, "prompt text", task_id="t1", client=client)
        assert transcript.completion == "the canned label"
        assert transcript.task_id == "t1"
        assert transcript.endpoint == {"base_url": "http://mock/v1", "model": "m"}

    def test_retries_then_surfaces_transport_failure(self):
        calls = []

        def handler(request):
            calls.append(1)
            raise httpx.ConnectTimeout("boom")

        with pytest.raises(RunnerError, match="gave up after 3 attempts"):
            run_task(CFG, "p", client=canned_client(handler))
        assert len(calls) == 3

    def test_retries_on_server_errors(self):
        calls = []

        def handler(request):
            calls.append(1)
            if len(calls) < 3:
                return httpx.Response(500, text="oops")
            return chat_response("ok")

        transcript = run_task(CFG, "p", client=canned_client(handler))
        assert transcript.completion == "ok" and len(calls) == 3

    def test_non_retryable_status_raises(self):
        client = canned_client(lambda request: httpx.Response(401, text="no auth"))
        with pytest.raises(RunnerError, match="401"):
            run_task(CFG, "p", client=client)

    def test_temperature_serialized_as_zero_by_default(self):
        captured = {}

        def handler(request):
            captured.update(json.loads(request.content))
            return chat_response("x")

        run_task(CFG, "p", client=canned_client(handler))
        assert captured["temperature"] == 0.0
        assert captured["messages"] == [{"role": "user", "content": "p"}]
        assert captured["model"] == "m"

    def test_api_key_header_from_env(self, monkeypatch):
        monkeypatch.setenv("FAKE_KEY_VAR", "sekrit")
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("Authorization")
            return chat_response("x")

        cfg = EndpointConfig(base_url="http://mock/v1", model="m", api_key_env="FAKE_KEY_VAR")
        run_task(cfg, "p", client=canned_client(handler))
        assert seen["auth"] == "Bearer sekrit"


def _tiny_tasks(count=6):
    a = load_fixture("toggle")
    return [build_tte_task(a, f"tte-{i:02d}", seed=i, negative_rate=0.0) for i in range(count)]


class TestRunSuite:
    def test_transcripts_persisted_and_resume_skips(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(json.loads(request.content))
            return chat_response("answer")

        tasks = _tiny_tasks()
        cfg = EndpointConfig(base_url="http://mock/v1", model="m", max_parallel=2)
        path = run_suite(cfg, tasks, tmp_path / "run", client=canned_client(handler))
        assert len(read_transcripts(path)) == len(tasks)
        first_count = len(calls)

        run_suite(cfg, tasks, tmp_path / "run", client=canned_client(handler))
        assert len(calls) == first_count, "resume must not re-request finished tasks"
        assert len(read_transcripts(path)) == len(tasks)

    def test_bounded_concurrency(self, tmp_path):
        lock = threading.Lock()
        live = {"now": 0, "peak": 0}

        def handler(request):
            with lock:
                live["now"] += 1
                live["peak"] = max(live["peak"], live["now"])
            time.sleep(0.02)
            with lock:
                live["now"] -= 1
            return chat_response("x")

        cfg = EndpointConfig(base_url="http://mock/v1", model="m", max_parallel=3)
        run_suite(cfg, _tiny_tasks(10), tmp_path / "run", client=canned_client(handler))
        assert 1 <= live["peak"] <= 3

    def test_no_secret_in_run_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FAKE_KEY_VAR", "super-secret-value")
        cfg = EndpointConfig(
            base_url="http://mock/v1", model="m", api_key_env="FAKE_KEY_VAR"
        )
        run_suite(cfg, _tiny_tasks(3), tmp_path / "run",
                  client=canned_client(lambda request: chat_response("x")))
        for file in (tmp_path / "run").iterdir():
            assert "super-secret-value" not in file.read_text(encoding="utf-8")

    def test_partial_run_preserved_on_abort(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            if len(calls) == 3:
                raise httpx.ConnectError("network died")
            return chat_response("x")

        cfg = EndpointConfig(base_url="http://mock/v1", model="m",
                             max_parallel=1, retries=0)
        with pytest.raises(RunnerError, match="1 of 6 tasks failed"):
            run_suite(cfg, _tiny_tasks(6), tmp_path / "run", client=canned_client(handler))
        survivors = read_transcripts(tmp_path / "run" / "transcripts.jsonl")
        assert len(survivors) == 5

        # Resuming completes only the failed task.
        run_suite(cfg, _tiny_tasks(6), tmp_path / "run",
                  client=canned_client(lambda request: chat_response("x")))
        assert len(read_transcripts(tmp_path / "run" / "transcripts.jsonl")) == 6
