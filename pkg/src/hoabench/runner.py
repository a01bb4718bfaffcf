"""Batch driver for chat-completion endpoints.

Speaks the generic chat-completions JSON shape (single user message, no
system prompt) so one client covers hosted endpoints and local mocks.
Transcripts are appended to a line-delimited file through a single
writer as workers finish; reruns skip task ids already present, so an
aborted run resumes without duplicate requests. The API key is read from
the environment variable named in the config and never persisted.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .taskgen import Task, build_prompt, canonical_json


class RunnerError(RuntimeError):
    """Transport or protocol failure that survived all retries."""


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = ""
    temperature: float = 0.0
    max_tokens: int = 4096
    timeout: float = 120.0
    max_parallel: int = 4
    retries: int = 3
    backoff_base: float = 0.5
    backoff_cap: float = 8.0

    @classmethod
    def from_file(cls, path: Path) -> "EndpointConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)

    def endpoint_identity(self) -> dict:
        return {"base_url": self.base_url, "model": self.model}


@dataclass
class Transcript:
    task_id: str
    prompt: str
    completion: str
    latency: float
    endpoint: dict
    tokens: Optional[dict] = None
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "prompt": self.prompt,
            "completion": self.completion,
            "latency": self.latency,
            "endpoint": self.endpoint,
            "tokens": self.tokens,
            "created": self.created,
        }


def _auth_headers(cfg: EndpointConfig) -> dict:
    headers = {"Content-Type": "application/json"}
    if cfg.api_key_env:
        key = os.environ.get(cfg.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
    return headers


def run_task(
    cfg: EndpointConfig,
    prompt: str,
    task_id: str = "",
    client: Optional[httpx.Client] = None,
) -> Transcript:
    """Send one chat-completion request, retrying with exponential backoff."""
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    body = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=cfg.timeout)
    try:
        last_error: Optional[str] = None
        for attempt in range(cfg.retries + 1):
            if attempt:
                time.sleep(min(cfg.backoff_base * (2 ** (attempt - 1)), cfg.backoff_cap))
            started = time.monotonic()
            try:
                response = client.post(url, json=body, headers=_auth_headers(cfg))
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"status {response.status_code}"
                continue
            if response.status_code != 200:
                raise RunnerError(f"endpoint returned status {response.status_code}: {response.text[:500]}")
            payload = response.json()
            try:
                completion = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise RunnerError(f"malformed completion payload: {exc}") from exc
            if not completion:
                raise RunnerError("endpoint returned an empty completion")
            return Transcript(
                task_id=task_id,
                prompt=prompt,
                completion=completion,
                latency=time.monotonic() - started,
                endpoint=cfg.endpoint_identity(),
                tokens=payload.get("usage"),
            )
        raise RunnerError(f"gave up after {cfg.retries + 1} attempts: {last_error}")
    finally:
        if own_client:
            client.close()


def _existing_task_ids(path: Path) -> set[str]:
    ids = set()
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                ids.add(json.loads(line)["task_id"])
    return ids


def run_suite(
    cfg: EndpointConfig,
    tasks: Sequence[Task],
    run_dir: Path,
    resume: bool = True,
    shot: Optional[str] = None,
    client: Optional[httpx.Client] = None,
) -> Path:
    """Run every task with bounded parallelism, persisting transcripts.

    Returns the transcript file path. Transcripts land as soon as each
    request finishes, so an interrupted run keeps its partial state.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    transcripts_path = run_dir / "transcripts.jsonl"
    meta_path = run_dir / "run.json"
    if not meta_path.exists():
        meta_path.write_text(
            canonical_json(
                {
                    "endpoint": cfg.endpoint_identity(),
                    "temperature": cfg.temperature,
                    "max_tokens": cfg.max_tokens,
                    "task_count": len(tasks),
                }
            )
            + "\n",
            encoding="utf-8",
        )

    done = _existing_task_ids(transcripts_path) if resume else set()
    pending = [t for t in tasks if t.id not in done]

    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=cfg.timeout)
    write_lock = threading.Lock()
    try:
        with open(transcripts_path, "a", encoding="utf-8") as sink:

            def worker(task: Task) -> None:
                transcript = run_task(cfg, build_prompt(task, shot), task.id, client=client)
                with write_lock:
                    sink.write(json.dumps(transcript.to_dict(), ensure_ascii=False) + "\n")
                    sink.flush()

            errors: list[str] = []
            with ThreadPoolExecutor(max_workers=max(1, cfg.max_parallel)) as pool:
                futures = {pool.submit(worker, t): t.id for t in pending}
                for future, task_id in futures.items():
                    try:
                        future.result()
                    except RunnerError as exc:
                        errors.append(f"{task_id}: {exc}")
            if errors:
                raise RunnerError(
                    f"{len(errors)} of {len(pending)} tasks failed "
                    f"(finished work is preserved; rerun to resume). First: {errors[0]}"
                )
    finally:
        if own_client:
            client.close()
    return transcripts_path


def read_transcripts(path: Path) -> dict[str, str]:
    """Map task_id -> raw completion from a transcript file."""
    out: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            record = json.loads(line)
            out[record["task_id"]] = record["completion"]
    return out
