"""FastAPI application wrapping the core toolkit.

The service is stateless except for the mock-endpoint dataset (loaded per
process for testing runs against replayed ground truth). Every operation
is a pure function of the request payload, so generation and scoring
results are identical whether the service runs in-process or remotely.
"""

from __future__ import annotations

import json
import re
import time

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from ..automata import HoaError, parse_hoa, render_hoa, validate_deterministic
from ..causality import ResolutionError, but_for_constraints, parse_effect
from ..evaluation import MARKER, aggregate, report_rows, score_task
from ..execution import (
    DeadEndError,
    IncorrigibleTraceError,
    check_trace,
    format_trace,
    mutate_trace,
    parse_trace,
    random_trace,
)
from ..taskgen import (
    GenConfig,
    SourceAutomaton,
    Task,
    TaskBuildError,
    build_prompt,
    canonical_json,
    generate_dataset,
    split_difficulty,
    tasks_from_jsonl,
    tasks_to_jsonl,
)
from . import schemas

# Bad payloads (unparseable automata, traces, effects, configs) are 400;
# structurally valid requests the toolkit cannot satisfy (dead ends,
# incorrigible traces, unresolvable inputs) are 422.
_CLIENT_ERRORS = (ValueError, TaskBuildError)
_STATE_ERRORS = (DeadEndError, IncorrigibleTraceError, ResolutionError)


def create_app() -> FastAPI:
    app = FastAPI(title="hoabench", version="0.1.0")
    app.state.mock_tasks = {}

    def _parse_or_400(hoa: str):
        try:
            return parse_hoa(hoa)
        except HoaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    def _as_json_error(status: int):
        async def handler(request: Request, exc: Exception):
            return JSONResponse(status_code=status, content={"detail": str(exc)})

        return handler

    for error in _CLIENT_ERRORS:
        app.add_exception_handler(error, _as_json_error(400))
    for error in _STATE_ERRORS:
        app.add_exception_handler(error, _as_json_error(422))

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- automata ---------------------------------------------------------

    @app.post("/automata/parse", response_model=schemas.ParseResponse)
    def automata_parse(req: schemas.ParseRequest):
        a = _parse_or_400(req.hoa)
        return schemas.ParseResponse(
            name=a.name,
            states=a.num_states,
            start=a.start,
            aps=[schemas.ApInfo(index=ap.index, name=ap.name, kind=ap.kind.value) for ap in a.aps],
            transition_count=a.transition_count,
            properties=list(a.properties),
            acceptance=a.acceptance,
            canonical_hoa=render_hoa(a),
        )

    @app.post("/automata/validate", response_model=schemas.ValidateResponse)
    def automata_validate(req: schemas.ParseRequest):
        a = _parse_or_400(req.hoa)
        report = validate_deterministic(a)
        return schemas.ValidateResponse(
            deterministic=not report.conflicts,
            conflicts=[
                schemas.ConflictEntry(state=s, assignment=assign, edges=list(edges))
                for s, assign, edges in report.conflicts
            ],
            holes=[schemas.HoleEntry(state=s, assignment=assign) for s, assign in report.holes],
        )

    # -- traces -----------------------------------------------------------

    @app.post("/traces/random", response_model=schemas.TraceTextResponse)
    def traces_random(req: schemas.RandomTraceRequest):
        a = _parse_or_400(req.hoa)
        trace = random_trace(a, req.length, req.seed)
        return schemas.TraceTextResponse(trace=format_trace(trace, a.aps, style=req.style))

    @app.post("/traces/check", response_model=schemas.CheckResponse)
    def traces_check(req: schemas.CheckRequest):
        a = _parse_or_400(req.hoa)
        verdict = check_trace(a, parse_trace(req.trace, a.aps))
        names = [ap.name for ap in a.aps]
        return schemas.CheckResponse(
            accepted=verdict.accepted,
            first_violation=verdict.first_violation,
            resolved=[
                schemas.ResolvedStepEntry(
                    step=r.index, source=r.source, label=r.label.render(names), next=r.next
                )
                for r in verdict.resolved
            ],
        )

    @app.post("/traces/mutate", response_model=schemas.TraceTextResponse)
    def traces_mutate(req: schemas.MutateRequest):
        a = _parse_or_400(req.hoa)
        trace = parse_trace(req.trace, a.aps)
        style = "tuples" if req.trace.strip().startswith("(") else "semicolon"
        mutated = mutate_trace(a, trace, req.seed)
        return schemas.TraceTextResponse(trace=format_trace(mutated, a.aps, style=style))

    # -- causality ----------------------------------------------------------

    @app.post("/causality/analyze", response_model=schemas.CausalResponse)
    def causality_analyze(req: schemas.CausalRequest):
        a = _parse_or_400(req.hoa)
        trace = parse_trace(req.trace, a.aps)
        effect = parse_effect(req.effect, a.aps)
        gt = but_for_constraints(a, trace, effect)
        return schemas.CausalResponse(effect=effect.to_string(), per_step=gt.per_step)

    # -- datasets -----------------------------------------------------------

    @app.post("/datasets/generate", response_model=schemas.GenerateResponse)
    def datasets_generate(req: schemas.GenerateRequest):
        sources = [
            SourceAutomaton(name=m.name, automaton=_parse_or_400(m.hoa)) for m in req.automata
        ]
        config = GenConfig.from_dict(req.config.model_dump())
        tte, tce = generate_dataset(sources, config, req.tte_count, req.tce_count)
        return schemas.GenerateResponse(
            tte_jsonl=tasks_to_jsonl(tte),
            tce_jsonl=tasks_to_jsonl(tce),
            config_echo=canonical_json(config.to_dict()) + "\n",
        )

    @app.post("/datasets/split", response_model=schemas.SplitResponse)
    def datasets_split(req: schemas.SplitRequest):
        tasks = tasks_from_jsonl(req.tasks_jsonl)
        normal, hard = split_difficulty(tasks, req.top_n)
        for t in normal:
            t.difficulty = "normal"
        for t in hard:
            t.difficulty = "hard"
        return schemas.SplitResponse(
            normal_jsonl=tasks_to_jsonl(normal),
            hard_jsonl=tasks_to_jsonl(hard),
            hard_ids=[t.id for t in hard],
        )

    @app.post("/prompts/build", response_model=schemas.PromptResponse)
    def prompts_build(req: schemas.PromptRequest):
        return schemas.PromptResponse(prompt=build_prompt(Task.from_record(req.task), req.shot))

    # -- scoring ------------------------------------------------------------

    @app.post("/score/batch", response_model=schemas.ScoreBatchResponse)
    def score_batch(req: schemas.ScoreBatchRequest):
        tasks = tasks_from_jsonl(req.tasks_jsonl)
        meta = {t.id: {"kind": t.kind, "difficulty": t.difficulty} for t in tasks}
        reports = []
        for t in tasks:
            completion = req.completions.get(t.id)
            reports.append(score_task(t.to_record(), completion if completion is not None else ""))
        rows = report_rows(reports, meta, req.model)
        family = {"TCE": "causal", "TTE": "trace"}
        for row in rows:
            row["task_label"] = f"{family.get(row['kind'], row['kind'])}-{row['difficulty']}"
        summary = aggregate(rows, ["model", "task_label"])
        return schemas.ScoreBatchResponse(rows=rows, summary=summary)

    # -- mock chat endpoint ---------------------------------------------------

    @app.post("/mock/dataset", response_model=schemas.MockDatasetResponse)
    def mock_dataset(req: schemas.MockDatasetRequest):
        tasks = tasks_from_jsonl(req.tasks_jsonl)
        app.state.mock_tasks = {t.id: t for t in tasks}
        return schemas.MockDatasetResponse(loaded=len(tasks))

    @app.post("/mock/v1/chat/completions")
    def mock_chat(req: schemas.ChatCompletionRequest):
        content = req.messages[-1].content if req.messages else ""
        completion = _mock_completion(app.state.mock_tasks, req.model, content)
        return {
            "id": "mock-0",
            "object": "chat.completion",
            "created": int(time.time()),
            "model": req.model,
            "choices": [
                {"index": 0, "message": {"role": "assistant", "content": completion}, "finish_reason": "stop"}
            ],
            "usage": {"prompt_tokens": len(content.split()), "completion_tokens": len(completion.split())},
        }

    return app


_TASK_ID_RE = re.compile(r"Task id: (\S+)")


def _mock_completion(mock_tasks: dict[str, Task], model: str, content: str) -> str:
    """Canned behaviors keyed by requested model name."""
    if model == "mock-echo":
        return content or "(empty prompt)"
    if model == "mock-garbage":
        return "I am not able to produce the requested JSON."

    m = _TASK_ID_RE.search(content)
    task = mock_tasks.get(m.group(1)) if m else None
    if task is None:
        raise HTTPException(status_code=409, detail="mock dataset not loaded or task id not found")

    if model == "mock-gt":
        answer = task.ground_truth
    elif model == "mock-no-constraints":
        if task.kind == "TCE":
            answer = {
                effect: {step: ["no constraints"] for step in step_map}
                for effect, step_map in task.ground_truth.items()
            }
        else:
            answer = {"verdict": True, "steps": []}
    else:
        raise HTTPException(status_code=400, detail=f"unknown mock model {model!r}")
    return (
        "Replaying the stored answer.\n\n"
        + MARKER
        + ":\n```json\n"
        + json.dumps(answer, indent=2)
        + "\n```\n"
    )
