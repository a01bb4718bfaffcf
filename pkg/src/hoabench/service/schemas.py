"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ApInfo(BaseModel):
    index: int
    name: str
    kind: str


class ParseRequest(BaseModel):
    hoa: str


class ParseResponse(BaseModel):
    name: Optional[str] = None
    states: int
    start: int
    aps: list[ApInfo]
    transition_count: int
    properties: list[str]
    acceptance: str
    canonical_hoa: str


class ConflictEntry(BaseModel):
    state: int
    assignment: dict[str, bool]
    edges: list[int]


class HoleEntry(BaseModel):
    state: int
    assignment: dict[str, bool]


class ValidateResponse(BaseModel):
    deterministic: bool
    conflicts: list[ConflictEntry]
    holes: list[HoleEntry]


class RandomTraceRequest(BaseModel):
    hoa: str
    length: int = Field(gt=0)
    seed: int
    style: str = "semicolon"


class TraceTextResponse(BaseModel):
    trace: str


class CheckRequest(BaseModel):
    hoa: str
    trace: str


class ResolvedStepEntry(BaseModel):
    step: int
    source: int
    label: str
    next: int


class CheckResponse(BaseModel):
    accepted: bool
    first_violation: Optional[int] = None
    resolved: list[ResolvedStepEntry]


class MutateRequest(BaseModel):
    hoa: str
    trace: str
    seed: int


class CausalRequest(BaseModel):
    hoa: str
    trace: str
    effect: str


class CausalResponse(BaseModel):
    effect: str
    per_step: dict[str, list[str]]


class SourceAutomatonModel(BaseModel):
    name: str
    hoa: str


class GenConfigModel(BaseModel):
    masterSeed: int = 0
    traceLength: int = 10
    negativeRate: float = 0.5
    effectPolicy: str = "latest-output"
    maxEffectDepth: int = 8
    hardTopN: Optional[int] = None


class GenerateRequest(BaseModel):
    automata: list[SourceAutomatonModel]
    config: GenConfigModel = GenConfigModel()
    tte_count: int = 400
    tce_count: int = 400


class GenerateResponse(BaseModel):
    tte_jsonl: str
    tce_jsonl: str
    config_echo: str


class SplitRequest(BaseModel):
    tasks_jsonl: str
    top_n: int = Field(ge=0)


class SplitResponse(BaseModel):
    normal_jsonl: str
    hard_jsonl: str
    hard_ids: list[str]


class PromptRequest(BaseModel):
    task: dict[str, Any]
    shot: Optional[str] = None


class PromptResponse(BaseModel):
    prompt: str


class ScoreBatchRequest(BaseModel):
    tasks_jsonl: str
    completions: dict[str, str]
    model: str = "unknown"


class ScoreBatchResponse(BaseModel):
    rows: list[dict[str, Any]]
    summary: list[dict[str, Any]]


class MockDatasetRequest(BaseModel):
    tasks_jsonl: str


class MockDatasetResponse(BaseModel):
    loaded: int


class ChatMessage(BaseModel):
    role: str
    content: str


class ChatCompletionRequest(BaseModel):
    model: str
    messages: list[ChatMessage]
    temperature: float = 0.0
    max_tokens: Optional[int] = None
