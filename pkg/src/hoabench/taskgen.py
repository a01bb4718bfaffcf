"""Benchmark task assembly: difficulty features, datasets, prompts.

Two task families are produced from a pool of HOA controllers:

* trace tasks (TTE): decide per step whether a recorded transition is
  legal, and whether the whole trace is accepted. Negative samples are
  single-step corruptions of legal traces.
* causal tasks (TCE): for an effect "output o at step k", give the
  per-step minimal input constraints.

Dataset bytes are a pure function of (master seed, config): ids, trace
sampling, effect choice, the normal/hard split and the JSONL encoding are
all deterministic.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .automata import Automaton, render_hoa
from .causality import (
    CausalGroundTruth,
    EffectSpec,
    ResolutionError,
    but_for_constraints,
    parse_effect,
)
from .execution import (
    DeadEndError,
    IncorrigibleTraceError,
    Trace,
    format_trace,
    legality_steps,
    mutate_trace,
    parse_trace,
    random_trace,
)
from .rng import SplitMix64, derive_seed

logger = logging.getLogger(__name__)

FEATURE_NAMES = (
    "effect_depth",
    "hoa_states",
    "transition_count",
    "causal_inputs_count",
    "unique_inputs_in_trace",
)


def canonical_json(obj) -> str:
    """The one JSON encoding used for dataset bytes and ground truth."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class DifficultyFeatures:
    effect_depth: int
    hoa_states: int
    transition_count: int
    causal_inputs_count: int
    unique_inputs_in_trace: int

    def to_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}


def compute_features(
    a: Automaton, t: Trace, gt: Optional[CausalGroundTruth] = None
) -> DifficultyFeatures:
    """The five difficulty features of one task instance.

    `causal_inputs_count` counts every causal literal occurrence across
    steps (repeats included); `unique_inputs_in_trace` counts distinct
    input APs that are true at any step of the trace.
    """
    input_names = {ap.name for ap in a.input_aps}
    seen = set()
    for s in t.steps:
        seen |= s.true_aps & input_names
    return DifficultyFeatures(
        effect_depth=gt.effect.depth if gt is not None else 0,
        hoa_states=a.num_states,
        transition_count=a.transition_count,
        causal_inputs_count=gt.literal_count() if gt is not None else 0,
        unique_inputs_in_trace=len(seen),
    )


@dataclass
class Task:
    id: str
    kind: str  # "TTE" | "TCE"
    automaton_text: str
    trace_text: str
    question: object  # TCE: list of effect strings; TTE: the verdict request
    ground_truth: dict
    features: DifficultyFeatures
    difficulty: str = "normal"
    seed: int = 0

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "automaton": self.automaton_text,
            "trace": self.trace_text,
            "question": self.question,
            "ground_truth": self.ground_truth,
            "features": self.features.to_dict(),
            "difficulty": self.difficulty,
            "seed": self.seed,
        }

    @staticmethod
    def from_record(record: dict) -> "Task":
        return Task(
            id=record["id"],
            kind=record["kind"],
            automaton_text=record["automaton"],
            trace_text=record["trace"],
            question=record["question"],
            ground_truth=record["ground_truth"],
            features=DifficultyFeatures(**record["features"]),
            difficulty=record.get("difficulty", "normal"),
            seed=record.get("seed", 0),
        )


TTE_QUESTION = (
    "Decide for every step whether the recorded transition is legal, and whether "
    "the whole trace is accepted."
)


class TaskBuildError(RuntimeError):
    """A task could not be built from the given automaton and seed."""


# --------------------------------------------------------------------------
# Config


@dataclass(frozen=True)
class GenConfig:
    master_seed: int = 0
    trace_length: int = 10
    negative_rate: float = 0.5
    effect_policy: str = "latest-output"
    max_effect_depth: int = 8
    hard_top_n: Optional[int] = None

    _KEYS = {
        "masterSeed": "master_seed",
        "traceLength": "trace_length",
        "negativeRate": "negative_rate",
        "effectPolicy": "effect_policy",
        "maxEffectDepth": "max_effect_depth",
        "hardTopN": "hard_top_n",
    }

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        kwargs = {}
        for key, value in data.items():
            if key not in cls._KEYS:
                raise ValueError(f"unknown config key {key!r}; expected one of {sorted(cls._KEYS)}")
            kwargs[cls._KEYS[key]] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "masterSeed": self.master_seed,
            "traceLength": self.trace_length,
            "negativeRate": self.negative_rate,
            "effectPolicy": self.effect_policy,
            "maxEffectDepth": self.max_effect_depth,
            "hardTopN": self.hard_top_n,
        }


# --------------------------------------------------------------------------
# Single-task builders


def build_tte_task(
    a: Automaton,
    task_id: str,
    seed: int,
    trace_length: int = 10,
    negative_rate: float = 0.5,
) -> Task:
    """One trace-acceptance task; negative with seeded probability."""
    rng = SplitMix64(seed)
    trace = random_trace(a, trace_length, rng.next_u64())
    if negative_rate > 0 and rng.random() < negative_rate:
        trace = mutate_trace(a, trace, rng.next_u64())
    records = legality_steps(a, trace)
    ground_truth = {"verdict": all(r["legal"] for r in records), "steps": records}
    return Task(
        id=task_id,
        kind="TTE",
        automaton_text=render_hoa(a, label_style="auto"),
        trace_text=format_trace(trace, a.aps, style="tuples"),
        question=TTE_QUESTION,
        ground_truth=ground_truth,
        features=compute_features(a, trace),
        seed=seed,
    )


def _choose_effect(a: Automaton, trace: Trace, rng: SplitMix64, policy: str, max_depth: int) -> EffectSpec:
    outputs = [ap.name for ap in a.output_aps]
    if not outputs:
        raise TaskBuildError("automaton has no output APs; cannot pose a causal effect")
    horizon = min(len(trace.steps) - 1, max_depth)
    true_hits = [
        (u, name)
        for u in range(horizon + 1)
        for name in outputs
        if name in trace.steps[u].true_aps
    ]
    if policy == "latest-output":
        if true_hits:
            latest = max(u for u, _ in true_hits)
            at_latest = [name for u, name in true_hits if u == latest]
            return EffectSpec(at_latest[rng.randrange(len(at_latest))], latest, True)
        # Nothing observable in the window: fall back to the absence of a
        # seeded output at the horizon, which is still a valid effect.
        return EffectSpec(outputs[rng.randrange(len(outputs))], horizon, False)
    if policy == "random-output-step":
        if true_hits:
            u, name = true_hits[rng.randrange(len(true_hits))]
            return EffectSpec(name, u, True)
        return EffectSpec(outputs[rng.randrange(len(outputs))], horizon, False)
    if policy.startswith("fixed-depth:"):
        depth = int(policy.split(":", 1)[1])
        if depth > horizon:
            raise TaskBuildError(f"fixed depth {depth} exceeds trace horizon {horizon}")
        at_depth = [name for name in outputs if name in trace.steps[depth].true_aps]
        if at_depth:
            return EffectSpec(at_depth[rng.randrange(len(at_depth))], depth, True)
        return EffectSpec(outputs[rng.randrange(len(outputs))], depth, False)
    raise ValueError(f"unknown effect policy {policy!r}")


def build_tce_task(
    a: Automaton,
    task_id: str,
    seed: int,
    trace_length: int = 10,
    effect_policy: str = "latest-output",
    max_effect_depth: int = 8,
) -> Task:
    """One causal task: seeded trace, seeded effect choice, ground truth."""
    rng = SplitMix64(seed)
    trace = random_trace(a, trace_length, rng.next_u64())
    effect = _choose_effect(a, trace, rng, effect_policy, max_effect_depth)
    gt = but_for_constraints(a, trace, effect)
    trace = replace(trace, cycle_suffix=1)
    return Task(
        id=task_id,
        kind="TCE",
        automaton_text=render_hoa(a, label_style="auto"),
        trace_text=format_trace(trace, a.aps, style="semicolon"),
        question=[effect.to_string()],
        ground_truth=gt.to_json_dict(),
        features=compute_features(a, trace, gt),
        seed=seed,
    )


def recompute_ground_truth(task: Task) -> dict:
    """Rebuild a task's ground truth from its serialized text fields."""
    from .automata import parse_hoa

    a = parse_hoa(task.automaton_text)
    trace = parse_trace(task.trace_text, a.aps)
    if task.kind == "TCE":
        out: dict = {}
        for effect_string in task.question:
            effect = parse_effect(effect_string, a.aps)
            out.update(but_for_constraints(a, trace, effect).to_json_dict())
        return out
    records = legality_steps(a, trace)
    return {"verdict": all(r["legal"] for r in records), "steps": records}


# --------------------------------------------------------------------------
# Difficulty split


def split_difficulty(tasks: Sequence[Task], n: int) -> tuple[list[Task], list[Task]]:
    """Partition into (normal, hard): hard = union of per-feature top-n.

    Ranking per feature is by descending value with ascending id as the
    tie-break. `n` larger than the corpus is clamped with a warning.
    """
    if n < 0:
        raise ValueError("top-n must be non-negative")
    if n > len(tasks):
        logger.warning("top-n %d exceeds corpus size %d; clamping", n, len(tasks))
        n = len(tasks)
    hard_ids: set[str] = set()
    for name in FEATURE_NAMES:
        ranked = sorted(tasks, key=lambda t: (-getattr(t.features, name), t.id))
        hard_ids.update(t.id for t in ranked[:n])
    normal = [t for t in tasks if t.id not in hard_ids]
    hard = [t for t in tasks if t.id in hard_ids]
    return normal, hard


def apply_difficulty(tasks: Sequence[Task], n: int) -> None:
    normal, hard = split_difficulty(tasks, n)
    for t in normal:
        t.difficulty = "normal"
    for t in hard:
        t.difficulty = "hard"


# --------------------------------------------------------------------------
# Dataset generation


@dataclass
class SourceAutomaton:
    name: str
    automaton: Automaton


_BUILD_ATTEMPTS = 50


def _build_with_retries(build, master: int, family: int, index: int) -> Task:
    last: Optional[Exception] = None
    for attempt in range(_BUILD_ATTEMPTS):
        seed = derive_seed(master, family, index, attempt)
        try:
            return build(seed)
        except (DeadEndError, IncorrigibleTraceError, ResolutionError, TaskBuildError) as exc:
            last = exc
    raise TaskBuildError(f"gave up after {_BUILD_ATTEMPTS} attempts: {last}")


def generate_dataset(
    sources: Sequence[SourceAutomaton],
    config: GenConfig,
    tte_count: int,
    tce_count: int,
) -> tuple[list[Task], list[Task]]:
    """Build both task families round-robin over the automaton pool."""
    if not sources:
        raise ValueError("no source automata")
    tce_sources = [s for s in sources if s.automaton.output_aps]
    if tce_count > 0 and not tce_sources:
        raise ValueError("no source automaton has output APs; cannot build causal tasks")

    tte_tasks = []
    for i in range(tte_count):
        src = sources[i % len(sources)]
        task = _build_with_retries(
            lambda seed: build_tte_task(
                src.automaton,
                task_id=f"tte-{i:05d}",
                seed=seed,
                trace_length=config.trace_length,
                negative_rate=config.negative_rate,
            ),
            config.master_seed, 0, i,
        )
        tte_tasks.append(task)

    tce_tasks = []
    for i in range(tce_count):
        src = tce_sources[i % len(tce_sources)]
        task = _build_with_retries(
            lambda seed: build_tce_task(
                src.automaton,
                task_id=f"tce-{i:05d}",
                seed=seed,
                trace_length=config.trace_length,
                effect_policy=config.effect_policy,
                max_effect_depth=config.max_effect_depth,
            ),
            config.master_seed, 1, i,
        )
        tce_tasks.append(task)

    for family, count in ((tte_tasks, tte_count), (tce_tasks, tce_count)):
        if family:
            n = config.hard_top_n if config.hard_top_n is not None else max(1, count // 10)
            apply_difficulty(family, n)
    return tte_tasks, tce_tasks


def tasks_to_jsonl(tasks: Iterable[Task]) -> str:
    return "".join(canonical_json(t.to_record()) + "\n" for t in tasks)


def tasks_from_jsonl(text: str) -> list[Task]:
    return [Task.from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


def write_tasks(path: Path, tasks: Iterable[Task]) -> None:
    Path(path).write_text(tasks_to_jsonl(tasks), encoding="utf-8")


def read_tasks(path: Path) -> list[Task]:
    return tasks_from_jsonl(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# Prompts

GRADING_MARKER = "### JSON Ground Truth ###"

_MARKER_INSTRUCTION = (
    "(Include the exact line below immediately before your final JSON answer so it can be graded)\n"
    f"{GRADING_MARKER}:\n"
)

TCE_INSTRUCTIONS = """\
You must assign credit over time. You are given a reactive controller in HOA format, \
a finite trace of its execution, and one or more effects written as `X...X ap`, where \
k repetitions of `X` mean the output `ap` is observed at time step k (a leading `!` \
negates the observation).
For every time step from 0 to k, identify the input constraints that were necessary \
for the effect: an input literal belongs to the answer exactly when flipping that \
single input at that single step, keeping everything else fixed, would have prevented \
the effect. Steps with no necessary input map to "no constraints".
Answer with a JSON object that maps each effect string to an object with one key per \
time step ("0" through "k"), each holding a list containing a single string: either \
"no constraints" or the necessary literals joined by " and " (a false input appears \
negated, e.g. "!r").
"""

TTE_INSTRUCTIONS = """\
You are given an automaton in HOA format and a recorded trace with one step per line, \
in the form (current state, {true atomic propositions}, next state); propositions not \
listed in a step are false.
Walk the automaton from its start state and judge every step: a step is legal when its \
recorded current state matches your walk, some transition label of that state is \
satisfied by the step's full assignment, and that transition leads to the recorded next \
state. The trace is accepted when every step is legal.
Answer with a JSON object of the form {"verdict": true|false, "steps": [{"step": 0, \
"source": 0, "next": 1, "legal": true}, ...]} covering every step of the trace.
"""

DEFAULT_TCE_SHOT = """\
You are given an automaton (HOA format) with APs:
['g', 'r']

Automaton:
HOA: v1
States: 6
Start: 0
AP: 2 "g" "r"
acc-name: all
Acceptance: 0 t
properties: trans-labels explicit-labels state-acc deterministic
controllable-AP: 0
--BODY--
State: 0
[!g] 1
State: 1
[!g] 2
State: 2
[!g] 3
State: 3
[!g&!r] 4
[g&r] 5
State: 4
[!g] 4
State: 5
[g&r] 5
[!g&!r] 5
--END--

Trace:
!g&!r;!g&r;!g&!r;g&r;g&r;!g&!r;g&r;g&r;g&r;g&r;cycle{1}

Effects to analyze:
['XXX g']

Reasoning: the effect XXX g concerns g at step 3, so only steps 0-3 matter. The walk
passes states 0, 1, 2, 3 and then takes [g&r] to state 5, which is the only transition
of state 3 that makes g true. Flipping r at step 3 would force [!g&!r] instead, so g at
step 3 requires r at step 3. Flipping r at steps 0-2 changes nothing: every edge out of
states 0-2 is [!g], which leaves r free.

### JSON Ground Truth ###:
```json
{
  "XXX g": {
    "0": [
      "no constraints"
    ],
    "1": [
      "no constraints"
    ],
    "2": [
      "no constraints"
    ],
    "3": [
      "r"
    ]
  }
}
```
"""

DEFAULT_TTE_SHOT = """\
You are given an automaton (HOA format) with APs:
['b', 'x']

Automaton:
HOA: v1
name: "Toggle bit"
States: 2
Start: 0
AP: 2 "b" "x"
acc-name: all
Acceptance: 0 t
properties: trans-labels explicit-labels deterministic
controllable-AP: 0
--BODY--
State: 0
[x&b] 1
[!x&!b] 0
State: 1
[x&!b] 0
[!x&b] 1
--END--

Trace:
(0, {"b", "x"}, 1)
(1, {"b"}, 1)
(1, {"b", "x"}, 0)

Reasoning: step 0 reads b and x in state 0, which satisfies [x&b] and moves to state 1:
legal. Step 1 reads b alone in state 1, satisfying [!x&b] with next state 1: legal.
Step 2 reads b and x in state 1, but state 1 has edges [x&!b] and [!x&b] and neither is
satisfied when both are true, so no transition exists: illegal, and the trace is
rejected.

### JSON Ground Truth ###:
```json
{
  "verdict": false,
  "steps": [
    {"step": 0, "source": 0, "next": 1, "legal": true},
    {"step": 1, "source": 1, "next": 1, "legal": true},
    {"step": 2, "source": 1, "next": 0, "legal": false}
  ]
}
```
"""


def build_prompt(task: Task, shot: Optional[str] = None) -> str:
    """One-shot prompt: instructions, worked example, then the task."""
    if task.kind == "TCE":
        instructions = TCE_INSTRUCTIONS
        shot_text = shot if shot is not None else DEFAULT_TCE_SHOT
        effects_block = "\nEffects to analyze:\n" + _python_list(task.question) + "\n"
    else:
        instructions = TTE_INSTRUCTIONS
        shot_text = shot if shot is not None else DEFAULT_TTE_SHOT
        effects_block = ""
    from .automata import parse_hoa

    ap_names = [ap.name for ap in parse_hoa(task.automaton_text).aps]
    return (
        f"Task id: {task.id}\n\n"
        + instructions
        + "\n=== Worked example ===\n"
        + shot_text
        + "\n=== Your task ===\n"
        + "You are given an automaton (HOA format) with APs:\n"
        + _python_list(ap_names)
        + "\n\nAutomaton:\n"
        + task.automaton_text.rstrip("\n")
        + "\n\nTrace:\n"
        + task.trace_text
        + "\n"
        + effects_block
        + "\nExplain your reasoning step by step, then give the final answer.\n"
        + _MARKER_INSTRUCTION
    )


def _python_list(items: Sequence[str]) -> str:
    return "[" + ", ".join(f"'{x}'" for x in items) + "]"
