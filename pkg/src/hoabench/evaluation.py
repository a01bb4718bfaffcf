"""Answer extraction and micro-averaged precision/recall/F1 scoring.

Two granularities for every task:

* AP level: individual literals (or transition-record fields) are
  compared within each step, rewarding partial overlap.
* TS level: a step counts only when it matches exactly.

Counts are summed over steps per task and over tasks per group
(micro-averaging) before metrics are computed once. Precision, recall and
F1 are defined as 0 whenever their denominator is 0.

Constraint strings are canonicalized before comparison: lowercased,
trimmed, split on the word "and"; the step where both sides agree on
"no constraints" scores one AP-level true positive (exact agreement on
absence). Canonicalization forgives ordering and whitespace, never
content.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

NO_CONSTRAINTS = "no constraints"

MARKER = "### JSON Ground Truth ###"


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float

    @staticmethod
    def from_counts(c: Counts) -> "Metrics":
        precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
        recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return Metrics(precision, recall, f1)

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class ScoreReport:
    task_id: str
    ap_counts: Counts
    ts_counts: Counts
    parse_failed: bool = False

    @property
    def ap_metrics(self) -> Metrics:
        return Metrics.from_counts(self.ap_counts)

    @property
    def ts_metrics(self) -> Metrics:
        return Metrics.from_counts(self.ts_counts)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "parse_failed": self.parse_failed,
            "ap": {**self.ap_counts.to_dict(), **self.ap_metrics.to_dict()},
            "ts": {**self.ts_counts.to_dict(), **self.ts_metrics.to_dict()},
        }


# --------------------------------------------------------------------------
# Answer extraction

_FENCE_RE = re.compile(r"```(?:json)?\s*")


def extract_answer(completion: str) -> Optional[dict]:
    """Pull the JSON object following the last grading marker.

    Returns None (a parse failure, not an error) when the marker is
    missing or no parseable JSON object follows it.
    """
    idx = completion.rfind(MARKER)
    if idx < 0:
        return None
    tail = completion[idx + len(MARKER):]
    start = tail.find("{")
    while start >= 0:
        candidate = _balanced_object(tail, start)
        if candidate is not None:
            try:
                value = json.loads(candidate)
            except json.JSONDecodeError:
                value = None
            if isinstance(value, dict):
                return value
        start = tail.find("{", start + 1)
    return None


def _balanced_object(text: str, start: int) -> Optional[str]:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start: i + 1]
    return None


# --------------------------------------------------------------------------
# Canonicalization

_AND_SPLIT = re.compile(r"\s+and\s+")


def canonical_literals(constraints: Iterable[str]) -> Counter:
    """Multiset of literals in a step's constraint list.

    ["no constraints"], [""] and [] all canonicalize to the empty
    multiset; everything else splits on the word "and".
    """
    literals: Counter = Counter()
    for constraint in constraints:
        text = str(constraint).strip().lower()
        if not text or text == NO_CONSTRAINTS:
            continue
        for lit in _AND_SPLIT.split(text):
            lit = lit.strip()
            if lit:
                literals[lit] += 1
    return literals


def _step_map(value: Mapping) -> dict[str, Counter]:
    out = {}
    for key, constraints in value.items():
        if not isinstance(constraints, (list, tuple)):
            constraints = [constraints]
        out[str(key).strip()] = canonical_literals(constraints)
    return out


# --------------------------------------------------------------------------
# Causal-task scoring


def score_tce_ap(pred: Optional[Mapping], gt: Mapping) -> Counts:
    """Literal-level comparison within each step (micro over steps).

    A step where both sides explicitly agree on "no constraints" earns
    one true positive; a step absent from the prediction earns none.
    """
    gt_steps = _step_map(gt)
    pred_steps = _step_map(pred) if pred is not None else {}
    counts = Counts()
    for step in gt_steps.keys() | pred_steps.keys():
        gt_lits = gt_steps.get(step, Counter())
        if step in pred_steps:
            pred_lits = pred_steps[step]
            if not gt_lits and not pred_lits and step in gt_steps:
                counts.tp += 1
                continue
            overlap = gt_lits & pred_lits
            counts.tp += sum(overlap.values())
            counts.fp += sum((pred_lits - gt_lits).values())
            counts.fn += sum((gt_lits - pred_lits).values())
        else:
            counts.fn += sum(gt_lits.values())
    return counts


def score_tce_ts(pred: Optional[Mapping], gt: Mapping) -> Counts:
    """Whole-step comparison: a step counts only on exact literal match."""
    gt_steps = _step_map(gt)
    pred_steps = _step_map(pred) if pred is not None else {}
    counts = Counts()
    for step in gt_steps.keys() | pred_steps.keys():
        in_gt, in_pred = step in gt_steps, step in pred_steps
        if in_gt and in_pred:
            if gt_steps[step] == pred_steps[step]:
                counts.tp += 1
            else:
                counts.fp += 1
                counts.fn += 1
        elif in_gt:
            counts.fn += 1
        else:
            counts.fp += 1
    return counts


# --------------------------------------------------------------------------
# Trace-task scoring

_TTE_FIELDS = ("source", "next", "legal")


def _tte_steps(answer: Optional[Mapping]) -> dict[int, dict]:
    if not isinstance(answer, Mapping):
        return {}
    steps = answer.get("steps")
    if not isinstance(steps, list):
        return {}
    out = {}
    for record in steps:
        if isinstance(record, Mapping) and isinstance(record.get("step"), int):
            out[record["step"]] = record
    return out


def score_tte(pred: Optional[Mapping], gt: Mapping) -> tuple[Counts, Counts]:
    """(AP counts, TS counts) for per-step transition records.

    TS level: a predicted step is a true positive only when source, next
    and legal all match. AP level: the three fields score element-wise.
    """
    gt_steps = _tte_steps(gt)
    pred_steps = _tte_steps(pred)
    ap, ts = Counts(), Counts()
    for step in gt_steps.keys() | pred_steps.keys():
        g, p = gt_steps.get(step), pred_steps.get(step)
        if g is not None and p is not None:
            matches = sum(1 for f in _TTE_FIELDS if p.get(f) == g.get(f))
            ap.tp += matches
            ap.fp += len(_TTE_FIELDS) - matches
            ap.fn += len(_TTE_FIELDS) - matches
            if matches == len(_TTE_FIELDS):
                ts.tp += 1
            else:
                ts.fp += 1
                ts.fn += 1
        elif g is not None:
            ap.fn += len(_TTE_FIELDS)
            ts.fn += 1
        else:
            ap.fp += len(_TTE_FIELDS)
            ts.fp += 1
    return ap, ts


# --------------------------------------------------------------------------
# Task-level entry point


def score_task(task_record: Mapping, completion: str) -> ScoreReport:
    """Extract the answer from a raw completion and score it."""
    answer = extract_answer(completion)
    parse_failed = answer is None
    task_id = task_record["id"]
    gt = task_record["ground_truth"]
    if task_record["kind"] == "TCE":
        ap, ts = Counts(), Counts()
        for effect_string, gt_map in gt.items():
            pred_map = _causal_answer_for(answer, effect_string) if answer else None
            ap += score_tce_ap(pred_map, gt_map)
            ts += score_tce_ts(pred_map, gt_map)
        return ScoreReport(task_id, ap, ts, parse_failed)
    ap, ts = score_tte(answer, gt)
    return ScoreReport(task_id, ap, ts, parse_failed)


def _causal_answer_for(answer: Mapping, effect_string: str) -> Optional[Mapping]:
    for key, value in answer.items():
        if str(key).strip() == effect_string and isinstance(value, Mapping):
            return value
    # Tolerate a bare step map when the effect key was dropped.
    if all(str(k).strip().isdigit() for k in answer.keys()) and answer:
        return answer
    return None


# --------------------------------------------------------------------------
# Aggregation


def aggregate(rows: Sequence[Mapping], group_by: Sequence[str]) -> list[dict]:
    """Micro-aggregate scored rows into summary records.

    Each row must carry Counts fields ``ap_tp, ap_fp, ap_fn, ts_tp,
    ts_fp, ts_fn`` plus the grouping keys. Counts are summed within each
    group and metrics computed once, in deterministic group order.
    """
    groups: dict[tuple, dict] = {}
    for row in rows:
        key = tuple(str(row.get(k, "")) for k in group_by)
        bucket = groups.setdefault(key, {"ap": Counts(), "ts": Counts(), "n": 0})
        bucket["ap"] += Counts(row["ap_tp"], row["ap_fp"], row["ap_fn"])
        bucket["ts"] += Counts(row["ts_tp"], row["ts_fp"], row["ts_fn"])
        bucket["n"] += 1
    out = []
    for key in sorted(groups):
        bucket = groups[key]
        ap, ts = Metrics.from_counts(bucket["ap"]), Metrics.from_counts(bucket["ts"])
        record = dict(zip(group_by, key))
        record.update(
            {
                "n": bucket["n"],
                "precision_ap": ap.precision,
                "recall_ap": ap.recall,
                "f1_ap": ap.f1,
                "precision_ts": ts.precision,
                "recall_ts": ts.recall,
                "f1_ts": ts.f1,
            }
        )
        out.append(record)
    return out


def report_rows(
    reports: Sequence[ScoreReport], task_meta: Mapping[str, Mapping], model: str
) -> list[dict]:
    """Flatten reports into aggregation/diagnostics rows with task metadata."""
    rows = []
    for r in reports:
        meta = task_meta.get(r.task_id, {})
        rows.append(
            {
                "task_id": r.task_id,
                "model": model,
                "kind": meta.get("kind", ""),
                "difficulty": meta.get("difficulty", ""),
                "parse_failed": r.parse_failed,
                "ap_tp": r.ap_counts.tp,
                "ap_fp": r.ap_counts.fp,
                "ap_fn": r.ap_counts.fn,
                "ts_tp": r.ts_counts.tp,
                "ts_fp": r.ts_counts.fp,
                "ts_fn": r.ts_counts.fn,
                "precision_ap": r.ap_metrics.precision,
                "recall_ap": r.ap_metrics.recall,
                "f1_ap": r.ap_metrics.f1,
                "precision_ts": r.ts_metrics.precision,
                "recall_ts": r.ts_metrics.recall,
                "f1_ts": r.ts_metrics.f1,
            }
        )
    return rows
