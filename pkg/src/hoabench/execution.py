"""Automaton execution: random walks, trace checking, trace text formats.

A trace is a finite sequence of full truth assignments (stored as the set
of true AP names) with optionally recorded source/next states per step.
Acceptance here is per-step legality: every step must resolve to an
outgoing transition consistent with the recorded states. Omega acceptance
sets carried by the automaton are deliberately ignored.

Two text formats round-trip:

* semicolon style: ``!g&!r;!g&r;g&r;cycle{1}`` — every AP appears in
  every step, negated when false; an optional trailing ``cycle{n}``
  marker is kept as metadata. Carries no state information.
* tuple style: ``(0, {"g", "r"}, 5)`` — one step per line as
  ``(source, {true APs}, next)``; unlisted APs are false.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .automata import Automaton, LabelExpr, satisfying_masks
from .rng import SplitMix64


class TraceError(ValueError):
    """Malformed trace text."""


class DeadEndError(RuntimeError):
    """Random walk reached a state with no satisfiable outgoing edge."""

    def __init__(self, state: int, step: int):
        self.state = state
        self.step = step
        super().__init__(f"dead end at state {state}, step {step}: no satisfiable outgoing edge")


class NondeterminismError(RuntimeError):
    """An automaton claiming `deterministic` matched two or more edges."""


class IncorrigibleTraceError(RuntimeError):
    """No single-step corruption can invalidate the trace."""


@dataclass(frozen=True)
class TimeStep:
    index: int
    true_aps: frozenset[str]
    source: Optional[int] = None
    next: Optional[int] = None


@dataclass(frozen=True)
class Trace:
    steps: tuple[TimeStep, ...]
    cycle_suffix: Optional[int] = None

    def __len__(self) -> int:
        return len(self.steps)

    def without_states(self) -> "Trace":
        return Trace(
            tuple(TimeStep(s.index, s.true_aps) for s in self.steps),
            self.cycle_suffix,
        )


@dataclass(frozen=True)
class ResolvedStep:
    index: int
    source: int
    label: LabelExpr
    next: int


@dataclass(frozen=True)
class TraceVerdict:
    accepted: bool
    first_violation: Optional[int]
    resolved: tuple[ResolvedStep, ...]


# --------------------------------------------------------------------------
# Stepping and walking


def _satisfied_edges(a: Automaton, state: int, mask: int) -> list[int]:
    return [i for i, tr in enumerate(a.transitions[state]) if tr.label.evaluate(mask)]


def step(a: Automaton, state: int, assignment) -> Optional[tuple[int, LabelExpr]]:
    """Resolve one transition from `state` under a full assignment.

    Returns (next state, label) or None when no edge is satisfied. When
    several edges match, an automaton that claims the `deterministic`
    property raises; otherwise the first edge in declaration order wins.
    """
    if not (0 <= state < a.num_states):
        raise ValueError(f"state {state} out of range")
    mask = assignment if isinstance(assignment, int) else a.assignment_to_mask(assignment)
    hits = _satisfied_edges(a, state, mask)
    if not hits:
        return None
    if len(hits) > 1 and a.claims_deterministic():
        raise NondeterminismError(
            f"{len(hits)} transitions satisfied from state {state} under {a.mask_to_assignment(mask)!r}"
        )
    tr = a.transitions[state][hits[0]]
    return tr.dest, tr.label


class _EdgeChoices:
    """Per-state satisfiable edges with their satisfying masks, cached."""

    def __init__(self, a: Automaton):
        self.a = a
        self._cache: dict[int, list[tuple[int, list[int]]]] = {}

    def at(self, state: int) -> list[tuple[int, list[int]]]:
        if state not in self._cache:
            choices = []
            for i, tr in enumerate(self.a.transitions[state]):
                masks = satisfying_masks(tr.label, len(self.a.aps))
                if masks:
                    choices.append((i, masks))
            self._cache[state] = choices
        return self._cache[state]


def _mask_to_true_names(a: Automaton, mask: int) -> frozenset[str]:
    return frozenset(ap.name for ap in a.aps if (mask >> ap.index) & 1)


def random_trace(a: Automaton, length: int, seed: int) -> Trace:
    """Seeded random walk of exactly `length` steps from the start state.

    Two-stage uniform sampling: pick one satisfiable outgoing edge
    uniformly, then one satisfying assignment of its label uniformly.
    A pure function of (automaton, length, seed).
    """
    if length <= 0:
        raise ValueError("trace length must be positive")
    rng = SplitMix64(seed)
    choices = _EdgeChoices(a)
    steps = []
    current = a.start
    for i in range(length):
        edges = choices.at(current)
        if not edges:
            raise DeadEndError(current, i)
        edge_index, masks = edges[rng.randrange(len(edges))]
        mask = masks[rng.randrange(len(masks))]
        dest = a.transitions[current][edge_index].dest
        steps.append(TimeStep(i, _mask_to_true_names(a, mask), current, dest))
        current = dest
    return Trace(tuple(steps))


def check_trace(a: Automaton, t: Trace) -> TraceVerdict:
    """Walk the trace from the start state, resolving each step.

    A step violates when its recorded source disagrees with the walk,
    when no outgoing edge is satisfied, or when the recorded next state
    is not the destination of any satisfied edge. The walk stops at the
    first violation.
    """
    if not t.steps:
        raise ValueError("trace has no steps")
    current = a.start
    resolved: list[ResolvedStep] = []
    for i, s in enumerate(t.steps):
        if s.source is not None and s.source != current:
            return TraceVerdict(False, i, tuple(resolved))
        mask = a.true_aps_to_mask(sorted(s.true_aps))
        hits = _satisfied_edges(a, current, mask)
        if not hits:
            return TraceVerdict(False, i, tuple(resolved))
        if s.next is not None:
            hits = [h for h in hits if a.transitions[current][h].dest == s.next]
            if not hits:
                return TraceVerdict(False, i, tuple(resolved))
        tr = a.transitions[current][hits[0]]
        resolved.append(ResolvedStep(i, current, tr.label, tr.dest))
        current = tr.dest
    return TraceVerdict(True, None, tuple(resolved))


def legality_steps(a: Automaton, t: Trace) -> list[dict]:
    """Per-step legality records used as trace-task ground truth.

    Unlike :func:`check_trace` this does not stop at the first violation:
    after an illegal step the walk resynchronises on the recorded next
    state, so every step gets a locally judged record
    ``{step, source, next, legal}``.
    """
    records = []
    current = a.start
    for i, s in enumerate(t.steps):
        source = s.source if s.source is not None else current
        mask = a.true_aps_to_mask(sorted(s.true_aps))
        legal = source == current
        next_state = s.next
        if legal:
            hits = _satisfied_edges(a, source, mask)
            if s.next is not None:
                hits = [h for h in hits if a.transitions[source][h].dest == s.next]
            legal = bool(hits)
            if legal and next_state is None:
                next_state = a.transitions[source][hits[0]].dest
        records.append({"step": i, "source": source, "next": next_state, "legal": legal})
        current = next_state if next_state is not None else current
    return records


# --------------------------------------------------------------------------
# Text formats

_CYCLE_RE = re.compile(r"^cycle\{(\d+)\}$")


def parse_trace(text: str, aps: Sequence, style: Optional[str] = None) -> Trace:
    """Parse semicolon or tuple style trace text (auto-detected by default)."""
    stripped = text.strip()
    if style is None:
        first = next(
            (line.strip() for line in stripped.split("\n") if line.strip() and not line.strip().startswith("#")),
            "",
        )
        style = "tuples" if first.startswith("(") else "semicolon"
    if style == "semicolon":
        return _parse_semicolon(stripped, aps)
    if style == "tuples":
        return _parse_tuples(stripped, aps)
    raise ValueError(f"unknown trace style {style!r}")


def _ap_names(aps: Sequence) -> list[str]:
    return [ap.name if hasattr(ap, "name") else str(ap) for ap in aps]


def _parse_semicolon(text: str, aps: Sequence) -> Trace:
    names = _ap_names(aps)
    known = set(names)
    tokens = [tok.strip() for tok in text.split(";") if tok.strip()]
    cycle = None
    if tokens and (m := _CYCLE_RE.match(tokens[-1])):
        cycle = int(m.group(1))
        if cycle <= 0:
            raise TraceError("cycle length must be positive")
        tokens = tokens[:-1]
    steps = []
    for i, tok in enumerate(tokens):
        assigned: dict[str, bool] = {}
        for lit in tok.split("&"):
            lit = lit.strip()
            if not lit:
                raise TraceError(f"empty literal in step {i}")
            negated = lit.startswith("!")
            name = lit[1:].strip() if negated else lit
            if name not in known:
                raise TraceError(f"unknown AP {name!r} in step {i}")
            if name in assigned:
                raise TraceError(f"AP {name!r} assigned twice in step {i}")
            assigned[name] = not negated
        missing = known - assigned.keys()
        if missing:
            raise TraceError(
                f"step {i} leaves {sorted(missing)} unassigned; negate false APs explicitly"
            )
        steps.append(TimeStep(i, frozenset(n for n, v in assigned.items() if v)))
    if not steps:
        raise TraceError("trace has no steps")
    return Trace(tuple(steps), cycle)


def _parse_tuples(text: str, aps: Sequence) -> Trace:
    known = set(_ap_names(aps))
    steps = []
    cycle = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if m := _CYCLE_RE.match(line):
            cycle = int(m.group(1))
            continue
        try:
            value = ast.literal_eval(line)
        except (SyntaxError, ValueError) as exc:
            raise TraceError(f"line {lineno}: unparseable tuple {line!r}") from exc
        if not (isinstance(value, tuple) and len(value) == 3):
            raise TraceError(f"line {lineno}: expected (source, {{APs}}, next)")
        source, names, dest = value
        if isinstance(names, dict) and not names:
            names = set()
        if not (isinstance(source, int) and isinstance(dest, int) and isinstance(names, (set, frozenset))):
            raise TraceError(f"line {lineno}: expected (int, set of AP names, int)")
        for n in names:
            if n not in known:
                raise TraceError(f"line {lineno}: unknown AP {n!r}")
        steps.append(TimeStep(len(steps), frozenset(names), source, dest))
    if not steps:
        raise TraceError("trace has no steps")
    return Trace(tuple(steps), cycle)


def format_trace(t: Trace, aps: Sequence, style: str = "semicolon") -> str:
    """Render a trace in one of the two text formats.

    Semicolon style lists every AP per step (negated when false) and
    drops state information; tuple style requires recorded states and
    lists true APs in AP-table order.
    """
    names = _ap_names(aps)
    if style == "semicolon":
        tokens = []
        for s in t.steps:
            tokens.append("&".join(n if n in s.true_aps else f"!{n}" for n in names))
        if t.cycle_suffix is not None:
            tokens.append(f"cycle{{{t.cycle_suffix}}}")
        return ";".join(tokens)
    if style == "tuples":
        lines = []
        for s in t.steps:
            if s.source is None or s.next is None:
                raise TraceError("tuple style requires recorded source/next states")
            listed = [n for n in names if n in s.true_aps]
            body = "{" + ", ".join(f'"{n}"' for n in listed) + "}" if listed else "set()"
            lines.append(f"({s.source}, {body}, {s.next})")
        if t.cycle_suffix is not None:
            lines.append(f"cycle{{{t.cycle_suffix}}}")
        return "\n".join(lines)
    raise ValueError(f"unknown trace style {style!r}")


# --------------------------------------------------------------------------
# Mutation (negative samples)


def mutate_trace(a: Automaton, t: Trace, seed: int) -> Trace:
    """Corrupt exactly one step so the trace is rejected.

    Candidate corruptions, tried in seeded random order until one is
    feasible: replace a step's assignment with one under which no edge
    from that step's source state reaches its recorded next state (or no
    edge at all, when states are unrecorded), or retarget a step's
    recorded next state so no satisfied edge reaches it. Raises
    :class:`IncorrigibleTraceError` when the automaton is so permissive
    that no single-step corruption exists.
    """
    verdict = check_trace(a, t)
    if not verdict.accepted:
        raise ValueError("mutate_trace requires an accepted trace")
    rng = SplitMix64(seed)
    n_aps = len(a.aps)
    if n_aps > 20:
        raise ValueError("mutation enumeration bound exceeded (20 APs)")

    candidates: list[tuple[int, str]] = [(i, "assignment") for i in range(len(t.steps))]
    candidates += [(i, "next") for i, s in enumerate(t.steps) if s.next is not None]
    rng.shuffle(candidates)

    sources = [r.source for r in verdict.resolved]
    for step_index, kind in candidates:
        s = t.steps[step_index]
        source = sources[step_index]
        if kind == "assignment":
            bad_masks = []
            for mask in range(1 << n_aps):
                hits = _satisfied_edges(a, source, mask)
                if s.next is not None:
                    hits = [h for h in hits if a.transitions[source][h].dest == s.next]
                if not hits:
                    bad_masks.append(mask)
            if not bad_masks:
                continue
            mask = bad_masks[rng.randrange(len(bad_masks))]
            new_step = TimeStep(s.index, _mask_to_true_names(a, mask), s.source, s.next)
        else:
            mask = a.true_aps_to_mask(sorted(s.true_aps))
            reachable = {a.transitions[source][h].dest for h in _satisfied_edges(a, source, mask)}
            bad_dests = [d for d in range(a.num_states) if d != s.next and d not in reachable]
            if not bad_dests:
                continue
            dest = bad_dests[rng.randrange(len(bad_dests))]
            new_step = TimeStep(s.index, s.true_aps, s.source, dest)
        steps = list(t.steps)
        steps[step_index] = new_step
        return Trace(tuple(steps), t.cycle_suffix)
    raise IncorrigibleTraceError("no single-step corruption can invalidate this trace")
