"""Counterfactual cause analysis for effects of the form "output o at step k".

The controller is driven under game semantics: the environment fixes the
inputs of a step, then the controller's unique consistent (outputs, next
state) reaction is resolved. A cause literal is a but-for input: flipping
that single input at that single step, holding every other input fixed
and re-resolving all outputs, makes the effect disappear.

Two independent routes compute the same ground truth: direct single-flip
re-simulation (:func:`but_for_constraints`) and lookup in an exhaustive
table of every input sequence (:func:`build_cause_table` +
:func:`minimal_causes`). They must agree; the test suite enforces it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .automata import ApKind, AtomicProposition, Automaton, satisfying_masks
from .execution import Trace

CAUSE_TABLE_BOUND = 1 << 20

NO_CONSTRAINTS = "no constraints"


class EffectError(ValueError):
    """Malformed effect string or an effect over a non-output AP."""


class ResolutionError(RuntimeError):
    """An input assignment with no unique (outputs, next state) reaction."""

    def __init__(self, state: int, step: int, inputs: Mapping[str, bool], count: int):
        self.state = state
        self.step = step
        self.inputs = dict(inputs)
        self.count = count
        kind = "no" if count == 0 else f"{count}"
        super().__init__(
            f"state {state}, step {step}: {kind} consistent (outputs, edge) reactions for inputs {self.inputs!r}"
        )


@dataclass(frozen=True)
class EffectSpec:
    """An output proposition observed at depth `k`: ``XX..X name``."""

    output: str
    depth: int
    polarity: bool = True

    def to_string(self) -> str:
        prefix = "X" * self.depth + (" " if self.depth else "")
        return prefix + ("" if self.polarity else "!") + self.output


_X_RUN_RE = re.compile(r"^X+$")
_NAME_RE = re.compile(r"^(!?)([A-Za-z_][A-Za-z0-9_]*)$")


def parse_effect(s: str, aps: Sequence[AtomicProposition]) -> EffectSpec:
    by_name = {ap.name: ap for ap in aps}

    def resolve(name: str, depth: int, polarity: bool) -> EffectSpec:
        if name not in by_name:
            raise EffectError(f"unknown AP {name!r} in effect {s!r}")
        if by_name[name].kind is not ApKind.OUTPUT:
            raise EffectError(f"effect AP {name!r} is an input; effects must name outputs")
        return EffectSpec(name, depth, polarity)

    text = s.strip()
    # A bare known AP name wins over the X-prefix reading, so outputs whose
    # names start with an X are still addressable at depth 0.
    bare = text[1:].strip() if text.startswith("!") else text
    if bare in by_name:
        return resolve(bare, 0, not text.startswith("!"))

    tokens = text.split()
    if not tokens:
        raise EffectError("empty effect string")
    *prefix, last = tokens
    if not all(_X_RUN_RE.match(tok) for tok in prefix):
        raise EffectError(f"malformed effect {s!r}; expected like 'XXX g'")
    depth = sum(len(tok) for tok in prefix)
    m = _NAME_RE.match(last)
    if m is not None and not prefix:
        # Unspaced form like "XXXg": peel leading X's until a known AP remains.
        name = m.group(2)
        run = 0
        while run < len(name) and name[run] == "X" and name[run:] not in by_name:
            run += 1
        return resolve(name[run:], run, polarity=(m.group(1) != "!"))
    if m is None:
        raise EffectError(f"malformed effect {s!r}; expected like 'XXX g'")
    return resolve(m.group(2), depth, polarity=(m.group(1) != "!"))


# --------------------------------------------------------------------------
# Input-driven resolution


class InputResolver:
    """Resolves (state, input assignment) -> (full assignment, next state).

    Tables are built lazily per state by scanning each edge's satisfying
    assignments and grouping them by input part. An input assignment
    admitting zero or several distinct (full assignment, destination)
    reactions raises :class:`ResolutionError` when resolved.
    """

    def __init__(self, a: Automaton):
        self.a = a
        self.input_aps = a.input_aps
        self.output_aps = a.output_aps
        self._input_bits = [ap.index for ap in self.input_aps]
        self._tables: dict[int, dict[int, list[tuple[int, int]]]] = {}

    @property
    def num_inputs(self) -> int:
        return len(self.input_aps)

    def pack_inputs(self, assignment: Mapping[str, bool]) -> int:
        mask = 0
        for j, ap in enumerate(self.input_aps):
            if assignment.get(ap.name, False):
                mask |= 1 << j
        return mask

    def unpack_inputs(self, mask: int) -> dict[str, bool]:
        return {ap.name: bool((mask >> j) & 1) for j, ap in enumerate(self.input_aps)}

    def inputs_of_trace(self, t: Trace) -> list[int]:
        return [
            self.pack_inputs({name: True for name in step.true_aps}) for step in t.steps
        ]

    def _table_for(self, state: int) -> dict[int, list[tuple[int, int]]]:
        table = self._tables.get(state)
        if table is None:
            table = {}
            for tr in self.a.transitions[state]:
                for full_mask in satisfying_masks(tr.label, len(self.a.aps)):
                    packed = 0
                    for j, bit in enumerate(self._input_bits):
                        if (full_mask >> bit) & 1:
                            packed |= 1 << j
                    reactions = table.setdefault(packed, [])
                    if (full_mask, tr.dest) not in reactions:
                        reactions.append((full_mask, tr.dest))
            self._tables[state] = table
        return table

    def resolve(self, state: int, input_mask: int, step: int = 0) -> tuple[int, int]:
        reactions = self._table_for(state).get(input_mask, [])
        if len(reactions) != 1:
            raise ResolutionError(state, step, self.unpack_inputs(input_mask), len(reactions))
        return reactions[0]

    def run(self, input_masks: Sequence[int]) -> list[tuple[int, int]]:
        """Resolve a whole input sequence from the start state.

        Returns per-step (full assignment mask, next state).
        """
        state = self.a.start
        out = []
        for i, im in enumerate(input_masks):
            full, dest = self.resolve(state, im, step=i)
            out.append((full, dest))
            state = dest
        return out


def run_inputs(a: Automaton, input_seq: Sequence[Mapping[str, bool]]) -> list[dict[str, bool]]:
    """Resolve outputs for a sequence of input assignments (game semantics)."""
    resolver = InputResolver(a)
    masks = [resolver.pack_inputs(step) for step in input_seq]
    return [a.mask_to_assignment(full) for full, _ in resolver.run(masks)]


def effect_holds(
    a: Automaton, input_seq: Sequence[Mapping[str, bool]], effect: EffectSpec
) -> bool:
    """Whether the resolved output at step `depth` matches the effect."""
    if len(input_seq) < effect.depth + 1:
        raise ValueError(f"need {effect.depth + 1} input steps, got {len(input_seq)}")
    resolver = InputResolver(a)
    masks = [resolver.pack_inputs(step) for step in input_seq[: effect.depth + 1]]
    return _effect_holds_packed(resolver, masks, effect)


def _effect_holds_packed(resolver: InputResolver, input_masks: Sequence[int], effect: EffectSpec) -> bool:
    bit = resolver.a.ap_by_name(effect.output).index
    run = resolver.run(input_masks[: effect.depth + 1])
    full, _ = run[effect.depth]
    return bool((full >> bit) & 1) == effect.polarity


def _effect_holds_lenient(resolver: InputResolver, input_masks: Sequence[int], effect: EffectSpec) -> bool:
    # A counterfactual input sequence the controller cannot answer produces
    # no trace at all, so the effect trivially does not hold on it.
    try:
        return _effect_holds_packed(resolver, input_masks, effect)
    except ResolutionError:
        return False


# --------------------------------------------------------------------------
# Ground truth


@dataclass(frozen=True)
class CausalGroundTruth:
    """Per-step minimal input constraints for one effect.

    `per_step` maps decimal step keys "0".."k" to a one-element list:
    either ["no constraints"] or a single canonical conjunction such as
    ["!a and r"] (literals sorted by AP index, polarity equal to the
    input's actual value on the analysed trace).
    """

    effect: EffectSpec
    per_step: dict[str, list[str]]

    def to_json_dict(self) -> dict[str, dict[str, list[str]]]:
        return {self.effect.to_string(): self.per_step}

    def literal_count(self) -> int:
        """Causal literal occurrences across all steps, counting repeats."""
        total = 0
        for constraints in self.per_step.values():
            for c in constraints:
                if c != NO_CONSTRAINTS:
                    total += len(c.split(" and "))
        return total


def _constraint_string(literals: list[tuple[int, str, bool]]) -> list[str]:
    if not literals:
        return [NO_CONSTRAINTS]
    literals.sort(key=lambda item: item[0])
    return [" and ".join(name if value else f"!{name}" for _, name, value in literals)]


def _ground_truth(
    resolver: InputResolver,
    actual_masks: list[int],
    effect: EffectSpec,
    falsifies,
) -> CausalGroundTruth:
    per_step: dict[str, list[str]] = {}
    for u in range(effect.depth + 1):
        literals = []
        for j, ap in enumerate(resolver.input_aps):
            flipped = list(actual_masks)
            flipped[u] ^= 1 << j
            if falsifies(flipped):
                value = bool((actual_masks[u] >> j) & 1)
                literals.append((ap.index, ap.name, value))
        per_step[str(u)] = _constraint_string(literals)
    return CausalGroundTruth(effect, per_step)


def but_for_constraints(a: Automaton, t: Trace, effect: EffectSpec) -> CausalGroundTruth:
    """Single-flip counterfactual causes of the effect on a concrete trace.

    For each step u <= k and each input p, the literal (p at u, with its
    actual polarity) is necessary iff flipping p at u alone and
    re-resolving all outputs falsifies the effect.
    """
    if effect.depth >= len(t.steps):
        raise ValueError(f"effect depth {effect.depth} exceeds trace length {len(t.steps)}")
    resolver = InputResolver(a)
    actual = resolver.inputs_of_trace(t)[: effect.depth + 1]
    if not _effect_holds_packed(resolver, actual, effect):
        raise ValueError(f"effect {effect.to_string()!r} does not hold on the given trace")

    def falsifies(masks: list[int]) -> bool:
        return not _effect_holds_lenient(resolver, masks, effect)

    return _ground_truth(resolver, actual, effect, falsifies)


@dataclass(frozen=True)
class CauseTable:
    """Exhaustive effect evaluation over every input sequence of length k+1.

    Row index packs the sequence as sum(input_mask[u] << (u * n_inputs)).
    """

    effect: EffectSpec
    input_names: tuple[str, ...]
    rows: tuple[bool, ...]

    @property
    def depth(self) -> int:
        return self.effect.depth

    def key_of(self, input_masks: Sequence[int]) -> int:
        n = len(self.input_names)
        key = 0
        for u in range(self.depth + 1):
            key |= input_masks[u] << (u * n)
        return key

    def holds(self, input_masks: Sequence[int]) -> bool:
        return self.rows[self.key_of(input_masks)]


def build_cause_table(a: Automaton, effect: EffectSpec) -> CauseTable:
    """Evaluate the effect on every input sequence of length depth+1."""
    resolver = InputResolver(a)
    n = resolver.num_inputs
    total_bits = n * (effect.depth + 1)
    if (1 << total_bits) > CAUSE_TABLE_BOUND:
        raise ValueError(
            f"cause table bound exceeded: 2^{total_bits} sequences > {CAUSE_TABLE_BOUND}"
        )
    rows = []
    step_mask = (1 << n) - 1
    for key in range(1 << total_bits):
        masks = [(key >> (u * n)) & step_mask for u in range(effect.depth + 1)]
        rows.append(_effect_holds_lenient(resolver, masks, effect))
    return CauseTable(effect, tuple(ap.name for ap in resolver.input_aps), tuple(rows))


def minimal_causes(ct: CauseTable, a: Automaton, actual_inputs: Sequence[int]) -> CausalGroundTruth:
    """Oracle ground truth read off the exhaustive table.

    With single-flip semantics the set of individually necessary literals
    is already subset-minimal: dropping any member leaves a literal whose
    flip falsifies the effect.
    """
    resolver = InputResolver(a)
    actual = list(actual_inputs)[: ct.depth + 1]
    if not ct.holds(actual):
        raise ValueError("effect does not hold on the given actual inputs")

    def falsifies(masks: list[int]) -> bool:
        return not ct.holds(masks)

    return _ground_truth(resolver, actual, ct.effect, falsifies)
