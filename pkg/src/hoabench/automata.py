"""HOA v1 subset: atomic propositions, Boolean edge labels, automata.

Covers the controller files this toolkit consumes: explicit transition
labels over atomic propositions, `controllable-AP` input/output
partitioning, state-level acceptance sets, and tolerant round-tripping of
headers we do not interpret. Acceptance conditions are parsed and stored
but never enforced: finite traces are judged step by step, so only
per-step transition legality matters here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Optional, Sequence


class HoaError(ValueError):
    """Malformed HOA text or an automaton violating its own headers."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class MissingApError(KeyError):
    """An assignment did not cover every atomic proposition."""


class ApKind(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class AtomicProposition:
    index: int
    name: str
    kind: ApKind


# --------------------------------------------------------------------------
# Label expressions


class LabelExpr:
    """Boolean expression over AP indices with &, |, ! and t/f constants."""

    def evaluate(self, mask: int) -> bool:
        """Evaluate under a full assignment packed as a bitmask (bit i = AP i)."""
        raise NotImplementedError

    def ap_indices(self) -> frozenset[int]:
        raise NotImplementedError

    def render(self, names: Optional[Sequence[str]] = None) -> str:
        """Minimal-parenthesis text; AP-index leaves unless names are given."""
        return self._render(names, 0)

    def _render(self, names: Optional[Sequence[str]], parent_prec: int) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.render()


# Operator precedence used for minimal parenthesisation: | < & < !.
_PREC_OR, _PREC_AND, _PREC_NOT = 1, 2, 3


@dataclass(frozen=True)
class Leaf(LabelExpr):
    ap: int

    def evaluate(self, mask: int) -> bool:
        return bool((mask >> self.ap) & 1)

    def ap_indices(self) -> frozenset[int]:
        return frozenset((self.ap,))

    def _render(self, names, parent_prec):
        return names[self.ap] if names is not None else str(self.ap)


@dataclass(frozen=True)
class Const(LabelExpr):
    value: bool

    def evaluate(self, mask: int) -> bool:
        return self.value

    def ap_indices(self) -> frozenset[int]:
        return frozenset()

    def _render(self, names, parent_prec):
        return "t" if self.value else "f"


@dataclass(frozen=True)
class Not(LabelExpr):
    operand: LabelExpr

    def evaluate(self, mask: int) -> bool:
        return not self.operand.evaluate(mask)

    def ap_indices(self) -> frozenset[int]:
        return self.operand.ap_indices()

    def _render(self, names, parent_prec):
        inner = self.operand._render(names, _PREC_NOT)
        return "!" + inner


@dataclass(frozen=True)
class And(LabelExpr):
    left: LabelExpr
    right: LabelExpr

    def evaluate(self, mask: int) -> bool:
        return self.left.evaluate(mask) and self.right.evaluate(mask)

    def ap_indices(self) -> frozenset[int]:
        return self.left.ap_indices() | self.right.ap_indices()

    def _render(self, names, parent_prec):
        # Left-associative chain: the right operand needs parens at equal prec.
        text = self.left._render(names, _PREC_AND) + "&" + self.right._render(names, _PREC_AND + 1)
        return f"({text})" if parent_prec > _PREC_AND else text


@dataclass(frozen=True)
class Or(LabelExpr):
    left: LabelExpr
    right: LabelExpr

    def evaluate(self, mask: int) -> bool:
        return self.left.evaluate(mask) or self.right.evaluate(mask)

    def ap_indices(self) -> frozenset[int]:
        return self.left.ap_indices() | self.right.ap_indices()

    def _render(self, names, parent_prec):
        text = self.left._render(names, _PREC_OR) + "|" + self.right._render(names, _PREC_OR + 1)
        return f"({text})" if parent_prec > _PREC_OR else text


_LABEL_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|([!&|()]))")


class _LabelParser:
    """Recursive-descent parser for edge labels: `!` > `&` > `|`.

    Leaves are AP indices; bare identifiers are resolved through the AP
    name table (the alias style used in prompt listings), with `t`/`f`
    reserved for the constants.
    """

    def __init__(self, text: str, ap_names: Sequence[str], line: Optional[int] = None):
        self.text = text
        self.ap_names = {name: i for i, name in enumerate(ap_names)}
        self.n_aps = len(ap_names)
        self.line = line
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._tokenize()
        self.tpos = 0

    def _tokenize(self) -> None:
        pos = 0
        while pos < len(self.text):
            m = _LABEL_TOKEN.match(self.text, pos)
            if m is None:
                if self.text[pos:].strip():
                    raise HoaError(
                        f"unexpected character {self.text[pos:].strip()[0]!r} in label",
                        self.line, pos + 1,
                    )
                break
            if m.group(1) is not None:
                self.tokens.append(("int", m.group(1), m.start(1)))
            elif m.group(2) is not None:
                self.tokens.append(("name", m.group(2), m.start(2)))
            else:
                self.tokens.append(("op", m.group(3), m.start(3)))
            pos = m.end()

    def _peek(self) -> Optional[tuple[str, str, int]]:
        return self.tokens[self.tpos] if self.tpos < len(self.tokens) else None

    def _next(self) -> tuple[str, str, int]:
        tok = self._peek()
        if tok is None:
            raise HoaError("unexpected end of label expression", self.line)
        self.tpos += 1
        return tok

    def parse(self) -> LabelExpr:
        expr = self._parse_or()
        tok = self._peek()
        if tok is not None:
            raise HoaError(f"trailing token {tok[1]!r} in label", self.line, tok[2] + 1)
        return expr

    def _parse_or(self) -> LabelExpr:
        expr = self._parse_and()
        while (tok := self._peek()) is not None and tok[1] == "|":
            self._next()
            expr = Or(expr, self._parse_and())
        return expr

    def _parse_and(self) -> LabelExpr:
        expr = self._parse_unary()
        while (tok := self._peek()) is not None and tok[1] == "&":
            self._next()
            expr = And(expr, self._parse_unary())
        return expr

    def _parse_unary(self) -> LabelExpr:
        kind, value, col = self._next()
        if value == "!":
            return Not(self._parse_unary())
        if value == "(":
            expr = self._parse_or()
            tok = self._next()
            if tok[1] != ")":
                raise HoaError(f"expected ')', got {tok[1]!r}", self.line, tok[2] + 1)
            return expr
        if kind == "int":
            index = int(value)
            if index >= self.n_aps:
                raise HoaError(f"AP index {index} out of range (have {self.n_aps})", self.line, col + 1)
            return Leaf(index)
        if kind == "name":
            if value == "t":
                return Const(True)
            if value == "f":
                return Const(False)
            if value not in self.ap_names:
                raise HoaError(f"unknown AP name {value!r} in label", self.line, col + 1)
            return Leaf(self.ap_names[value])
        raise HoaError(f"unexpected token {value!r} in label", self.line, col + 1)


def parse_label(text: str, ap_names: Sequence[str], line: Optional[int] = None) -> LabelExpr:
    return _LabelParser(text, ap_names, line).parse()


# --------------------------------------------------------------------------
# Automaton


@dataclass(frozen=True)
class Transition:
    label: LabelExpr
    dest: int
    acc_sets: tuple[int, ...] = ()


@dataclass(frozen=True)
class Automaton:
    num_states: int
    start: int
    aps: tuple[AtomicProposition, ...]
    transitions: tuple[tuple[Transition, ...], ...]
    acceptance: str = "0 t"
    acc_name: Optional[str] = None
    properties: tuple[str, ...] = ()
    name: Optional[str] = None
    state_acc: tuple[tuple[int, ...], ...] = ()
    extra_headers: tuple[str, ...] = ()

    def __post_init__(self):
        if not (0 <= self.start < self.num_states):
            raise HoaError(f"start state {self.start} out of range (States: {self.num_states})")
        if len(self.transitions) != self.num_states:
            raise HoaError("transition table length does not match state count")
        if self.state_acc == ():
            object.__setattr__(self, "state_acc", tuple(() for _ in range(self.num_states)))
        elif len(self.state_acc) != self.num_states:
            raise HoaError("state_acc length does not match state count")
        names = [ap.name for ap in self.aps]
        if len(set(names)) != len(names):
            raise HoaError("duplicate AP names")
        for i, ap in enumerate(self.aps):
            if ap.index != i:
                raise HoaError(f"AP {ap.name!r} has index {ap.index}, expected {i}")
        for state, edges in enumerate(self.transitions):
            for tr in edges:
                if not (0 <= tr.dest < self.num_states):
                    raise HoaError(f"transition from state {state} targets out-of-range state {tr.dest}")
                for idx in tr.label.ap_indices():
                    if idx >= len(self.aps):
                        raise HoaError(f"label on state {state} references AP index {idx}")

    # -- convenience views ---------------------------------------------

    @property
    def ap_names(self) -> tuple[str, ...]:
        return tuple(ap.name for ap in self.aps)

    @property
    def input_aps(self) -> tuple[AtomicProposition, ...]:
        return tuple(ap for ap in self.aps if ap.kind is ApKind.INPUT)

    @property
    def output_aps(self) -> tuple[AtomicProposition, ...]:
        return tuple(ap for ap in self.aps if ap.kind is ApKind.OUTPUT)

    @property
    def transition_count(self) -> int:
        return sum(len(edges) for edges in self.transitions)

    def ap_by_name(self, name: str) -> AtomicProposition:
        for ap in self.aps:
            if ap.name == name:
                return ap
        raise MissingApError(name)

    def claims_deterministic(self) -> bool:
        return "deterministic" in self.properties

    def assignment_to_mask(self, assignment: Mapping[str, bool]) -> int:
        """Pack a full name-keyed assignment into a bitmask (bit i = AP i)."""
        mask = 0
        for ap in self.aps:
            if ap.name not in assignment:
                raise MissingApError(ap.name)
            if assignment[ap.name]:
                mask |= 1 << ap.index
        return mask

    def mask_to_assignment(self, mask: int) -> dict[str, bool]:
        return {ap.name: bool((mask >> ap.index) & 1) for ap in self.aps}

    def true_aps_to_mask(self, true_aps: Sequence[str]) -> int:
        """Pack a set of true AP names (all others false) into a bitmask."""
        mask = 0
        for name in true_aps:
            mask |= 1 << self.ap_by_name(name).index
        return mask


# --------------------------------------------------------------------------
# Parsing


_HEADER_RE = re.compile(r"^([\w-]+):\s*(.*)$")
_STATE_RE = re.compile(r'^State:\s*(\d+)\s*(?:"([^"]*)")?\s*(?:\{([\d\s]*)\})?\s*$')
_EDGE_RE = re.compile(r"^\[(.*)\]\s*(\d+)\s*(?:\{([\d\s]*)\})?\s*$")
_AP_HEADER_RE = re.compile(r'^(\d+)((?:\s+"(?:[^"\\]|\\.)*")*)\s*$')
_AP_NAME_RE = re.compile(r'"((?:[^"\\]|\\.)*)"')


def parse_hoa(text: str) -> Automaton:
    """Parse the HOA v1 subset into an :class:`Automaton`.

    Unknown header lines are preserved verbatim so that rendering
    round-trips. CRLF input is tolerated.
    """
    lines = text.replace("\r\n", "\n").split("\n")
    stripped = [line.strip() for line in lines]
    if "--BODY--" not in stripped:
        raise HoaError("missing --BODY-- delimiter")
    if "--END--" not in stripped:
        raise HoaError("missing --END-- delimiter")

    num_states: Optional[int] = None
    start: Optional[int] = None
    ap_names: list[str] = []
    ap_seen = False
    acceptance: Optional[str] = None
    acc_name: Optional[str] = None
    properties: list[str] = []
    name: Optional[str] = None
    controllable: set[int] = set()
    extra_headers: list[str] = []

    body_start = None
    saw_hoa = False
    for i, raw in enumerate(lines):
        line = raw.strip()
        if line == "--BODY--":
            body_start = i + 1
            break
        if not line or line.startswith("/*"):
            continue
        m = _HEADER_RE.match(line)
        if m is None:
            raise HoaError(f"expected a header line, got {line!r}", i + 1)
        key, value = m.group(1), m.group(2).strip()
        if key == "HOA":
            if value != "v1":
                raise HoaError(f"unsupported HOA version {value!r}", i + 1)
            saw_hoa = True
        elif key == "States":
            num_states = int(value)
        elif key == "Start":
            start = int(value)
        elif key == "AP":
            ap_seen = True
            am = _AP_HEADER_RE.match(value)
            if am is None:
                raise HoaError(f"malformed AP header {value!r}", i + 1)
            count = int(am.group(1))
            ap_names = [s.replace('\\"', '"') for s in _AP_NAME_RE.findall(am.group(2))]
            if len(ap_names) != count:
                raise HoaError(f"AP header declares {count} propositions but lists {len(ap_names)}", i + 1)
        elif key == "Acceptance":
            acceptance = value
        elif key == "acc-name":
            acc_name = value
        elif key == "properties":
            properties.extend(value.split())
        elif key == "name":
            name = value.strip('"')
        elif key == "controllable-AP":
            controllable = {int(tok) for tok in value.split()}
        else:
            extra_headers.append(line)

    if not saw_hoa:
        raise HoaError("missing 'HOA: v1' header")
    if body_start is None:
        raise HoaError("missing --BODY-- delimiter")
    if num_states is None:
        raise HoaError("missing States: header")
    if start is None:
        raise HoaError("missing Start: header")
    if not ap_seen:
        raise HoaError("missing AP: header")

    aps = tuple(
        AtomicProposition(i, n, ApKind.OUTPUT if i in controllable else ApKind.INPUT)
        for i, n in enumerate(ap_names)
    )
    for idx in controllable:
        if idx >= len(aps):
            raise HoaError(f"controllable-AP index {idx} out of range")

    transitions: list[list[Transition]] = [[] for _ in range(num_states)]
    state_acc: list[tuple[int, ...]] = [() for _ in range(num_states)]
    current: Optional[int] = None
    saw_end = False
    for i in range(body_start, len(lines)):
        line = lines[i].strip()
        if line == "--END--":
            saw_end = True
            break
        if not line or line.startswith("/*") or line.startswith("#"):
            continue
        sm = _STATE_RE.match(line)
        if sm is not None:
            current = int(sm.group(1))
            if current >= num_states:
                raise HoaError(f"state id {current} out of range (States: {num_states})", i + 1)
            if sm.group(3) is not None:
                state_acc[current] = tuple(int(t) for t in sm.group(3).split())
            continue
        em = _EDGE_RE.match(line)
        if em is not None:
            if current is None:
                raise HoaError("edge line before any State: line", i + 1)
            label = parse_label(em.group(1), ap_names, line=i + 1)
            dest = int(em.group(2))
            if dest >= num_states:
                raise HoaError(f"edge destination {dest} out of range", i + 1)
            acc = tuple(int(t) for t in em.group(3).split()) if em.group(3) else ()
            transitions[current].append(Transition(label, dest, acc))
            continue
        raise HoaError(f"unparseable body line {line!r}", i + 1)
    if not saw_end:
        raise HoaError("missing --END-- delimiter")

    return Automaton(
        num_states=num_states,
        start=start,
        aps=aps,
        transitions=tuple(tuple(edges) for edges in transitions),
        acceptance=acceptance if acceptance is not None else "0 t",
        acc_name=acc_name,
        properties=tuple(properties),
        name=name,
        state_acc=tuple(state_acc),
        extra_headers=tuple(extra_headers),
    )


def _safe_alias_names(a: Automaton) -> Optional[list[str]]:
    """AP names usable as bare label leaves, or None if any would misparse."""
    names = []
    for ap in a.aps:
        if ap.name in ("t", "f") or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", ap.name):
            return None
        names.append(ap.name)
    return names


def render_hoa(a: Automaton, label_style: str = "index") -> str:
    """Render canonical HOA text: one edge per line, minimal parentheses.

    `label_style` is "index" (canonical), "name" (bare AP names, only
    valid when every name is a safe identifier), or "auto" (names when
    safe, indices otherwise). parse_hoa(render_hoa(a)) is structurally
    equal to `a` for every style.
    """
    names: Optional[Sequence[str]] = None
    if label_style == "name":
        names = _safe_alias_names(a)
        if names is None:
            raise HoaError("AP names are not safe identifiers; cannot render name-style labels")
    elif label_style == "auto":
        names = _safe_alias_names(a)
    elif label_style != "index":
        raise ValueError(f"unknown label_style {label_style!r}")

    out = ["HOA: v1"]
    if a.name is not None:
        out.append(f'name: "{a.name}"')
    out.append(f"States: {a.num_states}")
    out.append(f"Start: {a.start}")
    out.append("AP: " + " ".join([str(len(a.aps))] + [f'"{ap.name}"' for ap in a.aps]))
    if a.acc_name is not None:
        out.append(f"acc-name: {a.acc_name}")
    out.append(f"Acceptance: {a.acceptance}")
    if a.properties:
        out.append("properties: " + " ".join(a.properties))
    outputs = [ap.index for ap in a.output_aps]
    if outputs:
        out.append("controllable-AP: " + " ".join(str(i) for i in outputs))
    out.extend(a.extra_headers)
    out.append("--BODY--")
    for state in range(a.num_states):
        acc = a.state_acc[state] if state < len(a.state_acc) else ()
        suffix = " {" + " ".join(str(x) for x in acc) + "}" if acc else ""
        out.append(f"State: {state}{suffix}")
        for tr in a.transitions[state]:
            esuffix = " {" + " ".join(str(x) for x in tr.acc_sets) + "}" if tr.acc_sets else ""
            out.append(f"[{tr.label.render(names)}] {tr.dest}{esuffix}")
    out.append("--END--")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# Semantics helpers

ENUMERATION_BOUND = 24
VALIDATION_BOUND = 16


def eval_label(expr: LabelExpr, assignment: Mapping[str, bool], aps: Sequence[AtomicProposition]) -> bool:
    """Evaluate a label under a full name-keyed assignment."""
    mask = 0
    for ap in aps:
        if ap.name not in assignment:
            raise MissingApError(ap.name)
        if assignment[ap.name]:
            mask |= 1 << ap.index
    return expr.evaluate(mask)


def _iter_masks_msb_first(n: int) -> Iterator[int]:
    """All assignments over n APs, ascending when read as (AP0 .. APn-1) binary."""
    for ordinal in range(1 << n):
        mask = 0
        for i in range(n):
            if (ordinal >> (n - 1 - i)) & 1:
                mask |= 1 << i
        yield mask


def satisfying_masks(expr: LabelExpr, n_aps: int) -> list[int]:
    """Bitmasks of all satisfying full assignments, in ascending vector order."""
    if n_aps > ENUMERATION_BOUND:
        raise ValueError(f"enumeration bound exceeded: {n_aps} APs > {ENUMERATION_BOUND}")
    return [m for m in _iter_masks_msb_first(n_aps) if expr.evaluate(m)]


def satisfying_assignments(
    expr: LabelExpr, aps: Sequence[AtomicProposition]
) -> list[dict[str, bool]]:
    """All full assignments satisfying `expr`, ascending in vector order."""
    names = [ap.name for ap in aps]
    return [
        {name: bool((m >> i) & 1) for i, name in enumerate(names)}
        for m in satisfying_masks(expr, len(aps))
    ]


@dataclass
class DeterminismReport:
    """Full-assignment determinism audit.

    `conflicts` holds (state, assignment, edge indices) where two or more
    outgoing labels are satisfied at once; `holes` holds (state,
    assignment) with no satisfied label. An empty report means the
    automaton resolves every conceivable assignment uniquely; Mealy
    controllers routinely have holes (assignments whose output part the
    controller would never emit) without being faulty.
    """

    conflicts: list[tuple[int, dict[str, bool], tuple[int, ...]]] = field(default_factory=list)
    holes: list[tuple[int, dict[str, bool]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.conflicts and not self.holes


def validate_deterministic(a: Automaton) -> DeterminismReport:
    """Enumerate every (state, full assignment) and count satisfied labels."""
    if len(a.aps) > VALIDATION_BOUND:
        raise ValueError(f"validation bound exceeded: {len(a.aps)} APs > {VALIDATION_BOUND}")
    report = DeterminismReport()
    for state, edges in enumerate(a.transitions):
        for mask in _iter_masks_msb_first(len(a.aps)):
            hits = tuple(i for i, tr in enumerate(edges) if tr.label.evaluate(mask))
            if len(hits) >= 2:
                report.conflicts.append((state, a.mask_to_assignment(mask), hits))
            elif not hits:
                report.holes.append((state, a.mask_to_assignment(mask)))
    return report
