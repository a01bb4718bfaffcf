"""Shared builders for the test suite: fixture loading, random label
expressions, and randomly generated input-deterministic controllers."""

from __future__ import annotations

import random
import re
from pathlib import Path

from hoabench.automata import (
    And,
    ApKind,
    AtomicProposition,
    Automaton,
    Const,
    Leaf,
    LabelExpr,
    Not,
    Or,
    Transition,
    parse_hoa,
)

FIXTURES = Path(__file__).parent.parent / "fixtures"
TEST_DATA = Path(__file__).parent / "data"

FIXTURE_NAMES = ("arbiter2", "counter8", "grant", "latch", "mod3", "toggle")


def load_fixture(name: str) -> Automaton:
    return parse_hoa((FIXTURES / f"{name}.hoa").read_text(encoding="utf-8"))


def load_fixture_text(name: str) -> str:
    return (FIXTURES / f"{name}.hoa").read_text(encoding="utf-8")


def eval_by_python(expr: LabelExpr, names: list[str], assignment: dict[str, bool]) -> bool:
    """Independent label-evaluation oracle via Python's own expression
    evaluator: the rendered text is translated to and/or/not syntax.
    Caller-supplied names must not collide with the t/f constants."""
    text = expr.render(names)
    text = text.replace("&", " and ").replace("|", " or ").replace("!", " not ")
    text = re.sub(r"\bt\b", "True", text)
    text = re.sub(r"\bf\b", "False", text)
    return bool(eval(text, {"__builtins__": {}}, dict(assignment)))


def random_expr(rng: random.Random, n_aps: int, depth: int = 3) -> LabelExpr:
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.1:
            return Const(rng.random() < 0.5)
        return Leaf(rng.randrange(n_aps))
    op = rng.choice(("and", "or", "not"))
    if op == "not":
        return Not(random_expr(rng, n_aps, depth - 1))
    left = random_expr(rng, n_aps, depth - 1)
    right = random_expr(rng, n_aps, depth - 1)
    return And(left, right) if op == "and" else Or(left, right)


def conj_label(n_aps: int, true_bits: set[int]) -> LabelExpr:
    """Full conjunction pinning every AP index to a fixed value."""
    expr: LabelExpr = None
    for i in range(n_aps):
        leaf: LabelExpr = Leaf(i) if i in true_bits else Not(Leaf(i))
        expr = leaf if expr is None else And(expr, leaf)
    return expr if expr is not None else Const(True)


def random_controller(
    rng: random.Random,
    max_states: int = 8,
    n_inputs: int = 2,
    n_outputs: int = 1,
) -> Automaton:
    """A random input-deterministic Mealy controller.

    Outputs occupy the low AP indices (mirroring controllable-AP
    conventions); every (state, input assignment) gets exactly one edge
    whose label pins all APs, so resolution is total and unique.
    """
    n_states = rng.randint(2, max_states)
    aps = tuple(
        [AtomicProposition(i, f"o{i}", ApKind.OUTPUT) for i in range(n_outputs)]
        + [AtomicProposition(n_outputs + j, f"i{j}", ApKind.INPUT) for j in range(n_inputs)]
    )
    n_aps = n_outputs + n_inputs
    transitions = []
    for _ in range(n_states):
        edges = []
        for input_mask in range(1 << n_inputs):
            output_mask = rng.randrange(1 << n_outputs)
            dest = rng.randrange(n_states)
            true_bits = {i for i in range(n_outputs) if (output_mask >> i) & 1}
            true_bits |= {n_outputs + j for j in range(n_inputs) if (input_mask >> j) & 1}
            edges.append(Transition(conj_label(n_aps, true_bits), dest))
        transitions.append(tuple(edges))
    return Automaton(
        num_states=n_states,
        start=0,
        aps=aps,
        transitions=tuple(transitions),
        properties=("trans-labels", "explicit-labels", "deterministic"),
    )
