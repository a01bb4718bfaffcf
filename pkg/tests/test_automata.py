import itertools
import random

import pytest

from hoabench.automata import (
    And,
    ApKind,
    Const,
    HoaError,
    Leaf,
    Not,
    eval_label,
    parse_hoa,
    parse_label,
    render_hoa,
    satisfying_assignments,
    satisfying_masks,
    validate_deterministic,
)

from support import eval_by_python, load_fixture, load_fixture_text, random_expr

MINIMAL = 'HOA: v1\nStates: 1\nStart: 0\nAP: 0\nAcceptance: 0 t\n--BODY--\nState: 0\n[t] 0\n--END--'


class TestParseHoa:
    def test_mod3_dfa(self):
        a = load_fixture("mod3")
        assert a.num_states == 3
        assert a.start == 0
        assert a.ap_names == ("0", "1")
        # State 0 moves to 0 on AP "0" and to 1 on AP "1".
        assert [(tr.label, tr.dest) for tr in a.transitions[0]] == [(Leaf(0), 0), (Leaf(1), 1)]
        assert a.acceptance == "1 Fin(0)"
        assert a.acc_name == "Fin"
        assert a.state_acc[0] == (0,)
        assert a.name == "Binary mod 3 DFA"

    def test_minimal_self_loop(self):
        a = parse_hoa(MINIMAL)
        assert a.num_states == 1
        assert a.aps == ()
        assert a.transitions[0] == (a.transitions[0][0],)
        assert a.transitions[0][0].label == Const(True)
        assert a.transitions[0][0].dest == 0

    def test_controllable_ap_partitions_kinds(self):
        a = load_fixture("grant")
        assert a.aps[0].name == "g" and a.aps[0].kind is ApKind.OUTPUT
        assert a.aps[1].name == "r" and a.aps[1].kind is ApKind.INPUT
        assert a.num_states == 6
        assert a.claims_deterministic()

    def test_missing_controllable_header_means_all_inputs(self):
        a = load_fixture("mod3")
        assert all(ap.kind is ApKind.INPUT for ap in a.aps)
        assert a.output_aps == ()

    def test_unknown_headers_preserved(self):
        text = MINIMAL.replace("Acceptance: 0 t\n", "Acceptance: 0 t\ntool: xyz 1.2\n")
        a = parse_hoa(text)
        assert a.extra_headers == ("tool: xyz 1.2",)
        assert "tool: xyz 1.2" in render_hoa(a)

    def test_crlf_tolerated(self):
        a = parse_hoa(MINIMAL.replace("\n", "\r\n"))
        assert a.num_states == 1

    @pytest.mark.parametrize(
        "mutation, message",
        [
            (lambda s: s.replace("--BODY--\n", ""), "BODY"),
            (lambda s: s.replace("--END--", ""), "END"),
            (lambda s: s.replace("[t] 0", "[t] 4"), "out of range"),
            (lambda s: s.replace("AP: 0", 'AP: 2 "a"'), "declares 2"),
            (lambda s: s.replace("[t] 0", "[q] 0"), "unknown AP"),
            (lambda s: s.replace("[t] 0", "[t|] 0"), "label"),
        ],
    )
    def test_errors(self, mutation, message):
        with pytest.raises(HoaError, match=message):
            parse_hoa(mutation(MINIMAL))

    def test_error_carries_line_number(self):
        try:
            parse_hoa(MINIMAL.replace("[t] 0", "[&t] 0"))
        except HoaError as exc:
            assert exc.line == 8
        else:
            pytest.fail("expected HoaError")


class TestRenderHoa:
    @pytest.mark.parametrize("name", ["grant", "mod3", "arbiter2", "latch", "toggle", "counter8"])
    def test_parse_render_parse_is_parse(self, name):
        first = parse_hoa(load_fixture_text(name))
        second = parse_hoa(render_hoa(first))
        assert first == second

    def test_render_is_canonical_fixed_point(self):
        a = parse_hoa(MINIMAL)
        once = render_hoa(a)
        assert render_hoa(parse_hoa(once)) == once

    def test_grant_rerendered_keeps_transition_count(self):
        a = load_fixture("grant")
        assert parse_hoa(render_hoa(a)).transition_count == a.transition_count == 8

    def test_name_style_rejects_unsafe_names(self):
        a = load_fixture("mod3")  # AP names "0"/"1" are not identifiers
        with pytest.raises(HoaError):
            render_hoa(a, label_style="name")
        assert "[0] 0" in render_hoa(a, label_style="auto")

    def test_name_style_round_trips(self):
        a = load_fixture("grant")
        text = render_hoa(a, label_style="name")
        assert "[!g]" in text
        assert parse_hoa(text) == a


class TestEvalLabel:
    def test_not_g_and_not_r(self):
        a = load_fixture("grant")
        expr = parse_label("!g&!r", a.ap_names)
        assert eval_label(expr, {"g": False, "r": False}, a.aps) is True

    def test_g_and_r_partial_true(self):
        a = load_fixture("grant")
        expr = parse_label("g&r", a.ap_names)
        assert eval_label(expr, {"g": True, "r": False}, a.aps) is False

    def test_missing_ap_raises(self):
        a = load_fixture("grant")
        expr = parse_label("g", a.ap_names)
        with pytest.raises(KeyError):
            eval_label(expr, {"g": True}, a.aps)

    def test_agrees_with_truth_table_oracle(self):
        rng = random.Random(1234)
        names = ["a", "b", "c"]
        for _ in range(200):
            expr = random_expr(rng, 3)
            for values in itertools.product([False, True], repeat=3):
                assignment = dict(zip(names, values))
                mask = sum(1 << i for i, v in enumerate(values) if v)
                assert expr.evaluate(mask) == eval_by_python(expr, names, assignment)


class TestSatisfyingAssignments:
    def test_not_g_over_two_aps(self):
        a = load_fixture("grant")
        expr = parse_label("!g", a.ap_names)
        assert satisfying_assignments(expr, a.aps) == [
            {"g": False, "r": False},
            {"g": False, "r": True},
        ]

    def test_tautology(self):
        a = load_fixture("grant")
        assert len(satisfying_assignments(Const(True), a.aps)) == 4

    def test_count_matches_truth_table_oracle(self):
        rng = random.Random(99)
        names = ["a", "b", "c", "d"]
        for _ in range(100):
            expr = random_expr(rng, 4)
            expected = sum(
                eval_by_python(expr, names, dict(zip(names, values)))
                for values in itertools.product([False, True], repeat=4)
            )
            masks = satisfying_masks(expr, 4)
            assert len(masks) == expected
            for mask in masks:
                assert expr.evaluate(mask)

    def test_enumeration_bound(self):
        with pytest.raises(ValueError, match="bound"):
            satisfying_masks(Const(True), 25)


class TestValidateDeterministic:
    def test_overlapping_labels_conflict(self):
        text = (
            'HOA: v1\nStates: 1\nStart: 0\nAP: 1 "g"\nAcceptance: 0 t\n'
            "--BODY--\nState: 0\n[g] 0\n[t] 0\n--END--"
        )
        report = validate_deterministic(parse_hoa(text))
        assert [(s, assign) for s, assign, _ in report.conflicts] == [(0, {"g": True})]

    def test_grant_state3_hole(self):
        report = validate_deterministic(load_fixture("grant"))
        assert (3, {"g": True, "r": False}) in report.holes

    @pytest.mark.parametrize("name", ["grant", "arbiter2", "latch", "toggle", "counter8"])
    def test_deterministic_fixtures_have_no_conflicts(self, name):
        a = load_fixture(name)
        assert a.claims_deterministic()
        assert validate_deterministic(a).conflicts == []

    def test_mod3_both_bits_true_is_a_conflict(self):
        # The mod-3 DFA reads its APs as one-hot letters; under full
        # Boolean-assignment semantics the both-true assignment satisfies
        # two edges per state, and the audit reports that faithfully.
        report = validate_deterministic(load_fixture("mod3"))
        assert {s for s, assign, _ in report.conflicts if assign == {"0": True, "1": True}} == {0, 1, 2}
        assert all(assign == {"0": True, "1": True} for _, assign, _ in report.conflicts)


class TestLabelRendering:
    def test_minimal_parentheses(self):
        expr = And(Not(Leaf(0)), Not(Leaf(1)))
        assert expr.render(["g", "r"]) == "!g&!r"

    def test_or_inside_and_is_parenthesised(self):
        expr = And(parse_label("a|b", ["a", "b"]), Leaf(0))
        assert expr.render(["a", "b"]) == "(a|b)&a"

    def test_random_exprs_round_trip_through_render(self):
        rng = random.Random(7)
        names = ["a", "b", "c", "d"]
        for _ in range(300):
            expr = random_expr(rng, 4)
            for text in (expr.render(), expr.render(names)):
                again = parse_label(text, names)
                for mask in range(16):
                    assert again.evaluate(mask) == expr.evaluate(mask)
