"""Tests for the temporal logic core: parsing, lasso evaluation, automata."""

from __future__ import annotations

import pytest

import taxgames as tg
from taxgames.ltl import FALSE, TRUE

from helpers import oracle_eval

p, q = tg.Var("p"), tg.Var("q")


def trace(prefix, cycle):
    return tg.LabelTrace(
        prefix=tuple(frozenset(x) for x in prefix),
        cycle=tuple(frozenset(x) for x in cycle),
    )


# ======================== Parsing ========================


class TestParsing:
    def test_atoms(self):
        assert tg.parse_ltl("p") == p
        assert tg.parse_ltl("true") == TRUE
        assert tg.parse_ltl("false") == FALSE

    def test_unary_chain(self):
        assert tg.parse_ltl("! X p") == tg.Not(tg.Next(p))

    def test_until_right_associative(self):
        assert tg.parse_ltl("p U q U p") == tg.Until(p, tg.Until(q, p))

    def test_or_binds_looser_than_until(self):
        assert tg.parse_ltl("p U q | q") == tg.Or(tg.Until(p, q), q)

    def test_and_desugars(self):
        assert tg.parse_ltl("p & q") == tg.and_(p, q)

    def test_implication_right_associative(self):
        f = tg.parse_ltl("p -> q -> p")
        assert f == tg.implies(p, tg.implies(q, p))

    def test_iff(self):
        assert tg.parse_ltl("p <-> q") == tg.iff(p, q)

    def test_eventually_always(self):
        assert tg.parse_ltl("F p") == tg.eventually(p)
        assert tg.parse_ltl("G p") == tg.always(p)
        assert tg.parse_ltl("<> p") == tg.eventually(p)
        assert tg.parse_ltl("[] p") == tg.always(p)

    def test_parentheses(self):
        assert tg.parse_ltl("p U (q | p)") == tg.Until(p, tg.Or(q, p))

    def test_vocabulary_enforced(self):
        with pytest.raises(tg.UnknownVariableError):
            tg.parse_ltl("r", vocabulary=("p", "q"))
        assert tg.parse_ltl("p", vocabulary=("p",)) == p

    def test_reserved_words_rejected_as_names(self):
        with pytest.raises(tg.LtlSyntaxError):
            tg.parse_ltl("U")

    def test_trailing_garbage(self):
        with pytest.raises(tg.LtlSyntaxError):
            tg.parse_ltl("p q")

    def test_empty(self):
        with pytest.raises(tg.LtlSyntaxError):
            tg.parse_ltl("")

    def test_to_text_round_trip(self):
        samples = [
            "p", "! p", "p U q", "X (p | q)", "p & q", "G F p",
            "p -> q", "p <-> q", "! (p U ! q)", "F (p & X q)",
        ]
        for text in samples:
            f = tg.parse_ltl(text)
            assert tg.parse_ltl(tg.to_text(f)) == f

    def test_variables(self):
        assert tg.variables(tg.parse_ltl("p U (q & X p)")) == {"p", "q"}

    def test_subformulas_deduplicated(self):
        f = tg.Or(p, p)
        subs = tg.subformulas(f)
        assert subs.count(p) == 1 and f in subs


# ======================== Lasso evaluation ========================


class TestEvalOnLasso:
    def test_var_first_position(self):
        assert tg.eval_on_lasso(p, trace([], [{"p"}]))
        assert not tg.eval_on_lasso(p, trace([{}], [{"p"}]))

    def test_next_wraps(self):
        # single-letter cycle: X p is p
        assert tg.eval_on_lasso(tg.Next(p), trace([], [{"p"}]))
        assert not tg.eval_on_lasso(tg.Next(p), trace([{"p"}], [{}]))

    def test_until_on_cycle(self):
        f = tg.parse_ltl("p U q")
        assert tg.eval_on_lasso(f, trace([{"p"}], [{"q"}]))
        assert not tg.eval_on_lasso(f, trace([{"p"}], [{}]))

    def test_always_eventually(self):
        f = tg.parse_ltl("G F p")
        assert tg.eval_on_lasso(f, trace([{}], [{}, {"p"}]))
        assert not tg.eval_on_lasso(f, trace([{"p"}], [{}]))

    def test_eventually_always(self):
        f = tg.parse_ltl("F G p")
        assert tg.eval_on_lasso(f, trace([{}], [{"p"}]))
        assert not tg.eval_on_lasso(f, trace([{"p"}], [{}, {"p"}]))

    def test_prefix_independent_of_cycle_rotation_for_gf(self):
        f = tg.parse_ltl("G F (p & q)")
        assert tg.eval_on_lasso(f, trace([], [{"p", "q"}, {}]))
        assert tg.eval_on_lasso(f, trace([], [{}, {"p", "q"}]))

    def test_matches_oracle_on_handmade_suite(self):
        formulas = [
            "p", "! p", "X p", "X X q", "p U q", "q U p",
            "F p", "G p", "G F p", "F G q", "p U (q U p)",
            "! (p U q)", "G (p -> X q)", "F (p & X q)", "p <-> X p",
        ]
        traces = [
            trace([], [{}]),
            trace([], [{"p"}]),
            trace([{"p"}], [{}]),
            trace([{"p"}, {"q"}], [{"p", "q"}]),
            trace([], [{"p"}, {}]),
            trace([{}], [{"q"}, {"p"}, {}]),
            trace([{"q"}, {}], [{}, {"p"}]),
        ]
        for text in formulas:
            f = tg.parse_ltl(text)
            for t in traces:
                assert tg.eval_on_lasso(f, t) == oracle_eval(f, t), (text, t)


# ======================== Büchi translation ========================


class TestBuchi:
    def test_simple_formula_accepts_matching_lasso(self):
        auto = tg.to_buchi(tg.parse_ltl("G F p"), vocabulary=("p",))
        assert tg.buchi_accepts_lasso(auto, trace([], [{"p"}]))
        assert not tg.buchi_accepts_lasso(auto, trace([{"p"}], [{}]))

    def test_automaton_total_via_sink(self):
        auto = tg.to_buchi(p, vocabulary=("p", "q"))
        for state in range(len(auto)):
            for letter in [frozenset(), frozenset({"p"}), frozenset({"q"})]:
                assert auto.successors(state, letter)

    def test_sink_rejects(self):
        auto = tg.to_buchi(p, vocabulary=("p",))
        assert not tg.buchi_accepts_lasso(auto, trace([], [{}]))

    def test_until_agreement_small(self):
        f = tg.parse_ltl("p U q")
        auto = tg.to_buchi(f, vocabulary=("p", "q"))
        letters = [frozenset(), frozenset({"p"}), frozenset({"q"}),
                   frozenset({"p", "q"})]
        for a in letters:
            for b in letters:
                t = tg.LabelTrace(prefix=(a,), cycle=(b,))
                assert tg.buchi_accepts_lasso(auto, t) == tg.eval_on_lasso(f, t)

    def test_state_cap(self):
        f = tg.parse_ltl("G F p & G F q")
        with pytest.raises(tg.ResourceLimitError):
            tg.to_buchi(f, state_cap=1)
