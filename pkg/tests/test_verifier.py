from __future__ import annotations

import pytest

from conftest import W, program
from uncover import syntax as S
from uncover.coherence import program_is_coherent
from uncover.executions import evaluate, exec_nfa
from uncover.oracle import oracle_coherent, oracle_feasible
from uncover.search import BudgetExceeded
from uncover.terms import congruence_closure
from uncover.verifier import (
    NOT_COHERENT,
    VERIFIED,
    VIOLATED,
    check_counterexample,
    prepare,
    shortest_feasible_execution,
    verify,
)


def parse(text: str) -> S.Program:
    return S.parse_program(text, "<test>")


def test_congruent_equalities_verify():
    assert verify(program("congruent_eq")).kind == VERIFIED


def test_false_post_on_skip_is_violated_by_the_empty_execution():
    v = verify(program("skip_false"))
    assert v.kind == VIOLATED and v.counterexample == []
    assert check_counterexample(program("skip_false"), v)


def test_p3_instrumented_verifies():
    assert verify(program("p3_instrumented")).kind == VERIFIED


def test_p3_wrong_post_is_violated_with_a_real_counterexample():
    p = program("p3_wrong_post")
    v = verify(p)
    assert v.kind == VIOLATED
    assert check_counterexample(p, v)
    _, lowered = prepare(p)
    assert oracle_feasible(v.counterexample, lowered.variables)


def test_non_coherent_program_is_reported():
    v = verify(program("p2_instrumented"))
    assert v.kind == NOT_COHERENT
    assert v.witness and not oracle_coherent(v.witness, program("p2_instrumented").variables).coherent


def test_lowering_that_breaks_coherence_is_explained():
    p = parse("vars x, y, z; funs f/1; program { z := f(x); z := y; } post: x != y;")
    assert program_is_coherent(p).coherent
    v = verify(p)
    assert v.kind == NOT_COHERENT
    assert "postcondition" in v.detail and "k-coherence" in v.detail


def test_explicit_post_overrides_the_program_post():
    p = program("congruent_eq")
    assert verify(p, S.parse_formula("z = x", p)).kind == VIOLATED
    assert verify(p, S.Const(True)).kind == VERIFIED


def test_shortest_feasible_execution():
    assert shortest_feasible_execution(parse("vars x; program { assume(x != x); }")) is None
    got = shortest_feasible_execution(parse("vars x; program { while (x != x) { skip } }"))
    assert got == list(W("assume(x = x)"))


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        verify(program("p3_instrumented"), budget=3)


# --------------------------------------------------------------------------
# completeness on small loop-free programs: compare with the term model


def _violated_by_enumeration(p: S.Program) -> bool:
    original, lowered = prepare(p)
    for w in exec_nfa(lowered).words(30):
        if oracle_feasible(w, lowered.variables):
            return True
    return False


DESK = [
    "vars x, y, z; funs f/1; program { y := f(x); z := f(y); } post: y = z;",
    "vars x, y, z; funs f/1; program { assume(x = y); z := f(x); y := f(y); } post: z = y;",
    "vars x, y, z; funs f/2; program { if (x = y) then { z := f(x, y); } else { z := f(y, x); } } post: z != x => x = y;",
    "vars a, b, c, d; funs f/1; program { c := f(a); d := f(b); if (a = b) then { skip } else { assume(c != d); } } post: a = b => c = d;",
    "vars a, b, c; funs g/2; program { c := g(a, b); assume(a = b); b := g(b, a); } post: b = c;",
    "vars a, b, c; funs g/2; program { c := g(a, b); assume(a != c); b := g(b, a); } post: b = c;",
]


@pytest.mark.parametrize("src", DESK)
def test_verdict_matches_exhaustive_term_model(src):
    p = parse(src)
    v = verify(p)
    assert v.kind in (VERIFIED, VIOLATED)
    assert (v.kind == VIOLATED) == _violated_by_enumeration(p)
    if v.kind == VIOLATED:
        assert check_counterexample(p, v)


def test_post_holds_in_the_term_model_of_every_feasible_run_of_p3():
    """Brute force: unroll the loop a few times and evaluate the post."""
    p = S.normalize(program("p3_instrumented"))
    for w in exec_nfa(p).words(40):
        ev = evaluate(w, p.variables)
        cc = congruence_closure(ev.arena, ev.terms, ev.alpha_pairs())
        if any(cc.same(a, b) for a, b in ev.beta_pairs()):
            continue
        assert cc.same(ev.final["z"], ev.final["t"])
