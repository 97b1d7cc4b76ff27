from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import expected as X
from conftest import W, show, trace
from uncover import generate as G
from uncover import scc
from uncover.executions import Test, evaluate
from uncover.oracle import expected_abstraction, feasible_evaluation, oracle_coherent, oracle_feasible

V = G.SMALL_VARIABLES
F = G.SMALL_FUNCTIONS
LETTERS = G.alphabet(V, F)


def test_initial_states():
    q = scc.initial_state(("x", "y"))
    assert q.classes() == [("x",), ("y",)]
    assert not q.diseq and not q.funcs
    assert scc.initial_state(("x",)).classes() == [("x",)]
    g = scc.initial_state(("x", "y"), ("$g1",))
    assert not g.defined("$g1") and g.defined("x")


def test_congruence_propagates_through_the_function_table():
    rep = scc.run(W("y := f(x); w := f(z); assume(x = z)"), ("x", "y", "z", "w"))
    assert sorted(rep.final.classes()) == [("x", "z"), ("y", "w")]


def test_contradiction_rejects_at_second_letter():
    rep = scc.run(W("assume(x = y); assume(x != y)"), ("x", "y"))
    assert rep.final is scc.REJECT and rep.reject_position == 1


def test_self_assignment_is_identity():
    q = scc.run(W("y := f(x)"), ("x", "y")).final
    assert scc.step(q, W("x := x")[0]) == q


def test_rho1_final_state():
    t = trace("rho1")
    rep = scc.run(t.letters, t.header.variables)
    assert rep.final.dump() == X.RHO1_FINAL_DUMP
    assert {frozenset(c) for c in rep.final.classes()} == {frozenset(c) for c in X.RHO1_FINAL_CLASSES}


def test_pi_prime_is_accepted_although_not_coherent():
    assert scc.accepts(W(X.PI_PRIME), ("x", "y", "z"))


def test_reject_is_absorbing():
    q = scc.REJECT
    for a in LETTERS[:10]:
        assert scc.step(q, a) is scc.REJECT


def test_dump_format():
    q = scc.run(W("y := f(x); w := f(z); assume(x = z); assume(x != y)"), ("x", "y", "z", "w")).final
    assert q.dump() == "{x,z} {y,w} | d: ({x,z},{y,w}) | P: f(⟨x⟩)=y"


def test_states_are_canonical():
    # reaching the same abstraction in different ways gives equal values
    a = scc.run(W("x := y; z := f(x)"), V).final
    b = scc.run(W("z := f(y); x := y"), V).final
    assert a == b and hash(a) == hash(b) and a.dump() == b.dump()


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_rebuild_is_idempotent(seed):
    rng = random.Random(seed)
    q = scc.initial_state(V)
    for _ in range(rng.randint(0, 8)):
        r = scc.step(q, rng.choice(LETTERS))
        if r is scc.REJECT:
            break
        q = r
    again = scc.rebuild(q.vocab, q.cls, q.diseq, q.funcs).state
    assert again == q and again.dump() == q.dump()
    assert scc.state_from_abstraction(scc.abstraction(q), V) == q


def test_ghost_letters_write_ghosts():
    rep = scc.run(W("y := n(x); $g1 := y; y := n(y)", ("$g1",)), ("x", "y"), ("$g1",))
    q = rep.final
    assert q.defined("$g1")
    assert ("n", (q.rep("x"),), q.rep("$g1")) in q.funcs


def test_reading_an_undefined_ghost_is_an_error():
    from uncover.executions import Ghost, UndefinedValue

    q = scc.initial_state(("x",), ("$g1", "$g2"))
    with pytest.raises(UndefinedValue):
        scc.step(q, Ghost("$g1", "$g2"))


# --------------------------------------------------------------------------
# agreement with the term model on coherent executions


def _coherent_sample(seed: int, count: int, max_len: int = 10):
    return [
        w
        for w in G.random_words(LETTERS, count, seed=seed, min_len=1, max_len=max_len)
        if oracle_coherent(w, V, arities=F).coherent
    ]


def test_consistency_invariant_on_coherent_feasible_executions():
    """Classes, disequalities and the function table coincide with the
    term model's view of the variables after every coherent feasible
    execution (seeded sample, lengths 1..10)."""
    bad = []
    for w in _coherent_sample(11, 6000):
        ev = evaluate(w, V, arities=F)
        if not feasible_evaluation(ev):
            continue
        q = scc.run(w, V).final
        if q is scc.REJECT or scc.abstraction(q) != expected_abstraction(ev, V, F):
            bad.append(show(w))
    assert not bad, f"{len(bad)} inconsistent states, e.g. {bad[:3]}"


def test_equality_check_agrees_with_the_term_model():
    """On coherent rho . assume(x = y), the run rejects iff the term model
    says the execution is infeasible (seeded sample)."""
    rng = random.Random(5)
    eqs = [a for a in LETTERS if isinstance(a, Test) and a.equal]
    bad = []
    for w in _coherent_sample(12, 6000, max_len=7):
        full = w + (rng.choice(eqs),)
        if not oracle_coherent(full, V, arities=F).coherent:
            continue
        if scc.accepts(full, V) != oracle_feasible(full, V, arities=F):
            bad.append(show(full))
    assert not bad, f"{len(bad)} disagreements, e.g. {bad[:3]}"


def test_known_counterexample_through_a_dropped_argument():
    """Documented finding: a coherent, infeasible execution that the
    construction accepts.  The congruence f(x,z) = f(f(x,z),z) needs the
    dropped initial value of z, which the state no longer mentions."""
    w = W(X.DROPPED_ARGUMENT)
    assert oracle_coherent(w, V, arities=F).coherent
    assert not oracle_feasible(w, V, arities=F)
    assert scc.accepts(w, V)
    # dropping the disequality shows the same loss as a missing equality
    w2 = W("y := f(x, z); z := f(y, z); assume(x = y)")
    ev = evaluate(w2, V, arities=F)
    expected = expected_abstraction(ev, V, F)
    got = scc.abstraction(scc.run(w2, V).final)
    assert frozenset({"x", "y", "z"}) in expected.classes
    assert frozenset({"x", "y"}) in got.classes and frozenset({"z"}) in got.classes


def test_local_merge_reports_reflexive_disequality():
    q = scc.run(W("y := n(x); z := n(y); assume(y != z)"), V).final
    r = scc.local_merge(q, "x", "y")
    assert r.reflexive
