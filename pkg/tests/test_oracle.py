from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

import expected as X
from conftest import W, trace
from uncover import generate as G
from uncover.executions import evaluate
from uncover.oracle import (
    EARLY,
    MEMOIZING,
    expected_abstraction,
    oracle_coherent,
    oracle_coherent_naive,
    oracle_feasible,
)
from uncover.terms import congruence_closure

V = G.SMALL_VARIABLES
F = G.SMALL_FUNCTIONS
LETTERS = G.alphabet(V, F)


def test_contradictory_assumes_are_infeasible():
    assert not oracle_feasible(W("assume(x = y); assume(x != y)"), ("x", "y"))


def test_empty_execution_is_feasible():
    assert oracle_feasible((), ("x",))


def test_rho1_is_feasible_with_the_expected_congruence():
    t = trace("rho1")
    assert oracle_feasible(t.letters, t.header.variables)
    ev = evaluate(t.letters, t.header.variables)
    cc = congruence_closure(ev.arena, ev.terms, ev.alpha_pairs())
    nontrivial = [{ev.arena.render(u) for u in c} for c in cc.classes() if len(c) > 1]
    assert sorted(nontrivial, key=sorted) == sorted(X.RHO1_NONTRIVIAL_CLASSES, key=sorted)
    # the four disequalities hold in the term model
    for a, b in ev.beta_pairs():
        assert not cc.same(a, b)


def test_pi_prime_is_not_memoizing():
    res = oracle_coherent(W(X.PI_PRIME), ("x", "y", "z"))
    assert not res.coherent
    assert res.kind == MEMOIZING
    assert res.position == X.PI_PRIME_POSITION


def test_sigma_violates_early_assumes():
    res = oracle_coherent(W(X.SIGMA), ("x", "y", "z"))
    assert (res.coherent, res.kind, res.position) == (False, EARLY, X.SIGMA_POSITION)


def test_pi_with_auxiliary_variable_is_coherent():
    t = trace("pi")
    assert oracle_coherent(t.letters, t.header.variables).coherent


def test_early_assume_check_applies_even_to_equal_terms():
    # x and y are already equal, but a superterm of x was dropped
    word = W("assume(x = y); z := f(x); z := y; assume(x = y)")
    assert oracle_coherent(word, V).kind == EARLY


def test_ghost_keeps_term_alive():
    word = W("z := f(x); $g1 := z; z := f(z); assume(x = y)", ("$g1",))
    assert oracle_coherent(word, V, ghosts=("$g1",)).coherent


def test_recursive_memoizing_is_per_frame():
    outs = {"m": ("y",)}
    # the callee recomputes n(x), which only the caller's z holds
    word = W("z := n(x); call m; y := n(x); <w> := return")
    assert oracle_coherent(word, ("x", "y", "z", "w"), outs=outs).coherent
    # but recomputing inside the callee after dropping it is not memoizing
    word = W("call m; y := n(x); y := x; y := n(x); <w> := return")
    assert oracle_coherent(word, ("x", "y", "z", "w"), outs=outs).kind == MEMOIZING


def random_word(seed: int, max_len: int = 8):
    rng = random.Random(seed)
    tests = [a for a in LETTERS if a.__class__.__name__ == "Test"]
    n = rng.randint(0, max_len)
    return tuple(rng.choice(tests) if rng.random() < 0.35 else rng.choice(LETTERS) for _ in range(n))


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 10**9))
def test_incremental_and_naive_coherence_oracles_agree(seed):
    w = random_word(seed)
    a = oracle_coherent(w, V, arities=F)
    b = oracle_coherent_naive(w, V, arities=F)
    assert (a.coherent, a.kind, a.position) == (b.coherent, b.kind, b.position)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_feasibility_is_prefix_antitone(seed):
    w = random_word(seed)
    if oracle_feasible(w, V, arities=F):
        for i in range(len(w)):
            assert oracle_feasible(w[:i], V, arities=F)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_coherence_is_prefix_closed(seed):
    w = random_word(seed)
    res = oracle_coherent(w, V, arities=F)
    if res.coherent:
        for i in range(len(w)):
            assert oracle_coherent(w[:i], V, arities=F).coherent
    else:
        # the violation is at the first non-coherent prefix
        assert oracle_coherent(w[: res.position], V, arities=F).coherent
        assert not oracle_coherent(w[: res.position + 1], V, arities=F).coherent


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 4))
def test_initial_model_equalities_hold_in_every_model(seed, extra):
    """Quotienting the terms by a coarser congruence gives a model of
    alpha; every equality of the initial model must hold there."""
    w = random_word(seed)
    if not oracle_feasible(w, V, arities=F):
        return
    ev = evaluate(w, V, arities=F)
    terms = sorted(ev.terms)
    rng = random.Random(seed)
    more = [(rng.choice(terms), rng.choice(terms)) for _ in range(extra)]
    initial = congruence_closure(ev.arena, terms, ev.alpha_pairs())
    model = congruence_closure(ev.arena, terms, ev.alpha_pairs() + more)
    for a in terms:
        for b in terms:
            if initial.same(a, b):
                assert model.same(a, b)


def test_expected_abstraction_of_rho1():
    t = trace("rho1")
    ev = evaluate(t.letters, t.header.variables)
    ab = expected_abstraction(ev, t.header.variables, t.header.arity)
    assert {frozenset(c) for c in ab.classes} == {frozenset(c) for c in X.RHO1_FINAL_CLASSES}
    r, x = frozenset({"r"}), frozenset({"x", "y"})
    assert ("n", (r,), x) in ab.funcs
    assert frozenset({x, r}) in ab.diseq
