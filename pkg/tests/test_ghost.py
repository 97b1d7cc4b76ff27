from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import expected as X
from conftest import W, program
from uncover import generate as G
from uncover import syntax as S
from uncover.coherence import coherent_language_member
from uncover.executions import Ghost, Test
from uncover.ghost import (
    ghost_names,
    ghost_witness_is_valid,
    is_k_coherent,
    kcc_automaton,
    kcc_witness,
    verify_k,
)
from uncover.oracle import oracle_coherent, oracle_feasible
from uncover.verifier import NOT_K_COHERENT, VERIFIED, VIOLATED, prepare, verify

V = G.SMALL_VARIABLES
F = G.SMALL_FUNCTIONS
LETTERS = G.alphabet(V, F)

FLAT = ["p1", "p2", "p3", "p1_instrumented", "p2_instrumented", "p3_instrumented", "congruent_eq", "skip_false"]


def test_ghost_names():
    assert ghost_names(0) == ()
    assert ghost_names(2) == ("$g1", "$g2")
    with pytest.raises(ValueError):
        ghost_names(-1)


@pytest.mark.parametrize("key, value", sorted(X.K_COHERENT.items()))
def test_k_coherence_values(key, value):
    name, k = key
    assert is_k_coherent(program(name), k).k_coherent == value


@pytest.mark.parametrize("name", FLAT)
def test_k_coherence_is_monotone_in_k(name):
    results = [is_k_coherent(program(name), k).k_coherent for k in range(3)]
    for lo, hi in zip(results, results[1:]):
        assert hi or not lo, results


@pytest.mark.parametrize("name", FLAT)
def test_zero_ghosts_is_plain_coherence(name):
    from uncover.coherence import program_is_coherent

    assert is_k_coherent(program(name), 0).k_coherent == program_is_coherent(program(name)).coherent


def test_non_k_coherent_witness_is_minimal_and_genuine():
    res = is_k_coherent(program("p2"), 0)
    assert not res.k_coherent
    assert not oracle_coherent(res.witness, program("p2").variables).coherent
    assert oracle_coherent(res.witness[:-1], program("p2").variables).coherent


@pytest.mark.parametrize("text, k", [(X.PI_PRIME, 1), (X.SIGMA, 1)])
def test_ghost_witness_reconstruction(text, k):
    w = list(W(text))
    assert kcc_witness(w, V, 0) is None
    g = kcc_witness(w, V, k)
    assert g is not None
    assert any(isinstance(a, Ghost) for a in g)
    assert ghost_witness_is_valid(w, g, V, k)


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 10**9))
def test_zero_ghost_automaton_is_the_coherence_automaton(seed):
    rng = random.Random(seed)
    tests = [a for a in LETTERS if isinstance(a, Test)]
    w = tuple(rng.choice(tests) if rng.random() < 0.35 else rng.choice(LETTERS) for _ in range(rng.randint(0, 8)))
    assert kcc_automaton(V, 0).accepts(w) == coherent_language_member(w, V)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_one_ghost_witnesses_are_oracle_coherent(seed):
    rng = random.Random(seed)
    tests = [a for a in LETTERS if isinstance(a, Test)]
    w = [rng.choice(tests) if rng.random() < 0.35 else rng.choice(LETTERS) for _ in range(rng.randint(0, 7))]
    g = kcc_witness(w, V, 1)
    if coherent_language_member(w, V):
        assert g is not None
    if g is not None:
        assert ghost_witness_is_valid(w, g, V, 1)


def test_p2_instrumented_verifies_with_one_ghost():
    assert verify_k(program("p2_instrumented"), k=1).kind == VERIFIED
    assert verify_k(program("p2_instrumented"), k=0).kind == NOT_K_COHERENT


@pytest.mark.parametrize("name", ["congruent_eq", "skip_false", "p3_instrumented", "p3_wrong_post"])
def test_zero_ghosts_agrees_with_plain_verification(name):
    assert verify_k(program(name), k=0).kind == verify(program(name)).kind


def test_violation_comes_with_a_feasible_ghost_witness():
    p = S.parse_program(
        "vars x, y, z; funs n/1;\n"
        "program { y := n(x); y := n(y); x := n(x); assume(x != z); }\n"
        "post: y = z;",
        "<test>",
    )
    v = verify_k(p, k=1)
    assert v.kind == VIOLATED
    _, lowered = prepare(p)
    ghosts = ghost_names(1)
    assert oracle_feasible(v.ghost_witness, lowered.variables, ghosts=ghosts)
    assert oracle_coherent(v.ghost_witness, lowered.variables, ghosts=ghosts).coherent
    assert [a for a in v.ghost_witness if not isinstance(a, Ghost)] == v.counterexample


def test_p2_with_a_wrong_post_is_violated_under_one_ghost():
    p = program("p2_instrumented")
    v = verify_k(p, S.parse_formula("z = x", p), k=1)
    assert v.kind == VIOLATED
    _, lowered = prepare(p)
    assert oracle_feasible(v.ghost_witness, lowered.variables, ghosts=ghost_names(1))
