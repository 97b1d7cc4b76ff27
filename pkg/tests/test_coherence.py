from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import expected as X
from conftest import W, program, trace
from uncover import generate as G
from uncover.coherence import (
    NOT_EARLY,
    NOT_MEMOIZING,
    NotCoherent,
    coh_initial,
    coh_run,
    coh_step,
    coherent_language_member,
    program_is_coherent,
)
from uncover.executions import Test
from uncover.oracle import EARLY, MEMOIZING, oracle_coherent

V = G.SMALL_VARIABLES
F = G.SMALL_FUNCTIONS
LETTERS = G.alphabet(V, F)


def test_pi_prime_breaks_memoization_at_the_last_letter():
    rep = coh_run(W(X.PI_PRIME), V)
    assert rep.final == NOT_MEMOIZING
    assert rep.violation_position == X.PI_PRIME_POSITION


def test_sigma_breaks_early_assumes():
    rep = coh_run(W(X.SIGMA), V)
    assert rep.final == NOT_EARLY
    assert rep.violation_position == X.SIGMA_POSITION


def test_pi_and_rho1_are_coherent():
    for name in ("pi", "rho1"):
        t = trace(name)
        assert coherent_language_member(t.letters, t.header.variables), name


def test_ghost_trace_is_coherent():
    t = trace("ghost_pi_prime")
    assert coherent_language_member(t.letters, t.header.variables, t.header.ghosts)


def test_memoized_recomputation_is_allowed():
    # n(x) is recomputed while y still holds it
    assert coherent_language_member(W("y := n(x); z := n(x); assume(y = z)"), V)


def test_not_coherent_is_absorbing():
    for q in (NOT_MEMOIZING, NOT_EARLY):
        for a in LETTERS[:8]:
            assert coh_step(q, a) == q


def test_early_assume_even_between_equal_terms():
    rep = coh_run(W("assume(x = y); z := f(x, x); z := y; assume(x = y)"), V)
    assert rep.kind == EARLY


def test_initial_state_dump_is_stable():
    assert coh_initial(("x", "y")).dump() == coh_initial(("x", "y")).dump()


@pytest.mark.parametrize("name, coherent", sorted(X.COHERENT_PROGRAMS.items()))
def test_reference_programs(name, coherent):
    v = program_is_coherent(program(name))
    assert v.coherent == coherent
    if not coherent:
        assert v.kind == X.P2_WITNESS_KIND
        # the witness is a genuine non-coherent partial execution
        res = oracle_coherent(v.witness, program(name).variables)
        assert not res.coherent and res.kind == MEMOIZING


# --------------------------------------------------------------------------
# agreement with the term model


def _random(seed: int, max_len: int = 8):
    rng = random.Random(seed)
    tests = [a for a in LETTERS if isinstance(a, Test)]
    return tuple(
        rng.choice(tests) if rng.random() < 0.35 else rng.choice(LETTERS) for _ in range(rng.randint(0, max_len))
    )


@settings(max_examples=1500, deadline=None)
@given(st.integers(0, 10**9))
def test_automaton_agrees_with_the_oracle(seed):
    w = _random(seed)
    rep = coh_run(w, V)
    ref = oracle_coherent(w, V, arities=F)
    assert (rep.coherent, rep.kind, rep.violation_position) == (ref.coherent, ref.kind, ref.position)


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 10**9))
def test_deleting_disequality_assumes_preserves_coherence(seed):
    w = _random(seed)
    stripped = tuple(a for a in w if not (isinstance(a, Test) and not a.equal))
    assert coherent_language_member(w, V) == coherent_language_member(stripped, V)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_coherent_language_is_prefix_closed(seed):
    w = _random(seed)
    if coherent_language_member(w, V):
        assert all(coherent_language_member(w[:i], V) for i in range(len(w)))


def test_every_letter_of_the_alphabet_steps_from_the_initial_state():
    q = coh_initial(V)
    for a in LETTERS:
        r = coh_step(q, a)
        assert isinstance(r, NotCoherent) or r.base.defined("x")
