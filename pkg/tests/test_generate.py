from __future__ import annotations

from uncover import generate as G
from uncover.executions import Call, Return, Test
from uncover.oracle import oracle_coherent


def test_alphabet_size():
    # 6 copies, 3*3 unary + 3*9 binary applications, 3 pairs x 2 tests
    assert len(G.alphabet()) == 6 + 9 + 27 + 6
    assert len(G.alphabet(self_assign=True)) == 51
    assert len(set(G.alphabet())) == len(G.alphabet())


def test_exhaustive_counts():
    letters = G.alphabet(("x", "y"), {"n": 1})
    n = len(letters)
    assert sum(1 for _ in G.exhaustive(letters, 3)) == 1 + n + n**2 + n**3


def test_random_words_are_reproducible():
    letters = G.alphabet()
    a = list(G.random_words(letters, 50, seed=3))
    b = list(G.random_words(letters, 50, seed=3))
    assert a == b
    assert all(4 <= len(w) <= 8 for w in a)
    assert a != list(G.random_words(letters, 50, seed=4))


def test_random_coherent_words_are_coherent():
    letters = G.alphabet()
    words = list(G.random_coherent_words(letters, 40, G.SMALL_VARIABLES, seed=1, arities=G.SMALL_FUNCTIONS))
    assert len(words) == 40
    assert all(oracle_coherent(w, G.SMALL_VARIABLES, arities=G.SMALL_FUNCTIONS).coherent for w in words)
    assert any(isinstance(a, Test) for w in words for a in w)


def test_recursive_words_are_well_matched_and_bounded():
    fam = G.TWO_METHODS
    words = list(G.recursive_words(fam, 500, seed=2, max_len=14, max_depth=2))
    assert words == list(G.recursive_words(fam, 500, seed=2, max_len=14, max_depth=2))
    calls = 0
    for w in words:
        assert len(w) <= 14
        stack = []
        for a in w:
            if isinstance(a, Call):
                stack.append(a.method)
                calls += 1
                assert len(stack) <= 2
            elif isinstance(a, Return):
                m = stack.pop()
                assert len(a.targets) == len(fam.outs[m])
        assert not stack
    assert calls > 100
