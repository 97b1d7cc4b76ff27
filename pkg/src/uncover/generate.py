"""Trace generators shared by the test-suite and the experiment scripts."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

from .executions import Apply, Assign, Call, Letter, Return, Test
from .oracle import oracle_coherent

SMALL_VARIABLES = ("x", "y", "z")
SMALL_FUNCTIONS = {"n": 1, "f": 2}


def alphabet(
    variables: Sequence[str] = SMALL_VARIABLES,
    functions: dict[str, int] | None = None,
    *,
    self_assign: bool = False,
) -> list[Letter]:
    """All letters over the given variables and functions.

    ``x := x`` letters are omitted by default (they never change a state).
    Tests are listed for unordered pairs only: ``assume(y = x)`` behaves
    like ``assume(x = y)``.
    """
    functions = SMALL_FUNCTIONS if functions is None else functions
    out: list[Letter] = []
    for x in variables:
        for y in variables:
            if x != y or self_assign:
                out.append(Assign(x, y))
    for x in variables:
        for f, k in functions.items():
            for args in itertools.product(variables, repeat=k):
                out.append(Apply(x, f, args))
    for x, y in itertools.combinations(variables, 2):
        out.append(Test(x, y, True))
        out.append(Test(x, y, False))
    return out


def exhaustive(letters: Sequence[Letter], max_len: int) -> Iterator[tuple[Letter, ...]]:
    """Every word of length ``0..max_len`` (shortest first)."""
    for n in range(max_len + 1):
        yield from itertools.product(letters, repeat=n)


def random_words(
    letters: Sequence[Letter],
    count: int,
    *,
    seed: int,
    min_len: int = 4,
    max_len: int = 8,
    test_bias: float = 0.35,
) -> Iterator[tuple[Letter, ...]]:
    """Seeded random words; assumes are drawn with probability ``test_bias``."""
    rng = random.Random(seed)
    tests = [a for a in letters if isinstance(a, Test)]
    for _ in range(count):
        n = rng.randint(min_len, max_len)
        yield tuple(
            rng.choice(tests) if tests and rng.random() < test_bias else rng.choice(letters) for _ in range(n)
        )


def random_coherent_words(
    letters: Sequence[Letter],
    count: int,
    variables: Sequence[str],
    *,
    seed: int,
    min_len: int = 4,
    max_len: int = 8,
    arities: dict[str, int] | None = None,
) -> Iterator[tuple[Letter, ...]]:
    """Seeded random walks that stay coherent (checked with the term oracle).

    Each walk extends its word one letter at a time, drawing among the
    letters that keep it coherent, up to a random target length.
    """
    rng = random.Random(seed)
    tests = [a for a in letters if isinstance(a, Test)]
    made = 0
    while made < count:
        n = rng.randint(min_len, max_len)
        word: list[Letter] = []
        while len(word) < n:
            for _ in range(20):
                a = rng.choice(tests) if tests and rng.random() < 0.35 else rng.choice(letters)
                if oracle_coherent(word + [a], variables, arities=arities).coherent:
                    word.append(a)
                    break
            else:
                break
        made += 1
        yield tuple(word)


@dataclass(frozen=True)
class RecursiveFamily:
    """A small two-method alphabet for recursive traces."""

    variables: tuple[str, ...]
    functions: dict
    outs: dict

    def internal_letters(self) -> list[Letter]:
        return alphabet(self.variables, self.functions)


TWO_METHODS = RecursiveFamily(("x", "y", "z"), {"n": 1}, {"m": ("y",), "p": ("x", "z")})


def _return_letters(family: RecursiveFamily, method: str) -> list[Return]:
    k = len(family.outs[method])
    return [Return(ws) for ws in itertools.permutations(family.variables, k)]


def recursive_words(
    family: RecursiveFamily,
    count: int,
    *,
    seed: int,
    max_len: int = 14,
    max_depth: int = 2,
    call_bias: float = 0.2,
) -> Iterator[tuple[Letter, ...]]:
    """Seeded random well-matched words (complete recursive executions)."""
    rng = random.Random(seed)
    internal = family.internal_letters()
    methods = sorted(family.outs)
    for _ in range(count):
        target = rng.randint(2, max_len)
        word: list[Letter] = []
        stack: list[str] = []
        while True:
            remaining = target - len(word)
            if remaining <= len(stack):
                # close all open frames
                while stack:
                    m = stack.pop()
                    word.append(rng.choice(_return_letters(family, m)))
                break
            r = rng.random()
            if stack and r < call_bias:
                m = stack.pop()
                word.append(rng.choice(_return_letters(family, m)))
            elif len(stack) < max_depth and remaining >= len(stack) + 2 and r < 2 * call_bias:
                m = rng.choice(methods)
                stack.append(m)
                word.append(Call(m))
            else:
                word.append(rng.choice(internal))
        yield tuple(word)
