from __future__ import annotations

import pathlib

import pytest

from uncover import syntax as S
from uncover.executions import load_trace, parse_letter

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus(name: str) -> pathlib.Path:
    return CORPUS / name


def program(name: str) -> S.Program:
    return S.load_program(str(corpus(name if name.endswith(".up") else name + ".up")))


def trace(name: str):
    return load_trace(str(corpus(name if name.endswith(".trace") else name + ".trace")))


def W(text: str, ghosts=()) -> tuple:
    """Letters from a ';'-separated string: W("y := n(x); assume(x != z)")."""
    return tuple(parse_letter(part, ghosts) for part in text.split(";") if part.strip())


def show(word) -> str:
    return " ; ".join(str(a) for a in word)


@pytest.fixture
def p1():
    return program("p1")


@pytest.fixture
def p2():
    return program("p2")


@pytest.fixture
def p3():
    return program("p3")
