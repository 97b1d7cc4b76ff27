"""Execution letters, the trace file format, term semantics (Comp, alpha,
beta) and the finite automata accepting the executions of a program.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

from . import syntax as S
from .terms import TermArena, TermId


# --------------------------------------------------------------------------
# letters

@dataclass(frozen=True, order=True)
class Assign:
    """``x := y``"""

    target: str
    source: str

    def __str__(self) -> str:
        return f"{self.target} := {self.source}"


@dataclass(frozen=True, order=True)
class Apply:
    """``x := f(z1, ..., zr)``"""

    target: str
    fn: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.target} := {self.fn}({', '.join(self.args)})"


@dataclass(frozen=True, order=True)
class Test:
    """``assume(x = y)`` (``equal``) or ``assume(x != y)``."""

    __test__ = False  # not a pytest test class

    left: str
    right: str
    equal: bool

    def __str__(self) -> str:
        return f"assume({self.left} {'=' if self.equal else '!='} {self.right})"

    def negated(self) -> "Test":
        return Test(self.left, self.right, not self.equal)


@dataclass(frozen=True, order=True)
class Ghost:
    """``g := x`` for a write-only ghost variable ``g``."""

    target: str
    source: str

    def __str__(self) -> str:
        return f"{self.target} := {self.source}"


@dataclass(frozen=True, order=True)
class Call:
    method: str

    def __str__(self) -> str:
        return f"call {self.method}"


@dataclass(frozen=True, order=True)
class Return:
    targets: tuple[str, ...]

    def __str__(self) -> str:
        return f"<{','.join(self.targets)}> := return"


Letter = Union[Assign, Apply, Test, Ghost, Call, Return]
INTERNAL = (Assign, Apply, Test, Ghost)


def letter_kind(a: Letter) -> str:
    if isinstance(a, Call):
        return "call"
    if isinstance(a, Return):
        return "return"
    return "internal"


def letter_vars(a: Letter) -> tuple[str, ...]:
    if isinstance(a, (Assign, Ghost)):
        return (a.target, a.source)
    if isinstance(a, Apply):
        return (a.target,) + a.args
    if isinstance(a, Test):
        return (a.left, a.right)
    if isinstance(a, Return):
        return a.targets
    return ()


def strip_ghosts(word: Iterable[Letter]) -> tuple[Letter, ...]:
    """Projection onto the ghost-free alphabet."""
    return tuple(a for a in word if not isinstance(a, Ghost))


def strip_disequalities(word: Iterable[Letter]) -> tuple[Letter, ...]:
    return tuple(a for a in word if not (isinstance(a, Test) and not a.equal))


# --------------------------------------------------------------------------
# trace files

class TraceError(ValueError):
    def __init__(self, message: str, line: int = 0, filename: str = "<trace>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.filename = filename

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:1: {self.message}"


@dataclass(frozen=True)
class TraceHeader:
    variables: tuple[str, ...]
    functions: tuple[tuple[str, int], ...] = ()
    ghosts: tuple[str, ...] = ()
    methods: tuple[tuple[str, tuple[str, ...]], ...] = ()

    @property
    def outs(self) -> dict[str, tuple[str, ...]]:
        return dict(self.methods)

    @property
    def arity(self) -> dict[str, int]:
        return dict(self.functions)


@dataclass(frozen=True)
class Trace:
    header: TraceHeader
    letters: tuple[Letter, ...]


_NAME = r"[$A-Za-z_][A-Za-z0-9_$']*"
_RE_ASSUME = re.compile(rf"^assume\s*\(\s*({_NAME})\s*(=|==|!=)\s*({_NAME})\s*\)$")
_RE_APPLY = re.compile(rf"^({_NAME})\s*:=\s*({_NAME})\s*\(([^)]*)\)$")
_RE_ASSIGN = re.compile(rf"^({_NAME})\s*:=\s*({_NAME})$")
_RE_CALL = re.compile(rf"^call\s+({_NAME})$")
_RE_RETURN = re.compile(r"^<([^>]*)>\s*:=\s*return$")
_RE_HEADER = re.compile(r"^(vars|funs|ghosts|methods)\b(.*);$")
_RE_METHOD = re.compile(rf"^({_NAME})\s*\(\s*(?:out\s+([^)]*))?\)$")


def _split_names(text: str) -> list[str]:
    text = text.strip()
    return [] if not text else [t.strip() for t in text.split(",")]


def parse_letter(line: str, ghosts: Iterable[str] = ()) -> Letter:
    line = line.strip()
    m = _RE_ASSUME.match(line)
    if m:
        return Test(m.group(1), m.group(3), m.group(2) != "!=")
    m = _RE_CALL.match(line)
    if m:
        return Call(m.group(1))
    m = _RE_RETURN.match(line)
    if m:
        return Return(tuple(_split_names(m.group(1))))
    m = _RE_APPLY.match(line)
    if m:
        return Apply(m.group(1), m.group(2), tuple(_split_names(m.group(3))))
    m = _RE_ASSIGN.match(line)
    if m:
        if m.group(1) in set(ghosts):
            return Ghost(m.group(1), m.group(2))
        return Assign(m.group(1), m.group(2))
    raise ValueError(f"cannot parse execution letter {line!r}")


def format_letters(word: Iterable[Letter]) -> str:
    return "".join(f"{a}\n" for a in word)


def format_trace(trace: Trace) -> str:
    h = trace.header
    out = [f"vars {', '.join(h.variables)};"]
    if h.functions:
        out.append("funs " + ", ".join(f"{f}/{n}" for f, n in h.functions) + ";")
    if h.ghosts:
        out.append(f"ghosts {', '.join(h.ghosts)};")
    if h.methods:
        parts = []
        for m, outs in h.methods:
            parts.append(f"{m}(out {', '.join(outs)})" if outs else f"{m}()")
        out.append("methods " + ", ".join(parts) + ";")
    return "\n".join(out) + "\n" + format_letters(trace.letters)


def parse_trace(text: str, filename: str = "<trace>") -> Trace:
    variables: list[str] = []
    functions: dict[str, int] = {}
    ghosts: list[str] = []
    methods: dict[str, tuple[str, ...]] = {}
    letters: list[Letter] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        h = _RE_HEADER.match(line)
        if h and not letters:
            kind, rest = h.group(1), h.group(2)
            if kind == "vars":
                variables += _split_names(rest)
            elif kind == "ghosts":
                ghosts += _split_names(rest)
            elif kind == "funs":
                for item in _split_names(rest):
                    name, _, arity = item.partition("/")
                    if not arity.strip().isdigit() or int(arity) < 1:
                        raise TraceError(f"bad function declaration {item!r}", lineno, filename)
                    functions[name.strip()] = int(arity)
            else:
                # method list: "m(out y, z), k()" -- split at top-level commas
                for part in re.findall(r"[^,(]+\([^)]*\)", rest):
                    mm = _RE_METHOD.match(part.strip())
                    if not mm:
                        raise TraceError(f"bad method declaration {part.strip()!r}", lineno, filename)
                    methods[mm.group(1)] = tuple(_split_names(mm.group(2) or ""))
            continue
        try:
            letters.append(parse_letter(line, ghosts))
        except ValueError as exc:
            raise TraceError(str(exc), lineno, filename) from None
        try:
            _check_letter(letters[-1], set(variables), set(ghosts), functions, methods)
        except ValueError as exc:
            raise TraceError(str(exc), lineno, filename) from None
    if not variables:
        raise TraceError("trace has no 'vars ...;' header", 1, filename)
    header = TraceHeader(tuple(variables), tuple(functions.items()), tuple(ghosts), tuple(methods.items()))
    return Trace(header, tuple(letters))


def _check_letter(a: Letter, vs: set[str], gs: set[str], funs: dict[str, int], methods: dict) -> None:
    def need(v: str) -> None:
        if v not in vs:
            raise ValueError(f"undeclared variable {v!r}")

    if isinstance(a, Ghost):
        need(a.source)
        return
    if isinstance(a, Apply):
        if a.fn not in funs:
            raise ValueError(f"undeclared function {a.fn!r}")
        if funs[a.fn] != len(a.args):
            raise ValueError(f"arity mismatch: {a.fn!r} expects {funs[a.fn]} argument(s)")
    if isinstance(a, Call) and a.method not in methods:
        raise ValueError(f"undeclared method {a.method!r}")
    for v in letter_vars(a):
        if v in gs:
            raise ValueError(f"ghost variable {v!r} may only be written by ghost assignments")
        need(v)


def load_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read(), filename=str(path))


# --------------------------------------------------------------------------
# Comp, alpha, beta

class UndefinedValue(ValueError):
    """A letter read a ghost variable that has not been assigned yet."""


@dataclass
class Evaluation:
    """Term semantics of an execution.

    ``envs[i]`` maps each variable in scope after the first ``i`` letters
    to its term (undefined ghosts are absent).  ``alpha``/``beta`` list
    ``(position, left, right)`` for equality/disequality assumes, where
    ``position`` is the index of the assume letter.  ``terms`` is
    ``Terms`` of the whole execution, ``terms_upto[i]`` the terms
    computed by the prefix of length ``i``.
    """

    arena: TermArena
    envs: list[dict[str, TermId]]
    alpha: list[tuple[int, TermId, TermId]]
    beta: list[tuple[int, TermId, TermId]]
    terms_upto: list[frozenset[TermId]]

    @property
    def terms(self) -> frozenset[TermId]:
        return self.terms_upto[-1]

    @property
    def final(self) -> dict[str, TermId]:
        return self.envs[-1]

    def comp(self, x: str, i: int | None = None) -> TermId | None:
        env = self.envs[-1 if i is None else i]
        return env.get(x)

    def alpha_pairs(self, upto: int | None = None) -> list[tuple[TermId, TermId]]:
        return [(a, b) for p, a, b in self.alpha if upto is None or p < upto]

    def beta_pairs(self, upto: int | None = None) -> list[tuple[TermId, TermId]]:
        return [(a, b) for p, a, b in self.beta if upto is None or p < upto]


def evaluate(
    word: Sequence[Letter],
    variables: Sequence[str],
    *,
    ghosts: Sequence[str] = (),
    outs: dict[str, tuple[str, ...]] | None = None,
    arities: dict[str, int] | None = None,
    arena: TermArena | None = None,
) -> Evaluation:
    """Compute Comp for every prefix, together with alpha and beta.

    Ghost variables start undefined.  With ``outs`` (method name to output
    tuple) call/return letters are interpreted with call-by-value frames:
    a call copies the caller's variables, a matching return restores the
    caller's variables except the targets, which receive the callee's
    outputs.
    """
    arena = arena if arena is not None else TermArena(dict(arities or {}))
    env: dict[str, TermId] = {v: arena.const(v) for v in variables}
    ghost_set = set(ghosts)
    stack: list[tuple[dict[str, TermId], str]] = []
    envs = [dict(env)]
    alpha: list[tuple[int, TermId, TermId]] = []
    beta: list[tuple[int, TermId, TermId]] = []
    computed = set(env.values())
    terms_upto = [frozenset(computed)]

    def read(v: str) -> TermId:
        try:
            return env[v]
        except KeyError:
            if v in ghost_set:
                raise UndefinedValue(f"ghost {v!r} read before assignment") from None
            raise ValueError(f"unknown variable {v!r}") from None

    for pos, a in enumerate(word):
        if isinstance(a, (Assign, Ghost)):
            env[a.target] = read(a.source)
        elif isinstance(a, Apply):
            t = arena.app(a.fn, *(read(z) for z in a.args))
            env[a.target] = t
            computed.add(t)
        elif isinstance(a, Test):
            pair = (pos, read(a.left), read(a.right))
            (alpha if a.equal else beta).append(pair)
        elif isinstance(a, Call):
            if outs is None or a.method not in outs:
                raise ValueError(f"call of unknown method {a.method!r}")
            stack.append((dict(env), a.method))
        elif isinstance(a, Return):
            if not stack:
                raise ValueError(f"unmatched return at position {pos}")
            caller, m = stack.pop()
            if len(a.targets) != len(outs[m]):
                raise ValueError(f"return of {m!r} expects {len(outs[m])} target(s), got {len(a.targets)}")
            result = [env[o] for o in outs[m]]
            env = caller
            for w, t in zip(a.targets, result):
                env[w] = t
        else:
            raise TypeError(a)
        envs.append(dict(env))
        terms_upto.append(frozenset(computed))
    return Evaluation(arena, envs, alpha, beta, terms_upto)


def comp(word: Sequence[Letter], x: str, variables: Sequence[str], **kw) -> tuple[TermArena, TermId | None]:
    ev = evaluate(word, variables, **kw)
    return ev.arena, ev.comp(x)


def assumes(word: Sequence[Letter], variables: Sequence[str], **kw):
    """Return ``(arena, alpha, beta)`` as sets of term-id pairs."""
    ev = evaluate(word, variables, **kw)
    return ev.arena, set(ev.alpha_pairs()), set(ev.beta_pairs())


# --------------------------------------------------------------------------
# finite automata over letters

@dataclass
class Nfa:
    """Epsilon-free NFA with a single initial state ``0``.

    ``edges[q]`` is a tuple of ``(letter, target)`` pairs in a fixed,
    deterministic order.
    """

    edges: list[tuple[tuple[Letter, int], ...]]
    accepting: frozenset[int]
    initial: int = 0

    @property
    def size(self) -> int:
        return len(self.edges)

    def step(self, states: Iterable[int], a: Letter) -> frozenset[int]:
        return frozenset(t for q in states for b, t in self.edges[q] if b == a)

    def accepts(self, word: Iterable[Letter]) -> bool:
        cur = frozenset([self.initial])
        for a in word:
            cur = self.step(cur, a)
            if not cur:
                return False
        return bool(cur & self.accepting)

    def alphabet(self) -> list[Letter]:
        return sorted({a for es in self.edges for a, _ in es}, key=str)

    def words(self, max_len: int, accepted_only: bool = True) -> set[tuple[Letter, ...]]:
        """All (accepted) words up to ``max_len`` letters."""
        out: set[tuple[Letter, ...]] = set()
        frontier = {((), self.initial)}
        for depth in range(max_len + 1):
            nxt = set()
            for w, q in frontier:
                if not accepted_only or q in self.accepting:
                    out.add(w)
                if depth < max_len:
                    for a, t in self.edges[q]:
                        nxt.add((w + (a,), t))
            frontier = nxt
        return out

    def to_dot(self, name: str = "nfa") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;", '  init [shape=point];', "  init -> q0;"]
        for q in range(self.size):
            shape = "doublecircle" if q in self.accepting else "circle"
            lines.append(f"  q{q} [shape={shape}];")
        for q, es in enumerate(self.edges):
            for a, t in es:
                label = str(a).replace('"', '\\"')
                lines.append(f'  q{q} -> q{t} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def cond_letter(c: S.Formula) -> Test:
    if isinstance(c, S.Eq):
        return Test(c.left, c.right, True)
    if isinstance(c, S.Neq):
        return Test(c.left, c.right, False)
    raise ValueError(f"condition {S.format_formula(c)!r} is not atomic; normalize the program first")


@dataclass(frozen=True)
class CallSite:
    """Placeholder edge label for a call statement (used by the VPA builder)."""

    index: int


@dataclass
class Thompson:
    """Epsilon-NFA fragments built from statements (``None`` labels epsilon)."""

    edges: list[list[tuple[object, int]]] = field(default_factory=list)
    sites: list[tuple[S.CallStmt, int]] = field(default_factory=list)

    def new(self) -> int:
        self.edges.append([])
        return len(self.edges) - 1

    def add(self, src: int, label: object, dst: int) -> None:
        self.edges[src].append((label, dst))

    def build(self, s: S.Stmt, entry: int) -> int:
        """Add ``s`` starting at ``entry``; return its exit state."""
        if isinstance(s, S.Skip):
            return entry
        if isinstance(s, S.AssignVar):
            out = self.new()
            self.add(entry, Assign(s.target, s.source), out)
            return out
        if isinstance(s, S.AssignFn):
            out = self.new()
            self.add(entry, Apply(s.target, s.fn, s.args), out)
            return out
        if isinstance(s, S.Assume):
            out = self.new()
            self.add(entry, cond_letter(s.cond), out)
            return out
        if isinstance(s, S.Seq):
            cur = entry
            for item in s.items:
                cur = self.build(item, cur)
            return cur
        if isinstance(s, S.If):
            test = cond_letter(s.cond)
            out = self.new()
            for letter, branch in ((test, s.then), (test.negated(), s.orelse)):
                mid = self.new()
                self.add(entry, letter, mid)
                self.add(self.build(branch, mid), None, out)
            return out
        if isinstance(s, S.While):
            test = cond_letter(s.cond)
            head = self.new()
            self.add(entry, None, head)
            body = self.new()
            self.add(head, test, body)
            self.add(self.build(s.body, body), None, head)
            out = self.new()
            self.add(head, test.negated(), out)
            return out
        if isinstance(s, S.Choice):
            out = self.new()
            for opt in s.options:
                mid = self.new()
                self.add(entry, None, mid)
                self.add(self.build(opt, mid), None, out)
            return out
        if isinstance(s, S.Star):
            head = self.new()
            self.add(entry, None, head)
            body = self.new()
            self.add(head, None, body)
            self.add(self.build(s.body, body), None, head)
            return head
        if isinstance(s, S.CallStmt):
            out = self.new()
            self.sites.append((s, out))
            self.add(entry, CallSite(len(self.sites) - 1), out)
            return out
        raise TypeError(s)

    def closure(self, q: int) -> list[int]:
        seen = [q]
        seen_set = {q}
        i = 0
        while i < len(seen):
            for label, t in self.edges[seen[i]]:
                if label is None and t not in seen_set:
                    seen_set.add(t)
                    seen.append(t)
            i += 1
        return seen

    def eliminate(self, initial: int, finals: set[int]) -> tuple[list[list[tuple[object, int]]], set[int], dict[int, int]]:
        """Epsilon-free, reachable and co-reachable automaton.

        Returns new edge lists, new accepting set and the renumbering of
        the surviving original states (the new initial state is ``0``).
        """
        closures = {}
        order = [initial]
        index = {initial: 0}
        raw: list[list[tuple[object, int]]] = []
        acc: set[int] = set()
        i = 0
        while i < len(order):
            q = order[i]
            cl = closures.setdefault(q, self.closure(q))
            es: list[tuple[object, int]] = []
            seen = set()
            for p in cl:
                if p in finals:
                    acc.add(i)
                for label, t in self.edges[p]:
                    if label is None or (label, t) in seen:
                        continue
                    seen.add((label, t))
                    if t not in index:
                        index[t] = len(order)
                        order.append(t)
                    es.append((label, index[t]))
            raw.append(es)
            i += 1
        return raw, acc, index


def trim(edges: list[list[tuple[object, int]]], accepting: set[int], keep: Iterable[int] = ()) -> tuple[list[list[tuple[object, int]]], set[int], list[int]]:
    """Remove states that cannot reach an accepting state.

    State ``0`` and any state in ``keep`` survive.  Returns the new edge
    lists, accepting set, and the list mapping new index to old index.
    """
    rev: dict[int, list[int]] = {}
    for q, es in enumerate(edges):
        for _, t in es:
            rev.setdefault(t, []).append(q)
    live = set(accepting)
    work = list(accepting)
    while work:
        t = work.pop()
        for q in rev.get(t, ()):
            if q not in live:
                live.add(q)
                work.append(q)
    live |= {0, *keep}
    old = [q for q in range(len(edges)) if q in live]
    new = {q: i for i, q in enumerate(old)}
    out = [tuple((a, new[t]) for a, t in edges[q] if t in new) for q in old]
    return out, {new[q] for q in accepting if q in new}, old


def exec_nfa(program: S.Program, partial: bool = False) -> Nfa:
    """NFA for the complete (or, with ``partial``, all partial) executions."""
    if program.recursive:
        raise ValueError("recursive program: use uncover.recvpa.exec_vpa")
    p = S.normalize(program)
    th = Thompson()
    start = th.new()
    end = th.build(p.body, start)
    raw, acc, _ = th.eliminate(start, {end})
    edges, acc, _ = trim(raw, acc)
    if partial:
        acc = set(range(len(edges)))
    return Nfa(list(edges), frozenset(acc))


def enumerate_executions(nfa: Nfa, max_len: int) -> Iterator[tuple[Letter, ...]]:
    """Accepted words of length at most ``max_len`` in length-lexicographic order."""
    for w in sorted(nfa.words(max_len), key=lambda w: (len(w), [str(a) for a in w])):
        yield w
