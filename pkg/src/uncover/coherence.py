"""The coherence automaton and the program-level coherence check.

A coherence state extends a feasibility state (whose disequality part is
always empty -- disequality assumes are irrelevant to coherence) with

* ``computed``: the keys ``(f, argument classes)`` of every application
  evaluated so far whose argument classes are all still held;
* ``up``: pairs ``(c, p)`` of held classes such that some computed term
  in ``p`` has an immediate subterm in ``c``;
* ``dirty``: held classes below some computed term that is no longer
  held by any variable.

Recomputing a key in ``computed`` that the function table cannot answer
breaks memoization; equating a ``dirty`` class is an early assume.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import scc
from .executions import Apply, Assign, Ghost, Letter, Test
from .oracle import EARLY, MEMOIZING
from .scc import SccState, Vocab, _read


@dataclass(frozen=True)
class NotCoherent:
    kind: str

    def dump(self) -> str:
        return f"NOT-COHERENT({self.kind})"


NOT_MEMOIZING = NotCoherent(MEMOIZING)
NOT_EARLY = NotCoherent(EARLY)


@dataclass(frozen=True)
class CohState:
    base: SccState
    computed: frozenset[tuple[str, tuple[int, ...]]] = frozenset()
    up: frozenset[tuple[int, int]] = frozenset()
    dirty: frozenset[int] = frozenset()
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.base, self.computed, self.up, self.dirty)))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, CohState):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.base == other.base
            and self.computed == other.computed
            and self.up == other.up
            and self.dirty == other.dirty
        )

    @property
    def vocab(self) -> Vocab:
        return self.base.vocab

    def dump(self) -> str:
        names = self.vocab.names
        e = " ".join(f"{f}({','.join('⟨' + names[a] + '⟩' for a in args)})" for f, args in sorted(self.computed))
        u = " ".join(f"{names[a]}<{names[b]}" for a, b in sorted(self.up))
        dd = " ".join(names[c] for c in sorted(self.dirty))
        return f"{self.base.dump()} | E: {e} | up: {u} | dropped-above: {dd}".replace("  ", " ")


def coh_initial(variables: Sequence[str], ghosts: Sequence[str] = ()) -> CohState:
    return CohState(scc.initial_state(variables, ghosts))


def _below(up: Iterable[tuple[int, int]], tops: set[int]) -> set[int]:
    """Classes having an ``up``-path into ``tops`` (excluding ``tops``)."""
    rev: dict[int, list[int]] = {}
    for c, p in up:
        rev.setdefault(p, []).append(c)
    seen: set[int] = set()
    work = list(tops)
    while work:
        p = work.pop()
        for c in rev.get(p, ()):
            if c not in seen and c not in tops:
                seen.add(c)
                work.append(c)
    return seen


def _finish(q: CohState, owner, funcs, computed, up, dirty, merges=()) -> CohState:
    """Rebuild the base state and carry the extra components through it."""
    live_after = {c for c in owner if c >= 0}
    dead = {c for c in q.base.cls if c >= 0} - live_after
    dirty = set(dirty)
    if dead:
        dirty |= _below(up, dead)
    r = scc.rebuild(q.vocab, owner, (), funcs, merges)
    remap = r.remap
    new_computed = set()
    for f, args in computed:
        ra = tuple(remap(a) for a in args)
        if None not in ra:
            new_computed.add((f, ra))
    new_up = set()
    for c, p in up:
        rc, rp = remap(c), remap(p)
        if rc is not None and rp is not None:
            new_up.add((rc, rp))
    new_dirty = {remap(c) for c in dirty} - {None}
    return CohState(r.state, frozenset(new_computed), frozenset(new_up), frozenset(new_dirty))


def coh_step(q, a: Letter):
    """One transition of the coherence automaton (ghost letters included)."""
    if isinstance(q, NotCoherent):
        return q
    base = q.base
    if isinstance(a, Test):
        if not a.equal:
            return q
        cx, cy = _read(base, a.left), _read(base, a.right)
        if cx in q.dirty or cy in q.dirty:
            return NOT_EARLY
        if cx == cy:
            return q
        return _finish(q, base.cls, base.funcs, q.computed, q.up, q.dirty, [(cx, cy)])
    if isinstance(a, (Assign, Ghost)):
        if a.target == a.source:
            _read(base, a.source)
            return q
        owner = scc.assign_owner(base, a.target, _read(base, a.source))
        return _finish(q, owner, base.funcs, q.computed, q.up, q.dirty)
    if isinstance(a, Apply):
        args = tuple(_read(base, z) for z in a.args)
        key = (a.fn, args)
        hit = base.lookup(a.fn, args)
        if hit is None and key in q.computed:
            return NOT_MEMOIZING
        owner, funcs, _ = scc.apply_parts(base, a)
        up = set(q.up)
        target = hit if hit is not None else len(base.cls)
        up.update((c, target) for c in args)
        return _finish(q, owner, funcs, q.computed | {key}, up, q.dirty)
    raise ValueError(f"letter {a} is not handled by the coherence automaton")


@dataclass
class CohRunReport:
    final: object
    violation_position: int | None

    @property
    def coherent(self) -> bool:
        return not isinstance(self.final, NotCoherent)

    @property
    def kind(self) -> str | None:
        return self.final.kind if isinstance(self.final, NotCoherent) else None


def coh_run(word: Iterable[Letter], variables: Sequence[str], ghosts: Sequence[str] = ()) -> CohRunReport:
    q = coh_initial(variables, ghosts)
    for pos, a in enumerate(word):
        q = coh_step(q, a)
        if isinstance(q, NotCoherent):
            return CohRunReport(q, pos)
    return CohRunReport(q, None)


def coherent_language_member(word: Iterable[Letter], variables: Sequence[str], ghosts: Sequence[str] = ()) -> bool:
    return coh_run(word, variables, ghosts).coherent


@dataclass
class CoherenceVerdict:
    coherent: bool
    witness: list[Letter]
    kind: str | None
    stats: object


def program_is_coherent(program, *, budget: int = 1_000_000, threads: int = 1) -> CoherenceVerdict:
    """Shortest partial execution that is not coherent, if any."""
    from .executions import exec_nfa
    from .search import bfs

    nfa = exec_nfa(program, partial=True)
    variables = nfa_variables(program)

    def succ(node):
        state, cq = node
        for a, t in nfa.edges[state]:
            yield a, (t, coh_step(cq, a))

    res = bfs(
        [(nfa.initial, coh_initial(variables))],
        succ,
        lambda n: isinstance(n[1], NotCoherent),
        budget=budget,
        what="coherence check",
        threads=threads,
    )
    res.stats.extra["nfa_states"] = nfa.size
    if not res.found:
        return CoherenceVerdict(True, [], None, res.stats)
    return CoherenceVerdict(False, res.path, res.goal[1].kind, res.stats)


def nfa_variables(program) -> tuple[str, ...]:
    from .syntax import normalize

    return normalize(program).variables
