"""Hash-consed ground terms and congruence closure over finite term sets.

This is the ground-truth side of the package: everything here works on
explicit terms, never on the bounded variable windows the automata keep.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

TermId = int


class ArityError(ValueError):
    pass


@dataclass
class TermArena:
    """Append-only table of terms; structurally equal terms share one id.

    A node is either ``("^", name)`` for the initial value of variable
    ``name`` or ``(f, (child ids...))`` for an application.
    """

    arities: dict[str, int] = field(default_factory=dict)
    nodes: list[tuple] = field(default_factory=list)
    _index: dict[tuple, TermId] = field(default_factory=dict, repr=False)

    def intern(self, node: tuple) -> TermId:
        tid = self._index.get(node)
        if tid is not None:
            return tid
        head, rest = node
        if head != "^":
            for c in rest:
                if not 0 <= c < len(self.nodes):
                    raise ValueError(f"unknown child term id {c}")
            expected = self.arities.get(head)
            if expected is not None and expected != len(rest):
                raise ArityError(f"{head} has arity {expected}, got {len(rest)} arguments")
        tid = len(self.nodes)
        self.nodes.append(node)
        self._index[node] = tid
        return tid

    def const(self, name: str) -> TermId:
        return self.intern(("^", name))

    def app(self, f: str, *children: TermId) -> TermId:
        return self.intern((f, tuple(children)))

    def lookup(self, node: tuple) -> TermId | None:
        return self._index.get(node)

    def is_const(self, t: TermId) -> bool:
        return self.nodes[t][0] == "^"

    def children(self, t: TermId) -> tuple[TermId, ...]:
        head, rest = self.nodes[t]
        return () if head == "^" else rest

    def head(self, t: TermId) -> str:
        head, rest = self.nodes[t]
        return rest if head == "^" else head

    def subterms(self, t: TermId) -> set[TermId]:
        out: set[TermId] = set()
        stack = [t]
        while stack:
            u = stack.pop()
            if u in out:
                continue
            out.add(u)
            stack.extend(self.children(u))
        return out

    def render(self, t: TermId) -> str:
        head, rest = self.nodes[t]
        if head == "^":
            return "^" + rest
        return f"{head}({', '.join(self.render(c) for c in rest)})"

    def parse(self, text: str) -> TermId:
        """Inverse of :meth:`render` (handy in tests): ``n(n(^x))``."""
        pos = 0

        def term() -> TermId:
            nonlocal pos
            if text[pos] == "^":
                pos += 1
                start = pos
                while pos < len(text) and (text[pos].isalnum() or text[pos] in "_$"):
                    pos += 1
                return self.const(text[start:pos])
            start = pos
            while text[pos] != "(":
                pos += 1
            f = text[start:pos].strip()
            pos += 1
            args = []
            while True:
                while text[pos] == " ":
                    pos += 1
                args.append(term())
                while text[pos] == " ":
                    pos += 1
                if text[pos] == ")":
                    pos += 1
                    return self.app(f, *args)
                assert text[pos] == ","
                pos += 1

        text = text.strip()
        return term()


def is_subterm_closed(arena: TermArena, terms: Iterable[TermId]) -> bool:
    ts = set(terms)
    return all(c in ts for t in ts for c in arena.children(t))


class Congruence:
    """Union-find partition of a subterm-closed set, kept congruence-closed.

    Terms and equations can be added incrementally; every ``merge`` runs
    upward propagation through a signature table keyed by
    ``(f, child representatives)``.
    """

    def __init__(self, arena: TermArena, terms: Iterable[TermId] = ()):
        self.arena = arena
        self.parent: dict[TermId, TermId] = {}
        self.size: dict[TermId, int] = {}
        self.uses: dict[TermId, list[TermId]] = defaultdict(list)
        self.sigtable: dict[tuple, TermId] = {}
        self.merged: list[tuple[TermId, TermId]] = []
        for t in sorted(set(terms)):
            self.add(t)

    def __contains__(self, t: TermId) -> bool:
        return t in self.parent

    @property
    def terms(self) -> set[TermId]:
        return set(self.parent)

    def find(self, t: TermId) -> TermId:
        root = t
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[t] != root:
            self.parent[t], t = root, self.parent[t]
        return root

    def _signature(self, t: TermId) -> tuple | None:
        kids = self.arena.children(t)
        if not kids and self.arena.is_const(t):
            return None
        return (self.arena.head(t), tuple(self.find(c) for c in kids))

    def add(self, t: TermId) -> TermId:
        """Insert ``t`` together with its subterms."""
        if t in self.parent:
            return self.find(t)
        for c in self.arena.children(t):
            self.add(c)
        self.parent[t] = t
        self.size[t] = 1
        sig = self._signature(t)
        if sig is not None:
            for c in set(sig[1]):
                self.uses[c].append(t)
            other = self.sigtable.get(sig)
            if other is None:
                self.sigtable[sig] = t
            else:
                self.merge(t, other)
        return self.find(t)

    def merge(self, a: TermId, b: TermId) -> None:
        if a not in self.parent or b not in self.parent:
            raise KeyError("merge of a term outside the closure's term set")
        self.merged.append((a, b))
        pending = [(a, b)]
        while pending:
            u, v = pending.pop()
            ru, rv = self.find(u), self.find(v)
            if ru == rv:
                continue
            if self.size[ru] < self.size[rv]:
                ru, rv = rv, ru
            # rv is absorbed: re-signature its users
            moved = self.uses.pop(rv, [])
            for p in moved:
                sig = self._signature(p)
                if self.sigtable.get(sig) == p:
                    del self.sigtable[sig]
            self.parent[rv] = ru
            self.size[ru] += self.size[rv]
            for p in moved:
                sig = self._signature(p)
                other = self.sigtable.get(sig)
                if other is None:
                    self.sigtable[sig] = p
                elif self.find(other) != self.find(p):
                    pending.append((p, other))
                self.uses[ru].append(p)

    def same(self, a: TermId, b: TermId) -> bool:
        return self.find(a) == self.find(b)

    def classes(self) -> list[frozenset[TermId]]:
        groups: dict[TermId, set[TermId]] = defaultdict(set)
        for t in self.parent:
            groups[self.find(t)].add(t)
        return sorted((frozenset(g) for g in groups.values()), key=min)

    def copy(self) -> "Congruence":
        other = Congruence.__new__(Congruence)
        other.arena = self.arena
        other.parent = dict(self.parent)
        other.size = dict(self.size)
        other.uses = defaultdict(list, {k: list(v) for k, v in self.uses.items()})
        other.sigtable = dict(self.sigtable)
        other.merged = list(self.merged)
        return other


def congruence_closure(
    arena: TermArena,
    terms: Iterable[TermId],
    pairs: Iterable[tuple[TermId, TermId]] = (),
) -> Congruence:
    """Smallest congruence on ``terms`` containing ``pairs``.

    ``terms`` must be subterm-closed and contain every term of ``pairs``.
    """
    ts = set(terms)
    if not is_subterm_closed(arena, ts):
        raise ValueError("term set is not subterm-closed")
    cc = Congruence(arena, ts)
    for a, b in pairs:
        if a not in ts or b not in ts:
            raise ValueError(f"pair ({arena.render(a)}, {arena.render(b)}) leaves the term set")
        cc.merge(a, b)
    return cc


def naive_congruence_closure(
    arena: TermArena,
    terms: Iterable[TermId],
    pairs: Iterable[tuple[TermId, TermId]] = (),
) -> list[frozenset[TermId]]:
    """Fixpoint of the two closure rules by brute iteration over all pairs.

    Deliberately slow and simple; used to cross-check :class:`Congruence`.
    """
    ts = sorted(set(terms))
    label = {t: t for t in ts}

    def relabel(a: int, b: int) -> None:
        old, new = max(label[a], label[b]), min(label[a], label[b])
        for t in ts:
            if label[t] == old:
                label[t] = new

    for a, b in pairs:
        relabel(a, b)
    changed = True
    while changed:
        changed = False
        for i, s in enumerate(ts):
            for t in ts[i + 1:]:
                if label[s] == label[t] or arena.is_const(s) or arena.is_const(t):
                    continue
                if arena.head(s) != arena.head(t):
                    continue
                cs, ct = arena.children(s), arena.children(t)
                if len(cs) == len(ct) and all(label[x] == label[y] for x, y in zip(cs, ct)):
                    relabel(s, t)
                    changed = True
    groups: dict[int, set[TermId]] = defaultdict(set)
    for t in ts:
        groups[label[t]].add(t)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def class_map(classes: Iterable[frozenset[TermId]]) -> Mapping[TermId, int]:
    out: dict[TermId, int] = {}
    for i, c in enumerate(classes):
        for t in c:
            out[t] = i
    return out
