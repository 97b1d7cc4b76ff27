"""Streaming congruence closure: the finite-state feasibility automaton.

A state abstracts the terms currently held by the variables into

* a partition of the (defined) variables into classes of equal terms,
* ``diseq``: pairs of classes assumed different,
* ``funcs``: a partial interpretation ``f(c1..cr) = c`` over classes.

Classes are named by their minimum-index member, so structurally equal
states are equal values and can be hashed in a visited set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .executions import Apply, Assign, Ghost, Letter, Test, UndefinedValue

Func = tuple[str, tuple[int, ...], int]


class Vocab:
    """An ordered tuple of variable names; one shared instance per tuple."""

    _cache: dict[tuple[str, ...], "Vocab"] = {}

    def __new__(cls, names: Sequence[str]) -> "Vocab":
        key = tuple(names)
        hit = cls._cache.get(key)
        if hit is not None:
            return hit
        if len(set(key)) != len(key):
            raise ValueError(f"duplicate variable names in {key}")
        self = super().__new__(cls)
        self.names = key
        self.index = {v: i for i, v in enumerate(key)}
        cls._cache[key] = self
        return self

    def __len__(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return f"Vocab({', '.join(self.names)})"

    def __reduce__(self):
        return (Vocab, (self.names,))


class _Reject:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "REJECT"

    def dump(self) -> str:
        return "REJECT"

    def __reduce__(self):
        return (_Reject, ())


REJECT = _Reject()


@dataclass(frozen=True)
class SccState:
    vocab: Vocab = field(compare=False, hash=False)
    cls: tuple[int, ...]
    diseq: frozenset[tuple[int, int]] = frozenset()
    funcs: frozenset[Func] = frozenset()
    _names: tuple[str, ...] = field(default=(), init=False, repr=False)
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        # vocab is compared through its names (instances are interned)
        object.__setattr__(self, "_names", self.vocab.names)
        object.__setattr__(self, "_hash", hash((self._names, self.cls, self.diseq, self.funcs)))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, SccState):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.cls == other.cls
            and self.funcs == other.funcs
            and self.diseq == other.diseq
            and self._names == other._names
        )

    # queries --------------------------------------------------------------
    def defined(self, v: str) -> bool:
        return self.cls[self.vocab.index[v]] >= 0

    def rep(self, v: str) -> int:
        c = self.cls[self.vocab.index[v]]
        if c < 0:
            raise UndefinedValue(f"variable {v!r} is undefined in this state")
        return c

    def same(self, x: str, y: str) -> bool:
        return self.rep(x) == self.rep(y)

    def classes(self) -> list[tuple[str, ...]]:
        groups: dict[int, list[str]] = {}
        for i, c in enumerate(self.cls):
            if c >= 0:
                groups.setdefault(c, []).append(self.vocab.names[i])
        return [tuple(groups[c]) for c in sorted(groups)]

    def class_of(self, rep: int) -> frozenset[str]:
        return frozenset(self.vocab.names[i] for i, c in enumerate(self.cls) if c == rep)

    def func_map(self) -> dict[tuple[str, tuple[int, ...]], int]:
        return {(f, args): t for f, args, t in self.funcs}

    def lookup(self, f: str, args: tuple[int, ...]) -> int | None:
        for g, a, t in self.funcs:
            if g == f and a == args:
                return t
        return None

    def is_reflexive(self) -> bool:
        return any(a == b for a, b in self.diseq)

    # text ------------------------------------------------------------------
    def dump(self) -> str:
        names = self.vocab.names

        def show(rep: int) -> str:
            return "{" + ",".join(names[i] for i, c in enumerate(self.cls) if c == rep) + "}"

        parts = [" ".join("{" + ",".join(c) + "}" for c in self.classes())]
        d = sorted(self.diseq)
        parts.append("d: " + " ".join(f"({show(a)},{show(b)})" for a, b in d))
        fs = sorted(self.funcs)
        parts.append(
            "P: " + " ".join(f"{f}({','.join('⟨' + names[a] + '⟩' for a in args)})={names[t]}" for f, args, t in fs)
        )
        return " | ".join(p.rstrip() for p in parts)

    def __str__(self) -> str:
        return self.dump()


def is_reject(q) -> bool:
    return q is REJECT


# --------------------------------------------------------------------------
# the generic rebuild used by every transition


@dataclass
class Rebuilt:
    state: SccState
    reflexive: bool
    remap: Callable[[int], int | None]


def rebuild(
    vocab: Vocab,
    owner: Sequence[int],
    diseq: Iterable[tuple[int, int]],
    funcs: Iterable[Func],
    merges: Iterable[tuple[int, int]] = (),
) -> Rebuilt:
    """Canonical state from an arbitrary class-id labelling.

    ``owner[i]`` is a class id (any int, ``-1`` = undefined) for the i-th
    variable of ``vocab``; ``diseq``/``funcs`` mention class ids that may
    include classes no variable owns (they are dropped at the end).
    ``merges`` are identified first and closed under congruence through
    ``funcs``.  ``reflexive`` reports whether some disequality collapsed,
    checked before unowned classes are dropped.
    """
    parent: dict[int, int] = {}
    merges = list(merges)

    def find(c: int) -> int:
        if not parent:
            return c
        root = c
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(c, c) != root:
            parent[c], c = root, parent[c]
        return root

    funcs = list(funcs)
    if merges:
        for a, b in merges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        changed = True
        while changed:
            changed = False
            table: dict[tuple, int] = {}
            for f, args, t in funcs:
                key = (f, tuple(find(a) for a in args))
                tt = find(t)
                other = table.get(key)
                if other is None:
                    table[key] = tt
                else:
                    ro = find(other)
                    if ro != tt:
                        parent[max(ro, tt)] = min(ro, tt)
                        changed = True
    diseq = [(find(a), find(b)) for a, b in diseq]
    reflexive = any(a == b for a, b in diseq)
    rep: dict[int, int] = {}
    for i, c in enumerate(owner):
        if c >= 0:
            rep.setdefault(find(c), i)
    new_owner = tuple(rep[find(c)] if c >= 0 else -1 for c in owner)
    new_d = set()
    for a, b in diseq:
        ra, rb = rep.get(a), rep.get(b)
        if ra is not None and rb is not None:
            new_d.add((ra, rb) if ra <= rb else (rb, ra))
    new_f = set()
    for f, args, t in funcs:
        rt = rep.get(find(t))
        if rt is None:
            continue
        rargs = tuple(rep.get(find(a), -1) for a in args)
        if -1 in rargs:
            continue
        new_f.add((f, rargs, rt))

    def remap(c: int) -> int | None:
        return rep.get(find(c))

    return Rebuilt(SccState(vocab, new_owner, frozenset(new_d), frozenset(new_f)), reflexive, remap)


# --------------------------------------------------------------------------
# the automaton


def initial_state(variables: Sequence[str], ghosts: Sequence[str] = ()) -> SccState:
    """Every variable in its own class; ghosts start undefined."""
    vocab = Vocab(tuple(variables) + tuple(ghosts))
    n = len(variables)
    cls = tuple(range(n)) + (-1,) * len(ghosts)
    return SccState(vocab, cls)


def _read(q: SccState, v: str) -> int:
    try:
        i = q.vocab.index[v]
    except KeyError:
        raise ValueError(f"unknown variable {v!r}") from None
    c = q.cls[i]
    if c < 0:
        raise UndefinedValue(f"variable {v!r} read before assignment")
    return c


def _write(q: SccState, v: str) -> int:
    try:
        return q.vocab.index[v]
    except KeyError:
        raise ValueError(f"unknown variable {v!r}") from None


def assign_owner(q: SccState, target: str, source_class: int) -> list[int]:
    owner = list(q.cls)
    owner[_write(q, target)] = source_class
    return owner


def apply_parts(q: SccState, a: Apply) -> tuple[list[int], list[Func], bool]:
    """Owner and function table after ``x := f(z)`` (before canonicalizing).

    Returns ``(owner, funcs, hit)`` where ``hit`` says the value was
    already known through ``funcs``.
    """
    args = tuple(_read(q, z) for z in a.args)
    target = q.lookup(a.fn, args)
    funcs = list(q.funcs)
    if target is not None:
        return assign_owner(q, a.target, target), funcs, True
    fresh = len(q.cls)
    owner = assign_owner(q, a.target, fresh)
    funcs.append((a.fn, args, fresh))  # dropped by rebuild if an argument class died
    return owner, funcs, False


def local_merge(q: SccState, x: str, y: str) -> Rebuilt:
    """Identify the classes of ``x`` and ``y`` and close under congruence.

    The result may carry a reflexive disequality (``reflexive`` is then
    true); :func:`step` turns that into rejection.
    """
    return rebuild(q.vocab, q.cls, q.diseq, q.funcs, [(_read(q, x), _read(q, y))])


def step(q, a: Letter):
    """One transition of the feasibility automaton."""
    if q is REJECT:
        return REJECT
    if isinstance(a, (Assign, Ghost)):
        if a.target == a.source:
            _read(q, a.source)
            return q
        owner = assign_owner(q, a.target, _read(q, a.source))
        return rebuild(q.vocab, owner, q.diseq, q.funcs).state
    if isinstance(a, Apply):
        owner, funcs, _ = apply_parts(q, a)
        return rebuild(q.vocab, owner, q.diseq, funcs).state
    if isinstance(a, Test):
        cx, cy = _read(q, a.left), _read(q, a.right)
        if a.equal:
            if cx == cy:
                return q
            r = local_merge(q, a.left, a.right)
            return REJECT if r.reflexive else r.state
        if cx == cy:
            return REJECT
        pair = (cx, cy) if cx < cy else (cy, cx)
        return SccState(q.vocab, q.cls, q.diseq | {pair}, q.funcs)
    raise ValueError(f"letter {a} is not handled by the feasibility automaton")


@dataclass
class SccRunReport:
    final: object
    states: list | None
    reject_position: int | None

    @property
    def accepted(self) -> bool:
        return self.final is not REJECT


def run(word: Iterable[Letter], variables: Sequence[str], ghosts: Sequence[str] = (), keep_states: bool = False) -> SccRunReport:
    q = initial_state(variables, ghosts)
    states = [q] if keep_states else None
    reject_at = None
    for pos, a in enumerate(word):
        q = step(q, a)
        if keep_states:
            states.append(q)
        if q is REJECT and reject_at is None:
            reject_at = pos
            if not keep_states:
                break
    return SccRunReport(q, states, reject_at)


def accepts(word: Iterable[Letter], variables: Sequence[str], ghosts: Sequence[str] = ()) -> bool:
    return run(word, variables, ghosts).accepted


def abstraction(q: SccState, names: Iterable[str] | None = None):
    """The state as an :class:`uncover.oracle.Abstraction` over ``names``.

    Restricting to ``names`` (default: all defined variables) drops the
    classes, disequalities and function entries that mention only other
    variables.
    """
    from .oracle import Abstraction

    keep = set(q.vocab.names if names is None else names)
    groups: dict[int, frozenset[str]] = {}
    for i, c in enumerate(q.cls):
        if c >= 0 and q.vocab.names[i] in keep:
            groups[c] = groups.get(c, frozenset()) | {q.vocab.names[i]}
    d = frozenset(
        frozenset((groups[a], groups[b])) for a, b in q.diseq if a in groups and b in groups
    )
    fs = frozenset(
        (f, tuple(groups[x] for x in args), groups[t])
        for f, args, t in q.funcs
        if t in groups and all(x in groups for x in args)
    )
    return Abstraction(frozenset(groups.values()), d, fs)


def state_from_abstraction(abstraction, variables: Sequence[str], ghosts: Sequence[str] = ()) -> SccState:
    """The canonical state whose :func:`abstraction` is ``abstraction``.

    Variables not covered by any class are undefined.
    """
    vocab = Vocab(tuple(variables) + tuple(ghosts))
    class_id: dict[frozenset, int] = {}
    owner = [-1] * len(vocab)
    for group in sorted(abstraction.classes, key=lambda g: min(vocab.index[v] for v in g)):
        cid = len(class_id)
        class_id[group] = cid
        for v in group:
            owner[vocab.index[v]] = cid
    diseq = []
    for pair in abstraction.diseq:
        a, b = (tuple(pair) * 2)[:2]
        diseq.append((class_id[a], class_id[b]))
    funcs = [(f, tuple(class_id[g] for g in args), class_id[t]) for f, args, t in abstraction.funcs]
    return rebuild(vocab, owner, diseq, funcs).state
