"""Recursive programs: execution VPAs, the recursive feasibility VPA,
products, and emptiness by summary saturation.

Two VPA interfaces are used:

* *generative* (enumerates its moves): ``initial_states()``,
  ``internal_moves(s)``, ``call_moves(s)``, ``return_moves(s, pop)``,
  ``is_accepting(s)``;
* *reactive* (answers a given letter): ``initial_states()``,
  ``react_internal(s, a)``, ``react_call(s, a)``,
  ``react_return(s, a, pop)``, ``is_accepting(s)``.

Explicit :class:`Vpa` objects implement both; the feasibility VPA is
reactive only (its alphabet is implicit).  The product of a generative
and a reactive VPA is generative, which is all emptiness needs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from . import scc
from . import syntax as S
from .executions import Call, CallSite, Letter, Return, Thompson, trim
from .oracle import oracle_coherent, oracle_feasible
from .scc import REJECT, SccState, Vocab
from .search import BudgetExceeded

# --------------------------------------------------------------------------
# explicit VPAs


@dataclass
class Vpa:
    """Explicit visibly pushdown automaton.

    ``internal[q]``: ``(letter, target)``; ``calls[q]``: ``(letter,
    target, push)``; ``returns[q]``: ``(letter, pop, target)``.  Words are
    accepted with an empty stack in an accepting state, or -- when
    ``prefix_closed`` -- in any reachable configuration (pending calls
    allowed).
    """

    internal: list[list[tuple[Letter, int]]]
    calls: list[list[tuple[Call, int, Hashable]]]
    returns: list[list[tuple[Return, Hashable, int]]]
    initial: int = 0
    accepting: frozenset[int] = frozenset()
    prefix_closed: bool = False
    labels: list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.internal)

    # generative interface
    def initial_states(self):
        return [self.initial]

    def internal_moves(self, q):
        return self.internal[q]

    def call_moves(self, q):
        return self.calls[q]

    def return_moves(self, q, pop):
        return [(a, t) for a, p, t in self.returns[q] if p == pop]

    def is_accepting(self, q) -> bool:
        return self.prefix_closed or q in self.accepting

    # reactive interface
    def react_internal(self, q, a):
        return [t for b, t in self.internal[q] if b == a]

    def react_call(self, q, a):
        return [(t, p) for b, t, p in self.calls[q] if b == a]

    def react_return(self, q, a, pop):
        return [t for b, p, t in self.returns[q] if b == a and p == pop]

    # membership by configuration sets (for tests and small words)
    def accepts(self, word: Iterable[Letter]) -> bool:
        configs = {(q, ()) for q in self.initial_states()}
        for a in word:
            nxt = set()
            for q, stack in configs:
                if isinstance(a, Call):
                    for t, p in self.react_call(q, a):
                        nxt.add((t, stack + (p,)))
                elif isinstance(a, Return):
                    if stack:
                        for t in self.react_return(q, a, stack[-1]):
                            nxt.add((t, stack[:-1]))
                else:
                    for t in self.react_internal(q, a):
                        nxt.add((t, stack))
            configs = nxt
            if not configs:
                return False
        if self.prefix_closed:
            return True
        return any(not stack and q in self.accepting for q, stack in configs)

    def words(self, max_len: int, max_depth: int | None = None) -> set[tuple[Letter, ...]]:
        """Accepted words up to ``max_len`` letters (and call depth).

        Depth-first, pruned by a lower bound on the letters still needed
        to close every open frame (not used for prefix-closed VPAs).
        """
        out: set[tuple[Letter, ...]] = set()
        dist = None if self.prefix_closed else self._distances()
        word: list[Letter] = []
        inf = float("inf")

        def needed(q, stack) -> float:
            # close the top frame, then each pending frame, then finish main
            if dist is None:
                return 0
            if not stack:
                return dist["main"][q]
            total = dist["frame"][q] + 1 + dist["bottom"].get(stack[0], inf)
            for site in stack[1:]:
                total += dist["cont"].get(site, inf) + 1
            return total

        def go(q, stack):
            if self.prefix_closed or (not stack and q in self.accepting):
                out.add(tuple(word))
            room = max_len - len(word)
            if room == 0:
                return
            for a, t in self.internal[q]:
                if needed(t, stack) < room:
                    word.append(a)
                    go(t, stack)
                    word.pop()
            if max_depth is None or len(stack) < max_depth:
                for a, t, p in self.calls[q]:
                    st = stack + (p,)
                    if needed(t, st) < room:
                        word.append(a)
                        go(t, st)
                        word.pop()
            if stack:
                for a, p, t in self.returns[q]:
                    if p == stack[-1] and needed(t, stack[:-1]) < room:
                        word.append(a)
                        go(t, stack[:-1])
                        word.pop()

        for q in self.initial_states():
            go(q, ())
        return out

    def _distances(self) -> dict:
        """Shortest completions: ``frame[q]`` letters to reach a state that
        can return, ``main[q]`` letters to reach acceptance at the bottom
        level, ``cont[site]``/``bottom[site]`` the same from the
        continuation of a call site."""
        inf = float("inf")
        n = self.size
        cont: dict = {}
        for q in range(n):
            for _, p, t in self.returns[q]:
                cont.setdefault(p, set()).add(t)

        def solve(base: list[float]) -> list[float]:
            d = list(base)
            changed = True
            while changed:
                changed = False
                for q in range(n):
                    best = d[q]
                    for _, t in self.internal[q]:
                        best = min(best, 1 + d[t])
                    for _, t, site in self.calls[q]:
                        after = min((d[c] for c in cont.get(site, ())), default=inf)
                        best = min(best, 1 + frame[t] + 1 + after)
                    if best < d[q]:
                        d[q] = best
                        changed = True
            return d

        frame = [inf] * n
        # frame distances need themselves for nested calls: iterate to a fixpoint
        while True:
            new = solve([0 if self.returns[q] else inf for q in range(n)])
            if new == frame:
                break
            frame = new
        main = solve([0 if q in self.accepting else inf for q in range(n)])
        return {
            "frame": frame,
            "main": main,
            "cont": {p: min(frame[t] for t in ts) for p, ts in cont.items()},
            "bottom": {p: min(main[t] for t in ts) for p, ts in cont.items()},
        }

    def to_dot(self, name: str = "vpa") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;", "  init [shape=point];", f"  init -> q{self.initial};"]
        for q in range(self.size):
            shape = "doublecircle" if q in self.accepting else "circle"
            lines.append(f"  q{q} [shape={shape}];")
        for q in range(self.size):
            for a, t in self.internal[q]:
                lines.append(f'  q{q} -> q{t} [label="{a}"];')
            for a, t, p in self.calls[q]:
                lines.append(f'  q{q} -> q{t} [label="{a} / push {p}", style=bold];')
            for a, p, t in self.returns[q]:
                lines.append(f'  q{q} -> q{t} [label="{a} / pop {p}", style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class _End:
    """Marker edge: the source state can finish its method body."""

    method: str


def exec_vpa(program: S.Program, partial: bool = False) -> Vpa:
    """VPA for the complete (or partial) executions of a recursive program.

    Each method body is compiled once; a call statement becomes a call
    edge into the callee's entry that pushes the call-site number, and a
    return edge out of every state that can finish the callee, popping
    that number and continuing after the call site.
    """
    if not program.recursive:
        raise ValueError("program has no methods; use uncover.executions.exec_nfa")
    p = S.normalize(program)
    outs = p.outs
    th = Thompson()
    entries: dict[str, int] = {}
    sink = th.new()
    for m in p.methods:
        entries[m.name] = th.new()
    for m in p.methods:
        end = th.build(m.body, entries[m.name])
        th.add(end, _End(m.name), sink)
    for call, _ in th.sites:
        if call.method not in entries:
            raise ValueError(f"call of undefined method {call.method!r}")
        if len(call.targets) != len(outs[call.method]):
            raise ValueError(f"call of {call.method!r} with {len(call.targets)} target(s)")
    # epsilon elimination from every method entry and every return point
    roots = [entries[p.main]] + [entries[m.name] for m in p.methods] + [out for _, out in th.sites]
    order: list[int] = []
    index: dict[int, int] = {}
    for r in roots:
        if r not in index:
            index[r] = len(order)
            order.append(r)
    edges: list[list[tuple[object, int]]] = []
    i = 0
    while i < len(order):
        q = order[i]
        es, seen = [], set()
        for c in th.closure(q):
            for label, t in th.edges[c]:
                if label is None or (label, t) in seen:
                    continue
                seen.add((label, t))
                if t not in index:
                    index[t] = len(order)
                    order.append(t)
                es.append((label, index[t]))
        edges.append(es)
        i += 1
    n = len(order)
    finish = {q: {lab.method for lab, _ in edges[q] if isinstance(lab, _End)} for q in range(n)}
    internal: list[list] = [[] for _ in range(n)]
    calls: list[list] = [[] for _ in range(n)]
    returns: list[list] = [[] for _ in range(n)]
    for q in range(n):
        for label, t in edges[q]:
            if isinstance(label, CallSite):
                call, out = th.sites[label.index]
                calls[q].append((Call(call.method), index[entries[call.method]], label.index))
            elif isinstance(label, _End):
                continue
            else:
                internal[q].append((label, t))
    for site, (call, out) in enumerate(th.sites):
        for q in range(n):
            if call.method in finish[q]:
                returns[q].append((Return(call.targets), site, index[out]))
    main_entry = index[entries[p.main]]
    accepting = {q for q in range(n) if p.main in finish[q]}
    vpa = Vpa(internal, calls, returns, main_entry, frozenset(accepting))
    vpa = _restrict(vpa, _finishable(vpa, finish))
    if partial:
        vpa.prefix_closed = True
    return vpa


def _finishable(vpa: Vpa, finish: dict[int, set[str]]) -> set[int]:
    """States from which the current method body can run to completion."""
    good = {q for q, ms in finish.items() if ms}
    # return edges tell, per call site, which continuation is used
    changed = True
    while changed:
        changed = False
        for q in range(vpa.size):
            if q in good:
                continue
            if any(t in good for _, t in vpa.internal[q]):
                good.add(q)
                changed = True
                continue
            for _, entry, site in vpa.calls[q]:
                if entry not in good:
                    continue
                cont = {t for r in range(vpa.size) for _, p, t in vpa.returns[r] if p == site}
                if cont & good:
                    good.add(q)
                    changed = True
                    break
    return good


def _restrict(vpa: Vpa, keep: set[int]) -> Vpa:
    keep = set(keep) | {vpa.initial}
    old = sorted(keep, key=lambda q: (q != vpa.initial, q))
    new = {q: i for i, q in enumerate(old)}
    internal = [[(a, new[t]) for a, t in vpa.internal[q] if t in new] for q in old]
    calls = []
    for q in old:
        cs = []
        for a, t, site in vpa.calls[q]:
            conts = [r for r in keep for _, p, u in vpa.returns[r] if p == site and u in new]
            if t in new and conts:
                cs.append((a, new[t], site))
        calls.append(cs)
    returns = [[(a, p, new[t]) for a, p, t in vpa.returns[q] if t in new] for q in old]
    acc = frozenset(new[q] for q in vpa.accepting if q in new)
    return Vpa(internal, calls, returns, 0, acc, vpa.prefix_closed)


def universal_vpa(letters: Iterable[Letter]) -> Vpa:
    """One-state VPA accepting every well-matched word over ``letters``."""
    internal, calls, returns = [], [], []
    for a in letters:
        if isinstance(a, Call):
            calls.append((a, 0, "*"))
        elif isinstance(a, Return):
            returns.append((a, "*", 0))
        else:
            internal.append((a, 0))
    return Vpa([internal], [calls], [returns], 0, frozenset({0}))


def empty_vpa() -> Vpa:
    return Vpa([[]], [[]], [[]], 0, frozenset())


# --------------------------------------------------------------------------
# recursive feasibility automaton


def primed(v: str) -> str:
    return v + "'"


class RFeas:
    """Reactive VPA tracking congruence over ``V`` and caller copies ``V'``."""

    def __init__(self, variables: Sequence[str], outs: dict[str, tuple[str, ...]]):
        self.variables = tuple(variables)
        self.outs = dict(outs)
        names = self.variables + tuple(primed(v) for v in self.variables)
        if len(set(names)) != len(names):
            raise ValueError("variable names clash with their primed copies")
        self.vocab = Vocab(names)
        self.n = len(self.variables)

    def initial(self) -> SccState:
        n = self.n
        return SccState(self.vocab, tuple(range(n)) + (-1,) * n)

    def initial_states(self):
        return [self.initial()]

    def is_accepting(self, q) -> bool:
        return q is not REJECT

    def react_internal(self, q, a):
        return [scc.step(q, a)]

    def react_call(self, q, a: Call):
        return [(self.call(q), q)]

    def react_return(self, q, a: Return, pop):
        raise TypeError("return needs the called method; use RFeas.ret")

    # the transitions ------------------------------------------------------
    def call(self, q: SccState) -> SccState:
        if q is REJECT:
            return REJECT
        n = self.n
        owner = list(q.cls[:n]) + list(q.cls[:n])
        return scc.rebuild(self.vocab, owner, q.diseq, q.funcs).state

    def ret(self, q: SccState, caller: SccState, targets: Sequence[str], method: str) -> SccState:
        """Merge the callee state ``q`` with the caller state pushed at the call."""
        if q is REJECT or caller is REJECT:
            return REJECT
        outs = self.outs[method]
        if len(outs) != len(targets):
            raise ValueError(f"return of {method!r} expects {len(outs)} target(s), got {len(targets)}")
        n = self.n
        off = 2 * n
        shift = lambda c: c + off if c >= 0 else -1  # noqa: E731
        merges = [(caller.cls[i] + off, q.cls[n + i]) for i in range(n)]
        idx = {v: i for i, v in enumerate(self.variables)}
        owner = [shift(caller.cls[i]) for i in range(n)]
        for w, o in zip(targets, outs):
            owner[idx[w]] = q.cls[idx[o]]
        owner += [shift(caller.cls[n + i]) for i in range(n)]
        diseq = list(q.diseq) + [(a + off, b + off) for a, b in caller.diseq]
        funcs = list(q.funcs) + [(f, tuple(a + off for a in args), t + off) for f, args, t in caller.funcs]
        r = scc.rebuild(self.vocab, owner, diseq, funcs, merges)
        return REJECT if r.reflexive else r.state

    def run(self, word: Sequence[Letter]) -> tuple[object, int | None]:
        """Run on a (prefix of a) well-matched word; ``(final, reject position)``."""
        q = self.initial()
        stack: list[tuple[SccState, str]] = []
        for pos, a in enumerate(word):
            if isinstance(a, Call):
                stack.append((q, a.method))
                q = self.call(q)
            elif isinstance(a, Return):
                if not stack:
                    raise ValueError(f"unmatched return at position {pos}")
                caller, m = stack.pop()
                q = self.ret(q, caller, a.targets, m)
            else:
                q = scc.step(q, a)
            if q is REJECT:
                return REJECT, pos
        return q, None


# --------------------------------------------------------------------------
# products and emptiness


class ProgramFeasProduct:
    """Generative product of an execution VPA with the feasibility VPA.

    Product states are ``(vpa state, rfeas state)``; stack symbols are
    ``(call site, method, pushed rfeas state)``.  Rejecting states are
    pruned.
    """

    def __init__(self, vpa: Vpa, rfeas: RFeas):
        self.vpa = vpa
        self.rfeas = rfeas

    def initial_states(self):
        return [(q, self.rfeas.initial()) for q in self.vpa.initial_states()]

    def internal_moves(self, s):
        q, r = s
        for a, t in self.vpa.internal_moves(q):
            r2 = scc.step(r, a)
            if r2 is not REJECT:
                yield a, (t, r2)

    def call_moves(self, s):
        q, r = s
        for a, t, site in self.vpa.call_moves(q):
            yield a, (t, self.rfeas.call(r)), (site, a.method, r)

    def return_moves(self, s, pop):
        q, r = s
        site, method, caller = pop
        for a, t in self.vpa.return_moves(q, site):
            r2 = self.rfeas.ret(r, caller, a.targets, method)
            if r2 is not REJECT:
                yield a, (t, r2)

    def is_accepting(self, s) -> bool:
        q, r = s
        return self.vpa.is_accepting(q) and r is not REJECT


class VpaProduct:
    """Synchronized product of a generative and a reactive explicit VPA."""

    def __init__(self, a: Vpa, b: Vpa):
        self.a = a
        self.b = b

    def initial_states(self):
        return [(p, q) for p in self.a.initial_states() for q in self.b.initial_states()]

    def internal_moves(self, s):
        p, q = s
        for a, p2 in self.a.internal_moves(p):
            for q2 in self.b.react_internal(q, a):
                yield a, (p2, q2)

    def call_moves(self, s):
        p, q = s
        for a, p2, x in self.a.call_moves(p):
            for q2, y in self.b.react_call(q, a):
                yield a, (p2, q2), (x, y)

    def return_moves(self, s, pop):
        p, q = s
        x, y = pop
        for a, p2 in self.a.return_moves(p, x):
            for q2 in self.b.react_return(q, a, y):
                yield a, (p2, q2)

    def is_accepting(self, s) -> bool:
        return self.a.is_accepting(s[0]) and self.b.is_accepting(s[1])


def vpa_intersect(a: Vpa, b: Vpa) -> Vpa:
    """Explicit product VPA (reachable part)."""
    prod = VpaProduct(a, b)
    index: dict = {}
    order: list = []
    for s in prod.initial_states():
        index[s] = len(order)
        order.append(s)
    pops = {(x, y) for qa in range(a.size) for _, x, _ in a.returns[qa] for qb in range(b.size) for _, y, _ in b.returns[qb]}
    internal, calls, returns = [], [], []
    i = 0

    def get(s):
        if s not in index:
            index[s] = len(order)
            order.append(s)
        return index[s]

    while i < len(order):
        s = order[i]
        internal.append([(l, get(t)) for l, t in prod.internal_moves(s)])
        calls.append([(l, get(t), push) for l, t, push in prod.call_moves(s)])
        returns.append([(l, pop, get(t)) for pop in sorted(pops, key=repr) for l, t in prod.return_moves(s, pop)])
        i += 1
    acc = frozenset(j for j, s in enumerate(order) if a.is_accepting(s[0]) and b.is_accepting(s[1]) and not a.prefix_closed)
    if a.prefix_closed and b.prefix_closed:
        return Vpa(internal, calls, returns, 0, frozenset(range(len(order))), True)
    if a.prefix_closed or b.prefix_closed:
        acc = frozenset(
            j for j, s in enumerate(order)
            if (a.prefix_closed or s[0] in a.accepting) and (b.prefix_closed or s[1] in b.accepting)
        )
    return Vpa(internal, calls, returns, 0, acc)


@dataclass
class EmptinessResult:
    empty: bool
    witness: list[Letter] | None
    summaries: int


def vpa_empty(vpa, *, budget: int = 1_000_000) -> EmptinessResult:
    """Emptiness (well-matched acceptance) by summary saturation.

    Facts ``(entry, node)`` say that ``node`` is reachable from the
    method entry ``entry`` by a well-matched word.  Calls register the
    caller at the callee entry; a return from a node of that entry's
    context closes a summary back in the caller's context.  Each fact
    keeps one backpointer, from which a witness word is rebuilt.
    """
    starts = list(vpa.initial_states())
    back: dict[tuple, tuple] = {}
    work: list[tuple] = []
    callers: dict = {}  # entry -> list of (caller fact, call letter, push)
    exits: dict = {}  # entry -> list of facts in that context

    def add(fact, reason):
        if fact in back:
            return
        back[fact] = reason
        if len(back) > budget:
            raise BudgetExceeded("emptiness check", budget)
        work.append(fact)

    for s in starts:
        add((("top", s), s), ("start",))
    i = 0
    while i < len(work):
        fact = work[i]
        i += 1
        entry, node = fact
        if entry[0] == "top" and vpa.is_accepting(node):
            return EmptinessResult(False, _rebuild(back, fact), len(back))
        for a, t in vpa.internal_moves(node):
            add((entry, t), ("internal", fact, a))
        for a, t, push in vpa.call_moves(node):
            callee = ("call", t)
            callers.setdefault(callee, []).append((fact, a, push))
            add((callee, t), ("entry",))
            for ex in list(exits.get(callee, ())):
                for ra, rt in vpa.return_moves(ex[1], push):
                    add((entry, rt), ("return", fact, a, ex, ra))
        exits.setdefault(entry, []).append(fact)
        for cfact, ca, push in list(callers.get(entry, ())):
            for ra, rt in vpa.return_moves(node, push):
                add((cfact[0], rt), ("return", cfact, ca, fact, ra))
    return EmptinessResult(True, None, len(back))


def _rebuild(back: dict, fact) -> list[Letter]:
    """Word leading to ``fact`` from its context entry (iterative)."""
    out: list[Letter] = []
    # explicit stack of pending items: facts to expand or letters to emit
    stack: list = [("fact", fact)]
    while stack:
        kind, item = stack.pop()
        if kind == "letter":
            out.append(item)
            continue
        reason = back[item]
        tag = reason[0]
        if tag in ("start", "entry"):
            continue
        if tag == "internal":
            _, prev, a = reason
            stack.append(("letter", a))
            stack.append(("fact", prev))
        else:
            _, cfact, ca, efact, ra = reason
            stack.append(("letter", ra))
            stack.append(("fact", efact))
            stack.append(("letter", ca))
            stack.append(("fact", cfact))
    return out


def rfeas_accepts(word: Sequence[Letter], variables: Sequence[str], outs: dict[str, tuple[str, ...]]) -> bool:
    return RFeas(variables, outs).run(word)[0] is not REJECT


# --------------------------------------------------------------------------
# verification


def bounded_executions(vpa: Vpa, max_len: int, max_depth: int, limit: int) -> list[tuple[Letter, ...]]:
    """Up to ``limit`` words of the VPA (shortest first), bounded length and depth.

    Ties are broken by the letters' text.  Prefix-closed VPAs are explored
    one length at a time, so only the needed levels are generated.
    """
    key = lambda w: (len(w), [str(a) for a in w])  # noqa: E731
    if not vpa.prefix_closed:
        return sorted(vpa.words(max_len, max_depth), key=key)[:limit]
    out: list[tuple[Letter, ...]] = []
    level = {(): frozenset((q, ()) for q in vpa.initial_states())}
    for _ in range(max_len + 1):
        words = sorted(level, key=key)
        out.extend(words[: limit - len(out)])
        if len(out) >= limit:
            break
        nxt: dict[tuple[Letter, ...], set] = {}
        for w in words:
            for q, stack in level[w]:
                for a, t in vpa.internal[q]:
                    nxt.setdefault(w + (a,), set()).add((t, stack))
                if len(stack) < max_depth:
                    for a, t, push in vpa.calls[q]:
                        nxt.setdefault(w + (a,), set()).add((t, stack + (push,)))
                if stack:
                    for a, pop, t in vpa.returns[q]:
                        if pop == stack[-1]:
                            nxt.setdefault(w + (a,), set()).add((t, stack[:-1]))
        if not nxt:
            break
        level = {w: frozenset(c) for w, c in nxt.items()}
    return out


def verify_recursive(
    program: S.Program,
    post: S.Formula | None = None,
    *,
    budget: int = 1_000_000,
    coherence_len: int = 12,
    coherence_depth: int = 2,
    coherence_limit: int = 20_000,
):
    """Verify a coherent recursive program.

    Coherence is spot-checked with the term oracle on bounded partial
    executions (no automaton decides it here); verification itself is
    emptiness of the execution VPA intersected with the feasibility VPA.
    """
    from .verifier import DISAGREEMENT, NOT_COHERENT, VERIFIED, VIOLATED, Verdict, prepare

    _, lowered = prepare(program, post)
    variables = lowered.variables
    outs = lowered.outs
    partial = exec_vpa(lowered, partial=True)
    bounded = bounded_executions(partial, coherence_len, coherence_depth, coherence_limit)
    # coherence is prefix-closed and the oracle reports the first violating
    # letter, so checking the maximal words covers every bounded word
    proper = {w[:-1] for w in bounded if w}
    maximal = [w for w in bounded if w not in proper]
    violations = []
    for w in maximal:
        res = oracle_coherent(w, variables, outs=outs)
        if not res.coherent:
            prefix = w[: res.position + 1]
            violations.append(((len(prefix), [str(a) for a in prefix]), prefix, res.kind))
    checked = len(bounded)
    if violations:
        _, prefix, kind = min(violations, key=lambda v: v[0])
        return Verdict(
            NOT_COHERENT,
            witness=list(prefix),
            coherence_kind=kind,
            detail="a bounded execution is not coherent",
            stats={"coherence_spot_checks": checked},
        )
    vpa = exec_vpa(lowered)
    product = ProgramFeasProduct(vpa, RFeas(variables, outs))
    res = vpa_empty(product, budget=budget)
    stats = {"coherence_spot_checks": checked, "summaries": res.summaries, "vpa_states": vpa.size}
    if res.empty:
        return Verdict(VERIFIED, stats=stats)
    if not oracle_feasible(res.witness, variables, outs=outs):
        return Verdict(
            DISAGREEMENT,
            counterexample=res.witness,
            detail="the feasibility automaton accepts a counterexample that the term model refutes",
            stats=stats,
        )
    return Verdict(VIOLATED, counterexample=res.witness, stats=stats)
