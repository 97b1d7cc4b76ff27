"""Ground truth: feasibility and coherence decided directly on terms.

Everything here builds the explicit terms of an execution and runs
congruence closure over them; the automata in the other modules are
tested against these functions.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .executions import Apply, Evaluation, Letter, Test, evaluate
from .terms import Congruence, TermId, congruence_closure, naive_congruence_closure, class_map

MEMOIZING = "memoizing"
EARLY = "early-assume"


@dataclass(frozen=True)
class CoherenceResult:
    coherent: bool
    position: int | None = None
    kind: str | None = None

    def __bool__(self) -> bool:
        return self.coherent


def _eval(word, variables, ghosts=(), outs=None, arities=None) -> Evaluation:
    return evaluate(word, variables, ghosts=ghosts, outs=outs, arities=arities)


def feasible_evaluation(ev: Evaluation) -> bool:
    cc = congruence_closure(ev.arena, ev.terms, ev.alpha_pairs())
    return all(not cc.same(a, b) for a, b in ev.beta_pairs())


def oracle_feasible(
    word: Sequence[Letter],
    variables: Sequence[str],
    *,
    ghosts: Sequence[str] = (),
    outs: dict[str, tuple[str, ...]] | None = None,
    arities: dict[str, int] | None = None,
) -> bool:
    """True iff the congruence closure of alpha keeps every beta pair apart."""
    return feasible_evaluation(_eval(word, variables, ghosts, outs, arities))


def _superterm_reach(cc: Congruence, roots: Sequence[TermId]) -> set[TermId]:
    """Classes (by representative) that are superterms of ``roots`` modulo ``cc``.

    Reflexive-transitive closure of the immediate-subterm relation lifted
    to congruence classes of the closure's term set.
    """
    up: dict[TermId, set[TermId]] = defaultdict(set)
    arena = cc.arena
    for u in cc.parent:
        ru = cc.find(u)
        for c in arena.children(u):
            up[cc.find(c)].add(ru)
    seen = {cc.find(r) for r in roots}
    work = list(seen)
    while work:
        c = work.pop()
        for p in up.get(c, ()):
            if p not in seen:
                seen.add(p)
                work.append(p)
    return seen


def coherence_of_evaluation(ev: Evaluation, word: Sequence[Letter]) -> CoherenceResult:
    """Check both coherence conditions at every prefix (incremental closure).

    Holders are the variables in scope at that prefix (for recursive
    executions, the current frame; undefined ghosts hold nothing).
    """
    cc = Congruence(ev.arena, ev.terms_upto[0])
    for pos, a in enumerate(word):
        env = ev.envs[pos]
        if isinstance(a, Apply):
            t = ev.envs[pos + 1][a.target]
            if t in cc:
                seen_before: TermId | None = t
            else:
                sig = (a.fn, tuple(cc.find(c) for c in ev.arena.children(t)))
                seen_before = cc.sigtable.get(sig)
            if seen_before is not None:
                r = cc.find(seen_before)
                if not any(cc.find(h) == r for h in env.values()):
                    return CoherenceResult(False, pos, MEMOIZING)
            cc.add(t)
        elif isinstance(a, Test) and a.equal:
            tx, ty = env[a.left], env[a.right]
            held = {cc.find(h) for h in env.values()}
            if not _superterm_reach(cc, (tx, ty)) <= held:
                return CoherenceResult(False, pos, EARLY)
            cc.merge(tx, ty)
    return CoherenceResult(True)


def oracle_coherent(
    word: Sequence[Letter],
    variables: Sequence[str],
    *,
    ghosts: Sequence[str] = (),
    outs: dict[str, tuple[str, ...]] | None = None,
    arities: dict[str, int] | None = None,
) -> CoherenceResult:
    """Coherence of an execution with the first violating position and kind."""
    return coherence_of_evaluation(_eval(word, variables, ghosts, outs, arities), word)


def oracle_coherent_naive(
    word: Sequence[Letter],
    variables: Sequence[str],
    *,
    ghosts: Sequence[str] = (),
    outs: dict[str, tuple[str, ...]] | None = None,
    arities: dict[str, int] | None = None,
) -> CoherenceResult:
    """Same as :func:`oracle_coherent`, recomputing everything from scratch.

    For each prefix the closure is rebuilt with the naive fixpoint and the
    superterm relation is evaluated pairwise over the whole term set.
    Slow; used only to cross-check the incremental version.
    """
    ev = _eval(word, variables, ghosts, outs, arities)
    arena = ev.arena
    for pos, a in enumerate(word):
        env = ev.envs[pos]
        terms = ev.terms_upto[pos]
        alpha = ev.alpha_pairs(upto=pos)
        if isinstance(a, Apply):
            t = ev.envs[pos + 1][a.target]
            cls = class_map(naive_congruence_closure(arena, terms | {t}, alpha))
            if any(cls[u] == cls[t] for u in terms):
                if not any(cls[h] == cls[t] for h in env.values()):
                    return CoherenceResult(False, pos, MEMOIZING)
        elif isinstance(a, Test) and a.equal:
            cls = class_map(naive_congruence_closure(arena, terms, alpha))
            targets = {cls[env[a.left]], cls[env[a.right]]}
            held = {cls[h] for h in env.values()}
            # s is a superterm of t modulo the closure iff some syntactic
            # superterm chain connects their classes
            changed = True
            while changed:
                changed = False
                for u in terms:
                    if cls[u] in targets:
                        continue
                    if any(cls[c] in targets for c in arena.children(u)):
                        targets.add(cls[u])
                        changed = True
            if not targets <= held:
                return CoherenceResult(False, pos, EARLY)
    return CoherenceResult(True)


# --------------------------------------------------------------------------
# the abstraction a consistent automaton state must have

VarClass = frozenset  # frozenset of variable names


@dataclass(frozen=True)
class Abstraction:
    """Variable-level view of a congruence: classes, disequalities, functions.

    ``classes`` partitions the holder variables; ``diseq`` holds unordered
    pairs of classes; ``funcs`` holds ``(f, argument classes, result class)``.
    """

    classes: frozenset[VarClass]
    diseq: frozenset[frozenset[VarClass]]
    funcs: frozenset[tuple[str, tuple[VarClass, ...], VarClass]]


def expected_abstraction(
    ev: Evaluation,
    holders: Sequence[str] | None = None,
    functions: dict[str, int] | None = None,
) -> Abstraction:
    """The unique state consistent with the execution's terms and assumes."""
    import itertools

    env = ev.final
    holders = [v for v in (holders if holders is not None else env) if v in env]
    cc = congruence_closure(ev.arena, ev.terms, ev.alpha_pairs())
    by_root: dict[TermId, set[str]] = defaultdict(set)
    for v in holders:
        by_root[cc.find(env[v])].add(v)
    root_class = {r: frozenset(vs) for r, vs in by_root.items()}
    classes = frozenset(root_class.values())
    diseq = set()
    beta_roots = {(cc.find(a), cc.find(b)) for a, b in ev.beta_pairs()}
    for r1, r2 in beta_roots:
        if r1 in root_class and r2 in root_class:
            diseq.add(frozenset((root_class[r1], root_class[r2])))
    funcs = set()
    if functions is None:
        functions = {}
        for node in ev.arena.nodes:
            if node[0] != "^":
                functions[node[0]] = len(node[1])
    roots = sorted(root_class)
    for f, arity in sorted(functions.items()):
        for args in itertools.product(roots, repeat=arity):
            hit = cc.sigtable.get((f, tuple(args)))
            if hit is not None and cc.find(hit) in root_class:
                funcs.add((f, tuple(root_class[r] for r in args), root_class[cc.find(hit)]))
    return Abstraction(classes, frozenset(diseq), frozenset(funcs))
