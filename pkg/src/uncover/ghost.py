"""k-coherence: ghost variables that may be written at any point.

The k-coherent executions are the projections (ghost letters erased) of
coherent executions over ``V`` plus ``k`` write-only ghosts.  The
automaton below runs the coherence automaton over ``V`` and the ghosts,
treating ghost assignments as silent moves; a set of its states is a
deterministic state (subset construction done on the fly).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import scc
from . import syntax as S
from .coherence import NotCoherent, coh_initial, coh_step
from .executions import Ghost, Letter, exec_nfa
from .oracle import oracle_coherent, oracle_feasible
from .search import BudgetExceeded, bfs
from .verifier import DISAGREEMENT, NOT_K_COHERENT, VERIFIED, VIOLATED, Verdict, prepare

GHOST_PREFIX = "$g"


def ghost_names(k: int) -> tuple[str, ...]:
    if k < 0:
        raise ValueError("k must be non-negative")
    return tuple(f"{GHOST_PREFIX}{i}" for i in range(1, k + 1))


def ghost_letters(variables: Sequence[str], ghosts: Sequence[str]) -> list[Ghost]:
    return [Ghost(g, x) for g in ghosts for x in variables]


@dataclass
class KccAutomaton:
    """Nondeterministic automaton for k-coherent executions over ``V``."""

    variables: tuple[str, ...]
    ghosts: tuple[str, ...]

    def __post_init__(self):
        self.silent = ghost_letters(self.variables, self.ghosts)
        self._closure1: dict = {}
        self._step1: dict = {}
        self._silent: dict = {}
        self._intern: dict = {}

    @property
    def initial(self):
        return coh_initial(self.variables, self.ghosts)

    def closure(self, states: Iterable, parents: dict | None = None) -> frozenset:
        """Silent-move closure; live (coherent) states only.

        With ``parents`` each newly reached state records ``(source,
        ghost letter)``.
        """
        seen = {self._intern.setdefault(q, q) for q in states if not isinstance(q, NotCoherent)}
        work = deque(sorted(seen, key=_order_key))
        while work:
            q = work.popleft()
            for g in self.silent:
                if not q.base.defined(g.source):
                    continue
                key = (q, g)
                r = self._silent.get(key)
                if r is None:
                    r = coh_step(q, g)
                    if not isinstance(r, NotCoherent):
                        r = self._intern.setdefault(r, r)
                    self._silent[key] = r
                if isinstance(r, NotCoherent) or r in seen:
                    continue
                seen.add(r)
                if parents is not None:
                    parents.setdefault(r, (q, g))
                work.append(r)
        return frozenset(seen)

    def start(self) -> frozenset:
        return self.closure([self.initial])

    def closure_of(self, q) -> frozenset:
        """Closure of a single state (memoized; closure distributes over union)."""
        hit = self._closure1.get(q)
        if hit is None:
            hit = self.closure([q])
            self._closure1[q] = hit
        return hit

    def step(self, subset: frozenset, a: Letter) -> frozenset:
        out: set = set()
        for q in subset:
            key = (q, a)
            hit = self._step1.get(key)
            if hit is None:
                r = coh_step(q, a)
                hit = frozenset() if isinstance(r, NotCoherent) else self.closure_of(r)
                self._step1[key] = hit
            out |= hit
        return frozenset(out)

    def accepts(self, word: Iterable[Letter]) -> bool:
        cur = self.start()
        for a in word:
            cur = self.step(cur, a)
            if not cur:
                return False
        return True


def _order_key(q) -> tuple:
    b = q.base
    return (b.cls, sorted(b.funcs), sorted(q.computed), sorted(q.up), sorted(q.dirty))


def kcc_automaton(variables: Sequence[str], k: int) -> KccAutomaton:
    return KccAutomaton(tuple(variables), ghost_names(k))


def kcc_witness(word: Sequence[Letter], variables: Sequence[str], k: int) -> list[Letter] | None:
    """A ghost interleaving of ``word`` that is coherent, or ``None``.

    Runs the subset construction keeping, for every reached state, one
    predecessor (a ghost letter or a word letter) and reads the path back.
    """
    auto = kcc_automaton(variables, k)
    layers: list[dict] = []
    parents: dict = {}
    cur = auto.closure([auto.initial], parents)
    layers.append(parents)
    for a in word:
        parents = {}
        moved = {}
        for q in sorted(cur, key=_order_key):
            r = coh_step(q, a)
            if isinstance(r, NotCoherent) or r in moved:
                continue
            moved[r] = q
        cur = auto.closure(moved, parents)
        for r, q in moved.items():
            parents[r] = ("word", q, a)
        layers.append(parents)
        if not cur:
            return None
    # read one path backwards
    q = min(cur, key=_order_key)
    out: list[Letter] = []
    for i in range(len(word), -1, -1):
        par = layers[i]
        while q in par:
            entry = par[q]
            if len(entry) == 3:
                _, prev, a = entry
                out.append(a)
                q = prev
                break
            prev, g = entry
            out.append(g)
            q = prev
    out.reverse()
    return out


@dataclass
class KCoherenceVerdict:
    k_coherent: bool
    witness: list[Letter]
    stats: dict


def is_k_coherent(
    program: S.Program,
    k: int,
    *,
    budget: int = 1_000_000,
    subset_budget: int = 100_000,
    threads: int = 1,
) -> KCoherenceVerdict:
    """Check that every partial execution is k-coherent.

    Product of the partial-execution NFA with the determinized
    k-coherence automaton; a product state with the empty subset is a
    witness.  ``subset_budget`` bounds the number of distinct subsets.
    """
    p = S.normalize(program)
    nfa = exec_nfa(p, partial=True)
    auto = kcc_automaton(p.variables, k)
    subsets: dict[frozenset, frozenset] = {}
    cache: dict[tuple[frozenset, Letter], frozenset] = {}

    def intern(sub: frozenset) -> frozenset:
        hit = subsets.get(sub)
        if hit is None:
            if len(subsets) >= subset_budget:
                raise BudgetExceeded("subset construction", subset_budget)
            subsets[sub] = sub
            hit = sub
        return hit

    def succ(node):
        state, sub = node
        for a, t in nfa.edges[state]:
            key = (sub, a)
            nxt = cache.get(key)
            if nxt is None:
                nxt = intern(auto.step(sub, a))
                cache[key] = nxt
            yield a, (t, nxt)

    res = bfs(
        [(nfa.initial, intern(auto.start()))],
        succ,
        lambda n: not n[1],
        budget=budget,
        what="k-coherence check",
        threads=threads,
    )
    stats = res.stats.as_dict()
    stats["subset_states"] = len(subsets)
    stats["nfa_states"] = nfa.size
    if res.found:
        return KCoherenceVerdict(False, res.path, stats)
    return KCoherenceVerdict(True, [], stats)


def verify_k(
    program: S.Program,
    post: S.Formula | None = None,
    k: int = 1,
    *,
    budget: int = 1_000_000,
    subset_budget: int = 100_000,
    threads: int = 1,
) -> Verdict:
    """Verify a k-coherent program.

    Searches the product of the complete-execution NFA with the coherence
    and feasibility automata over ``V`` plus ``k`` ghosts, where ghost
    assignments are silent moves of the program NFA.
    """
    _, lowered = prepare(program, post)
    variables = lowered.variables
    gate = is_k_coherent(lowered, k, budget=budget, subset_budget=subset_budget, threads=threads)
    stats = {"k_coherence": gate.stats}
    if not gate.k_coherent:
        return Verdict(
            NOT_K_COHERENT,
            witness=gate.witness,
            k=k,
            detail=f"some execution is not {k}-coherent",
            stats=stats,
        )
    ghosts = ghost_names(k)
    nfa = exec_nfa(lowered)
    silent = ghost_letters(variables, ghosts)

    def succ(node):
        state, cq, fq = node
        for a, t in nfa.edges[state]:
            c2 = coh_step(cq, a)
            if isinstance(c2, NotCoherent):
                continue
            f2 = scc.step(fq, a)
            if f2 is scc.REJECT:
                continue
            yield a, (t, c2, f2)
        for g in silent:
            if not cq.base.defined(g.source):
                continue
            c2 = coh_step(cq, g)
            if isinstance(c2, NotCoherent):
                continue
            yield g, (state, c2, scc.step(fq, g))

    res = bfs(
        [(nfa.initial, coh_initial(variables, ghosts), scc.initial_state(variables, ghosts))],
        succ,
        lambda n: n[0] in nfa.accepting,
        budget=budget,
        what="k-verification",
        threads=threads,
    )
    stats["search"] = res.stats.as_dict()
    if not res.found:
        return Verdict(VERIFIED, k=k, stats=stats)
    ghost_word = res.path
    cex = [a for a in ghost_word if not isinstance(a, Ghost)]
    if not oracle_feasible(ghost_word, variables, ghosts=ghosts):
        return Verdict(
            DISAGREEMENT,
            counterexample=cex,
            ghost_witness=ghost_word,
            k=k,
            final_state=res.goal[2],
            detail="the feasibility automaton accepts a counterexample that the term model refutes",
            stats=stats,
        )
    return Verdict(VIOLATED, counterexample=cex, ghost_witness=ghost_word, k=k, final_state=res.goal[2], stats=stats)


def ghost_witness_is_valid(word: Sequence[Letter], ghost_word: Sequence[Letter], variables, k: int) -> bool:
    ghosts = ghost_names(k)
    return (
        [a for a in ghost_word if not isinstance(a, Ghost)] == list(word)
        and oracle_coherent(ghost_word, variables, ghosts=ghosts).coherent
    )
