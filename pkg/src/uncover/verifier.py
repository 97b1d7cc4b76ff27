"""Verification of non-recursive programs against their postconditions."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import scc
from . import syntax as S
from .coherence import program_is_coherent
from .executions import Letter, exec_nfa
from .oracle import oracle_coherent, oracle_feasible
from .search import SearchStats, bfs

VERIFIED = "verified"
VIOLATED = "violated"
NOT_COHERENT = "not-coherent"
NOT_K_COHERENT = "not-k-coherent"
DISAGREEMENT = "disagreement"


@dataclass
class Verdict:
    """Outcome of a verification run.

    ``counterexample`` is a complete execution of the lowered program
    accepted by the feasibility automaton (for ``violated``); ``witness``
    is a partial execution that is not (k-)coherent; ``ghost_witness`` is
    the counterexample with the ghost assignments that make it coherent.
    """

    kind: str
    counterexample: list[Letter] | None = None
    final_state: object = None
    witness: list[Letter] | None = None
    coherence_kind: str | None = None
    k: int | None = None
    ghost_witness: list[Letter] | None = None
    detail: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return self.kind == VERIFIED


def prepare(program: S.Program, post: S.Formula | None = None) -> tuple[S.Program, S.Program]:
    """Normalize and lower: returns ``(normalized, lowered)``.

    A missing postcondition means ``true``.
    """
    p = S.normalize(program)
    phi = post if post is not None else p.post
    if phi is None:
        phi = S.Const(True)
    return p, S.lower_postcondition(p, phi)


def _feasibility_search(program: S.Program, variables, budget: int, threads: int, what: str):
    nfa = exec_nfa(program)

    def succ(node):
        state, q = node
        for a, t in nfa.edges[state]:
            q2 = scc.step(q, a)
            if q2 is not scc.REJECT:
                yield a, (t, q2)

    res = bfs(
        [(nfa.initial, scc.initial_state(variables))],
        succ,
        lambda n: n[0] in nfa.accepting,
        budget=budget,
        what=what,
        threads=threads,
    )
    res.stats.extra["nfa_states"] = nfa.size
    return res


def shortest_feasible_execution(
    program: S.Program, *, budget: int = 1_000_000, threads: int = 1
) -> list[Letter] | None:
    """Shortest complete execution the feasibility automaton accepts."""
    p = S.normalize(program)
    res = _feasibility_search(p, p.variables, budget, threads, "feasible-execution search")
    return res.path if res.found else None


def verify(
    program: S.Program,
    post: S.Formula | None = None,
    *,
    budget: int = 1_000_000,
    threads: int = 1,
) -> Verdict:
    """Decide whether every feasible complete execution satisfies the post."""
    original, lowered = prepare(program, post)
    variables = lowered.variables
    gate = program_is_coherent(lowered, budget=budget, threads=threads)
    stats = {"coherence": gate.stats.as_dict()}
    if not gate.coherent:
        detail = "the program is not coherent"
        if original is not lowered:
            before = program_is_coherent(original, budget=budget, threads=threads)
            if before.coherent:
                detail = (
                    "the program is coherent, but the assumes added for the postcondition "
                    "make it non-coherent; try k-coherence (--k 1 or more)"
                )
        return Verdict(NOT_COHERENT, witness=gate.witness, coherence_kind=gate.kind, detail=detail, stats=stats)
    res = _feasibility_search(lowered, variables, budget, threads, "verification")
    stats["search"] = res.stats.as_dict()
    if not res.found:
        return Verdict(VERIFIED, stats=stats)
    cex = res.path
    final = res.goal[1]
    if not oracle_feasible(cex, variables):
        return Verdict(
            DISAGREEMENT,
            counterexample=cex,
            final_state=final,
            detail="the feasibility automaton accepts a counterexample that the term model refutes",
            stats=stats,
        )
    return Verdict(VIOLATED, counterexample=cex, final_state=final, stats=stats)


def check_counterexample(program: S.Program, verdict: Verdict) -> bool:
    """Independent re-check of a ``violated`` verdict (tests, CI)."""
    _, lowered = prepare(program)
    nfa = exec_nfa(lowered)
    cex = verdict.counterexample or []
    return (
        nfa.accepts(cex)
        and oracle_feasible(cex, lowered.variables)
        and oracle_coherent(cex, lowered.variables).coherent
    )


__all__ = [
    "Verdict",
    "verify",
    "shortest_feasible_execution",
    "check_counterexample",
    "prepare",
    "VERIFIED",
    "VIOLATED",
    "NOT_COHERENT",
    "NOT_K_COHERENT",
    "DISAGREEMENT",
    "SearchStats",
]
