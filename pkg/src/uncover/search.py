"""Breadth-first search over implicitly given graphs, with a state budget."""
from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Generic, Hashable, Iterable, TypeVar

N = TypeVar("N", bound=Hashable)
L = TypeVar("L")


class BudgetExceeded(RuntimeError):
    """A search visited more states than its configured budget."""

    def __init__(self, what: str, budget: int):
        super().__init__(f"{what}: state budget of {budget} exceeded")
        self.what = what
        self.budget = budget


@dataclass
class SearchStats:
    states_explored: int = 0
    time_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"states_explored": self.states_explored, "time_ms": round(self.time_ms, 3)}
        out.update(self.extra)
        return out


@dataclass
class SearchResult(Generic[N, L]):
    found: bool
    goal: N | None
    path: list[L]
    nodes: list[N]
    stats: SearchStats


def bfs(
    starts: Iterable[N],
    successors: Callable[[N], Iterable[tuple[L, N]]],
    is_goal: Callable[[N], bool],
    *,
    budget: int = 1_000_000,
    what: str = "search",
    threads: int = 1,
) -> SearchResult:
    """Shortest path from any start node to a goal node.

    ``successors`` must be deterministic; the first-found shortest path
    is then independent of ``threads`` (successor lists are computed in
    parallel per layer but merged in frontier order).
    """
    t0 = time.perf_counter()
    stats = SearchStats()
    parent: dict[N, tuple[N, L] | None] = {}
    frontier: list[N] = []
    for s in starts:
        if s not in parent:
            parent[s] = None
            frontier.append(s)

    def finish(goal: N | None) -> SearchResult:
        stats.states_explored = len(parent)
        stats.time_ms = (time.perf_counter() - t0) * 1000
        if goal is None:
            return SearchResult(False, None, [], [], stats)
        path: list = []
        nodes = [goal]
        cur = goal
        while parent[cur] is not None:
            prev, label = parent[cur]
            path.append(label)
            nodes.append(prev)
            cur = prev
        path.reverse()
        nodes.reverse()
        return SearchResult(True, goal, path, nodes, stats)

    for s in frontier:
        if is_goal(s):
            return finish(s)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while frontier:
            if pool is not None and len(frontier) > 1:
                expanded = list(pool.map(lambda n: list(successors(n)), frontier))
            else:
                expanded = [list(successors(n)) for n in frontier]
            nxt: list[N] = []
            for node, succ in zip(frontier, expanded):
                for label, child in succ:
                    if child in parent:
                        continue
                    parent[child] = (node, label)
                    if len(parent) > budget:
                        stats.states_explored = len(parent)
                        raise BudgetExceeded(what, budget)
                    if is_goal(child):
                        return finish(child)
                    nxt.append(child)
            frontier = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return finish(None)
