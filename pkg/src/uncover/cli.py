"""Command-line driver: ``uncover check | verify | trace``.

Exit codes:

* 0 -- the property holds (coherent, verified, feasible/coherent trace);
* 1 -- the property fails (a witness is reported);
* 2 -- usage, parse or input error;
* 3 -- a state budget was exceeded;
* 4 -- ``verify`` on a program that is not (k-)coherent;
* 5 -- internal cross-check failure: the automata and the term oracle
  disagree on a coherent execution.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from typing import Any, Sequence

from . import __version__
from . import coherence as C
from . import ghost as G
from . import recvpa as R
from . import scc
from . import syntax as S
from . import verifier as Vf
from .executions import Letter, Trace, TraceError, TraceHeader, evaluate, exec_nfa, format_trace, load_trace
from .oracle import expected_abstraction, feasible_evaluation, oracle_coherent
from .search import BudgetExceeded

SCHEMA = 1

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_NOT_COHERENT = 4
EXIT_DISAGREEMENT = 5

DEFAULT_MAX_STATES = 1_000_000
DEFAULT_MAX_SUBSET_STATES = 100_000


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# reports


def _header_for(program: S.Program, ghosts: Sequence[str] = ()) -> TraceHeader:
    methods = tuple((m.name, m.outs) for m in program.methods)
    return TraceHeader(program.variables, tuple(program.signature.functions), tuple(ghosts), methods)


def witness_text(program: S.Program, word: Sequence[Letter] | None, ghosts: Sequence[str] = ()) -> str | None:
    """A witness as a trace file (header included) that re-parses."""
    if word is None:
        return None
    return format_trace(Trace(_header_for(program, ghosts), tuple(word)))


def _letters(word: Sequence[Letter] | None) -> list[str] | None:
    return None if word is None else [str(a) for a in word]


class Report:
    def __init__(self, command: dict):
        self.command = command
        self.verdict: str = ""
        self.details: dict[str, Any] = {}
        self.witness: list[str] | None = None
        self.witness_trace: str | None = None
        self.stats: dict[str, Any] = {}
        self.lines: list[str] = []
        self.exit = EXIT_OK

    def as_json(self) -> str:
        data = {
            "schema": SCHEMA,
            "command": self.command,
            "verdict": self.verdict,
            "details": self.details,
            "witness": self.witness,
            "witness_trace": self.witness_trace,
            "stats": self.stats,
        }
        return json.dumps(data, indent=2, sort_keys=True, default=str)

    def set_witness(self, program: S.Program, word: Sequence[Letter] | None, ghosts: Sequence[str] = ()) -> None:
        self.witness = _letters(word)
        self.witness_trace = witness_text(program, word, ghosts)

    def say(self, line: str) -> None:
        self.lines.append(line)


# --------------------------------------------------------------------------
# commands


def _load(path: str) -> S.Program:
    try:
        return S.load_program(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _write(path: str | None, text: str | None) -> None:
    if path and text is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _dot(path: str | None, program: S.Program) -> None:
    if not path:
        return
    lowered = Vf.prepare(program)[1]
    auto = R.exec_vpa(lowered) if lowered.recursive else exec_nfa(lowered)
    _write(path, auto.to_dot())


def cmd_check(args, report: Report) -> None:
    program = _load(args.file)
    _dot(args.dot, program)
    if program.recursive:
        if args.k is not None or args.k_max is not None:
            raise UsageError("k-coherence of recursive programs is not supported")
        res = R.verify_recursive(program, S.Const(True), budget=args.max_states)
        coherent = res.kind != Vf.NOT_COHERENT
        report.verdict = "coherent" if coherent else "not-coherent"
        report.details = {
            "property": "coherence",
            "method": "term-oracle check of bounded recursive executions",
            "kind": res.coherence_kind,
        }
        report.stats = {"coherence_spot_checks": res.stats.get("coherence_spot_checks", 0)}
        if not coherent:
            report.set_witness(program, res.witness)
        report.say("coherent (bounded check)" if coherent else f"not coherent ({res.coherence_kind} violation)")
        report.exit = EXIT_OK if coherent else EXIT_FAIL
        return
    if args.k is not None or args.k_max is not None:
        ks = [args.k] if args.k is not None else list(range(args.k_max + 1))
        found = None
        last = None
        for k in ks:
            last = G.is_k_coherent(
                program, k, budget=args.max_states, subset_budget=args.max_subset_states, threads=args.threads
            )
            report.stats[f"k={k}"] = last.stats
            if last.k_coherent:
                found = k
                break
        holds = found is not None
        report.verdict = "k-coherent" if holds else "not-k-coherent"
        report.details = {"property": "k-coherence", "k": found if holds else ks[-1]}
        if args.k_max is not None:
            report.details["k_max"] = args.k_max
        if not holds:
            report.set_witness(program, last.witness)
        report.say(f"{found}-coherent" if holds else f"not {ks[-1]}-coherent")
        report.exit = EXIT_OK if holds else EXIT_FAIL
        return
    res = C.program_is_coherent(program, budget=args.max_states, threads=args.threads)
    report.verdict = "coherent" if res.coherent else "not-coherent"
    report.details = {"property": "coherence", "kind": res.kind}
    report.stats = res.stats.as_dict()
    if not res.coherent:
        report.set_witness(program, res.witness)
        report.say(f"not coherent ({res.kind} violation)")
    else:
        report.say("coherent")
    report.exit = EXIT_OK if res.coherent else EXIT_FAIL


_VERIFY_EXIT = {
    Vf.VERIFIED: EXIT_OK,
    Vf.VIOLATED: EXIT_FAIL,
    Vf.NOT_COHERENT: EXIT_NOT_COHERENT,
    Vf.NOT_K_COHERENT: EXIT_NOT_COHERENT,
    Vf.DISAGREEMENT: EXIT_DISAGREEMENT,
}


def cmd_verify(args, report: Report) -> None:
    program = _load(args.file)
    if args.post is not None:
        program = dataclasses.replace(program, post=S.parse_formula(args.post, program))
    _dot(args.dot, program)
    if args.recursive and not program.recursive:
        raise UsageError("--recursive given, but the program has no methods")
    ghosts: tuple[str, ...] = ()
    if program.recursive:
        if args.k is not None:
            raise UsageError("k-coherence of recursive programs is not supported")
        v = R.verify_recursive(program, budget=args.max_states)
    elif args.k is not None:
        v = G.verify_k(
            program, None, args.k, budget=args.max_states, subset_budget=args.max_subset_states, threads=args.threads
        )
        ghosts = G.ghost_names(args.k)
    else:
        v = Vf.verify(program, budget=args.max_states, threads=args.threads)
    lowered = Vf.prepare(program)[1]
    report.verdict = v.kind
    report.details = {"detail": v.detail or None, "coherence_kind": v.coherence_kind, "k": v.k}
    if v.final_state is not None and hasattr(v.final_state, "dump"):
        report.details["final_state"] = v.final_state.dump()
    if args.k is not None:
        report.details["ghost_witness"] = _letters(v.ghost_witness)
        report.details["ghost_trace"] = witness_text(lowered, v.ghost_witness, ghosts)
    report.stats = v.stats
    if v.counterexample is not None:
        report.set_witness(lowered, v.counterexample)
        _write(args.counterexample, report.witness_trace)
    elif v.witness is not None:
        report.set_witness(lowered, v.witness)
    report.say(v.kind + (f": {v.detail}" if v.detail else ""))
    report.exit = _VERIFY_EXIT[v.kind]


def cmd_trace(args, report: Report) -> None:
    try:
        trace = load_trace(args.file)
    except OSError as exc:
        raise UsageError(f"{args.file}: {exc.strerror}") from None
    h = trace.header
    word = trace.letters
    recursive = bool(h.methods)
    coh = oracle_coherent(word, h.variables, ghosts=h.ghosts, outs=h.outs, arities=h.arity)
    details: dict[str, Any] = {
        "length": len(word),
        "oracle_coherent": coh.coherent,
        "coherence_kind": coh.kind,
        "coherence_position": coh.position,
    }
    disagree = False
    if args.coherent:
        if recursive:
            details["automaton_coherent"] = None
        else:
            run = C.coh_run(word, h.variables, h.ghosts)
            details["automaton_coherent"] = run.coherent
            details["automaton_kind"] = run.kind
            details["automaton_position"] = run.violation_position
            disagree = (run.coherent, run.kind, run.violation_position) != (coh.coherent, coh.kind, coh.position)
        report.verdict = "coherent" if coh.coherent else "not-coherent"
        if coh.coherent:
            report.say("coherent")
        else:
            report.say(f"not coherent: {coh.kind} violation at letter {coh.position + 1}")
        report.exit = EXIT_OK if coh.coherent else EXIT_FAIL
    else:
        ev = evaluate(word, h.variables, ghosts=h.ghosts, outs=h.outs, arities=h.arity)
        feasible = feasible_evaluation(ev)
        details["oracle_feasible"] = feasible
        if recursive:
            final, pos = R.RFeas(h.variables, h.outs).run(word)
            states = None
        else:
            rep = scc.run(word, h.variables, h.ghosts, keep_states=args.run_scc)
            final, pos, states = rep.final, rep.reject_position, rep.states
        accepted = final is not scc.REJECT
        details["automaton_accepts"] = accepted
        details["reject_position"] = pos
        details["final_state"] = final.dump()
        if args.run_scc and states is not None:
            details["states"] = [q.dump() for q in states]
        disagree = coh.coherent and accepted != feasible
        if coh.coherent and accepted and feasible and not recursive:
            holders = h.variables + tuple(g for g in h.ghosts if g in ev.final)
            expected = expected_abstraction(ev, holders, h.arity)
            same = scc.abstraction(final, holders) == expected
            details["abstraction_matches_oracle"] = same
            disagree = disagree or not same
        if args.run_scc and states is not None:
            for i, q in enumerate(states):
                report.say(f"{i:3d}  {q.dump()}" if i == 0 else f"{i:3d}  {word[i - 1]!s:28}  {q.dump()}")
        report.verdict = "feasible" if feasible else "infeasible"
        report.say(report.verdict + ("" if accepted == feasible else " (the automaton disagrees)"))
        report.exit = EXIT_OK if feasible else EXIT_FAIL
    details["disagreement"] = disagree
    report.details = details
    if disagree:
        report.verdict = "disagreement"
        report.say("internal cross-check failed: automaton and oracle disagree on a coherent trace")
        report.exit = EXIT_DISAGREEMENT


# --------------------------------------------------------------------------
# argument parsing


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"environment variable {name} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uncover", description="Verifier for coherent uninterpreted programs.")
    ap.add_argument("--version", action="version", version=f"uncover {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file")
        p.add_argument("--json", action="store_true", help="print a JSON report")
        p.add_argument("--max-states", type=int, default=None, help="search budget (default 10^6, env UNCOVER_MAX_STATES)")
        p.add_argument("--max-subset-states", type=int, default=DEFAULT_MAX_SUBSET_STATES, help="subset-construction budget")
        p.add_argument("--threads", type=int, default=1, help="parallel frontier expansion")

    c = sub.add_parser("check", help="decide (k-)coherence of a program")
    common(c)
    mode = c.add_mutually_exclusive_group()
    mode.add_argument("--coherence", action="store_true", help="check coherence (default)")
    mode.add_argument("--k", type=int, default=None, help="check k-coherence")
    mode.add_argument("--k-max", type=int, default=None, help="smallest k <= K-MAX for which the program is k-coherent")
    c.add_argument("--witness", metavar="FILE", help="write the witness trace to FILE")
    c.add_argument("--dot", metavar="FILE", help="write the execution automaton as DOT")

    v = sub.add_parser("verify", help="verify the postcondition of a program")
    common(v)
    v.add_argument("--k", type=int, default=None, help="verify as a k-coherent program")
    v.add_argument("--recursive", action="store_true", help="require a recursive program (inferred otherwise)")
    v.add_argument("--post", default=None, help="postcondition overriding the one in the file")
    v.add_argument("--counterexample", metavar="FILE", help="write the counterexample trace to FILE")
    v.add_argument("--dot", metavar="FILE", help="write the execution automaton as DOT")

    t = sub.add_parser("trace", help="inspect a single execution")
    common(t)
    what = t.add_mutually_exclusive_group(required=True)
    what.add_argument("--feasible", action="store_true", help="feasibility: term oracle and automaton")
    what.add_argument("--coherent", action="store_true", help="coherence: term oracle and automaton")
    what.add_argument("--run-scc", action="store_true", help="print every feasibility-automaton state")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    command = {"name": args.command, "file": args.file}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "file", "json") and v not in (None, False)}
    command["options"] = options
    report = Report(command)
    t0 = time.perf_counter()
    try:
        if args.max_states is None:
            args.max_states = _env_int("UNCOVER_MAX_STATES", DEFAULT_MAX_STATES)
        for flag in ("k", "k_max"):
            value = getattr(args, flag, None)
            if value is not None and value < 0:
                raise UsageError(f"--{flag.replace('_', '-')} must be non-negative")
        {"check": cmd_check, "verify": cmd_verify, "trace": cmd_trace}[args.command](args, report)
        if args.command == "check":
            _write(args.witness, report.witness_trace)
    except (S.SyntaxProblem, TraceError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"uncover: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        report.verdict = "budget-exceeded"
        report.details = {"detail": str(exc)}
        report.say(f"budget exceeded: {exc}")
        report.exit = EXIT_BUDGET
    except ValueError as exc:
        print(f"uncover: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.stats["time_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    if args.json:
        print(report.as_json())
    else:
        for line in report.lines:
            print(line)
        if report.witness_trace and report.exit != EXIT_OK:
            print("witness:")
            print(report.witness_trace, end="")
    return report.exit


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
