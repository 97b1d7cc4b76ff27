from __future__ import annotations

import json

import pytest

from conftest import CORPUS
from uncover.cli import main
from uncover.executions import load_trace, parse_trace
from uncover.oracle import oracle_coherent, oracle_feasible


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def strip_time(obj):
    if isinstance(obj, dict):
        return {k: strip_time(v) for k, v in obj.items() if k != "time_ms"}
    if isinstance(obj, list):
        return [strip_time(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# check


@pytest.mark.parametrize("name, code", [("p1", 0), ("p3", 0), ("p2", 1)])
def test_check_coherence_exit_codes(capsys, name, code):
    assert run(capsys, "check", CORPUS / f"{name}.up", "--coherence")[0] == code


def test_check_writes_a_witness_file(capsys, tmp_path):
    out = tmp_path / "w.trace"
    code, report = run_json(capsys, "check", CORPUS / "p2.up", "--witness", out)
    assert code == 1 and report["verdict"] == "not-coherent"
    t = load_trace(str(out))
    assert [str(a) for a in t.letters] == report["witness"]
    res = oracle_coherent(t.letters, t.header.variables, arities=t.header.arity)
    assert not res.coherent and res.kind == "memoizing"


def test_check_k(capsys):
    assert run(capsys, "check", CORPUS / "p2.up", "--k", "1")[0] == 0
    assert run(capsys, "check", CORPUS / "p2.up", "--k", "0")[0] == 1
    code, report = run_json(capsys, "check", CORPUS / "p2.up", "--k-max", "2")
    assert code == 0 and report["details"]["k"] == 1


def test_check_writes_dot(capsys, tmp_path):
    out = tmp_path / "a.dot"
    run(capsys, "check", CORPUS / "p1.up", "--dot", out)
    assert out.read_text().startswith("digraph")


# --------------------------------------------------------------------------
# verify


@pytest.mark.parametrize(
    "name, extra, code",
    [
        ("p3_instrumented", [], 0),
        ("p3_wrong_post", [], 1),
        ("skip_false", [], 1),
        ("p2_instrumented", [], 4),
        ("p2_instrumented", ["--k", "1"], 0),
        ("congruent_eq", [], 0),
        ("dag_search", [], 0),
        ("dag_search", ["--post", "false"], 1),
        ("congruent_call", ["--recursive"], 0),
    ],
)
def test_verify_exit_codes(capsys, name, extra, code):
    assert run(capsys, "verify", CORPUS / f"{name}.up", *extra)[0] == code


def test_skip_false_counterexample_is_empty(capsys, tmp_path):
    out = tmp_path / "cex.trace"
    code, report = run_json(capsys, "verify", CORPUS / "skip_false.up", "--counterexample", out)
    assert code == 1 and report["verdict"] == "violated"
    assert report["witness"] == []
    assert load_trace(str(out)).letters == ()


def test_counterexample_round_trips_and_is_feasible(capsys):
    code, report = run_json(capsys, "verify", CORPUS / "p3_wrong_post.up")
    assert code == 1
    t = parse_trace(report["witness_trace"])
    assert [str(a) for a in t.letters] == report["witness"]
    assert oracle_feasible(t.letters, t.header.variables)


def test_recursive_flag_on_a_flat_program_is_a_usage_error(capsys):
    assert run(capsys, "verify", CORPUS / "p1.up", "--recursive")[0] == 2


def test_bad_post_is_a_parse_error(capsys):
    assert run(capsys, "verify", CORPUS / "p1.up", "--post", "x = ")[0] == 2


# --------------------------------------------------------------------------
# trace


def test_trace_feasible_rho1(capsys):
    code, report = run_json(capsys, "trace", CORPUS / "rho1.trace", "--feasible")
    assert code == 0 and report["verdict"] == "feasible"
    assert report["details"]["abstraction_matches_oracle"] is True


def test_trace_coherent_pi_prime(capsys):
    code, report = run_json(capsys, "trace", CORPUS / "pi_prime.trace", "--coherent")
    assert code == 1
    assert report["details"]["oracle_coherent"] is False
    assert report["details"]["coherence_kind"] == "memoizing"


def test_trace_contradiction_is_infeasible(capsys, tmp_path):
    f = tmp_path / "c.trace"
    f.write_text("vars x, y;\nassume(x=y)\nassume(x!=y)\n")
    code, report = run_json(capsys, "trace", f, "--feasible")
    assert code == 1 and report["verdict"] == "infeasible"
    assert report["details"]["reject_position"] == 1


def test_trace_run_scc_prints_every_state(capsys):
    code, out, _ = run(capsys, "trace", CORPUS / "rho1.trace", "--run-scc")
    assert code == 0
    n = len(load_trace(str(CORPUS / "rho1.trace")).letters)
    assert len([line for line in out.splitlines() if line[:3].strip().isdigit()]) == n + 1


def test_recursive_trace_is_checked_with_the_recursive_automaton(capsys):
    code, report = run_json(capsys, "trace", CORPUS / "call_return.trace", "--feasible")
    assert code == 1
    assert report["details"]["automaton_accepts"] is False
    assert report["details"]["reject_position"] == 4


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.trace")), ids=lambda p: p.stem)
def test_run_scc_never_disagrees_on_corpus_traces(capsys, path):
    code, report = run_json(capsys, "trace", path, "--run-scc")
    assert code != 5, report["details"]
    assert report["details"]["disagreement"] is False


# --------------------------------------------------------------------------
# errors and budgets


def test_parse_error_exit_code(capsys, tmp_path):
    f = tmp_path / "bad.up"
    f.write_text("vars x;\nprogram { x := ; }\n")
    code, _, err = run(capsys, "check", f)
    assert code == 2
    assert "bad.up:2:" in err


def test_missing_file_is_a_usage_error(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.up")[0] == 2


def test_unknown_flag_is_a_usage_error(capsys):
    assert run(capsys, "check", CORPUS / "p1.up", "--frobnicate")[0] == 2


def test_budget_exceeded_exit_code(capsys):
    code, report = run_json(capsys, "verify", CORPUS / "p3_instrumented.up", "--max-states", "1")
    assert code == 3 and report["verdict"] == "budget-exceeded"


def test_budget_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("UNCOVER_MAX_STATES", "1")
    assert run(capsys, "check", CORPUS / "p1.up")[0] == 3
    monkeypatch.setenv("UNCOVER_MAX_STATES", "many")
    assert run(capsys, "check", CORPUS / "p1.up")[0] == 2


def test_negative_k_is_a_usage_error(capsys):
    assert run(capsys, "check", CORPUS / "p2.up", "--k", "-1")[0] == 2


# --------------------------------------------------------------------------
# reports


def test_report_schema(capsys):
    code, report = run_json(capsys, "check", CORPUS / "p1.up")
    assert set(report) == {"schema", "command", "verdict", "details", "witness", "witness_trace", "stats"}
    assert report["schema"] == 1
    assert report["command"]["name"] == "check"
    assert "time_ms" in report["stats"]


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "p2.up"],
        ["check", "p2.up", "--k", "1"],
        ["verify", "p3_wrong_post.up"],
        ["verify", "dag_search.up", "--post", "false"],
        ["trace", "rho1.trace", "--run-scc"],
    ],
)
def test_reports_are_deterministic(capsys, argv):
    argv = [argv[0], CORPUS / argv[1], *argv[2:]]
    first = strip_time(run_json(capsys, *argv)[1])
    second = strip_time(run_json(capsys, *argv)[1])
    assert first == second
