"""Command line interface: exit codes, artifact writing, reductions."""
import json

import pytest

from flowtest import cli
from flowtest import problems as pb


def fixture(name):
    return str(pb.fixture_path(name))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_synth_ok_exit_zero(capsys, tmp_path):
    code, out = run(capsys, "synth", fixture("order_2x3_reactive"),
                    "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "cuts.json").is_file()
    assert (tmp_path / "strategy.json").is_file()
    assert (tmp_path / "report.json").is_file()
    report = json.loads(out.strip().splitlines()[-1])
    assert report["flow"] == 2 and report["cut_count"] == 4


def test_synth_lp_export(capsys, tmp_path):
    code, _ = run(capsys, "synth", fixture("order_2x3_reactive"),
                  "--lp-export", "--out-dir", str(tmp_path))
    assert code == 0
    assert "Subject To" in (tmp_path / "model.lp").read_text()


def test_synth_inconsistent_exit_codes(capsys):
    code, out = run(capsys, "synth", fixture("case1_blocked_goal"))
    assert code == pb.EXIT_INCONSISTENT
    assert json.loads(out.strip().splitlines()[-1])["status"] == "case1_no_path"
    code, out = run(capsys, "synth", fixture("case2_pocket"))
    assert code == pb.EXIT_INCONSISTENT


def test_schema_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid": {}, "labels": {}, "mode": "reactive"}')
    with pytest.raises(SystemExit) as exc:
        cli.main(["synth", str(bad)])
    assert exc.value.code == pb.EXIT_SCHEMA


def test_simulate_greedy(capsys):
    code, out = run(capsys, "simulate", fixture("order_2x3_reactive"),
                    "--policy", "greedy")
    assert code == 0
    record = json.loads(out.strip().splitlines()[-1])
    assert record["status"] == "done-success"
    assert record["verdicts"] == {"system": True, "test": True}


def test_simulate_exhaustive(capsys):
    code, out = run(capsys, "simulate", fixture("order_2x3_reactive"),
                    "--policy", "exhaustive")
    assert code == 0
    record = json.loads(out.strip().splitlines()[-1])
    assert record["violations"] == []
    assert record["goal_states"] == ["(1, 2)"]


def test_simulate_agent_mode(capsys):
    code, out = run(capsys, "simulate", fixture("corridor_maze_agent"))
    assert code == 0
    record = json.loads(out.strip().splitlines()[-1])
    assert record["status"] == "done-success"


def test_check_trace(capsys, tmp_path):
    trace = tmp_path / "trace.json"
    trace.write_text(json.dumps(
        [[1, 0], [0, 0], [0, 1], [0, 2], [1, 2]]))
    code, out = run(capsys, "check", fixture("order_2x3_reactive"),
                    str(trace))
    assert code == 0
    assert json.loads(out) == {"system": True, "test": True}


def test_oracle_matches_frozen_counts(capsys):
    code, out = run(capsys, "oracle", fixture("center_3x3_static"),
                    "--variant", "static")
    assert code == 0
    res = json.loads(out)
    assert res["flow"] == 3
    assert res["optimal_cut_size"] == 2


def test_oracle_refuses_oversized(capsys):
    code, _ = run(capsys, "oracle", fixture("order_2x3_reactive"),
                  "--max-decisions", "10")
    assert code == 3


def test_reduce_sat_agrees_with_dpll(capsys):
    code, out = run(capsys, "reduce-sat", "--vars", "3", "--clauses", "4",
                    "--seed", "7", "--construction", "static")
    assert code == 0
    res = json.loads(out)
    assert res["routing_decision"] == res["dpll"]


def test_bench_table_shape(capsys):
    code, out = run(capsys, "bench", "--families", "reachability",
                    "--count", "1",
                    "--rows", "3", "--cols", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split("\t")[0] == "family"
    assert len(lines) == 2
    assert len(lines[1].split("\t")) == 8
