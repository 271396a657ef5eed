import json
import os

import pytest

from cptquit import CptParams, cpt_value, solve_program
from cptquit.cli import run

BENCH_ARGS = ["--horizon", "3", "--restarts", "4", "--seed", "0"]


def _run_json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out)


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


class TestSolve:
    def test_stdout_matches_library(self, capsys):
        obj = _run_json(capsys, ["solve", *BENCH_ARGS])
        res = solve_program(CptParams(), 3, restarts=4, seed=0)
        assert obj["value"] == res.value  # 17 significant digits round-trip
        assert obj["gain_tails"] == list(res.tails.x)
        assert obj["residual"] <= 1e-8
        assert obj["strategy"]["horizon"] == 3
        assert obj["rule"]["horizon"] == 3

    def test_output_file_is_written_once(self, tmp_path, capsys):
        out = tmp_path / "res.json"
        code = run(["solve", *BENCH_ARGS, "--output", str(out)])
        assert code == 0
        assert capsys.readouterr().out == ""
        obj = json.loads(out.read_text())
        assert obj["distribution"]["horizon"] == 3
        # atomic write leaves no temp droppings behind
        assert os.listdir(tmp_path) == ["res.json"]

    def test_custom_params_change_the_answer(self, capsys):
        a = _run_json(capsys, ["solve", *BENCH_ARGS])
        b = _run_json(
            capsys, ["solve", *BENCH_ARGS, "--alpha-plus", "0.5", "--delta-plus", "0.9"]
        )
        assert a["value"] != b["value"]


class TestRoundTrips:
    def test_distribution_feasible_embed_simulate(self, tmp_path, capsys):
        solved = _run_json(capsys, ["solve", *BENCH_ARGS])
        dist_file = _write(tmp_path, "mu.json", solved["distribution"])

        feas = _run_json(capsys, ["feasible", "--dist", dist_file])
        assert feas["feasible"] is True
        assert feas["violations"] == []

        code = run(["embed", "--dist", dist_file, "--output",
                    str(tmp_path / "rule.json")])
        assert code == 0
        rule_obj = json.loads((tmp_path / "rule.json").read_text())
        assert rule_obj == solved["rule"]

        sim = _run_json(
            capsys,
            ["simulate", "--rule", str(tmp_path / "rule.json"),
             "--paths", "20000", "--seed", "11"],
        )
        assert sum(s["count"] for s in sim["states"]) == 20000
        emp = {s["state"]: s["mass"] for s in sim["states"]}
        for st in solved["distribution"]["masses"]:
            assert emp.get(st["state"], 0.0) == pytest.approx(
                st["prob"], abs=0.02
            )

    def test_strategy_file_drives_simulate(self, tmp_path, capsys):
        solved = _run_json(capsys, ["solve", *BENCH_ARGS])
        tree_file = _write(tmp_path, "tree.json", solved["strategy"])
        sim = _run_json(
            capsys,
            ["simulate", "--strategy", tree_file, "--paths", "5000", "--seed", "3"],
        )
        assert sim["horizon"] == 3
        assert sim["cpt"] == pytest.approx(
            cpt_value({s["state"]: s["mass"] for s in sim["states"]}, CptParams()),
            abs=1e-12,
        )

    def test_simulate_reruns_identically(self, tmp_path, capsys):
        solved = _run_json(capsys, ["solve", *BENCH_ARGS])
        tree_file = _write(tmp_path, "tree.json", solved["strategy"])
        argv = ["simulate", "--strategy", tree_file, "--paths", "30000", "--seed", "9"]
        assert _run_json(capsys, argv) == _run_json(capsys, argv)


class TestFeasible:
    def test_unreachable_law_exits_two(self, tmp_path, capsys):
        dist_file = _write(
            tmp_path,
            "thirds.json",
            {
                "horizon": 3,
                "masses": [
                    {"state": -3, "prob": 1 / 3},
                    {"state": 0, "prob": 1 / 3},
                    {"state": 3, "prob": 1 / 3},
                ],
            },
        )
        code = run(["feasible", "--dist", dist_file])
        captured = capsys.readouterr()
        assert code == 2
        obj = json.loads(captured.out)
        assert obj["feasible"] is False
        assert {v["state"] for v in obj["violations"]} == {-1, 1}
        assert "not embeddable" in captured.err

    def test_longer_deadline_rescues_the_law(self, tmp_path, capsys):
        # reachable by riding to +-2 within four rounds, but not within two
        law = {
            "horizon": 2,
            "masses": [
                {"state": -2, "prob": 0.375},
                {"state": 0, "prob": 0.25},
                {"state": 2, "prob": 0.375},
            ],
        }
        dist_file = _write(tmp_path, "ride.json", law)
        assert run(["feasible", "--dist", dist_file]) == 2
        capsys.readouterr()
        feas = _run_json(capsys, ["feasible", "--dist", dist_file, "--horizon", "4"])
        assert feas["feasible"] is True


class TestAgentsAndOracle:
    def test_naive_agent(self, capsys):
        obj = _run_json(capsys, ["naive", *BENCH_ARGS])
        assert obj["kind"] == "naive"
        assert obj["strategy"]["horizon"] == 3

    def test_sophisticated_agent(self, capsys):
        obj = _run_json(capsys, ["sophisticated", "--horizon", "4"])
        assert obj["kind"] == "sophisticated"

    def test_oracle_exhaustive(self, capsys):
        obj = _run_json(capsys, ["oracle", "--horizon", "2"])
        assert obj["method"] == "exhaustive"
        assert obj["candidates"] == 8

    def test_oracle_grid_needs_step(self, capsys):
        code = run(["oracle", "--horizon", "2", "--method", "grid"])
        assert code == 1
        assert "--grid-step" in capsys.readouterr().err

    def test_oracle_grid(self, capsys):
        obj = _run_json(
            capsys, ["oracle", "--horizon", "2", "--method", "grid",
                     "--grid-step", "0.5"]
        )
        assert obj["candidates"] == 27

    def test_one_more_round(self, capsys):
        obj = _run_json(
            capsys,
            ["one-more-round", "--side", "gain", "--horizon", "5",
             "--alpha-plus", "0.88", "--alpha-minus", "0.88",
             "--delta-plus", "0.61", "--delta-minus", "0.69",
             "--lambda", "2.25"],
        )
        assert obj["action"] == "bet"
        assert 0.0 < obj["q_star"] < 0.5

    def test_enter_one_bet(self, capsys):
        obj = _run_json(capsys, ["enter-one-bet"])
        assert obj == {"q_star": 0.0, "value": 0.0, "enters": False}


class TestSweep:
    def test_csv_rows_match_individual_solves(self, capsys):
        code = run(["sweep", "--vary", "horizon", "--from", "1", "--to", "3",
                    "--restarts", "4", "--seed", "0"])
        out = capsys.readouterr().out
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "grid_value,cpt_value,residual,wall_time"
        assert len(lines) == 4
        for line in lines[1:]:
            g, v, _, _ = line.split(",")
            res = solve_program(CptParams(), int(g), restarts=4, seed=0)
            assert float(v) == res.value  # bit-exact through 17 digits

    def test_lambda_sweep_json(self, capsys):
        obj = _run_json(
            capsys,
            ["sweep", "--vary", "lambda", "--from", "1.0", "--to", "1.5",
             "--step", "0.25", "--horizon", "2", "--restarts", "4",
             "--seed", "0", "--format", "json"],
        )
        lams = [row["grid_value"] for row in obj["rows"]]
        assert lams == pytest.approx([1.0, 1.25, 1.5])
        values = [row["cpt_value"] for row in obj["rows"]]
        assert values == sorted(values, reverse=True)  # harsher losses hurt

    def test_lambda_sweep_needs_horizon(self, capsys):
        code = run(["sweep", "--vary", "lambda", "--from", "1", "--to", "2",
                    "--seed", "0"])
        assert code == 1
        assert "--horizon" in capsys.readouterr().err


class TestErrors:
    def test_unknown_command(self, capsys):
        assert run(["warp"]) == 1

    def test_missing_seed(self, capsys):
        assert run(["solve", "--horizon", "3"]) == 1

    def test_bad_parameter_value(self, capsys):
        code = run(["solve", *BENCH_ARGS, "--alpha-plus", "0"])
        assert code == 1
        assert "alpha_plus" in capsys.readouterr().err

    def test_bad_horizon(self, capsys):
        assert run(["solve", "--horizon", "0", "--restarts", "4",
                    "--seed", "0"]) == 1

    def test_csv_outside_sweep(self, capsys):
        code = run(["solve", *BENCH_ARGS, "--format", "csv"])
        assert code == 1
        assert "sweep" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        code = run(["feasible", "--dist", "/nonexistent/mu.json"])
        assert code == 2

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["feasible", "--dist", str(bad)]) == 2

    def test_wrong_mass_total(self, tmp_path, capsys):
        bad = tmp_path / "short.json"
        bad.write_text(json.dumps({
            "horizon": 2,
            "masses": [{"state": 1, "prob": 0.35}, {"state": -1, "prob": 0.35}],
        }))
        code = run(["feasible", "--dist", str(bad)])
        assert code == 2
        assert "sum" in capsys.readouterr().err

    def test_thread_env_must_be_integer(self, capsys, monkeypatch):
        monkeypatch.setenv("CPTQUIT_THREADS", "zebra")
        assert run(["solve", *BENCH_ARGS]) == 1

    def test_thread_env_caps_workers(self, capsys, monkeypatch):
        monkeypatch.setenv("CPTQUIT_THREADS", "2")
        obj = _run_json(capsys, ["solve", *BENCH_ARGS])
        res = solve_program(CptParams(), 3, restarts=4, seed=0)
        assert obj["value"] == res.value
