import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from polis.cli import main
from polis.defaults import DEFAULTS
from polis.economy import EconomyMap
from polis.estimator import ObjectiveEstimate
from polis.evolution import read_trace_csv
from polis.metaheuristics import read_history_csv
from polis.stats import read_values

DATA = Path(__file__).parent / "data"
SMALL = ["--steps", "40", "--warmup", "10"]


@pytest.fixture
def eco(tmp_path):
    path = tmp_path / "eco.json"
    assert main(["gen-map", "--seed", "1", "--firms", "30", "--markets", "3", "--grid", "40", "-o", str(path)]) == 0
    return path


def test_gen_map(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["gen-map", "--seed", "1", "--firms", "100", "--markets", "5", "--grid", "100", "-o", str(p)]) == 0
    assert capsys.readouterr().out.strip().endswith("b.json")
    eco = EconomyMap.load(a)
    assert eco.n_firms == 100 and eco.n_markets == 5
    assert a.read_bytes() == b.read_bytes()


def test_gen_map_validation_exit_code(tmp_path, capsys):
    assert main(["gen-map", "--markets", "0", "-o", str(tmp_path / "x.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["gen-map", "--firms", "many"])
    assert info.value.code == 2


def test_show_defaults(capsys):
    assert main(["--show-defaults"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert table == DEFAULTS
    assert (table["n_sim"], table["t0"], table["alpha"], table["t_final"]) == (10000, 10.0, 0.8, 0.001)


def test_simulate_outputs_and_determinism(eco, tmp_path):
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        assert main(["simulate", "--map", str(eco), *SMALL, "--seed", "4", "--plot-data", "--out", str(out)]) == 0
    assert (outs[0] / "trace.csv").read_bytes() == (outs[1] / "trace.csv").read_bytes()
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["objective"] > 0
    trace = read_trace_csv(outs[0] / "trace.csv")
    assert len(trace) == 40 and all(r.quantities.sum() == 30 for r in trace)
    rows = list(csv.reader(open(outs[0] / "mean_profit.csv")))
    assert rows[0] == ["t", "mean_profit"] and len(rows) == 41


def test_simulate_one_step_window(eco, tmp_path):
    assert main(["simulate", "--map", str(eco), "--steps", "101", "--warmup", "100", "--out", str(tmp_path)]) == 0
    trace = read_trace_csv(tmp_path / "trace.csv")
    q = trace[100].quantities
    expected = (((q - 10.0) ** 2).sum() / 2) ** 0.5
    assert json.loads((tmp_path / "summary.json").read_text())["objective"] == pytest.approx(expected)


def test_simulate_policy_validation(eco, tmp_path, capsys):
    assert main(["simulate", "--map", str(eco), *SMALL, "--rate", "0.3,0,0", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--map", str(eco), *SMALL, "--rate", "0,0", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid_size": 10, "firms": [[1, 2]]}')
    assert main(["simulate", "--map", str(bad), *SMALL, "--out", str(tmp_path)]) == 2
    assert "malformed" in capsys.readouterr().err


def test_simulate_policy_file_and_config(eco, tmp_path):
    pol = tmp_path / "pol.json"
    pol.write_text(json.dumps({"rate": [0.1, 0.0, -0.1], "fixed": [10, 0, -10]}))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 30, "warmup": 5, "seed": 9}))
    assert main(["simulate", "--map", str(eco), "--policy", str(pol), "--config", str(cfg),
                 "--out", str(tmp_path / "a")]) == 0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["steps"] == 30 and summary["seed"] == 9
    assert summary["policy"]["rate"] == [0.1, 0.0, -0.1]
    # flags beat the config file
    assert main(["simulate", "--map", str(eco), "--config", str(cfg), "--steps", "25",
                 "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["steps"] == 25


def test_unknown_config_key(eco, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"stepz": 3}')
    assert main(["simulate", "--map", str(eco), "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_estimate(eco, tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["estimate", "--map", str(eco), *SMALL, "--n-sim", "1", "--out", str(a)]) == 0
    assert ObjectiveEstimate.from_json(a.read_text()).std == 0.0
    monkeypatch.setenv("POLIS_THREADS", "3")
    assert main(["estimate", "--map", str(eco), *SMALL, "--n-sim", "6", "--seed", "2", "--out", str(a)]) == 0
    assert main(["estimate", "--map", str(eco), *SMALL, "--n-sim", "6", "--seed", "2", "--parallel",
                 "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert set(doc) == {"n", "mean", "std", "half_width", "confidence"} and doc["n"] == 6
    assert main(["estimate", "--map", str(eco), *SMALL, "--n-sim", "0"]) == 2


def test_optimize_sa_single_evaluation(eco, tmp_path):
    assert main(["optimize", "sa", "--map", str(eco), *SMALL, "--n-sim", "2", "--max-evals", "1",
                 "--out", str(tmp_path)]) == 0
    best = json.loads((tmp_path / "best.json").read_text())
    assert best["best_policy"] == {"rate": [0.0] * 3, "fixed": [0.0] * 3}
    assert best["evaluations"] == 1
    assert len(read_history_csv(tmp_path / "history.csv")) == 1


def test_optimize_sls_history_count(eco, tmp_path):
    assert main(["optimize", "sls", "--map", str(eco), "--steps", "15", "--warmup", "5", "--n-sim", "1",
                 "--iterations", "200", "--out", str(tmp_path)]) == 0
    assert len(read_history_csv(tmp_path / "history.csv")) == 201


def test_optimize_executions_feed_stats(eco, tmp_path, capsys):
    sa, sls = tmp_path / "sa", tmp_path / "sls"
    common = ["--map", str(eco), *SMALL, "--n-sim", "2", "--executions", "3"]
    assert main(["optimize", "sa", *common, "--max-evals", "8", "--out", str(sa)]) == 0
    assert main(["optimize", "sls", *common, "--iterations", "5", "--parallel", "--out", str(sls)]) == 0
    values = read_values(sa / "best_values.txt")
    assert len(values) == 3
    assert (sa / "exec_002" / "history.csv").exists()
    capsys.readouterr()
    assert main(["stats", str(sls / "best_values.txt"), str(sa / "best_values.txt"), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["samples"]) == {"1:best_values", "2:best_values"}
    assert "z" in report["test"]


def test_optimize_is_reproducible(eco, tmp_path):
    for name in ("a", "b"):
        assert main(["optimize", "sa", "--map", str(eco), *SMALL, "--n-sim", "2", "--max-evals", "6",
                     "--seed", "3", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "history.csv").read_bytes() == (tmp_path / "b" / "history.csv").read_bytes()


def test_stats_single_file_published_block(capsys):
    assert main(["stats", str(DATA / "sls_economy1.txt"), "--json"]) == 0
    block = json.loads(capsys.readouterr().out)["samples"]["sls_economy1"]
    expected = {"mean": 4.464, "std": 0.831, "hi_95": 4.762, "lo_95": 4.167, "hi_98": 4.817, "lo_98": 4.112}
    for key, value in expected.items():
        assert block[key] == pytest.approx(value, abs=0.01)


def test_stats_two_files_rejects_at_0001(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["stats", str(DATA / "sls_economy1.txt"), str(DATA / "sa_economy1.txt"),
                 "--alpha", "0.001", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "Sample mean" in text and "-> reject" in text
    assert json.loads(out.read_text())["test"]["reject_null"] is True


def test_stats_constant_file(tmp_path, capsys):
    f = tmp_path / "c.txt"
    f.write_text("2.5\n" * 10)
    assert main(["stats", str(f), "--json"]) == 0
    block = json.loads(capsys.readouterr().out)["samples"]["c"]
    assert block["lo_95"] == block["hi_95"] == 2.5


def test_stats_csv_column(capsys):
    assert main(["stats", str(DATA / "coefficient_samples.csv"), "--column", "e1_set1", "--json"]) == 0
    block = json.loads(capsys.readouterr().out)["samples"]["coefficient_samples"]
    assert block["mean"] == pytest.approx(4.0108, abs=1e-4)


def test_stats_bad_line(tmp_path, capsys):
    f = tmp_path / "v.txt"
    f.write_text("1\n2\nthree\n")
    assert main(["stats", str(f)]) == 2
    assert ":3:" in capsys.readouterr().err


def test_missing_map_is_runtime_error(tmp_path):
    assert main(["simulate", "--map", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.json"
    proc = subprocess.run([sys.executable, "-m", "polis", "gen-map", "--firms", "3", "--markets", "2",
                           "--grid", "5", "-o", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
