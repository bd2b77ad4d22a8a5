import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from stiefel_givens import __version__
from stiefel_givens.cli import BENCH_COLUMNS, main

FAST = ["--iters", "30", "--warmup", "30", "--chains", "2"]


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_uniform_outputs(tmp_path):
    pre = str(tmp_path / "u")
    assert main(["uniform", "--n", "3", "--p", "2", *FAST, "--out-prefix", pre]) == 0
    rows = _read_csv(pre + "-draws.csv")
    assert rows[0] == ["chain", "iter", "theta_1_2", "theta_1_3", "theta_2_3",
                       "Y_1_1", "Y_1_2", "Y_2_1", "Y_2_2", "Y_3_1", "Y_3_2"]
    assert len(rows) == 1 + 2 * 30
    assert rows[1][:2] == ["0", "0"] and rows[-1][:2] == ["1", "29"]
    diag = json.load(open(pre + "-diag.json"))
    assert set(diag["columns"]) == set(rows[0][2:])
    assert len(diag["chains"]) == 2 and "wall_time_s" in diag
    man = json.load(open(pre + "-manifest.json"))
    assert man["version"] == __version__ and man["seed"] == 0 and man["command"] == "uniform"
    assert man["hmc"]["iters"] == 30 and man["chart"]["mirrored"] is False
    assert man["started"] <= man["finished"]


def test_same_seed_byte_identical_and_replay(tmp_path):
    a, b, c = (str(tmp_path / k) for k in "abc")
    args = ["uniform", "--n", "4", "--p", "2", *FAST, "--seed", "7"]
    assert main([*args, "--out-prefix", a]) == 0
    assert main([*args, "--out-prefix", b]) == 0
    assert main(["replay", a + "-manifest.json", "--out-prefix", c]) == 0
    raw = open(a + "-draws.csv", "rb").read()
    assert raw == open(b + "-draws.csv", "rb").read() == open(c + "-draws.csv", "rb").read()
    assert main([*args[:-1], "8", "--out-prefix", str(tmp_path / "d")]) == 0
    assert open(str(tmp_path / "d") + "-draws.csv", "rb").read() != raw


def test_exit_codes(tmp_path, capsys):
    assert main(["uniform", "--n", "2", "--p", "3", "--out-prefix", str(tmp_path / "x")]) == 1
    assert "p" in capsys.readouterr().err
    assert main(["uniform", "--n", "3", "--p", "1", "--out-prefix", str(tmp_path / "no" / "such" / "x")]) == 2
    assert main(["check", "nonsense"]) == 1
    assert main(["uniform", "--n", "3"]) == 1
    assert main(["uniform", "--n", "3", "--p", "1", "--epsilon", "2", "--out-prefix", str(tmp_path / "e")]) == 1


def test_ppca_simulate(tmp_path):
    pre = str(tmp_path / "p")
    assert main(["ppca", "--simulate", *FAST, "--out-prefix", pre]) == 0
    data = _read_csv(pre + "-data.csv")
    assert len(data) == 16 and all(len(r) == 3 for r in data)
    header = _read_csv(pre + "-draws.csv")[0]
    assert header[-3:] == ["Lambda_1", "Lambda_2", "sigma2"] and "W_3_2" in header
    man = json.load(open(pre + "-manifest.json"))
    assert man["chart"]["mirrored"] is True
    draws = np.loadtxt(pre + "-draws.csv", delimiter=",", skiprows=1)
    assert np.all(np.abs(draws[:, header.index("theta_1_2")]) <= np.pi / 2)


def test_ppca_from_csv(tmp_path, capsys):
    good = tmp_path / "x.csv"
    good.write_text("a,b,c\n" + "\n".join(",".join(map(str, r)) for r in np.random.default_rng(0).normal(size=(10, 3))))
    assert main(["ppca", "--data", str(good), "--p", "1", "--no-mirrored", *FAST,
                 "--out-prefix", str(tmp_path / "g")]) == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n4,5,6\n7,8\n")
    assert main(["ppca", "--data", str(bad), "--out-prefix", str(tmp_path / "b")]) == 1
    assert "row 3" in capsys.readouterr().err
    assert main(["ppca", "--data", str(tmp_path / "missing.csv"), "--out-prefix", str(tmp_path / "m")]) == 2
    assert main(["ppca", "--data", str(good), "--p", "4", "--out-prefix", str(tmp_path / "q")]) == 1


def test_eigenmodel_synth_with_holdout(tmp_path):
    pre = str(tmp_path / "e")
    assert main(["eigenmodel", "--synth", "10", "--synth-c", "-0.5", "--synth-lambda", "8,-6,4",
                 "--holdout", "0.2", *FAST, "--out-prefix", pre]) == 0
    header = _read_csv(pre + "-draws.csv")[0]
    assert header[-4:] == ["c", "Lambda_1", "Lambda_2", "Lambda_3"] and "U_10_3" in header
    held = json.load(open(pre + "-diag.json"))["heldout"]
    assert held["dyads"] == 9 and np.isfinite(held["predictive_loglik"])
    assert json.load(open(pre + "-manifest.json"))["data"]["truth"]["Lambda"] == [8.0, -6.0, 4.0]


def test_eigenmodel_graph_inputs(tmp_path, capsys):
    edges = tmp_path / "edges.csv"
    edges.write_text("a,b\nb,c\nc,d\nd,a\na,c\n")
    assert main(["eigenmodel", "--graph", str(edges), "--p", "2", "--ordered-lambda", *FAST,
                 "--out-prefix", str(tmp_path / "g")]) == 0
    asym = tmp_path / "asym.csv"
    asym.write_text("0,1,0\n0,0,1\n0,1,0\n")
    assert main(["eigenmodel", "--graph", str(asym), "--out-prefix", str(tmp_path / "h")]) == 1
    assert "symmetric" in capsys.readouterr().err
    assert main(["eigenmodel", "--synth", "6", "--synth-lambda", "1,2", "--out-prefix", str(tmp_path / "i")]) == 1


def test_empty_graph_pushes_intercept_negative(tmp_path):
    g = tmp_path / "empty.csv"
    g.write_text("\n".join(",".join(["0"] * 8) for _ in range(8)))
    pre = str(tmp_path / "z")
    assert main(["eigenmodel", "--graph", str(g), "--p", "2", "--iters", "200", "--warmup", "200",
                 "--out-prefix", pre]) == 0
    header = _read_csv(pre + "-draws.csv")[0]
    c = np.loadtxt(pre + "-draws.csv", delimiter=",", skiprows=1)[:, header.index("c")]
    assert np.mean(c < 0) > 0.95


def test_check_roundtrip_json(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["check", "roundtrip", "--json", str(report)]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 3
    rep = json.load(open(report))
    assert rep["passed"] and len(rep["results"]) == 3


def test_check_failure_exit_code(monkeypatch):
    from stiefel_givens import checks

    monkeypatch.setitem(checks._RUNNERS, "jacobian",
                        lambda seed: [checks.CheckResult("jacobian", "forced", 1.0, 0.0, False)])
    assert main(["check", "jacobian"]) == 3


def test_bench(tmp_path, capsys):
    assert main(["bench", "--reps", "0"]) == 0
    assert capsys.readouterr().out.strip() == ",".join(BENCH_COLUMNS)
    out = tmp_path / "b.csv"
    assert main(["bench", "--reps", "2", "--n-grid", "100,200", "--p-grid", "2,4,8", "--out", str(out)]) == 0
    rows = _read_csv(out)
    assert rows[0] == list(BENCH_COLUMNS) and len(rows) == 1 + 2 * 3 * 2
    ops = {(int(r[0]), int(r[1])): int(r[3]) for r in rows[1:]}
    assert 1.8 <= ops[(200, 2)] / ops[(100, 2)] <= 2.5
    assert 3.2 <= ops[(100, 8)] / ops[(100, 4)] <= 4.8
    assert main(["bench", "--n-grid", "x"]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "stiefel_givens", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
