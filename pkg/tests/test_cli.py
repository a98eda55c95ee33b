import csv
import json

import pytest

from gdrb import __version__
from gdrb.cli import run

CFG = {"group": "t_pauli", "noise": {"model": "random_unitary", "r": 0.01}, "m_list": [4, 8, 16, 32, 64],
       "n_seq": 20, "seed": 3}


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CFG))
    return path


def _json(path):
    return json.loads(path.read_text())


def test_simulate_then_fit(tmp_path, cfg_path):
    data = tmp_path / "d.csv"
    assert run(["simulate", "--config", str(cfg_path), "--out", str(data)]) == 0
    rows = list(csv.reader(data.open()))
    assert rows[0] == ["m", "mean", "variance", "num_sequences"]
    assert [int(r[0]) for r in rows[1:]] == CFG["m_list"]
    out = tmp_path / "fit.json"
    assert run(["fit", "--in", str(data), "--out", str(out)]) == 0
    fit = _json(out)
    assert fit["version"] == __version__ and 0.9 < fit["p_est"] <= 1.0
    assert run(["fit", "--in", str(data), "--model", "free", "--out", str(out)]) == 0
    assert _json(out)["model"] == "free"


def test_outputs_are_byte_identical(tmp_path, cfg_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["simulate", "--config", str(cfg_path), "--out", str(a)])
    run(["simulate", "--config", str(cfg_path), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    run(["simulate", "--config", str(cfg_path), "--seed", "4", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_decompose_theory_round_trip(tmp_path, cfg_path):
    dec = tmp_path / "dec.json"
    assert run(["decompose", "--config", str(cfg_path), "--out", str(dec)]) == 0
    body = _json(dec)
    for key in ("version", "p", "t", "r_internoise", "residuals", "eigengaps", "delta1", "delta2", "thm2_bound", "L", "R"):
        assert key in body
    from_file, from_cfg = tmp_path / "t1.json", tmp_path / "t2.json"
    assert run(["theory", "--in", str(dec), "--config", str(cfg_path), "--out", str(from_file)]) == 0
    assert run(["theory", "--config", str(cfg_path), "--out", str(from_cfg)]) == 0
    t1, t2 = _json(from_file), _json(from_cfg)
    assert t1["theory"] == pytest.approx(t2["theory"], abs=1e-14)
    assert t1["B"] == pytest.approx(0.5, abs=1e-10)


def test_bruteforce(tmp_path, cfg_path):
    out = tmp_path / "bf.csv"
    assert run(["bruteforce", "--config", str(cfg_path), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "m,exact_mean" and len(lines) == 4


def test_counterexample(tmp_path):
    out = tmp_path / "ce.json"
    assert run(["counterexample", "--nu", "0.99", "--theta", "0.09", "--out", str(out)]) == 0
    body = _json(out)
    assert body["ratio"] == pytest.approx(7.9, abs=0.05)
    assert body["gamma"] == pytest.approx(body["gamma_analytic"], abs=1e-6)


def test_reproduce_fig1(tmp_path):
    cfg = tmp_path / "fig.json"
    cfg.write_text(json.dumps({"r_list": [1e-2], "m_list": [4, 8, 16, 32], "n_seq": 10, "K": 10}))
    assert run(["reproduce-fig1", "--config", str(cfg), "--out", str(tmp_path / "fig")]) == 0
    left = list(csv.reader((tmp_path / "fig" / "left.csv").open()))
    right = list(csv.reader((tmp_path / "fig" / "right.csv").open()))
    assert left[0] == ["r", "ci_lo", "ci_hi", "p_predicted"] and len(left) == 2
    assert right[0] == ["r", "delta1", "delta2"] and len(right) == 2
    assert float(left[1][1]) <= float(left[1][2])


def test_verify(capsys):
    assert run(["verify"]) == 0
    assert "checks passed" in capsys.readouterr().out


@pytest.mark.parametrize("cfg", [{"bogus": 1}, {"n_seq": 1}, {"noise": {"model": "random_unitary"}},
                                 {"noise": {"model": "depol_z", "nu": 0.9, "theta": 0.1, "extra": 1}}])
def test_invalid_config_exit_one(tmp_path, cfg, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert run(["simulate", "--config", str(path)]) == 1
    assert "config invalid" in capsys.readouterr().err


def test_malformed_json_exit_one(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["simulate", "--config", str(path)]) == 1


def test_missing_files_exit_three(tmp_path):
    assert run(["fit", "--in", str(tmp_path / "none.csv")]) == 3
    assert run(["simulate", "--config", str(tmp_path / "none.json")]) == 3


def test_nan_dataset_exit_one(tmp_path):
    data = tmp_path / "nan.csv"
    data.write_text("m,mean,variance,num_sequences\n4,nan,0,10\n")
    assert run(["fit", "--in", str(data)]) == 1


def test_numerical_failure_exit_two(tmp_path, capsys):
    # the Pauli group is not a 2-design: its unital average map has a threefold top eigenvalue
    path = tmp_path / "pauli.json"
    path.write_text(json.dumps({"group": "pauli", "noise": {"model": "ideal"}}))
    assert run(["decompose", "--config", str(path)]) == 2
    assert "dominant_real_eigen" in capsys.readouterr().err


def test_error_names_operation(capsys):
    assert run(["counterexample", "--nu", "2"]) == 1
    assert "counterexample_analytics" in capsys.readouterr().err


def test_bad_subcommand():
    assert run(["frobnicate"]) == 1
