import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rlasso.bench import CSV_HEADER, ExperimentConfig, Sweep, read_csv, write_config
from rlasso.cli import main
from rlasso.core import read_matrix, read_vector, write_matrix, write_vector
from rlasso.solvers import SolverConfig


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def small_problem(tmp_path):
    A = np.eye(3)
    write_matrix(A, tmp_path / "A.txt")
    write_vector(np.array([1.0, -2.0, 0.5]), tmp_path / "y.txt")
    return tmp_path


@pytest.mark.parametrize("ens,extra", [("gaussian", []), ("lrbg", ["--d", 3])])
def test_gen_matrix(capsys, tmp_path, ens, extra):
    out = tmp_path / "A.txt"
    code, _, _ = run(capsys, "gen-matrix", "--ensemble", ens, "--m", 6, "--n", 9, "--seed", 4, "--out", out, *extra)
    assert code == 0
    A = read_matrix(out)
    assert A.shape == (6, 9)
    out2 = tmp_path / "B.txt"
    run(capsys, "gen-matrix", "--ensemble", ens, "--m", 6, "--n", 9, "--seed", 4, "--out", out2, *extra)
    assert out.read_bytes() == out2.read_bytes()


def test_gen_matrix_lrbg_needs_degree(capsys, tmp_path):
    code, _, err = run(capsys, "gen-matrix", "--ensemble", "lrbg", "--m", 4, "--n", 5, "--out", tmp_path / "A")
    assert code == 2 and "--d" in err


@pytest.mark.parametrize("decoder,flag", [("rlasso", ["--lambda", 3]), ("bp", []),
                                          ("bpdn", ["--epsilon", 0.0]), ("clr", ["--tau-budget", 3.5])])
def test_solve_each_decoder(capsys, small_problem, decoder, flag):
    d = small_problem
    code, out, _ = run(capsys, "solve", "--decoder", decoder, "--q", 1, "--matrix", d / "A.txt",
                       "--y", d / "y.txt", "--out", d / "x.txt", *flag)
    assert code == 0
    rep = json.loads(out)
    assert set(rep) >= {"objective", "residual", "iterations", "status"}
    assert rep["status"] == "converged"
    np.testing.assert_allclose(read_vector(d / "x.txt"), [1, -2, 0.5], atol=1e-7)


def test_solve_missing_parameter(capsys, small_problem):
    d = small_problem
    code, _, err = run(capsys, "solve", "--decoder", "bpdn", "--matrix", d / "A.txt", "--y", d / "y.txt")
    assert code == 2 and "--epsilon" in err


def test_solve_bad_inputs(capsys, small_problem):
    d = small_problem
    assert run(capsys, "solve", "--matrix", d / "nope.txt", "--y", d / "y.txt", "--lambda", 1)[0] == 2
    write_vector(np.ones(4), d / "y4.txt")
    assert run(capsys, "solve", "--matrix", d / "A.txt", "--y", d / "y4.txt", "--lambda", 1)[0] == 2
    assert run(capsys, "solve", "--matrix", d / "A.txt", "--y", d / "y.txt", "--lambda", -1)[0] == 2


def test_solve_numerical_failure(capsys, tmp_path):
    write_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]), tmp_path / "A.txt")
    write_vector(np.array([1.0, 0.0]), tmp_path / "y.txt")
    code, _, err = run(capsys, "solve", "--decoder", "bp", "--matrix", tmp_path / "A.txt", "--y", tmp_path / "y.txt")
    assert code == 3 and "Infeasible" in err


def test_tune_json_lines(capsys):
    code, out, _ = run(capsys, "tune", "--rule", "expander", "--n", 1024, "--s", 1, 2, 4)
    assert code == 0
    lines = [json.loads(line) for line in out.strip().splitlines()]
    assert [r["S"] for r in lines] == [1, 2, 4]
    assert all(r["lambda"] == 2.5 and r["source"] == "expander" for r in lines)


def test_tune_rules(capsys, tmp_path):
    code, out, _ = run(capsys, "tune", "--rule", "gaussian", "--m", 256, "--n", 1024, "--s", 1, "--rho", 0.9)
    assert code == 0 and json.loads(out)["lambda"] == pytest.approx(5.457616081594426, rel=1e-12)
    code, out, _ = run(capsys, "tune", "--rule", "eq1", "--q", 1, "--s", 1, "--rho", 1 / 3, "--tau", 5 / 3)
    assert code == 0 and json.loads(out)["lambda"] == pytest.approx(2.5, rel=1e-12)
    write_matrix(np.eye(2), tmp_path / "A.txt")
    code, out, _ = run(capsys, "tune", "--rule", "lambda-inf", "--p", 1, "--matrix", tmp_path / "A.txt")
    assert code == 0 and json.loads(out)["lambda"] == pytest.approx(2.0)


def test_tune_errors(capsys):
    # infeasible Gaussian rule and a missing argument are both input errors
    assert run(capsys, "tune", "--rule", "gaussian", "--m", 16, "--n", 1024, "--s", 8, "--rho", 0.5)[0] == 2
    assert run(capsys, "tune", "--rule", "expander", "--s", 1)[0] == 2
    assert run(capsys, "tune", "--rule", "expander", "--n", 1024, "--s", 1, "--theta", 0.3)[0] == 2


def test_nsp_oracle(capsys, tmp_path):
    write_matrix(np.eye(2), tmp_path / "A.txt")
    code, out, _ = run(capsys, "nsp-oracle", "--matrix", tmp_path / "A.txt", "--s", 1, "--empirical")
    assert code == 0
    rep = json.loads(out)
    assert rep["tau10"] == pytest.approx(1, abs=1e-12)
    assert rep["witness_T"] == [0]
    assert rep["empirical_tau10"] == pytest.approx(1, rel=1e-3)


def test_nsp_oracle_failures(capsys, tmp_path):
    write_matrix(np.array([[1.0, 1.0]]), tmp_path / "A.txt")
    assert run(capsys, "nsp-oracle", "--matrix", tmp_path / "A.txt", "--s", 1)[0] == 3
    write_matrix(np.eye(13), tmp_path / "big.txt")
    assert run(capsys, "nsp-oracle", "--matrix", tmp_path / "big.txt", "--s", 1)[0] == 2


def test_experiment(capsys, tmp_path):
    cfg = ExperimentConfig(M=12, N=24, S=2, trials=2, decoders=("rlasso", "bp"),
                           solver=SolverConfig(tol=1e-6, max_iter=20000), sweep=Sweep("snr", (10.0, "inf")))
    write_config(cfg, tmp_path / "c.json")
    code, _, _ = run(capsys, "experiment", "--config", tmp_path / "c.json", "--out", tmp_path / "o.csv",
                     "--no-timing")
    assert code == 0
    rows = read_csv(tmp_path / "o.csv")
    assert list(rows[0]) == CSV_HEADER
    assert [(r["sweep_value"], r["decoder"]) for r in rows] == [
        ("10.0", "rlasso[sqrtM:0.65]"), ("10.0", "bp"), ("inf", "rlasso[sqrtM:0.65]"), ("inf", "bp")]
    assert all(r["wall_ms"] == "0" for r in rows)
    assert math.isnan(float(rows[2]["mean_error_per_noise"]))


@pytest.mark.parametrize("text", ['{"trials": -1}', '{"sweep": {"param": "D", "values": [1]}}', "[1, 2]", "{"])
def test_experiment_config_errors(capsys, tmp_path, text):
    (tmp_path / "c.json").write_text(text)
    code, _, err = run(capsys, "experiment", "--config", tmp_path / "c.json", "--out", tmp_path / "o.csv")
    assert code == 2 and err.startswith("error:")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rlasso.cli", "tune", "--rule", "expander", "--n", "64", "--s", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["D"] > 0
