import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from lossyphase import InputState, LossModel, noon_precision, qfi_bound, qfi_exact
from lossyphase.cli import main

from oracles import grid_maximum


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def rows(text):
    return list(csv.reader(io.StringIO(text)))


# compute

def test_compute_noon(capsys):
    r = run_json(capsys, "compute", "--n", "4", "--eta-a", "0.9", "--eta-b", "0.9", "--state", "noon")
    assert r["fq_bound"] == pytest.approx(10.4976, rel=1e-12)
    assert r["fq_exact"] == pytest.approx(10.4976, rel=1e-9)
    assert abs(r["gap_percent"]) < 1e-9
    assert set(r) == {"n", "eta_a", "eta_b", "state", "fq_bound", "fq_exact",
                      "precision_bound", "precision_exact", "gap_percent"}


def test_compute_single_photon_lossless(capsys):
    r = run_json(capsys, "compute", "--n", "1", "--eta-a", "1", "--eta-b", "1", "--state", "noon")
    assert r["fq_bound"] == 1.0 and r["precision_bound"] == 1.0
    assert r["fq_exact"] == pytest.approx(1.0, rel=1e-12)


def test_compute_custom_matches_library_bit_exactly(capsys):
    r = run_json(capsys, "compute", "--n", "3", "--eta-a", "0.8", "--eta-b", "0.7",
                 "--state", "custom", "--weights", "0.2,0.3,0.1,0.4")
    state, loss = InputState(3, [0.2, 0.3, 0.1, 0.4]), LossModel(0.8, 0.7)
    assert r["fq_bound"] == qfi_bound(state, loss).value
    assert r["fq_exact"] == qfi_exact(state, loss).value


def test_compute_sparse_weights_and_no_exact(capsys):
    r = run_json(capsys, "compute", "--n", "6", "--eta", "0.9", "--loss", "one",
                 "--state", "custom", "--weights", "0:0.4,6:0.6", "--no-exact")
    assert r["eta_b"] == 1.0 and r["fq_exact"] is None and r["gap_percent"] is None
    assert r["state"]["weights"] == [0.4, 0, 0, 0, 0, 0, 0.6]


def test_compute_uninformative_state(capsys):
    r = run_json(capsys, "compute", "--n", "3", "--eta", "0.9", "--state", "fock", "--k", "1")
    assert r["fq_bound"] == 0.0 and r["precision_bound"] is None


def test_compute_csv(capsys):
    code, out, _ = run(capsys, "compute", "--n", "2", "--eta", "0.9", "--format", "csv")
    table = rows(out)
    assert code == 0 and len(table) == 2 and table[0][0] == "n"


def test_explicit_arm_overrides_shorthand(capsys):
    r = run_json(capsys, "compute", "--n", "2", "--eta", "0.9", "--loss", "both", "--eta-b", "0.5")
    assert (r["eta_a"], r["eta_b"]) == (0.9, 0.5)


@pytest.mark.parametrize(
    "argv",
    [
        ["compute", "--n", "5", "--eta", "0.9", "--state", "twin-fock"],
        ["compute", "--n", "2", "--eta", "1.5"],
        ["compute", "--n", "2", "--eta", "0.9", "--state", "custom", "--weights", "0.5,0.6,0.1"],
        ["compute", "--n", "2", "--eta", "0.9", "--state", "custom"],
        ["compute", "--n", "2", "--eta", "0.9", "--state", "custom", "--weights", "a,b,c"],
        ["compute", "--n", "2", "--eta", "0.9", "--state", "custom", "--weights", "5:1"],
        ["compute", "--eta", "0.9"],
        ["compute", "--n", "2"],
        ["compute", "--n", "2", "--eta", "0.9", "--loss", "sideways"],
        ["sweep", "--axis", "n", "--from", "1", "--to", "3"],
        ["sweep", "--axis", "n", "--from", "3", "--to", "1", "--eta", "0.9"],
        ["sweep", "--axis", "n", "--from", "1", "--to", "3", "--eta", "0.9", "--strategies", "bogus"],
        ["sweep", "--axis", "eta", "--from", "0.5", "--to", "1", "--steps", "3"],
        ["scaling", "--eta", "0.9"],
        ["compare", "--n", "4", "--eta", "0.9", "--strategies", "unbalanced-noon"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.strip()


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--n", "four"])
    assert exc.value.code == 2


def test_numeric_failure_exit_3(capsys, monkeypatch):
    def broken(*_args, **_kwargs):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(np.linalg, "eigh", broken)
    code, out, err = run(capsys, "compute", "--n", "3", "--eta", "0.8", "--state", "uniform")
    assert code == 3 and "numerical failure" in err and out == ""


# optimize

def test_optimize_noon_region(capsys):
    r = run_json(capsys, "optimize", "--n", "5", "--eta", "0.9", "--loss", "both")
    assert set(r["weights"]) == {"0", "5"}
    assert r["weights"]["0"] == pytest.approx(0.5, abs=1e-6)
    assert r["weights"]["5"] == pytest.approx(0.5, abs=1e-6)
    assert r["converged"] is True and r["residual"] < 1e-9


def test_optimize_lossless_one_arm(capsys):
    r = run_json(capsys, "optimize", "--n", "20", "--eta", "1", "--loss", "one")
    assert r["weights"] == {"0": pytest.approx(0.5, abs=1e-9), "20": pytest.approx(0.5, abs=1e-9)}
    assert r["fq"] == pytest.approx(400.0, rel=1e-12)
    assert r["fq_exact"] == r["fq"] and r["gap_percent"] == 0.0


def test_optimize_matches_grid_oracle(capsys):
    r = run_json(capsys, "optimize", "--n", "3", "--eta", "0.8", "--loss", "both")
    assert abs(r["fq"] - grid_maximum(3, 0.8, 0.8)) <= 1e-4
    assert r["fq_exact"] <= r["fq"] + 1e-9


def test_optimize_round_trips_through_compute(capsys, tmp_path):
    r = run_json(capsys, "optimize", "--n", "12", "--eta", "0.85", "--loss", "both")
    weights = ",".join(repr(x) for x in r["weights_full"])
    c = run_json(capsys, "compute", "--n", "12", "--eta", "0.85", "--state", "custom",
                 "--weights", weights, "--no-exact")
    assert c["fq_bound"] == pytest.approx(r["fq"], rel=1e-12)
    sparse = ",".join(f"{k}:{v!r}" for k, v in r["weights"].items())
    c = run_json(capsys, "compute", "--n", "12", "--eta", "0.85", "--state", "custom",
                 "--weights", sparse, "--no-exact")
    assert c["fq_bound"] == pytest.approx(r["fq"], rel=1e-8)


def test_optimize_non_convergence_warns():
    proc = subprocess.run(
        [sys.executable, "-m", "lossyphase", "optimize", "--n", "30", "--eta", "0.9", "--loss", "one",
         "--max-iter", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["converged"] is False
    assert "did not converge" in proc.stderr


# compare

def test_compare_strategies(capsys):
    r = run_json(capsys, "compare", "--n", "10", "--eta", "0.9", "--loss", "one")
    p = r["precision"]
    assert p["noon"] == pytest.approx(noon_precision(10, 0.9, "one", balanced=False), rel=1e-14)
    assert p["heisenberg"] < p["optimal"] <= p["two-component"] < p["sil"]
    assert "twin-fock" in p and "unbalanced-noon" in p


# sweep

def test_sweep_over_n_crossover(capsys):
    code, out, _ = run(capsys, "sweep", "--axis", "n", "--from", "1", "--to", "30", "--eta", "0.9",
                       "--loss", "both", "--strategies", "optimal,noon,chopping,sil,heisenberg")
    table = rows(out)
    assert code == 0
    assert table[0] == ["n", "optimal", "noon", "chopping", "sil", "heisenberg"]
    assert len(table) == 31 and all(len(r) == 6 and all(r) for r in table)
    for r in table[1:]:
        n, opt, noon = int(r[0]), float(r[1]), float(r[2])
        if n <= 7:
            assert noon == pytest.approx(opt, rel=1e-6)
        else:
            assert noon > opt
    assert out.endswith("\n") and "\r" not in out and not any(line.endswith(",") for line in out.splitlines())


def test_sweep_over_eta_coincidence(capsys):
    code, out, _ = run(capsys, "sweep", "--axis", "eta", "--from", "0.05", "--to", "1.0", "--steps", "96",
                       "--n", "20", "--loss", "one", "--strategies", "optimal,noon,chopping")
    table = rows(out)
    assert code == 0 and len(table) == 97 and table[0] == ["eta", "optimal", "noon", "chopping"]
    threshold = math.exp(-1 / 20)
    for r in table[1:]:
        eta, opt, noon = float(r[0]), float(r[1]), float(r[2])
        if eta >= threshold:
            assert opt == pytest.approx(noon, rel=1e-9)
        else:
            assert opt < noon
    # twelve significant digits
    assert all(len(c.replace(".", "").lstrip("0")) <= 12 for r in table[1:] for c in r[1:])


def test_sweep_lossless_columns_identical(capsys):
    code, out, _ = run(capsys, "sweep", "--axis", "n", "--from", "1", "--to", "9", "--eta", "1",
                       "--loss", "both", "--strategies", "optimal,heisenberg")
    table = rows(out)
    assert code == 0 and len(table) == 10
    for r in table[1:]:
        assert r[1] == r[2] == format(1 / int(r[0]), ".12g")


def test_sweep_json_format(capsys):
    r = run_json(capsys, "sweep", "--axis", "n", "--from", "2", "--to", "4", "--eta", "0.9",
                 "--strategies", "noon", "--format", "json")
    assert [row["n"] for row in r["rows"]] == [2, 3, 4]


# scaling

def test_scaling_lossless(capsys):
    code, out, _ = run(capsys, "scaling", "--eta", "1.0", "--loss", "both", "--n-max", "30")
    table = rows(out)
    assert code == 0 and table[0] == ["n", "eta", "s"]
    assert len(table) > 1
    for r in table[1:]:
        assert float(r[2]) == pytest.approx(1.0, abs=1e-9)


def test_scaling_multiple_eta(capsys):
    code, out, _ = run(capsys, "scaling", "--eta", "0.9,1.0", "--loss", "one", "--n-max", "15", "--n-min", "8")
    table = rows(out)
    assert code == 0
    assert {r[1] for r in table[1:]} == {"0.9", "1"}
    assert min(int(r[0]) for r in table[1:]) == 8 and max(int(r[0]) for r in table[1:]) == 11


# plumbing

def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"n": 4, "eta": 0.5, "loss": "both", "state": "noon", "exact": False}))
    r = run_json(capsys, "compute", "--config", str(cfg))
    assert r["fq_bound"] == pytest.approx(16 * 0.5**4) and r["fq_exact"] is None
    r = run_json(capsys, "compute", "--config", str(cfg), "--eta", "0.9")
    assert r["fq_bound"] == pytest.approx(10.4976)


def test_bad_config_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    code, _, err = run(capsys, "compute", "--config", str(bad))
    assert code == 2
    code, _, _ = run(capsys, "compute", "--config", str(tmp_path / "missing.json"))
    assert code == 2


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.csv"
    code, out, _ = run(capsys, "sweep", "--axis", "n", "--from", "1", "--to", "3", "--eta", "0.9",
                       "--strategies", "noon,sil", "-o", str(target))
    assert code == 0 and out == ""
    assert target.read_bytes().startswith(b"n,noon,sil\n")


def test_deterministic_and_jobs_independent(capsys, monkeypatch):
    argv = ["sweep", "--axis", "n", "--from", "2", "--to", "12", "--eta", "0.85", "--loss", "both",
            "--strategies", "optimal,noon,chopping"]
    _, first, _ = run(capsys, *argv, "--jobs", "1")
    _, again, _ = run(capsys, *argv, "--jobs", "1")
    _, pooled, _ = run(capsys, *argv, "--jobs", "2")
    monkeypatch.setenv("QFI_JOBS", "2")
    _, env, _ = run(capsys, *argv)
    assert first == again == pooled == env


def test_bad_jobs_env(capsys, monkeypatch):
    monkeypatch.setenv("QFI_JOBS", "many")
    code, _, err = run(capsys, "sweep", "--axis", "n", "--from", "1", "--to", "2", "--eta", "0.9")
    assert code == 2 and "QFI_JOBS" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lossyphase", "compute", "--n", "4", "--eta", "0.9", "--state", "noon"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["fq_bound"] == pytest.approx(10.4976)
    proc = subprocess.run([sys.executable, "-m", "lossyphase", "compute", "--n", "5", "--eta", "0.9",
                           "--state", "twin-fock"], capture_output=True, text=True, check=False)
    assert proc.returncode == 2 and "even" in proc.stderr
