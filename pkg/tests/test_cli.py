import json
import subprocess
import sys
from math import sqrt

import pytest

from hypermoment.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, run, tolerances
from hypermoment.spectral import breakdown_state
from hypermoment.state import dump_state, maxwellian, random_state


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, s in {"max": maxwellian(2, 3), "rand": random_state(2, 3, 5),
                    "bad": breakdown_state(2, 3, 1.0), "big": maxwellian(2, 9)}.items():
        paths[name] = str(tmp_path / f"{name}.json")
        dump_state(s, paths[name])
    return paths


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_spectrum(files, capsys):
    assert run(["spectrum", "--state", files["max"]]) == EXIT_OK
    out = _json(capsys)
    assert out["N"] == 10 and len(out["eigenvalues"]) == 10
    assert all(r["multiplicity"] == 1 for r in out["eigenvalues"])
    top = max(r["lambda"] for r in out["eigenvalues"])
    assert top == pytest.approx(sqrt(3 + sqrt(6)))


def test_spectrum_vectors(files, capsys):
    assert run(["spectrum", "--state", files["rand"], "--vectors"]) == EXIT_OK
    rows = _json(capsys)["eigenvalues"]
    assert len(rows) == 10 and all(len(r["vector"]) == 10 for r in rows)


def test_exit_codes(files, tmp_path, capsys):
    assert run([]) == EXIT_USAGE
    assert run(["spectrum"]) == EXIT_USAGE
    assert run(["assemble", "--state", files["max"], "--kind", "nope"]) == EXIT_USAGE
    assert run(["spectrum", "--state", files["max"], "--tol", "bogus=1"]) == EXIT_USAGE
    bad = tmp_path / "broken.json"
    bad.write_text(json.dumps({"D": 2, "M": 3, "rho": -1.0, "u": [0, 0], "theta": 1.0}))
    assert run(["spectrum", "--state", str(bad)]) == EXIT_INVALID
    assert run(["spectrum", "--state", files["big"]]) == EXIT_INVALID
    assert run(["spectrum", "--state", files["big"], "--allow-large"]) == EXIT_OK
    assert run(["check-hyperbolic", "--state", files["bad"], "--kind", "grad"]) == EXIT_NUMERIC
    assert run(["check-hyperbolic", "--state", files["bad"]]) == EXIT_OK


def test_charpoly_and_seed(files, capsys):
    assert run(["charpoly", "--state", files["rand"], "--seed", "3"]) == EXIT_OK
    a = _json(capsys)
    assert run(["--seed", "3", "charpoly", "--state", files["rand"]]) == EXIT_OK
    b = _json(capsys)
    assert a == b and len(a["samples"]) == 20 and a["max_rel_err"] < 1e-8


def test_tolerance_override(files, monkeypatch, capsys):
    monkeypatch.setenv("HYPERMOMENT_TOL_CHARPOLY", "1e-30")
    assert tolerances()["charpoly"] == 1e-30
    code = run(["charpoly", "--state", files["rand"], "--lam", "0.3", "1.7"])
    out = _json(capsys)
    assert out["tol"] == 1e-30
    assert code == (EXIT_NUMERIC if out["max_rel_err"] > 1e-30 else EXIT_OK)
    assert tolerances(["charpoly=0.5"])["charpoly"] == 0.5


def test_assemble_formats(files, tmp_path, capsys):
    assert run(["assemble", "--state", files["max"]]) == EXIT_OK
    A = _json(capsys)
    assert A is not None
    csvp = tmp_path / "A.csv"
    assert run(["assemble", "--state", files["max"], "--kind", "grad", "--format", "csv",
                "--out", str(csvp)]) == EXIT_OK
    assert csvp.exists()
    assert run(["assemble", "--state", files["max"], "--format", "csv"]) == EXIT_INVALID


def test_rotate_commands(files, capsys):
    assert run(["rotate", "--state", files["rand"], "--angle", "90"]) == EXIT_OK
    r = _json(capsys)
    assert r["D"] == 2
    assert run(["rotate-check", "--state", files["rand"], "--direction", "0.6", "0.8"]) == EXIT_OK
    assert _json(capsys)["residual"] < 1e-10
    assert run(["rotate", "--state", files["rand"], "--matrix", "[[1,0],[0,2]]"]) == EXIT_INVALID


def test_wave_commands(files, capsys):
    assert run(["classify-field", "--D", "2", "--M", "3", "--class", "1", "--root", "1"]) == EXIT_OK
    capsys.readouterr()
    assert run(["curve", "--state", files["max"], "--root", "4", "--zeta", "0.1",
                "--points", "3"]) == EXIT_OK
    assert len(_json(capsys)["points"]) == 3
    assert run(["shock", "--left", files["max"], "--root", "4", "--eps", "0.01"]) == EXIT_OK
    assert "speed" in _json(capsys)


def test_simulate(tmp_path, capsys):
    cfg = {"D": 2, "M": 3, "cells": 20, "n_steps": 5,
           "left": {"rho": 1, "u": [0, 0], "theta": 1},
           "right": {"rho": 0.5, "u": [0, 0], "theta": 1}}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    assert run(["simulate", "--config", str(p), "--csv", str(tmp_path / "o.csv"),
                "--ledger", str(tmp_path / "l.csv")]) == EXIT_OK
    out = _json(capsys)
    drift = out["conservation_drift"]
    assert out["steps"] == 5 and drift["0,0"] < 1e-12
    # outflow boundaries: momentum changes by the boundary pressure imbalance times t
    assert drift["1,0"] == pytest.approx(0.5 * out["t"], rel=1e-10)
    assert "cone" in out


def test_random_state_and_console_script(capsys):
    assert run(["random-state", "--D", "3", "--M", "4", "--seed", "1"]) == EXIT_OK
    assert _json(capsys)["M"] == 4
    r = subprocess.run([sys.executable, "-m", "hypermoment.cli", "classify-field", "--D", "2",
                        "--M", "3", "--class", "1", "--root", "1"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)
