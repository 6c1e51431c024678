import json

import numpy as np
import pytest

from bfdwaves import io
from bfdwaves.cli import main
from bfdwaves.spectral import PeriodicGrid, WaveState

SMALL = ["--L", "64", "--N", "512", "--dt", "0.05", "--tfinal", "2", "--record", "10"]


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_state_round_trip_is_exact(tmp_path, rng):
    g = PeriodicGrid(12.5, 64)
    st = WaveState(rng.standard_normal(64), rng.standard_normal(64))
    io.write_state(tmp_path / "s.csv", g, st, meta={"digest": "abc"})
    g2, st2 = io.read_state(tmp_path / "s.csv")
    assert g2 == g
    assert np.array_equal(st2.zeta, st.zeta) and np.array_equal(st2.u, st.u)
    assert io.read_header(tmp_path / "s.csv")["digest"] == "abc"


def test_read_state_rejects_bad_rows(tmp_path):
    g = PeriodicGrid(1.0, 8)
    io.write_state(tmp_path / "s.csv", g, WaveState.zeros(g))
    lines = (tmp_path / "s.csv").read_text().splitlines()
    (tmp_path / "s.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError):
        io.read_state(tmp_path / "s.csv")


def test_json_cleaning():
    assert io._clean({"a": np.float64(1.5), "b": np.arange(2), "c": float("nan")}) == \
        {"a": 1.5, "b": [0, 1], "c": "nan"}


def test_classify(capsys):
    assert main(["classify", "--alpha1", "0", "--alpha2", "0", "--beta", "0.5"]) == 0
    out = _json(capsys)
    assert out["signs"] == "0+-0" and out["relevant"]


def test_classify_rejects_inadmissible(capsys):
    assert main(["classify", "--alpha1", "0", "--alpha2", "1", "--beta", "0.5"]) == 2
    assert "classify" in capsys.readouterr().err


def test_speed_limit(capsys):
    assert main(["speed-limit", "--gamma", "0.8"]) == 0
    out = _json(capsys)
    assert out["c_gamma"] == pytest.approx(out["inf_phi"])
    assert out["alpha0"] is None


def test_dispersion(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dispersion", "--cs", "0.3", "--kmax", "5", "--n", "11", "--out", str(out),
                 "--plotdata"]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (11, 8)
    assert (tmp_path / "d.dat").exists()


def test_solitary_then_evolve(tmp_path, capsys):
    prof = tmp_path / "p.csv"
    assert main(["solitary", "--cs", "0.3", "--L", "64", "--N", "512", "--out", str(prof)]) == 0
    info = _json(capsys)
    assert info["residual"] <= 1e-12
    assert json.loads(prof.with_suffix(".json").read_text())["iterations"] == info["iterations"]
    run = tmp_path / "run"
    assert main(["evolve", "--init", str(prof), "--dt", "0.05", "--tfinal", "1", "--record", "10",
                 "--out", str(run)]) == 0
    info = _json(capsys)
    assert info["snapshots"] == 3
    assert info["max_energy_drift"] < 1e-10
    g, st = io.read_state(run / "snapshots" / "snap000000.csv")
    assert g == PeriodicGrid(64.0, 512)


def test_evolve_courant_guard(tmp_path, capsys):
    prof = tmp_path / "p.csv"
    g = PeriodicGrid(8.0, 64)
    io.write_state(prof, g, WaveState(np.exp(-g.x ** 2), np.exp(-g.x ** 2)))
    assert main(["evolve", "--init", str(prof), "--dt", "1", "--tfinal", "1",
                 "--out", str(tmp_path / "r")]) == 2
    assert main(["evolve", "--init", str(prof), "--dt", "1", "--tfinal", "1",
                 "--allow-courant-violation", "--out", str(tmp_path / "r")]) == 0


def test_perturb_and_resolve(tmp_path, capsys):
    assert main(["perturb", "--A", "1.2", "--cs", "0.3", *SMALL, "--out", str(tmp_path / "p"),
                 "--plotdata"]) == 0
    s = _json(capsys)
    assert s["completed"] and len(s["waves"]) == 1
    assert (tmp_path / "p" / "tracks" / "wave0.dat").exists()
    assert main(["resolve", "--A", "0.5", "--tau", "0.1", "--tracks", "2", *SMALL,
                 "--out", str(tmp_path / "g")]) == 0
    assert _json(capsys)["completed"]


def test_collide(tmp_path, capsys):
    assert main(["collide", "--mode", "head-on", "--cs1", "0.3", "--cs2", "0.4", "--x1", "-20",
                 "--x2", "20", *SMALL, "--out", str(tmp_path / "c")]) == 0
    s = _json(capsys)
    assert len(s["waves"]) == 2


def test_converge(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    assert main(["converge", "--Nlist", "64,128", "--Nref", "512", "--L", "128", "--dt", "0.05",
                 "--tfinal", "0.5", "--out", str(out)]) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows[0, 1] > 10 * rows[1, 1]
