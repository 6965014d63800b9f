import csv
import io
import json
import subprocess
import sys

import pytest

from ptfano.cli import run
from ptfano.model import DimerParams
from ptfano.scattering import ScatteringSolution

FIG3 = DimerParams(E=0.1, gamma0=0.01, gamma2=1e-4, chi=0.0, V=0.2)


def _csv_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def _meta(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, val = line[2:].split(": ", 1)
            out[key] = json.loads(val)
    return out


def _run(argv, tmp_path, name="out"):
    path = tmp_path / name
    code = run([*argv, "--out", str(path)])
    return code, path.read_text() if path.exists() else ""


def test_spectrum_fig2(tmp_path):
    code, text = _run(["spectrum", "--preset", "fig2"], tmp_path)
    assert code == 0
    rows = _csv_rows(text)
    assert {float(r["gamma0"]) for r in rows} == {0.0, 0.001, 0.005, 0.01}
    hit = [r for r in rows if float(r["gamma0"]) == 0.01 and float(r["omega"]) == 0.1]
    assert len(hit) == 1 and float(hit[0]["transmissivity"]) == 1.0
    meta = _meta(text)
    assert meta["preset"] == "fig2" and "note" in meta and meta["seed"] == 0


def test_power_sweep_fig3_counts(tmp_path):
    code, text = _run(["power-sweep", "--preset", "fig3", "--pin", "0.03"], tmp_path)
    assert code == 0
    assert _meta(text)["counts"]["EitSymmetric"] == 3
    assert sum(r["branch"] == "EitSymmetric" for r in _csv_rows(text)) == 3


def test_scatter_solve_decoupled(tmp_path):
    code, text = _run(["scatter-solve", "--V", "0"], tmp_path)
    assert code == 0
    (row,) = _csv_rows(text)
    assert float(row["transmissivity"]) == 1.0


def test_json_round_trip(tmp_path):
    code, text = _run(["scatter-solve", "--preset", "fig3", "--pin", "0.5", "--format", "json"],
                      tmp_path)
    assert code == 0
    doc = json.loads(text)
    p = DimerParams(**doc["metadata"]["params"])
    sols = [ScatteringSolution.from_dict(p, d) for d in doc["solutions"]]
    assert len(sols) == doc["metadata"]["n_solutions"] == 5


def test_output_is_deterministic(tmp_path):
    argv = ["power-sweep", "--preset", "fig3", "--pin-min", "0.02", "--pin-max", "1", "--n-pin", "5"]
    _, a = _run(argv, tmp_path, "a")
    _, b = _run(argv, tmp_path, "b")
    assert a == b and a


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma0": 0.5, "gamma2": 0.1, "chi": 0.0, "V": 0.3}))
    code, text = _run(["dimer-modes", "--config", str(cfg), "--V", "0.2", "--format", "json"],
                      tmp_path)
    assert code == 0
    doc = json.loads(text)
    assert doc["metadata"]["params"]["V"] == 0.2 and doc["metadata"]["params"]["gamma0"] == 0.5
    asym = [m for m in doc["modes"] if m["kind"] == "asymmetric"]
    assert sorted((m["Asq"], m["Bsq"]) for m in asym) == [pytest.approx((1, 4)), pytest.approx((4, 1))]
    assert doc["census"]["multistable"]


@pytest.mark.parametrize("content", ['{"bogus": 1}', "[1, 2]", "{not json", '{"gamma0": "x"}'])
def test_bad_config_exits_2(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run(["dimer-modes", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("argv", [
    ["pinned", "--omega", "1.0"],
    ["spectrum", "--gamma2", "0.1"],
    ["dimer-modes", "--gamma0", "-1"],
    ["scatter-solve", "--format", "xml"],
    ["stability", "--branch", "Nope"],
    ["no-such-command"],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert run([*argv, "--out", str(tmp_path / "x")]) == 2


def test_missing_branch_exits_3(tmp_path):
    argv = ["stability", "--preset", "fig4", "--branch", "UltimateAsymmetricGain", "--pin", "0.5"]
    assert run([*argv, "--out", str(tmp_path / "x")]) == 3


def test_blowup_exits_3(tmp_path):
    argv = ["simulate", "--gamma0", "0.5", "--gamma2", "0", "--horizon", "200"]
    assert run([*argv, "--out", str(tmp_path / "x")]) == 3


def test_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("PT_FANO_SEED", "7")
    _, text = _run(["scatter-solve", "--preset", "fig3", "--pin", "0.5"], tmp_path)
    assert _meta(text)["seed"] == 7
    _, text = _run(["scatter-solve", "--preset", "fig3", "--pin", "0.5", "--seed", "3"], tmp_path)
    assert _meta(text)["seed"] == 3


def test_simulate_and_trajectory(tmp_path):
    traj = tmp_path / "traj.csv"
    code, text = _run(["simulate", "--V", "0", "--omega", "0.5", "--horizon", "400",
                       "--trajectory", str(traj)], tmp_path)
    assert code == 0
    (row,) = _csv_rows(text)
    assert float(row["t_est"]) == pytest.approx(1, abs=5e-3)
    assert _csv_rows(traj.read_text())[0].keys() >= {"t", "intensityA", "t_est_running"}


def test_stability_short_run(tmp_path):
    code, text = _run(["stability", "--preset", "fig4", "--branch", "UltimateAsymmetricLoss",
                       "--horizon", "100", "--format", "json"], tmp_path)
    assert code == 0
    doc = json.loads(text)
    assert doc["verdict"]["class"] in ("FixedPoint", "LimitCycle", "Divergent")
    assert doc["solution"]["branch"] == "UltimateAsymmetricLoss"


def test_pinned_profiles(tmp_path):
    code, text = _run(["pinned", "--E", "0.1", "--gamma0", "0.5", "--gamma2", "0.1", "--chi", "0.5"],
                      tmp_path)
    assert code == 0
    meta = _meta(text)
    assert [m["kind"] for m in meta["modes"]] == ["saturated", "asymmetric", "asymmetric"]
    assert all(m["residual"] < 1e-10 for m in meta["modes"])
    assert len(_csv_rows(text)) == 3 * 61


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ptfano", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout
