import json
import subprocess
import sys
from importlib import resources

import pytest

import aerialdelta.sim as sim_mod
from aerialdelta.cli import main
from aerialdelta.config import validate_config
from aerialdelta.errors import NonFiniteState

try:
    import tomllib
except ImportError:
    import tomli as tomllib


def scenario_path(name):
    return str(resources.files("aerialdelta.scenarios").joinpath(f"{name}.toml"))


def data_path(name):
    return str(resources.files("aerialdelta.data").joinpath(name))


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def short_config(tmp_path, extra=""):
    p = tmp_path / "short.toml"
    p.write_text('name = "short"\nduration = 0.2\n[arm]\nenabled = false\n' + extra)
    return str(p)


def test_alloc_hover(capsys):
    code, out, _ = run_cli(capsys, "alloc", "--fz", "-19.62")
    assert code == 0
    cmd = json.loads(out)
    assert (cmd["T12"], cmd["T34"], cmd["T5"], cmd["alpha0"], cmd["alpha1"]) == (9.81, 9.81, 0.0, 0.0, 0.0)
    assert cmd["saturated"] is False


def test_ik_reachable_and_unreachable(capsys):
    code, out, _ = run_cli(capsys, "ik", "--x", "0", "--y", "0", "--z", "0.15")
    assert code == 0
    theta = json.loads(out)["theta"]
    assert len(theta) == 3 and max(theta) - min(theta) < 1e-12

    code, out, err = run_cli(capsys, "ik", "--x", "0", "--y", "0", "--z", "0.5")
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "UnreachableTarget"


def test_ik_takes_geometry_from_config(capsys, tmp_path):
    cfg = tmp_path / "narrow.toml"
    cfg.write_text("[delta]\ntheta_max_deg = 5.0\n")
    code, _, err = run_cli(capsys, "ik", "--x", "0", "--y", "0", "--z", "0.15", "--config", str(cfg))
    assert code == 1 and json.loads(err)["error"] == "JointLimit"


def test_validate(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "validate", scenario_path("hover_step"))
    assert code == 0 and json.loads(out)["valid"] is True
    bad = tmp_path / "bad.toml"
    bad.write_text("[gains]\nK_q = 1\n")
    code, _, err = run_cli(capsys, "validate", str(bad))
    msg = json.loads(err)
    assert code == 1 and msg["error"] == "ConfigError" and "gains.K_q" in msg["message"]


def test_usage_errors_exit_2(capsys):
    for argv in ([], ["ik", "--x", "0"], ["alloc", "--fx", "abc"], ["frobnicate"], ["sim", "x", "--decimate", "0"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


def test_sim_writes_log_and_summary(capsys, tmp_path):
    out_csv = tmp_path / "log.csv"
    code, out, _ = run_cli(capsys, "sim", short_config(tmp_path), "--out", str(out_csv), "--decimate", "10")
    assert code == 0
    summary = json.loads(out)
    assert summary["name"] == "short" and summary["rows"] == 20 and summary["error"] is None
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 21 and lines[0].startswith("t,p_x,p_y,p_z,q_w")


def test_sim_default_log_name(capsys, tmp_path, monkeypatch):
    cfg = short_config(tmp_path)
    monkeypatch.chdir(tmp_path)
    assert run_cli(capsys, "sim", cfg)[0] == 0
    assert (tmp_path / "short.csv").is_file()


def test_sim_flushes_log_on_numerical_failure(capsys, tmp_path, monkeypatch):
    real = sim_mod.step
    calls = {"n": 0}

    def failing(*args):
        calls["n"] += 1
        if calls["n"] > 50:
            raise NonFiniteState("diverged")
        return real(*args)

    monkeypatch.setattr(sim_mod, "step", failing)
    out_csv = tmp_path / "log.csv"
    code, _, err = run_cli(capsys, "sim", short_config(tmp_path), "--out", str(out_csv))
    assert code == 1 and json.loads(err)["error"] == "NonFiniteState"
    assert len(out_csv.read_text().splitlines()) == 1 + 51


def test_sim_unwritable_output(capsys, tmp_path):
    code, _, err = run_cli(capsys, "sim", short_config(tmp_path), "--out", str(tmp_path / "no" / "such" / "x.csv"))
    assert code == 1 and json.loads(err)["error"] == "IOError"


def test_stiffness_fit_outputs(capsys):
    code, out, _ = run_cli(capsys, "stiffness-fit", data_path("stiffness_synthetic.csv"))
    fit = json.loads(out)
    assert code == 0
    assert fit["k_at_z_lo"] == pytest.approx(80.0, rel=0.02)
    assert fit["k_at_z_hi"] == pytest.approx(290.0, rel=0.02)
    assert len(fit["poly_residuals"]) == len(fit["heights"])

    code, out, _ = run_cli(capsys, "stiffness-fit", data_path("stiffness_synthetic.csv"), "--format", "toml")
    cfg = validate_config(tomllib.loads(out))
    assert cfg.stiffness.build().coefficients == pytest.approx((fit["c0"], fit["c1"], fit["c2"]), rel=1e-12)


def test_stiffness_fit_bad_input(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("z,delta_z,F_z\n0.1,0.01,1\n0.1,0.02,2\n")
    code, _, err = run_cli(capsys, "stiffness-fit", str(bad))
    assert code == 1 and json.loads(err)["error"] == "DegenerateData"
    code, _, err = run_cli(capsys, "stiffness-fit", str(tmp_path / "missing.csv"))
    assert code == 1 and json.loads(err)["error"] == "IOError"


def test_workspace(capsys, tmp_path):
    cfg = tmp_path / "ws.toml"
    cfg.write_text("[workspace]\nx = {min = -0.02, max = 0.02, count = 3}\n"
                   "y = {min = 0.0, max = 0.0, count = 1}\nz = {min = 0.0, max = 0.15, count = 2}\n")
    code, out, _ = run_cli(capsys, "workspace", str(cfg))
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x,y,z,reachable,theta1,theta2,theta3,error_code" and len(lines) == 7
    assert [ln.split(",")[3] for ln in lines[1:]] == ["0", "0", "0", "1", "1", "1"]

    dest = tmp_path / "ws.csv"
    code, out, _ = run_cli(capsys, "workspace", str(cfg), "--out", str(dest))
    assert json.loads(out) == {"points": 6, "reachable": 3, "log": str(dest)}
    assert dest.read_text() == "\n".join(lines) + "\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "aerialdelta.cli", "alloc", "--mz", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["T12"] == pytest.approx(2.5)
