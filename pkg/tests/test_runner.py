import json
import subprocess
import sys

import numpy as np
import pytest

from conic_andrews import ConfigError, ExperimentConfig, convergence_study, emit_plot_data, run
from conic_andrews.cli import main
from conic_andrews.runner import CONFIG_SCHEMA, RunReport, build_from_spec, parse_preset


def _cfg(tmp_path, **kw):
    base = {"schema": CONFIG_SCHEMA, "manifold": {"preset": "round_sphere", "n": 3},
            "grids": [201, 401, 801], "tasks": ["eigen"], "output_dir": str(tmp_path / "out")}
    base.update(kw)
    return base


def test_parse_preset():
    assert parse_preset("football n=4 beta=-0.5") == {"preset": "football", "n": 4,
                                                      "beta": -0.5}
    with pytest.raises(ConfigError):
        parse_preset("football n4")


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_cfg(tmp_path, tasks=[]))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_cfg(tmp_path, grids=[400, 200]))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_cfg(tmp_path, colour="blue"))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_cfg(tmp_path, schema="other/1"))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_cfg(tmp_path, tolerances={"nope": 1}))
    with pytest.raises(ConfigError):
        build_from_spec({"preset": "football", "n": 4, "beta": 0.3})
    with pytest.raises(ConfigError):
        build_from_spec({"preset": "round_sphere", "beta": -0.5})


def test_eigen_run_converges_to_bound(tmp_path):
    rep = run(ExperimentConfig.from_dict(_cfg(tmp_path)))
    assert rep.passed and rep.exit_code == 0
    lam = [row["lambda1"] for row in rep.rows["eigen"]]
    errs = np.abs(np.array(lam) - 1.5)
    assert np.all(np.diff(errs) < 0) and errs[-1] < 1e-4
    # Richardson extrapolation of the column lands on 1.5.
    assert abs(lam[-1] + (lam[-1] - lam[-2]) / 3 - 1.5) < 1e-6
    text = (tmp_path / "out" / "eigen.csv").read_text().splitlines()
    assert len(text) == 4 and text[0].startswith("grid,lambda1")
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert abs(summary["margin"] - (lam[-1] - 1.5)) < 1e-15


def test_csv_is_deterministic(tmp_path):
    a = run(ExperimentConfig.from_dict(_cfg(tmp_path, output_dir=str(tmp_path / "a"))))
    b = run(ExperimentConfig.from_dict(_cfg(tmp_path, output_dir=str(tmp_path / "b"))))
    assert a.passed and b.passed
    assert (tmp_path / "a" / "eigen.csv").read_bytes() == (tmp_path / "b" / "eigen.csv").read_bytes()


def test_football_rigidity_run(tmp_path):
    cfg = _cfg(tmp_path, manifold=parse_preset("football n=4 beta=-0.5"),
               grids=[1001, 2001], tasks=["curvature", "rigidity", "regularity"])
    rep = run(ExperimentConfig.from_dict(cfg))
    assert rep.passed, (rep.checks, rep.errors)
    assert rep.summary()["equality"] is True
    assert rep.rows["rigidity"][-1]["case"] == "C"


def test_failed_task_gives_nonzero_exit(tmp_path):
    # An unmeetable regularity tolerance makes the acceptance check fail.
    cfg = _cfg(tmp_path, manifold=parse_preset("football n=4 beta=-0.5"), grids=[2001],
               tasks=["regularity"], tolerances={"regularity": 1e-9})
    rep = run(ExperimentConfig.from_dict(cfg))
    assert not rep.passed and rep.exit_code == 1


def test_profile_file_manifold(tmp_path):
    assert main(["build", "--preset", "football", "--dim", "4", "--beta", "-0.25",
                 "--out", str(tmp_path), "--quiet"]) == 0
    cfg = _cfg(tmp_path, manifold={"profile_file": "manifold.json"}, grids=[501, 1001])
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    rep = run(ExperimentConfig.load(path))
    assert rep.passed
    assert abs(rep.rows["eigen"][-1]["lambda1"] - 4 / 3) < 1e-4


def test_convergence_study_orders(tmp_path):
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path, grids=[101, 201, 401, 801]))
    eig = convergence_study(cfg, "eigen")
    assert abs(eig.order - 2) < 0.1 and not eig.flagged
    poi = convergence_study(cfg, "poisson")
    assert abs(poi.order - 2) < 0.1 and not poi.flagged
    with pytest.raises(ConfigError):
        convergence_study(ExperimentConfig.from_dict(_cfg(tmp_path, grids=[201])))


def test_emit_plot_data(tmp_path):
    cfg = ExperimentConfig.from_dict(_cfg(tmp_path, manifold=parse_preset("football n=4"),
                                          grids=[2001], tasks=["eigen", "regularity"]))
    rep = run(cfg, write=False)
    files = emit_plot_data(rep, tmp_path / "plots")
    names = sorted(p.name for p in files)
    assert "profile.svg" in names and "regularity.svg" in names and "eigenfunction.csv" in names
    prof = np.loadtxt(tmp_path / "plots" / "profile.csv", delimiter=",", skiprows=1)
    assert np.allclose(prof[:, 1], prof[::-1, 1], atol=1e-12)
    again = emit_plot_data(rep, tmp_path / "plots2")
    for p in again:
        assert p.read_bytes() == (tmp_path / "plots" / p.name).read_bytes()
    assert emit_plot_data(RunReport(cfg), tmp_path / "empty") == []
    assert not (tmp_path / "empty").exists()


def test_cli_verbs(tmp_path, capsys):
    assert main(["verify", "--preset", "round_sphere", "--dim", "3", "--grids", "201,401",
                 "--out", str(tmp_path / "v"), "--tasks", "eigen", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] and abs(out["margin"]) < 1e-3
    assert main(["regularity", "--dim", "4", "--beta", "-0.5", "--lmax", "2", "--json"]) == 0
    reg = json.loads(capsys.readouterr().out)
    assert reg["class"] == "C^{1,1}"
    assert abs(reg["modes"][0]["measured"] - 2.60555) < 0.01
    assert main(["converge", "--preset", "round_sphere", "--grids", "101,201,401",
                 "--quiet"]) == 0
    assert main(["converge", "--preset", "round_sphere", "--grids", "101"]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "conic_andrews", "report", "--preset",
                           "hemisphere", "--dim", "4", "--grids", "201,401",
                           "--out", str(tmp_path), "--quiet"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "profile.svg").exists() and (tmp_path / "summary.json").exists()
