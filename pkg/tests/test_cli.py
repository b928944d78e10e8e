import json
import math
import runpy

import numpy as np
import pytest

from cohtherm.cli import main
from cohtherm.config import (
    OUTPUT_ENV_VAR,
    PRESETS,
    expand_preset,
    figure_preset,
    load_config,
    output_root,
)
from cohtherm.errors import ParameterError
from cohtherm.runner import MANIFEST, emit_plot_script, run

INI = """\
[state]
kind = werner-w
p = 0.5

[bath]
environment = common
eta = 0.1
lambda = 0.01
kT = 0.1, 2

[run]
t_max = 20
samples = 201
solver = both
cache = yes
"""


@pytest.fixture
def ini(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(INI + f"output = {tmp_path / 'out'}\n")
    return path


def test_load_config(ini):
    cfg = load_config(ini)
    assert cfg.state.label == "werner-w-p0.5"
    assert cfg.environment == "common" and cfg.kT == (0.1, 2.0)
    assert cfg.samples == 201 and cfg.solver == "both" and cfg.cache
    assert load_config(ini, kT=(0.5,), solver="ode").kT == (0.5,)


@pytest.mark.parametrize("patch,field", [
    (("kT = 0.1, 2", "kT = "), "kT"),
    (("eta = 0.1", "eta = abc"), "eta"),
    (("solver = both", "solver = euler"), "solver"),
    (("cache = yes", "cache = maybe"), "cache"),
    (("lambda = 0.01", "lambda = -1"), "lambda"),
])
def test_config_errors_name_the_field(tmp_path, patch, field):
    path = tmp_path / "bad.ini"
    path.write_text(INI.replace(*patch))
    with pytest.raises(ParameterError) as err:
        load_config(path)
    assert err.value.field == field


def test_missing_state_kind():
    with pytest.raises(ParameterError):
        load_config(None)


def test_run_writes_files_and_caches(ini, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(ini)]) == 0
    names = sorted(p.name for p in out.glob("*.csv"))
    assert names == [
        "werner-w-p0.5_common_kT0.1_analytic.csv",
        "werner-w-p0.5_common_kT0.1_ode.csv",
        "werner-w-p0.5_common_kT2_analytic.csv",
        "werner-w-p0.5_common_kT2_ode.csv",
    ]
    first = {n: (out / n).read_bytes() for n in names}
    check = json.loads((out / "crosscheck_werner-w-p0.5_common.json").read_text())
    assert check["ok"] and max(check["max_deviation_by_kT"].values()) <= 1e-6

    cfg = load_config(ini)
    report = run(cfg)
    assert not report.computed and len(report.cache_hits) == 4
    report = run(load_config(ini, cache=False))
    assert len(report.computed) == 4
    assert {n: (out / n).read_bytes() for n in names} == first
    assert (out / MANIFEST).exists()


def test_run_flags_only(tmp_path, capsys):
    out = tmp_path / "flags"
    code = main(["run", "--state", "ghz", "--env", "local", "--kT", "0.5", "--t-max", "10",
                 "--samples", "101", "--solver", "analytic", "--output", str(out), "--dump-states"])
    assert code == 0
    assert (out / "ghz_local_kT0.5_analytic.csv").exists()
    assert (out / "ghz_local_kT0.5_analytic_states.csv").exists()


def test_run_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(INI.replace("kT = 0.1, 2", "kT ="))
    assert main(["run", str(path)]) == 2
    assert "[kT]" in capsys.readouterr().err


def test_missing_config_file_is_io_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.ini")]) == 4


def test_presets():
    assert len(PRESETS) == 26
    cfg = figure_preset("fig2a")
    assert cfg.state.name == "ghz" and cfg.environment == "local" and len(cfg.kT) == 5
    cfg = figure_preset("fig5i")
    assert cfg.state.label == "werner-w-p0.9" and cfg.environment == "common"
    assert expand_preset("fig4") == [f"fig4{c}" for c in "abcdefghi"]
    with pytest.raises(ParameterError):
        figure_preset("fig9x")


def test_output_env_var(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ENV_VAR, str(tmp_path / "root"))
    assert output_root() == tmp_path / "root"
    assert figure_preset("fig3c").output == tmp_path / "root" / "fig3c"


def test_preset_fig3c_flat_ln3(tmp_path, capsys):
    assert main(["preset", "fig3c", "--output", str(tmp_path), "--t-max", "50", "--samples", "201"]) == 0
    files = sorted((tmp_path / "fig3c").glob("w_common_kT*_analytic.csv"))
    assert len(files) == 5
    for f in files:
        c = np.loadtxt(f, delimiter=",", skiprows=1)[:, 1]
        assert np.max(np.abs(c - math.log(3))) <= 1e-8
    script = tmp_path / "fig3c" / "plot_fig3c.py"
    text = script.read_text()
    assert all(f.name in text for f in files)


def test_preset_group_emits_one_script_per_panel(tmp_path, capsys):
    assert main(["preset", "fig4", "--output", str(tmp_path), "--t-max", "10", "--samples", "51"]) == 0
    assert len(list(tmp_path.glob("fig4?/plot_fig4?.py"))) == 9


def test_unknown_preset_exit_code(tmp_path, capsys):
    assert main(["preset", "fig9x", "--output", str(tmp_path)]) == 2


def test_plot_script_renders(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = figure_preset("fig2a", output=tmp_path, t_max=10, samples=51)
    report = run(cfg)
    script = emit_plot_script(report.files, "fig2a", config=cfg)
    runpy.run_path(str(script))
    assert (tmp_path / "fig2a.png").stat().st_size > 0


def test_plot_script_missing_csv(tmp_path):
    with pytest.raises(FileNotFoundError):
        emit_plot_script([tmp_path / "absent.csv"], "fig2a")


def test_rates_command(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    assert main(["rates", "--kT", "0.5", "--t-max", "10", "--samples", "11", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,gamma,re_alpha,im_alpha,Gamma,X" and len(lines) == 12
    assert main(["rates", "--kT", "-1"]) == 2


def test_estimate_temp_command(tmp_path, capsys):
    run_dir = tmp_path / "obs"
    assert main(["run", "--state", "ghz", "--kT", "0.5", "--t-max", "50", "--samples", "201",
                 "--solver", "analytic", "--output", str(run_dir)]) == 0
    capsys.readouterr()
    obs = run_dir / "ghz_local_kT0.5_analytic.csv"
    assert main(["estimate-temp", str(obs), "--state", "ghz", "--bounds", "0.05", "20"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["kt_hat"] == pytest.approx(0.5, rel=1e-2) and rec["identifiable"]
    assert main(["estimate-temp", str(obs)]) == 2
    assert main(["estimate-temp", str(tmp_path / "missing.csv"), "--state", "ghz"]) == 4


def test_verify_quick(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out
