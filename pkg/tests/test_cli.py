import subprocess
import sys

from humcontrol.cli import PRESETS, parse_config, run


def _read(path):
    return path.read_bytes()


def test_parse_fig3_preset(tmp_path):
    cfg = parse_config(["control", "--preset", "fig3", "--out", str(tmp_path)])
    assert cfg.params.a == 2.0 and cfg.params.b == -0.5 and cfg.params.c == 5.5
    assert cfg.params.d == -4.5
    assert cfg.params.omega == (0.3, 0.8)
    assert cfg.horizon == 0.1
    assert cfg.eps == "h4"
    assert cfg.label == "fig3"


def test_parse_fig6_preset(tmp_path):
    cfg = parse_config(["sweep-tau", "--preset", "fig6", "--sigma-rule", "two_over_tau", "--out", str(tmp_path)])
    assert cfg.params.d == -5.0
    assert cfg.n == 400 and cfg.m == 2000
    assert cfg.sigma_rule == "two_over_tau"
    assert cfg.tau_list == (0.5, 0.25, 0.12, 0.06, 0.03)


def test_presets_cover_all_figures():
    assert sorted(PRESETS) == [f"fig{i}" for i in range(1, 9)]


def test_no_arguments_is_usage_error(capsys):
    assert run([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_is_usage_error():
    assert run(["simulate", "--does-not-exist", "1"]) == 2


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("a=1.0\nwibble=3\n")
    assert run(["simulate", "--config", str(cfg)]) == 2
    assert "wibble" in capsys.readouterr().err


def test_invalid_value_names_key(capsys):
    assert run(["simulate", "--tau", "zero"]) == 2
    assert "tau" in capsys.readouterr().err


def test_mesh_sweep_requires_three_sizes(tmp_path, capsys):
    code = run(["sweep-mesh", "--preset", "fig5", "--n-list", "20,40", "--base-m", "4", "--out", str(tmp_path)])
    assert code == 2


def test_cg_stall_maps_to_exit_1(tmp_path, capsys):
    code = run(["control", "--preset", "fig3", "--n", "16", "--m", "12", "--max-iter", "1", "--out", str(tmp_path)])
    assert code == 1
    assert "conjugate" in capsys.readouterr().err.lower()


def test_simulate_writes_trajectory(tmp_path):
    code = run(["simulate", "--preset", "fig1", "--n", "12", "--m", "8", "--out", str(tmp_path)])
    assert code == 0
    out = tmp_path / "fig1_trajectory.csv"
    assert out.exists()
    assert out.read_text().splitlines()[0] == "t,x,u,v"


def test_control_writes_diagnostics(tmp_path):
    code = run(["control", "--preset", "fig3", "--n", "16", "--m", "12", "--out", str(tmp_path)])
    assert code == 0
    header = (tmp_path / "fig3_diagnostics.csv").read_text().splitlines()[0]
    assert header.startswith("dx,Nv,NyT,Inf_eps(F_eps)")


def test_sweep_csv_and_svg(tmp_path):
    code = run([
        "sweep-mesh", "--preset", "fig5", "--n-list", "8,12,16", "--base-n", "8",
        "--base-m", "10", "--svg", "--out", str(tmp_path),
    ])
    assert code == 0
    assert (tmp_path / "fig5_sweep.csv").exists()
    svg = (tmp_path / "fig5_sweep.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_dump_config_round_trip(tmp_path, capsys):
    args = ["control", "--preset", "fig3", "--n", "16", "--m", "12"]
    assert run(args + ["--dump-config"]) == 0
    dump = capsys.readouterr().out
    cfg_file = tmp_path / "echo.cfg"
    cfg_file.write_text(dump)

    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(out_a)]) == 0
    assert run(["control", "--config", str(cfg_file), "--out", str(out_b)]) == 0
    for name in ("fig3_trajectory.csv", "fig3_diagnostics.csv"):
        assert _read(out_a / name) == _read(out_b / name)


def test_repeated_runs_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run(["avg-convergence", "--preset", "fig8", "--n", "20", "--m", "200",
                    "--tau-list", "0.2,0.1,0.05,0.025", "--out", str(out)]) == 0
    assert _read(out_a / "fig8_sweep.csv") == _read(out_b / "fig8_sweep.csv")


def test_limit_check_runs(tmp_path):
    code = run(["limit-check", "--a", "-3", "--b", "2", "--c", "1", "--d", "-1",
                "--tau-list", "0.2,0.1", "--n", "16", "--m", "20", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "limit-check_sweep.csv").exists()


def test_outdir_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv("HUMCONTROL_OUTDIR", str(tmp_path / "envout"))
    assert run(["simulate", "--preset", "fig1", "--n", "10", "--m", "5"]) == 0
    assert (tmp_path / "envout" / "fig1_trajectory.csv").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "humcontrol.cli", "simulate", "--preset", "fig1",
         "--n", "10", "--m", "5", "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "fig1_trajectory.csv").exists()


def test_config_lines_cover_every_key():
    cfg = parse_config(["simulate", "--preset", "fig1"])
    keys = {line.split("=", 1)[0] for line in cfg.config_lines()}
    from humcontrol.cli import DEFAULTS

    assert keys == set(DEFAULTS)
