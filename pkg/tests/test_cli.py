import numpy as np
import pytest

from ltvobs import cli, scenario_io
from ltvobs.cli import main, _parse_grid
from ltvobs.ode import BlowUpError


@pytest.fixture()
def example_toml(tmp_path):
    path = tmp_path / "example.toml"
    assert main(["example", str(path)]) == 0
    return path


# --------------------------------------------------------------------------
# example
# --------------------------------------------------------------------------

def test_example_writes_loadable_file(example_toml):
    sc = scenario_io.load_scenario(example_toml)
    assert sc.f0 == 0.001
    assert sc.alpha == 100.0
    assert sc.gamma == 100.0
    text = example_toml.read_text()
    assert "f0 = 0.001" in text


def test_example_slow_gains(tmp_path):
    path = tmp_path / "slow.toml"
    assert main(["example", "--slow-gains", str(path)]) == 0
    sc = scenario_io.load_scenario(path)
    assert sc.f0 == 0.1
    assert sc.alpha == 1.0
    assert sc.gamma == 100.0


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def test_simulate_short_run(example_toml, tmp_path, capsys):
    out = tmp_path / "run.csv"
    rc = main(["simulate", str(example_toml), "--t-final", "1.0",
               "--out", str(out)])
    assert rc == 0
    header, data = scenario_io.read_csv(out)
    assert header[0] == "t"
    assert data[-1, 0] == pytest.approx(1.0)
    captured = capsys.readouterr().out
    assert "final_theta_err = " in captured


def test_simulate_zero_horizon(example_toml, tmp_path, capsys):
    out = tmp_path / "run.csv"
    rc = main(["simulate", str(example_toml), "--t-final", "0.0",
               "--out", str(out)])
    assert rc == 0
    _, data = scenario_io.read_csv(out)
    assert data.shape[0] == 1
    assert capsys.readouterr().out.count("not reached") == 3


def test_simulate_noise_override(example_toml, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    main(["simulate", str(example_toml), "--t-final", "0.5",
          "--noise-amplitude", "0.05", "--seed", "1", "--out", str(out1)])
    main(["simulate", str(example_toml), "--t-final", "0.5",
          "--noise-amplitude", "0.05", "--seed", "1", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()
    # the scenario file on disk is untouched by overrides
    assert "amplitude = 0.0" in example_toml.read_text()


def test_simulate_validation_failure(tmp_path, capsys, example_toml):
    bad = tmp_path / "bad.toml"
    bad.write_text(example_toml.read_text().replace("K = [7.5, 25.0]",
                                                    "K = [0.0, 0.0]"))
    rc = main(["simulate", str(bad), "--t-final", "1.0"])
    assert rc == 2
    assert "gains.K" in capsys.readouterr().err


def test_simulate_blowup_exit_code(example_toml, monkeypatch, capsys):
    def boom(sc, cfg):
        raise BlowUpError(0.123)

    monkeypatch.setattr(cli, "run_closed_loop", boom)
    rc = main(["simulate", str(example_toml), "--t-final", "1.0"])
    assert rc == 2
    assert "blow-up" in capsys.readouterr().err


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def test_verify_example(example_toml, tmp_path, capsys):
    report_path = tmp_path / "verify.report"
    rc = main(["verify", str(example_toml), "--report", str(report_path)])
    out = capsys.readouterr().out
    assert rc == 0
    for name in ("sylvester_decoupling", "lemma2_spectrum_copy",
                 "regression_residual", "state_formula", "linalg_properties"):
        assert f"{name}  " in out or name in out
    assert out.count("PASS") == 5
    text = report_path.read_text()
    assert "linalg_properties.passed = true" in text


def test_verify_overlapping_spectra(tmp_path, capsys, example_toml):
    # S = A_K shares the spectrum of A_K; the consistency fields are kept
    # valid so the Sylvester disjointness check is the one that trips
    text = example_toml.read_text()
    text = text.replace("S = [[0.0, 1.0], [-1.0, 0.0]]",
                        "S = [[-7.5, 1.0], [-25.0, 0.0]]")
    text = text.replace("C_gamma = [[1.0], [0.0]]",
                        "C_gamma = [[1.0, 0.0], [0.0, 1.0]]")
    text = text.replace("eta_true = [-1.0]", "eta_true = [-25.0, -7.5]")
    text = text.replace("rho_readout = [[1.0]]",
                        "rho_readout = [[1.0, 0.0], [0.0, 1.0]]")
    text = text.replace("n_gamma = 1", "n_gamma = 2")
    bad = tmp_path / "overlap.toml"
    bad.write_text(text)
    rc = main(["verify", str(bad)])
    assert rc == 2
    assert "spectra" in capsys.readouterr().err


# --------------------------------------------------------------------------
# plot
# --------------------------------------------------------------------------

def test_plot_smoke(example_toml, tmp_path):
    csv = tmp_path / "run.csv"
    main(["simulate", str(example_toml), "--t-final", "1.0", "--out", str(csv)])
    outdir = tmp_path / "plots"
    rc = main(["plot", str(csv), str(outdir)])
    assert rc == 0
    for name in ("param_err_norm.svg", "state_err.svg", "delta.svg"):
        p = outdir / name
        assert p.exists() and p.stat().st_size > 0


def test_plot_no_data_rows(tmp_path, capsys):
    csv = tmp_path / "empty.csv"
    csv.write_text("t,u,y\n")
    rc = main(["plot", str(csv), str(tmp_path / "plots")])
    assert rc == 2
    assert "no data rows" in capsys.readouterr().err


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def test_parse_grid():
    combos = _parse_grid("gains.alpha=1,10;gains.f0=0.001,0.1")
    assert len(combos) == 4
    assert {"gains.alpha": 1.0, "gains.f0": 0.1} in combos
    with pytest.raises(ValueError):
        _parse_grid("gains.alpha=")


def test_sweep_runs_grid(example_toml, tmp_path, capsys):
    outdir = tmp_path / "sweep"
    rc = main(["sweep", str(example_toml), "--grid", "gains.gamma=50,100",
               "--outdir", str(outdir), "--t-final", "0.5"])
    assert rc == 0
    reports = sorted(outdir.glob("run_*.report"))
    assert len(reports) == 2
    text = reports[0].read_text()
    assert "sweep.gains.gamma = " in text
    assert "final_theta_err = " in text


def test_sweep_bad_key(example_toml, tmp_path, capsys):
    rc = main(["sweep", str(example_toml), "--grid", "gains.bogus=1",
               "--outdir", str(tmp_path / "s"), "--t-final", "0.5"])
    assert rc == 2
    assert "unsupported sweep key" in capsys.readouterr().err
