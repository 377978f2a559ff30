import dataclasses

import numpy as np
import pytest

from ltvobs import scenario_io
from ltvobs.ode import IntegrationConfig
from ltvobs.scenario_io import (CsvFormatError, csv_header, load_scenario,
                                read_csv, save_scenario, write_csv)
from ltvobs.sim import run_closed_loop
from ltvobs.truth import ScenarioValidationError


# --------------------------------------------------------------------------
# scenario round trip
# --------------------------------------------------------------------------

def _assert_scenarios_equal(a, b):
    for f in dataclasses.fields(a):
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if isinstance(va, np.ndarray):
            np.testing.assert_array_equal(va, vb, err_msg=f.name)
        elif dataclasses.is_dataclass(va):
            for g in dataclasses.fields(va):
                np.testing.assert_array_equal(getattr(va, g.name),
                                              getattr(vb, g.name),
                                              err_msg=f"{f.name}.{g.name}")
        else:
            assert va == vb, f.name


def test_round_trip_example(sc_fast, tmp_path):
    path = tmp_path / "example.toml"
    save_scenario(sc_fast, path)
    _assert_scenarios_equal(load_scenario(path), sc_fast)


def test_round_trip_slow_and_noisy(sc_slow, sc_noisy, tmp_path):
    for i, sc in enumerate((sc_slow, sc_noisy)):
        path = tmp_path / f"sc_{i}.toml"
        save_scenario(sc, path)
        _assert_scenarios_equal(load_scenario(path), sc)


def test_saved_file_contains_gains(sc_fast, tmp_path):
    path = tmp_path / "example.toml"
    save_scenario(sc_fast, path)
    text = path.read_text()
    assert "f0 = 0.001" in text
    assert "alpha = 100.0" in text
    assert "gamma = 100.0" in text


def test_load_missing_key(sc_fast, tmp_path):
    path = tmp_path / "bad.toml"
    save_scenario(sc_fast, path)
    text = path.read_text().replace("h_delta = [1.0, 0.0]\n", "")
    path.write_text(text)
    with pytest.raises(ScenarioValidationError, match="h_delta"):
        load_scenario(path)


def test_load_bad_entry_index(sc_fast, tmp_path):
    path = tmp_path / "bad.toml"
    save_scenario(sc_fast, path)
    text = path.read_text().replace("entry.2.1", "entry.9.1")
    path.write_text(text)
    with pytest.raises(ScenarioValidationError, match="out of range"):
        load_scenario(path)


def test_load_bad_shape(sc_fast, tmp_path):
    path = tmp_path / "bad.toml"
    save_scenario(sc_fast, path)
    text = path.read_text().replace("K = [7.5, 25.0]", "K = [7.5, 25.0, 1.0]")
    path.write_text(text)
    with pytest.raises(ScenarioValidationError, match="gains.K"):
        load_scenario(path)


def test_load_validates_scenario(sc_fast, tmp_path):
    path = tmp_path / "bad.toml"
    save_scenario(sc_fast, path)
    text = path.read_text().replace("K = [7.5, 25.0]", "K = [0.0, 0.0]")
    path.write_text(text)
    with pytest.raises(ScenarioValidationError, match="Hurwitz"):
        load_scenario(path)


# --------------------------------------------------------------------------
# trajectory CSV
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_run(sc_fast=None):
    from ltvobs.truth import make_example_scenario
    sc = make_example_scenario()
    return run_closed_loop(sc, IntegrationConfig(h=1e-3, t_final=1.0,
                                                 record_stride=100))


def test_csv_header_order(short_run):
    header = csv_header(short_run.scenario)
    assert header[:3] == ["t", "u", "y"]
    assert header[-3:] == ["param_err_norm", "state_err_norm", "Delta"]
    assert "x_1" in header and "xhat_2" in header and "thetahat_5" in header
    assert len(header) == 3 + 2 + 2 + 5 + 3


def test_csv_round_trip(short_run, tmp_path):
    path = tmp_path / "run.csv"
    write_csv(short_run, path)
    header, data = read_csv(path)
    assert header == csv_header(short_run.scenario)
    np.testing.assert_allclose(data[:, 0], short_run.t)
    np.testing.assert_allclose(data[:, 2], short_run.y)


def test_csv_byte_identical(short_run, tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(short_run, p1)
    write_csv(short_run, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_field_count_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,u,y\n0.0,1.0\n")
    with pytest.raises(CsvFormatError, match="line 2"):
        read_csv(path)


def test_csv_bad_float_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,u,y\n0.0,1.0,zzz\n")
    with pytest.raises(CsvFormatError, match="line 2"):
        read_csv(path)


def test_csv_no_data_rows(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("t,u,y\n")
    with pytest.raises(CsvFormatError, match="no data rows"):
        read_csv(path)


def test_csv_missing_header(tmp_path):
    path = tmp_path / "void.csv"
    path.write_text("")
    with pytest.raises(CsvFormatError, match="line 1"):
        read_csv(path)
