import dataclasses

import numpy as np
import pytest

from ltvobs import estimator, gpebo, sim
from ltvobs.estimator import EstimatorState
from ltvobs.gpebo import FilterBank
from ltvobs.ode import IntegrationConfig
from ltvobs.sim import (composite_rhs, initial_state, make_layout,
                        run_closed_loop, run_report, unpack_filter_bank)
from ltvobs.truth import TruthState, truth_rhs


def test_layout_size(sc_fast):
    layout = make_layout(sc_fast)
    # 8 truth + 8 principal + 12 K-filters + 10 f-filters + 9 + 81 + 5
    assert layout.size == 131
    assert layout.names[0] == "x"
    assert layout.names[-1] == "theta_hat"


def test_initial_state_contents(sc_fast):
    layout = make_layout(sc_fast)
    v0 = initial_state(sc_fast, layout)
    np.testing.assert_allclose(layout.view(v0, "x"), sc_fast.x0)
    np.testing.assert_allclose(layout.view(v0, "w"), sc_fast.w0)
    np.testing.assert_allclose(layout.view(v0, "Phi_theta"), np.eye(2).ravel())
    np.testing.assert_allclose(layout.view(v0, "F"),
                               (np.eye(9) / sc_fast.f0).ravel())
    np.testing.assert_allclose(layout.view(v0, "z"), np.zeros(2))


def test_composite_rhs_matches_modular_composition(sc_fast, rng):
    # the fused right-hand side must agree with chaining the module-level
    # rhs functions on a random composite state
    sc = sc_fast
    layout = make_layout(sc)
    v = rng.uniform(-1.0, 1.0, size=layout.size)
    # make F symmetric, as it is along any real trajectory
    F = v[layout.slice_of("F")].reshape(9, 9)
    F = 0.5 * (F + F.T)
    v[layout.slice_of("F")] = F.ravel()
    t = 0.37

    dv = composite_rhs(sc, layout)(t, v)

    s = TruthState(layout.view(v, "x"), layout.view(v, "x_theta"),
                   layout.view(v, "x_B"), layout.view(v, "w"))
    fb = unpack_filter_bank(sc, layout, v)
    y = float(s.x[0])
    u = sc.u(t)
    ds = truth_rhs(sc, t, s)
    dfb = gpebo.filters_rhs(sc, t, fb, y, u)
    zeta, phi = gpebo.measurables(sc, fb, y)
    sample = gpebo.regressor_sample(sc, fb, zeta, phi, t=t)
    st = EstimatorState(theta_g=layout.view(v, "theta_g"), F=F,
                        theta=layout.view(v, "theta_hat"))
    dst = estimator.estimator_rhs(sc, st, sample, np.zeros(9))

    np.testing.assert_allclose(layout.view(dv, "x"), ds.x, atol=1e-12)
    np.testing.assert_allclose(layout.view(dv, "w"), ds.w, atol=1e-12)
    np.testing.assert_allclose(layout.view(dv, "z"), dfb.z, atol=1e-12)
    np.testing.assert_allclose(layout.view(dv, "Omega"), dfb.Omega.ravel(),
                               atol=1e-12)
    np.testing.assert_allclose(layout.view(dv, "L"), dfb.L, atol=1e-12)
    np.testing.assert_allclose(layout.view(dv, "Q"), dfb.Q.ravel(), atol=1e-12)
    np.testing.assert_allclose(layout.view(dv, "theta_g"), dst.theta_g,
                               atol=1e-10)
    np.testing.assert_allclose(layout.view(dv, "F"), dst.F.ravel(), atol=1e-10)
    np.testing.assert_allclose(layout.view(dv, "theta_hat"), dst.theta,
                               atol=1e-10)


def test_fast_loop_matches_reference(sc_fast):
    cfg = IntegrationConfig(h=1e-3, t_final=2.0, record_stride=100)
    res_fast = run_closed_loop(sc_fast, cfg, fast=True)
    res_ref = run_closed_loop(sc_fast, cfg, fast=False)
    np.testing.assert_allclose(res_fast.t, res_ref.t, atol=1e-12)
    assert np.max(np.abs(res_fast.states - res_ref.states)) < 1e-9
    np.testing.assert_allclose(res_fast.y, res_ref.y, atol=1e-9)
    np.testing.assert_allclose(res_fast.u, res_ref.u, atol=1e-12)


def test_fast_loop_matches_reference_with_noise(sc_fast):
    sc = dataclasses.replace(sc_fast, noise_amplitude=0.05, noise_seed=3)
    cfg = IntegrationConfig(h=1e-3, t_final=1.0, record_stride=50)
    res_fast = run_closed_loop(sc, cfg, fast=True)
    res_ref = run_closed_loop(sc, cfg, fast=False)
    assert np.max(np.abs(res_fast.states - res_ref.states)) < 1e-9
    np.testing.assert_allclose(res_fast.y, res_ref.y, atol=1e-9)


def test_zero_horizon_single_row(sc_fast):
    res = run_closed_loop(sc_fast, IntegrationConfig(h=1e-3, t_final=0.0))
    assert len(res.t) == 1
    assert res.t[0] == 0.0
    report = run_report(res)
    lines = report.lines()
    assert sum("not reached" in ln for ln in lines) == 3


def test_run_determinism(sc_fast):
    cfg = IntegrationConfig(h=1e-3, t_final=1.0, record_stride=100)
    a = run_closed_loop(sc_fast, cfg)
    b = run_closed_loop(sc_fast, cfg)
    assert np.array_equal(a.states, b.states)  # bit-identical
    assert np.array_equal(a.y, b.y)


def test_run_report_fields(sc_fast, res_fast):
    report = run_report(res_fast)
    assert report.final_theta_err >= 0.0
    assert report.final_state_err >= 0.0
    assert report.config["scenario"] == "example"
    assert report.config["f0"] == 0.001
    assert set(report.time_to_threshold) == {1e-1, 1e-2, 1e-3}
    lines = report.lines()
    assert any(ln.startswith("final_theta_err = ") for ln in lines)
    assert any(ln.startswith("delta_final = ") for ln in lines)


def test_theta_err_and_state_err_series(res_fast):
    te = res_fast.theta_err_norm()
    se = res_fast.state_err_norm()
    assert te.shape == res_fast.t.shape
    assert se.shape == res_fast.t.shape
    assert np.all(np.isfinite(te))
    assert np.all(np.isfinite(se))


def test_noise_sequence_seeded(sc_fast):
    sc = dataclasses.replace(sc_fast, noise_amplitude=0.1, noise_seed=9)
    n1 = sim._noise_sequence(sc, 1000)
    n2 = sim._noise_sequence(sc, 1000)
    np.testing.assert_array_equal(n1, n2)
    assert np.max(np.abs(n1)) <= 0.1
    np.testing.assert_array_equal(sim._noise_sequence(sc_fast, 1000),
                                  np.zeros(1000))
