import dataclasses
import warnings

import numpy as np
import pytest

from ltvobs import truth
from ltvobs.ode import CompositeState, IntegrationConfig, StateLayout, integrate
from ltvobs.truth import (InputSignal, Scenario, ScenarioValidationError,
                          SinusoidMatrix, TruthState, make_example_scenario,
                          measure, true_kappa_vector, true_theta_vector,
                          truth_rhs)


# --------------------------------------------------------------------------
# example scenario values
# --------------------------------------------------------------------------

def test_example_theta_vector(sc_fast):
    np.testing.assert_allclose(true_theta_vector(sc_fast),
                               [-2.0, -1.0, 0.7, 0.2, -1.0])


def test_example_kappa_vector(sc_fast):
    np.testing.assert_allclose(true_kappa_vector(sc_fast),
                               [2.0, 1.0, -0.7, -0.2])


def test_example_ab_at_zero(sc_fast):
    np.testing.assert_allclose(sc_fast.A_B(0.0), [[0.0, 1.0], [-1.0, 0.0]])


def test_example_dimensions_and_gains(sc_fast, sc_slow):
    assert (sc_fast.q, sc_fast.p) == (5, 9)
    assert (sc_fast.f0, sc_fast.alpha, sc_fast.gamma) == (0.001, 100.0, 100.0)
    assert (sc_slow.f0, sc_slow.alpha, sc_slow.gamma) == (0.1, 1.0, 100.0)
    np.testing.assert_allclose(sc_fast.K, [7.5, 25.0])
    np.testing.assert_allclose(sc_fast.f, [-1.0, -2.0])


def test_example_input_signal(sc_fast):
    assert sc_fast.u(0.0) == pytest.approx(10.0)
    assert sc_fast.u(np.pi) == pytest.approx(10.0 + np.sin(0.5 * np.pi))


def test_sinusoid_matrix_constant_flag(sc_fast):
    assert sc_fast.A_theta.is_constant()
    assert not sc_fast.A_B.is_constant()
    assert sc_fast.A_B(1.0)[1, 0] == pytest.approx(-1.0 + 0.1 * np.sin(1.0))


# --------------------------------------------------------------------------
# truth_rhs
# --------------------------------------------------------------------------

def test_rhs_zero_state_zero_derivative(sc_fast):
    s = TruthState(np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2))
    ds = truth_rhs(sc_fast, 0.0, s)
    for part in (ds.x, ds.x_theta, ds.x_B, ds.w):
        np.testing.assert_allclose(part, 0.0, atol=1e-15)


def test_rhs_initial_disturbance(sc_fast):
    s = sc_fast.initial_truth()
    assert float(sc_fast.h_delta @ s.w) == pytest.approx(-10.0)
    ds = truth_rhs(sc_fast, 0.0, s)
    # x(0) = 0, so dx = B(0)u(0) + e_2 delta(0)
    expected = sc_fast.h_B @ sc_fast.x_B0 * sc_fast.u(0.0) + np.array([0.0, -10.0])
    np.testing.assert_allclose(ds.x, expected, atol=1e-12)


def test_rhs_linearity(sc_fast, rng):
    # scale (x, w) with the parameter subsystems held fixed: theta(t) and
    # B(t) act as exogenous coefficients, so the plant part is linear up to
    # the constant input term B(t)u
    s = TruthState(*(rng.uniform(-1, 1, size=2) for _ in range(4)))
    s3 = TruthState(3.0 * s.x, s.x_theta, s.x_B, 3.0 * s.w)
    d1 = truth_rhs(sc_fast, 0.7, s)
    d3 = truth_rhs(sc_fast, 0.7, s3)
    u = sc_fast.u(0.7)
    B_u = sc_fast.h_B @ s.x_B * u
    np.testing.assert_allclose(d3.x - B_u, 3.0 * (d1.x - B_u), atol=1e-12)
    np.testing.assert_allclose(d3.w, 3.0 * d1.w, atol=1e-12)
    # parameter subsystems are linear on their own
    s_th = TruthState(s.x, 3.0 * s.x_theta, 3.0 * s.x_B, s.w)
    d_th = truth_rhs(sc_fast, 0.7, s_th)
    np.testing.assert_allclose(d_th.x_theta, 3.0 * d1.x_theta, atol=1e-12)
    np.testing.assert_allclose(d_th.x_B, 3.0 * d1.x_B, atol=1e-12)


def _integrate_truth(sc, t_final, h=1e-3, stride=100):
    layout = StateLayout([("x", sc.n), ("x_theta", sc.n_theta),
                          ("x_B", sc.n_B), ("w", sc.n_w)])
    s0 = CompositeState(layout, layout.pack({
        "x": sc.x0, "x_theta": sc.x_theta0, "x_B": sc.x_B0, "w": sc.w0}))

    def rhs(t, v):
        s = TruthState(layout.view(v, "x"), layout.view(v, "x_theta"),
                       layout.view(v, "x_B"), layout.view(v, "w"))
        d = truth_rhs(sc, t, s)
        return layout.pack({"x": d.x, "x_theta": d.x_theta,
                            "x_B": d.x_B, "w": d.w})

    ts, rows = [], []
    integrate(rhs, s0, IntegrationConfig(h=h, t_final=t_final, record_stride=stride),
              recorder=lambda t, v: (ts.append(t), rows.append(v.copy())))
    return layout, np.array(ts), np.array(rows)


def test_exosystem_period(sc_fast):
    # S = [[0,1],[-1,0]] rotates with period 2*pi
    layout, ts, rows = _integrate_truth(sc_fast, 2.0 * np.pi)
    np.testing.assert_allclose(rows[-1, layout.slice_of("w")], sc_fast.w0, atol=1e-6)


def test_exosystem_norm_conserved(sc_fast):
    layout, ts, rows = _integrate_truth(sc_fast, 20.0)
    norms = np.linalg.norm(rows[:, layout.slice_of("w")], axis=1)
    np.testing.assert_allclose(norms, norms[0], atol=1e-6)


def test_theta_t_analytic(sc_fast):
    layout, ts, rows = _integrate_truth(sc_fast, 50.0)
    x_theta = rows[:, layout.slice_of("x_theta")]
    expected = np.column_stack([-2.0 * np.exp(-0.001 * ts),
                                -1.0 * np.exp(-0.002 * ts)])
    np.testing.assert_allclose(x_theta, expected, atol=1e-6)


# --------------------------------------------------------------------------
# measure
# --------------------------------------------------------------------------

def test_measure_noise_free(sc_fast):
    s = TruthState(np.array([3.5, 0.0]), np.zeros(2), np.zeros(2), np.zeros(2))
    assert measure(sc_fast, s, 0.0) == 3.5


def test_measure_noise_bounded_and_seeded(sc_fast):
    sc = dataclasses.replace(sc_fast, noise_amplitude=0.2)
    s = TruthState(np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2))
    ys1 = [measure(sc, s, 0.0, rng=np.random.default_rng(7)) for _ in range(1)]
    ys2 = [measure(sc, s, 0.0, rng=np.random.default_rng(7)) for _ in range(1)]
    assert ys1 == ys2
    rng = np.random.default_rng(7)
    assert all(abs(measure(sc, s, 0.0, rng=rng)) <= 0.2 for _ in range(100))


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def test_validate_rejects_zero_gain(sc_fast):
    sc = dataclasses.replace(sc_fast, K=np.zeros(2))
    with pytest.raises(ScenarioValidationError, match="gains.K"):
        sc.validate()


def test_validate_rejects_non_hurwitz_f(sc_fast):
    sc = dataclasses.replace(sc_fast, f=np.array([1.0, 2.0]))
    with pytest.raises(ScenarioValidationError, match="gains.f"):
        sc.validate()


def test_validate_rejects_bad_shapes(sc_fast):
    sc = dataclasses.replace(sc_fast, h_delta=np.zeros(3))
    with pytest.raises(ScenarioValidationError, match="h_delta"):
        sc.validate()


def test_validate_rejects_nonpositive_gains(sc_fast):
    for fieldname in ("f0", "alpha", "gamma"):
        sc = dataclasses.replace(sc_fast, **{fieldname: 0.0})
        with pytest.raises(ScenarioValidationError, match=f"gains.{fieldname}"):
            sc.validate()


def test_validate_rejects_inconsistent_gamma(sc_fast):
    sc = dataclasses.replace(sc_fast, eta_true=np.array([2.0]))
    with pytest.raises(ScenarioValidationError, match="C_gamma"):
        sc.validate()


def test_validate_rejects_overlapping_spectra(sc_fast):
    # S = A_K shares its whole spectrum with A_K; keep C_gamma*eta consistent
    A_K = sc_fast.A_K()
    from ltvobs import linalg
    gamma = linalg.gamma_from_charpoly(linalg.char_poly(A_K))
    sc = dataclasses.replace(sc_fast, S=A_K, C_gamma=np.eye(2), eta_true=gamma,
                             n_gamma=2)
    with pytest.raises(ScenarioValidationError, match="S/gains.K"):
        sc.validate()


def test_validate_warns_on_stable_exosystem(sc_fast):
    S = np.array([[-1.0, 0.0], [0.0, -2.0]])
    from ltvobs import linalg
    gamma = linalg.gamma_from_charpoly(linalg.char_poly(S))
    sc = dataclasses.replace(sc_fast, S=S, C_gamma=np.eye(2), eta_true=gamma,
                             n_gamma=2)
    with pytest.warns(UserWarning, match="negative real part"):
        sc.validate()
