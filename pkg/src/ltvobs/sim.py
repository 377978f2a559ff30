"""Closed-loop simulation: truth model, GPEBO filter bank and LS+DREM
estimator integrated as one composite RK4 state, plus post-hoc accessors for
every derived signal (regressor, Delta, reconstructed state, error norms).

The composite right-hand side is a fused re-implementation of the modular
functions in truth/gpebo/estimator with all constant matrices hoisted out of
the loop; tests pin it against the modular composition.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import estimator, gpebo, linalg, observer
from .gpebo import FilterBank, RegressorSample, ThetaVector, split_theta
from .ode import BLOWUP_LIMIT, BlowUpError, IntegrationConfig, StateLayout, rk4_vec
from .truth import Scenario, TruthState, true_theta_vector

__all__ = ["SimulationResult", "RunReport", "make_layout", "initial_state",
           "composite_rhs", "run_closed_loop", "run_report",
           "THETA_THRESHOLDS"]

THETA_THRESHOLDS = (1e-1, 1e-2, 1e-3)


def make_layout(sc: Scenario) -> StateLayout:
    m = sc.n_theta + sc.n_B
    return StateLayout([
        ("x", sc.n),
        ("x_theta", sc.n_theta),
        ("x_B", sc.n_B),
        ("w", sc.n_w),
        ("Phi_theta", sc.n_theta * sc.n_theta),
        ("Phi_B", sc.n_B * sc.n_B),
        ("z", sc.n),
        ("Omega", sc.n * sc.n_theta),
        ("P", sc.n * sc.n_B),
        ("L", sc.n_w),
        ("Q", sc.n_w * m),
        ("theta_g", sc.p),
        ("F", sc.p * sc.p),
        ("theta_hat", sc.q),
    ])


def initial_state(sc: Scenario, layout: StateLayout) -> np.ndarray:
    fb = FilterBank.initial(sc)
    est = estimator.EstimatorState.initial(sc)
    return layout.pack({
        "x": sc.x0, "x_theta": sc.x_theta0, "x_B": sc.x_B0, "w": sc.w0,
        "Phi_theta": fb.Phi_theta.ravel(), "Phi_B": fb.Phi_B.ravel(),
        "z": fb.z, "Omega": fb.Omega.ravel(), "P": fb.P.ravel(),
        "L": fb.L, "Q": fb.Q.ravel(),
        "theta_g": est.theta_g, "F": est.F.ravel(), "theta_hat": est.theta,
    })


def unpack_filter_bank(sc: Scenario, layout: StateLayout, vec: np.ndarray) -> FilterBank:
    m = sc.n_theta + sc.n_B
    g = layout.view
    return FilterBank(
        Phi_theta=g(vec, "Phi_theta").reshape(sc.n_theta, sc.n_theta),
        Phi_B=g(vec, "Phi_B").reshape(sc.n_B, sc.n_B),
        z=g(vec, "z"),
        Omega=g(vec, "Omega").reshape(sc.n, sc.n_theta),
        P=g(vec, "P").reshape(sc.n, sc.n_B),
        L=g(vec, "L"),
        Q=g(vec, "Q").reshape(sc.n_w, m),
    )


def composite_rhs(sc: Scenario, layout: StateLayout, noise_value=None):
    """Build the fused closed-loop right-hand side rhs(t, vec) -> dvec.

    noise_value, when given, is a zero-argument callable returning the
    measurement-noise sample held for the current step.
    """
    n, n_th, n_B, n_w = sc.n, sc.n_theta, sc.n_B, sc.n_w
    m = n_th + n_B
    q, p = sc.q, sc.p
    A_K = sc.A_K()
    A_f = sc.A_f()
    h_theta, h_B = sc.h_theta, sc.h_B
    S, h_delta = sc.S, sc.h_delta
    CgT = sc.C_gamma.T
    K, f = sc.K, sc.f
    f0, alpha, gamma = sc.f0, sc.alpha, sc.gamma
    theta_g0 = np.zeros(p) if sc.theta_g0 is None else np.asarray(sc.theta_g0, float)
    u_of = sc.u
    A_theta_t, A_B_t = sc.A_theta, sc.A_B
    Ip = np.eye(p)
    sl = {name: layout.slice_of(name) for name in layout.names}

    def rhs(t: float, v: np.ndarray) -> np.ndarray:
        x = v[sl["x"]]
        x_theta = v[sl["x_theta"]]
        x_B = v[sl["x_B"]]
        w = v[sl["w"]]
        Phi_th = v[sl["Phi_theta"]].reshape(n_th, n_th)
        Phi_B = v[sl["Phi_B"]].reshape(n_B, n_B)
        z = v[sl["z"]]
        Om = v[sl["Omega"]].reshape(n, n_th)
        P = v[sl["P"]].reshape(n, n_B)
        L = v[sl["L"]]
        Q = v[sl["Q"]].reshape(n_w, m)
        theta_g = v[sl["theta_g"]]
        F = v[sl["F"]].reshape(p, p)
        theta_hat = v[sl["theta_hat"]]

        u = u_of(t)
        y = x[0] if noise_value is None else x[0] + noise_value()
        theta_t = h_theta @ x_theta
        B_t = h_B @ x_B

        dv = np.empty(layout.size)
        # truth
        dx = dv[sl["x"]]
        dx[:-1] = x[1:]
        dx[-1] = h_delta @ w
        dx += theta_t * x[0] + B_t * u
        dv[sl["x_theta"]] = A_theta_t(t) @ x_theta
        dv[sl["x_B"]] = A_B_t(t) @ x_B
        dv[sl["w"]] = S @ w
        # filter bank
        dv[sl["Phi_theta"]] = (A_theta_t(t) @ Phi_th).ravel()
        dv[sl["Phi_B"]] = (A_B_t(t) @ Phi_B).ravel()
        dv[sl["z"]] = A_K @ z + K * y
        dv[sl["Omega"]] = (A_K @ Om + (h_theta @ Phi_th) * y).ravel()
        dv[sl["P"]] = (A_K @ P + (h_B @ Phi_B) * u).ravel()
        zeta = y - z[0]
        phi = np.concatenate([Om[0, :], P[0, :]])
        dL = A_f @ L
        dL[-1] += zeta
        dv[sl["L"]] = dL
        dQ = A_f @ Q
        dQ[-1, :] += phi
        dv[sl["Q"]] = dQ.ravel()
        # regressor sample at this instant
        Y = zeta + L @ f
        omega = np.concatenate([Q.T @ f + phi, CgT @ L, -(CgT @ Q).ravel()])
        # LS search on the extended parameter
        Fw = F @ omega
        dv[sl["theta_g"]] = alpha * (Y - omega @ theta_g) * Fw
        dv[sl["F"]] = (-alpha * np.outer(Fw, Fw)).ravel()
        # DREM mixing and the selected-block update
        _, det, adj = linalg.faddeev_leverrier(Ip - f0 * F)
        y_mix = adj @ (theta_g - f0 * (F @ theta_g0))
        # Q_sel = [I_q | 0] and G(theta_hat)[:q] = theta_hat
        dv[sl["theta_hat"]] = gamma * det * (y_mix[:q] - det * theta_hat)
        return dv

    return rhs


@dataclass
class SimulationResult:
    scenario: Scenario
    cfg: IntegrationConfig
    layout: StateLayout
    t: np.ndarray                 # recorded times, shape (N,)
    states: np.ndarray            # recorded composite states, shape (N, size)
    y: np.ndarray                 # measured output at recorded times
    u: np.ndarray                 # input at recorded times
    wall_seconds: float = 0.0

    def seg(self, name: str) -> np.ndarray:
        return self.states[:, self.layout.slice_of(name)]

    def filter_bank_at(self, i: int) -> FilterBank:
        return unpack_filter_bank(self.scenario, self.layout, self.states[i])

    def theta_hat_split(self, i: int) -> ThetaVector:
        return split_theta(self.scenario, self.seg("theta_hat")[i])

    # --- derived series ------------------------------------------------
    def regressor_samples(self) -> list[RegressorSample]:
        sc = self.scenario
        out = []
        for i in range(len(self.t)):
            fb = self.filter_bank_at(i)
            zeta, phi = gpebo.measurables(sc, fb, float(self.y[i]))
            out.append(gpebo.regressor_sample(sc, fb, zeta, phi, t=float(self.t[i])))
        return out

    def regressor_rows(self) -> np.ndarray:
        return np.array([s.row() for s in self.regressor_samples()])

    def delta_series(self) -> np.ndarray:
        sc = self.scenario
        F_flat = self.seg("F")
        out = np.empty(len(self.t))
        Ip = np.eye(sc.p)
        for i in range(len(self.t)):
            F = F_flat[i].reshape(sc.p, sc.p)
            _, det, _ = linalg.faddeev_leverrier(Ip - sc.f0 * F)
            out[i] = det
        return out

    def x_hat_series(self, theta: np.ndarray | None = None) -> np.ndarray:
        """Reconstructed state at every recorded time; theta overrides the
        estimate (e.g. frozen at the true parameters for verification)."""
        sc = self.scenario
        O_K = observer.ok_matrix(sc.K, sc.n)
        out = np.empty((len(self.t), sc.n))
        th_series = self.seg("theta_hat")
        for i in range(len(self.t)):
            th = th_series[i] if theta is None else theta
            fb = self.filter_bank_at(i)
            out[i] = observer.reconstruct_state(sc, fb, split_theta(sc, th), O_K=O_K)
        return out

    def theta_err_norm(self) -> np.ndarray:
        err = self.seg("theta_hat") - true_theta_vector(self.scenario)
        return np.linalg.norm(err, axis=1)

    def state_err_norm(self, x_hat: np.ndarray | None = None) -> np.ndarray:
        if x_hat is None:
            x_hat = self.x_hat_series()
        return np.linalg.norm(x_hat - self.seg("x"), axis=1)


def _noise_sequence(sc: Scenario, n_steps: int) -> np.ndarray:
    """Measurement noise held over each step: uniform on [-1, 1] scaled by
    the amplitude, from the scenario's seeded generator."""
    if sc.noise_amplitude <= 0.0 or n_steps == 0:
        return np.zeros(max(n_steps, 1))
    rng = np.random.default_rng(sc.noise_seed)
    return sc.noise_amplitude * rng.uniform(-1.0, 1.0, size=n_steps)


def run_closed_loop(sc: Scenario, cfg: IntegrationConfig | None = None,
                    fast: bool = True) -> SimulationResult:
    """Integrate the composite system over [0, t_final]; deterministic for a
    fixed scenario, seed and step size.

    fast=True uses the numba-compiled loop (same arithmetic as the reference
    numpy loop; tests pin the two against each other).
    """
    if cfg is None:
        cfg = IntegrationConfig(h=1e-3, t_final=100.0, record_stride=100)
    layout = make_layout(sc)
    v0 = initial_state(sc, layout)
    n_steps = int(np.ceil(cfg.t_final / cfg.h - 1e-12)) if cfg.t_final > 0 else 0
    noise = _noise_sequence(sc, n_steps)

    start = time.perf_counter()
    if fast:
        from . import _fastloop
        t_arr, states, y_arr, u_arr = _fastloop.run_loop(sc, layout, v0, cfg, noise)
        return SimulationResult(scenario=sc, cfg=cfg, layout=layout,
                                t=t_arr, states=states, y=y_arr, u=u_arr,
                                wall_seconds=time.perf_counter() - start)

    held = {"nu": float(noise[0]) if n_steps > 0 else 0.0}
    noise_value = (lambda: held["nu"]) if sc.noise_amplitude > 0.0 else None
    rhs = composite_rhs(sc, layout, noise_value=noise_value)
    ts, rows, ys, us = [], [], [], []

    def record(t, v):
        ts.append(t)
        rows.append(v.copy())
        y = v[layout.slice_of("x")][0]
        if sc.noise_amplitude > 0.0:
            y += held["nu"]
        ys.append(float(y))
        us.append(float(sc.u(t)))

    t = 0.0
    v = v0
    record(t, v)
    for k in range(n_steps):
        held["nu"] = float(noise[k])
        h = cfg.h if k + 1 < n_steps else cfg.t_final - k * cfg.h
        v = rk4_vec(rhs, t, v, h)
        t = (k + 1) * cfg.h if k + 1 < n_steps else cfg.t_final
        if np.max(np.abs(v)) > BLOWUP_LIMIT or not np.all(np.isfinite(v)):
            raise BlowUpError(t)
        if k + 1 < n_steps:
            held["nu"] = float(noise[k + 1])
        if (k + 1) % cfg.record_stride == 0 or k + 1 == n_steps:
            record(t, v)
    wall = time.perf_counter() - start

    return SimulationResult(scenario=sc, cfg=cfg, layout=layout,
                            t=np.array(ts), states=np.array(rows),
                            y=np.array(ys), u=np.array(us), wall_seconds=wall)


@dataclass(frozen=True)
class RunReport:
    final_theta_err: float
    final_state_err: float
    time_to_threshold: dict[float, float | None]
    delta_final: float
    wall_seconds: float
    config: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"final_theta_err = {self.final_theta_err:.6e}",
            f"final_state_err = {self.final_state_err:.6e}",
        ]
        for thr, t in sorted(self.time_to_threshold.items(), reverse=True):
            label = f"time_to_theta_err_{thr:g}"
            out.append(f"{label} = {t:.6g}" if t is not None else f"{label} = not reached")
        out.append(f"delta_final = {self.delta_final:.6e}")
        out.append(f"wall_seconds = {self.wall_seconds:.3f}")
        for key, val in self.config.items():
            out.append(f"config.{key} = {val}")
        return out


def run_report(res: SimulationResult) -> RunReport:
    theta_err = res.theta_err_norm()
    state_err = res.state_err_norm()
    delta = res.delta_series()
    ttt: dict[float, float | None] = {}
    for thr in THETA_THRESHOLDS:
        idx = np.nonzero(theta_err < thr)[0]
        ttt[thr] = float(res.t[idx[0]]) if len(idx) else None
    sc, cfg = res.scenario, res.cfg
    config = {
        "scenario": sc.name, "t_final": cfg.t_final, "dt": cfg.h,
        "record_stride": cfg.record_stride,
        "f0": sc.f0, "alpha": sc.alpha, "gamma": sc.gamma,
        "noise_amplitude": sc.noise_amplitude, "noise_seed": sc.noise_seed,
    }
    return RunReport(final_theta_err=float(theta_err[-1]),
                     final_state_err=float(state_err[-1]),
                     time_to_threshold=ttt,
                     delta_final=float(delta[-1]),
                     wall_seconds=res.wall_seconds,
                     config=config)
