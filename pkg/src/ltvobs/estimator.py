"""Interlaced least-squares + DREM estimator for the separable nonlinear
regression Y = Omega @ G(theta).

The LS half searches over the extended vector G(theta) in R^p with gain
matrix F; the DREM half mixes the accumulated information through
Delta = det(I - f0*F) and its adjugate, producing one scalar regression per
parameter, and drives the q-dimensional estimate theta_hat through the
selected (linear) block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gpebo, linalg
from .gpebo import RegressorSample, ThetaVector, split_theta
from .truth import Scenario

__all__ = ["EstimatorState", "DremSample", "estimator_rhs", "drem_transform",
           "extended_lre_residual", "excitation_report", "ExcitationReport"]


@dataclass(frozen=True)
class EstimatorState:
    theta_g: np.ndarray  # p, LS estimate of G(theta)
    F: np.ndarray        # p x p, LS gain, symmetric positive definite
    theta: np.ndarray    # q, mixed estimate

    @classmethod
    def initial(cls, sc: Scenario) -> "EstimatorState":
        theta_g0 = np.zeros(sc.p) if sc.theta_g0 is None else np.asarray(sc.theta_g0, float)
        theta0 = np.zeros(sc.q) if sc.theta_hat0 is None else np.asarray(sc.theta_hat0, float)
        return cls(theta_g=theta_g0.copy(), F=np.eye(sc.p) / sc.f0, theta=theta0.copy())


@dataclass(frozen=True)
class DremSample:
    Delta: float
    Y_mix: np.ndarray  # p


def drem_transform(F: np.ndarray, theta_g: np.ndarray, theta_g0: np.ndarray,
                   f0: float) -> DremSample:
    """Delta = det(I - f0*F) and Y_mix = adj(I - f0*F) @ (theta_g - f0*F@theta_g0).

    Singular I - f0*F is legitimate (Delta = 0 before excitation accumulates);
    the adjugate stays well defined there.
    """
    M = np.eye(len(theta_g)) - f0 * F
    det, adj = linalg.det_adjugate(M)
    return DremSample(Delta=det, Y_mix=adj @ (theta_g - f0 * (F @ theta_g0)))


def estimator_rhs(sc: Scenario, st: EstimatorState, sample: RegressorSample,
                  theta_g0: np.ndarray) -> EstimatorState:
    """Derivative of the interlaced estimator at one regressor sample."""
    omega = sample.row()                       # 1 x p regressor as a vector
    Fw = st.F @ omega
    err = sample.Y - float(omega @ st.theta_g)
    d_theta_g = sc.alpha * err * Fw
    dF = -sc.alpha * np.outer(Fw, Fw)          # symmetric by construction
    mix = drem_transform(st.F, st.theta_g, theta_g0, sc.f0)
    g_hat = gpebo.g_map(sc, split_theta(sc, st.theta))
    resid = mix.Y_mix - mix.Delta * g_hat
    d_theta = sc.gamma * mix.Delta * resid[: sc.q]   # Q_sel = [I_q | 0]
    if not (np.all(np.isfinite(d_theta_g)) and np.all(np.isfinite(dF))
            and np.all(np.isfinite(d_theta))):
        raise FloatingPointError("estimator derivative is non-finite")
    return EstimatorState(theta_g=d_theta_g, F=dF, theta=d_theta)


def extended_lre_residual(sc: Scenario, F: np.ndarray, theta_g: np.ndarray,
                          theta_g0: np.ndarray, theta_true: ThetaVector
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Defect of the extended regression at the true parameters.

    Returns (residual, mixed_residual) with
    residual = (I - f0*F) @ G(theta_true) - (theta_g - f0*F @ theta_g0) and
    mixed_residual = Y_mix - Delta*G(theta_true) = adj(I - f0*F) @ residual.
    Both vanish identically when the regression holds exactly and decay with
    the exponentially decaying regression error otherwise.
    """
    g_true = gpebo.g_map(sc, theta_true)
    M = np.eye(sc.p) - sc.f0 * F
    residual = M @ g_true - (theta_g - sc.f0 * (F @ theta_g0))
    _, adj = linalg.det_adjugate(M)
    return residual, adj @ residual


@dataclass(frozen=True)
class ExcitationReport:
    gram: np.ndarray                     # int Omega^T Omega over [t0, t0+t_c]
    gram_min_eig_lower_bound: float      # Gershgorin lower bound
    delta_crossings: dict[float, float | None]  # threshold -> first time, or None
    delta_min_after_tc: float
    delta_max_after_tc: float
    t_c: float


def excitation_report(t: np.ndarray, delta: np.ndarray, rows: np.ndarray,
                      t_c: float, t0: float = 0.0,
                      thresholds=(1e-8, 1e-6, 1e-4)) -> ExcitationReport:
    """Interval-excitation diagnostics on recorded trajectories.

    rows holds the 1 x p regressor at each recorded time (shape N x p); the
    Gram integral of Omega^T Omega over [t0, t0+t_c] is computed with the
    trapezoidal rule and bounded below via Gershgorin discs (no eigensolver).
    """
    t = np.asarray(t, dtype=float)
    delta = np.asarray(delta, dtype=float)
    rows = np.asarray(rows, dtype=float)
    mask = (t >= t0) & (t <= t0 + t_c)
    if np.count_nonzero(mask) < 2:
        raise ValueError("excitation window contains fewer than 2 samples")
    tw = t[mask]
    outer = rows[mask][:, :, None] * rows[mask][:, None, :]
    gram = np.trapezoid(outer, tw, axis=0)
    diag = np.diag(gram)
    offsum = np.sum(np.abs(gram), axis=1) - np.abs(diag)
    lower = float(np.min(diag - offsum))
    crossings: dict[float, float | None] = {}
    for thr in thresholds:
        idx = np.nonzero(delta > thr)[0]
        crossings[thr] = float(t[idx[0]]) if len(idx) else None
    after = delta[t >= t0 + t_c]
    d_min = float(np.min(after)) if len(after) else float("nan")
    d_max = float(np.max(after)) if len(after) else float("nan")
    return ExcitationReport(gram=gram, gram_min_eig_lower_bound=lower,
                            delta_crossings=crossings,
                            delta_min_after_tc=d_min, delta_max_after_tc=d_max,
                            t_c=t_c)
