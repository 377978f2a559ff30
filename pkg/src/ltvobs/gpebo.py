"""GPEBO regression generator: the filter bank driven by (y, u), the
algebraic measurables, and the separable nonlinearly parameterized
regression they produce.

The constant unknowns collected by the regression are
theta = (x_theta0; x_B0; eta) with Gamma = C_gamma @ eta, of length
q = n_theta + n_B + n_gamma.  The extended map G(theta) = (theta; K(theta))
appends the bilinear products K_(k,j) = eta_k * (x_theta0; x_B0)_j and has
length p = q + n_gamma*(n_theta + n_B).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .truth import Scenario

__all__ = ["FilterBank", "RegressorSample", "ThetaVector", "filters_rhs",
           "measurables", "regressor_sample", "g_map", "g_jacobian",
           "kappa_map", "selection_matrix", "split_theta"]


@dataclass(frozen=True)
class FilterBank:
    Phi_theta: np.ndarray  # n_theta x n_theta, Phi_theta(0) = I
    Phi_B: np.ndarray      # n_B x n_B, Phi_B(0) = I
    z: np.ndarray          # n
    Omega: np.ndarray      # n x n_theta
    P: np.ndarray          # n x n_B
    L: np.ndarray          # n_w
    Q: np.ndarray          # n_w x (n_theta + n_B)

    @classmethod
    def initial(cls, sc: Scenario) -> "FilterBank":
        return cls(
            Phi_theta=np.eye(sc.n_theta),
            Phi_B=np.eye(sc.n_B),
            z=np.zeros(sc.n),
            Omega=np.zeros((sc.n, sc.n_theta)),
            P=np.zeros((sc.n, sc.n_B)),
            L=np.zeros(sc.n_w),
            Q=np.zeros((sc.n_w, sc.n_theta + sc.n_B)),
        )


@dataclass(frozen=True)
class RegressorSample:
    Y: float
    Omega_L: np.ndarray  # length q
    Omega_N: np.ndarray  # length n_gamma*(n_theta+n_B), row-major over (k, j)
    t: float = 0.0

    def row(self) -> np.ndarray:
        """The 1 x p regressor row (Omega_L; Omega_N) for the LS search."""
        return np.concatenate([self.Omega_L, self.Omega_N])


@dataclass(frozen=True)
class ThetaVector:
    x_theta0: np.ndarray
    x_B0: np.ndarray
    eta: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x_theta0, self.x_B0, self.eta])


def split_theta(sc: Scenario, theta: np.ndarray) -> ThetaVector:
    theta = np.asarray(theta, dtype=float).ravel()
    if len(theta) != sc.q:
        raise ValueError(f"theta has length {len(theta)}, expected q={sc.q}")
    a, b = sc.n_theta, sc.n_theta + sc.n_B
    return ThetaVector(theta[:a], theta[a:b], theta[b:])


def measurables(sc: Scenario, fb: FilterBank, y: float) -> tuple[float, np.ndarray]:
    """zeta = y - z_1 and phi = (Omega^T e_1; P^T e_1)."""
    zeta = y - fb.z[0]
    phi = np.concatenate([fb.Omega[0, :], fb.P[0, :]])
    return float(zeta), phi


def filters_rhs(sc: Scenario, t: float, fb: FilterBank, y: float, u: float) -> FilterBank:
    """Filter-bank derivative; zeta and phi are evaluated at the same instant
    (no sample-and-hold between the algebraic and dynamic parts)."""
    A_K = sc.A_K()
    A_f = sc.A_f()
    zeta, phi = measurables(sc, fb, y)
    dz = A_K @ fb.z + sc.K * y
    dOmega = A_K @ fb.Omega + (sc.h_theta @ fb.Phi_theta) * y
    dP = A_K @ fb.P + (sc.h_B @ fb.Phi_B) * u
    dL = A_f @ fb.L
    dL[-1] += zeta
    dQ = A_f @ fb.Q
    dQ[-1, :] += phi
    return FilterBank(
        Phi_theta=sc.A_theta(t) @ fb.Phi_theta,
        Phi_B=sc.A_B(t) @ fb.Phi_B,
        z=dz, Omega=dOmega, P=dP, L=dL, Q=dQ,
    )


def regressor_sample(sc: Scenario, fb: FilterBank, zeta: float, phi: np.ndarray,
                     t: float = 0.0) -> RegressorSample:
    """Regression data at one instant:
    Y = zeta + L^T f, Omega_L = (Q^T f + phi; C_gamma^T L),
    Omega_N = row-major flattening of -(C_gamma^T Q)."""
    Y = zeta + float(fb.L @ sc.f)
    Omega_L = np.concatenate([fb.Q.T @ sc.f + phi, sc.C_gamma.T @ fb.L])
    Omega_N = (-(sc.C_gamma.T @ fb.Q)).ravel()
    return RegressorSample(Y=float(Y), Omega_L=Omega_L, Omega_N=Omega_N, t=t)


def kappa_map(sc: Scenario, theta: ThetaVector) -> np.ndarray:
    """Bilinear block K(theta): entry (k, j) = eta_k * (x_theta0; x_B0)_j."""
    x0 = np.concatenate([theta.x_theta0, theta.x_B0])
    return np.outer(theta.eta, x0).ravel()


def g_map(sc: Scenario, theta: ThetaVector) -> np.ndarray:
    """Extended parameter vector G(theta) = (theta; K(theta)), length p."""
    return np.concatenate([theta.flat(), kappa_map(sc, theta)])


def g_jacobian(sc: Scenario, theta: ThetaVector) -> np.ndarray:
    """Exact Jacobian of g_map: identity on top, bilinear block below."""
    q = sc.q
    m = sc.n_theta + sc.n_B
    x0 = np.concatenate([theta.x_theta0, theta.x_B0])
    J = np.zeros((sc.p, q))
    J[:q, :q] = np.eye(q)
    for k in range(sc.n_gamma):
        rows = slice(q + k * m, q + (k + 1) * m)
        J[rows, :m] = theta.eta[k] * np.eye(m)
        J[rows, m + k] = x0
    return J


def selection_matrix(q: int, p: int) -> np.ndarray:
    """Block [I_q | 0] picking the linear part of the extended regression."""
    if q > p:
        raise ValueError(f"q={q} exceeds p={p}")
    return np.hstack([np.eye(q), np.zeros((q, p - q))])
