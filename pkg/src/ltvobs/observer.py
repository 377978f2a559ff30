"""Certainty-equivalent state reconstruction and recovery of the time-varying
parameters from filter states and a parameter estimate.

The state formula inverts the stacked observability-like rows of A_K (unit
lower triangular, hence always invertible) against the matching stack built
from the estimated exosystem vector Gamma_hat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .gpebo import FilterBank, ThetaVector
from .truth import Scenario

__all__ = ["ObserverOutput", "ok_matrix", "m_gamma_matrix", "reconstruct_state",
           "reconstruct_state_folded", "recover_tv_params", "recover_rho"]


@dataclass(frozen=True)
class ObserverOutput:
    x_hat: np.ndarray
    theta_tv_hat: np.ndarray
    B_hat: np.ndarray
    gamma_hat: np.ndarray
    rho_hat: np.ndarray | None  # None when the scenario declares no read-out


def ok_matrix(K, n: int | None = None) -> np.ndarray:
    """Stack of rows e_1^T A_K^i, i = 0..n-1.

    The identity-superdiagonal structure of A_K makes this unit lower
    triangular, so it is nonsingular for every K.
    """
    K = np.asarray(K, dtype=float).ravel()
    if n is None:
        n = len(K)
    A_K = linalg.companion_first_col(K, n)
    O = np.empty((n, n))
    row = np.zeros(n)
    row[0] = 1.0
    for i in range(n):
        O[i] = row
        row = row @ A_K
    return O


def _forward_solve_unit_lower(O: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve O x = b for unit lower triangular O by forward substitution."""
    n = O.shape[0]
    x = np.empty_like(b, dtype=float)
    for i in range(n):
        x[i] = b[i] - O[i, :i] @ x[:i]
    return x


def m_gamma_matrix(gamma_hat, f, n: int) -> np.ndarray:
    """Stack of rows (Gamma_hat - f)^T A_Gamma^i, i = 0..n-1 (n x n_w)."""
    gamma_hat = np.asarray(gamma_hat, dtype=float).ravel()
    f = np.asarray(f, dtype=float).ravel()
    A_g = linalg.companion_last_row(gamma_hat)
    M = np.empty((n, len(gamma_hat)))
    row = gamma_hat - f
    for i in range(n):
        M[i] = row
        row = row @ A_g
    return M


def reconstruct_state(sc: Scenario, fb: FilterBank, theta_hat: ThetaVector,
                      O_K: np.ndarray | None = None) -> np.ndarray:
    """Certainty-equivalent state estimate

        x_hat = z + O_K^{-1} M_Gamma_hat (L - Q x0_hat)
                  + Omega x_theta0_hat + P x_B0_hat

    with Gamma_hat = C_gamma @ eta_hat and x0_hat = (x_theta0_hat; x_B0_hat).
    O_K may be passed in to avoid rebuilding it (K is constant per scenario).
    """
    if O_K is None:
        O_K = ok_matrix(sc.K, sc.n)
    gamma_hat = sc.C_gamma @ theta_hat.eta
    M = m_gamma_matrix(gamma_hat, sc.f, sc.n)
    x0_hat = np.concatenate([theta_hat.x_theta0, theta_hat.x_B0])
    psi = fb.L - fb.Q @ x0_hat
    return (fb.z + _forward_solve_unit_lower(O_K, M @ psi)
            + fb.Omega @ theta_hat.x_theta0 + fb.P @ theta_hat.x_B0)


def reconstruct_state_folded(sc: Scenario, fb: FilterBank, theta_hat: ThetaVector,
                             O_K: np.ndarray | None = None) -> np.ndarray:
    """Compatibility variant keeping the Omega/P correction inside the
    O_K^{-1} M_Gamma product; only dimensionally valid when n_w == n."""
    if sc.n_w != sc.n:
        raise ValueError("folded reconstruction requires n_w == n")
    if O_K is None:
        O_K = ok_matrix(sc.K, sc.n)
    gamma_hat = sc.C_gamma @ theta_hat.eta
    M = m_gamma_matrix(gamma_hat, sc.f, sc.n)
    x0_hat = np.concatenate([theta_hat.x_theta0, theta_hat.x_B0])
    inner = fb.L - (fb.Q - np.hstack([fb.Omega, fb.P])) @ x0_hat
    return fb.z + _forward_solve_unit_lower(O_K, M @ inner)


def recover_tv_params(sc: Scenario, fb: FilterBank, theta_hat: ThetaVector
                      ) -> tuple[np.ndarray, np.ndarray]:
    """theta_tv_hat(t) = h_theta Phi_theta(t) x_theta0_hat and
    B_hat(t) = h_B Phi_B(t) x_B0_hat."""
    return (sc.h_theta @ fb.Phi_theta @ theta_hat.x_theta0,
            sc.h_B @ fb.Phi_B @ theta_hat.x_B0)


def recover_rho(sc: Scenario, eta_hat) -> tuple[np.ndarray, np.ndarray | None]:
    """Gamma_hat and, when the scenario declares an affine read-out,
    rho_hat = readout @ eta_hat; otherwise rho_hat is None."""
    eta_hat = np.asarray(eta_hat, dtype=float).ravel()
    gamma_hat = sc.C_gamma @ eta_hat
    if sc.rho_readout is None:
        return gamma_hat, None
    return gamma_hat, sc.rho_readout @ eta_hat
