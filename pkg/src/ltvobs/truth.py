"""Ground-truth model: the perturbed LTV plant, the LTV subsystems generating
its time-varying parameters, and the exosystem producing the disturbance.

The scenario holds the *hidden* truth (initial conditions, exosystem
parameter); observers built from this package only ever see y(t) and u(t).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg

__all__ = ["SinusoidMatrix", "InputSignal", "Scenario", "TruthState",
           "ScenarioValidationError", "make_example_scenario", "truth_rhs",
           "measure", "true_theta_vector", "true_kappa_vector"]


class ScenarioValidationError(ValueError):
    """A scenario field failed validation; message names the field."""


@dataclass(frozen=True)
class SinusoidMatrix:
    """Matrix with entries a + b*sin(omega*t + phase); a, b, omega, phase are
    entrywise constant arrays of identical shape."""

    a: np.ndarray
    b: np.ndarray
    omega: np.ndarray
    phase: np.ndarray

    @classmethod
    def constant(cls, M) -> "SinusoidMatrix":
        M = np.asarray(M, dtype=float)
        z = np.zeros_like(M)
        return cls(M, z.copy(), z.copy(), z.copy())

    @property
    def shape(self):
        return self.a.shape

    def __call__(self, t: float) -> np.ndarray:
        return self.a + self.b * np.sin(self.omega * t + self.phase)

    def is_constant(self) -> bool:
        return not np.any(self.b)


@dataclass(frozen=True)
class InputSignal:
    """u(t) = constant + sum_i amp_i * sin(omega_i*t + phase_i)."""

    constant: float = 0.0
    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omegas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phases: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __call__(self, t: float) -> float:
        if len(self.amplitudes) == 0:
            return self.constant
        return float(self.constant
                     + np.sum(self.amplitudes * np.sin(self.omegas * t + self.phases)))


@dataclass(frozen=True)
class TruthState:
    x: np.ndarray        # plant state, length n
    x_theta: np.ndarray  # parameter subsystem for theta(t)
    x_B: np.ndarray      # parameter subsystem for B(t)
    w: np.ndarray        # exosystem state


@dataclass(frozen=True)
class Scenario:
    # dimensions
    n: int
    n_theta: int
    n_B: int
    n_w: int
    n_gamma: int
    # known time-varying structure
    A_theta: SinusoidMatrix
    A_B: SinusoidMatrix
    h_theta: np.ndarray
    h_B: np.ndarray
    # exosystem (S instantiated at the true parameter; hidden from observers)
    S: np.ndarray
    h_delta: np.ndarray
    # declared parameterization Gamma = C_gamma @ eta and the hidden true eta
    C_gamma: np.ndarray
    eta_true: np.ndarray
    # hidden true initial conditions
    x0: np.ndarray
    x_theta0: np.ndarray
    x_B0: np.ndarray
    w0: np.ndarray
    # input and tuning
    u: InputSignal
    K: np.ndarray
    f: np.ndarray
    f0: float
    alpha: float
    gamma: float
    # measurement noise
    noise_amplitude: float = 0.0
    noise_seed: int = 0
    # estimator initial conditions (designer-chosen, reproducible defaults)
    theta_g0: np.ndarray | None = None
    theta_hat0: np.ndarray | None = None
    # affine read-out eta_hat -> rho_hat; None means "report Gamma_hat only"
    rho_readout: np.ndarray | None = None
    name: str = "scenario"

    # --- derived sizes -------------------------------------------------
    @property
    def q(self) -> int:
        return self.n_theta + self.n_B + self.n_gamma

    @property
    def p(self) -> int:
        return self.q + self.n_gamma * (self.n_theta + self.n_B)

    def A_K(self) -> np.ndarray:
        return linalg.companion_first_col(self.K, self.n)

    def A_f(self) -> np.ndarray:
        return linalg.companion_last_row(self.f, self.n_w)

    def gamma_true(self) -> np.ndarray:
        return self.C_gamma @ self.eta_true

    def validate(self) -> None:
        """Structural and tuning checks; raises ScenarioValidationError with
        the offending field name, warns on a stable exosystem spectrum."""
        dims = {"dims.n": self.n, "dims.n_theta": self.n_theta, "dims.n_B": self.n_B,
                "dims.n_w": self.n_w, "dims.n_gamma": self.n_gamma}
        for key, val in dims.items():
            if val < 1:
                raise ScenarioValidationError(f"{key} must be a positive integer")
        checks = [
            ("A_theta", self.A_theta.shape, (self.n_theta, self.n_theta)),
            ("A_B", self.A_B.shape, (self.n_B, self.n_B)),
            ("h_theta", self.h_theta.shape, (self.n, self.n_theta)),
            ("h_B", self.h_B.shape, (self.n, self.n_B)),
            ("S", self.S.shape, (self.n_w, self.n_w)),
            ("h_delta", self.h_delta.shape, (self.n_w,)),
            ("C_gamma", self.C_gamma.shape, (self.n_w, self.n_gamma)),
            ("eta_true", self.eta_true.shape, (self.n_gamma,)),
            ("initial.x", self.x0.shape, (self.n,)),
            ("initial.x_theta", self.x_theta0.shape, (self.n_theta,)),
            ("initial.x_B", self.x_B0.shape, (self.n_B,)),
            ("initial.w", self.w0.shape, (self.n_w,)),
            ("gains.K", self.K.shape, (self.n,)),
            ("gains.f", self.f.shape, (self.n_w,)),
        ]
        for key, got, want in checks:
            if tuple(got) != want:
                raise ScenarioValidationError(f"{key}: shape {got}, expected {want}")
        for key, val in (("gains.f0", self.f0), ("gains.alpha", self.alpha),
                         ("gains.gamma", self.gamma)):
            if val <= 0:
                raise ScenarioValidationError(f"{key} must be positive")
        if self.noise_amplitude < 0:
            raise ScenarioValidationError("noise.amplitude must be nonnegative")
        if not linalg.is_hurwitz(self.A_K()):
            raise ScenarioValidationError("gains.K: companion matrix A_K is not Hurwitz")
        if not linalg.is_hurwitz(self.A_f()):
            raise ScenarioValidationError("gains.f: companion matrix A_f is not Hurwitz")
        # the declared Gamma parameterization must hit the Cayley-Hamilton
        # vector of S
        gamma_ch = linalg.gamma_from_charpoly(linalg.char_poly(self.S))
        if np.max(np.abs(self.gamma_true() - gamma_ch)) > 1e-9:
            raise ScenarioValidationError(
                "C_gamma/eta_true: C_gamma @ eta does not reproduce the "
                "characteristic-polynomial vector of S")
        # spectra of S and A_K must be disjoint for the disturbance split
        try:
            linalg.solve_sylvester(self.A_K(), self.S,
                                   np.outer(_e(self.n, self.n), self.h_delta))
        except linalg.SpectraNotDisjointError as exc:
            raise ScenarioValidationError(f"S/gains.K: {exc}") from exc
        # exosystem eigenvalues are expected nonnegative-real-part; warn only
        roots = linalg.char_poly_roots(linalg.char_poly(self.S))
        if np.any(roots.real < -1e-9):
            warnings.warn("scenario S has eigenvalues with negative real part; "
                          "the disturbance decays on its own", stacklevel=2)

    def initial_truth(self) -> TruthState:
        return TruthState(self.x0.copy(), self.x_theta0.copy(),
                          self.x_B0.copy(), self.w0.copy())


def _e(i: int, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[i - 1] = 1.0
    return v


def make_example_scenario(slow_gains: bool = False,
                          noise_amplitude: float = 0.0,
                          noise_seed: int = 0) -> Scenario:
    """Built-in 2nd-order benchmark: diagonal drift on theta(t), oscillatory
    B(t), harmonic disturbance of unknown frequency parameter rho = -1,
    u(t) = 10 + sin(0.5 t).  slow_gains switches (f0, alpha) from
    (0.001, 100) to (0.1, 1)."""
    A_theta = SinusoidMatrix.constant([[-0.001, 0.0], [0.0, -0.002]])
    A_B = SinusoidMatrix(
        a=np.array([[0.0, 1.0], [-1.0, 0.0]]),
        b=np.array([[0.0, 0.0], [0.1, 0.0]]),
        omega=np.array([[0.0, 0.0], [1.0, 0.0]]),
        phase=np.zeros((2, 2)),
    )
    rho = -1.0
    sc = Scenario(
        n=2, n_theta=2, n_B=2, n_w=2, n_gamma=1,
        A_theta=A_theta, A_B=A_B,
        h_theta=np.eye(2), h_B=np.eye(2),
        S=np.array([[0.0, 1.0], [rho, 0.0]]),
        h_delta=np.array([1.0, 0.0]),
        C_gamma=np.array([[1.0], [0.0]]),
        eta_true=np.array([rho]),
        x0=np.zeros(2),
        x_theta0=np.array([-2.0, -1.0]),
        x_B0=np.array([0.7, 0.2]),
        w0=np.array([-10.0, 1.0]),
        u=InputSignal(constant=10.0, amplitudes=np.array([1.0]),
                      omegas=np.array([0.5]), phases=np.array([0.0])),
        K=np.array([7.5, 25.0]),
        f=np.array([-1.0, -2.0]),
        f0=0.1 if slow_gains else 0.001,
        alpha=1.0 if slow_gains else 100.0,
        gamma=100.0,
        noise_amplitude=noise_amplitude,
        noise_seed=noise_seed,
        rho_readout=np.eye(1),
        name="example-slow" if slow_gains else "example",
    )
    sc.validate()
    return sc


def truth_rhs(sc: Scenario, t: float, s: TruthState) -> TruthState:
    """Time derivative of the truth state."""
    theta_t = sc.h_theta @ s.x_theta
    B_t = sc.h_B @ s.x_B
    delta = float(sc.h_delta @ s.w)
    u = sc.u(t)
    dx = np.empty(sc.n)
    dx[:-1] = s.x[1:]       # upper-shift A acting on x
    dx[-1] = 0.0
    dx += theta_t * s.x[0] + B_t * u
    dx[-1] += delta
    return TruthState(
        x=dx,
        x_theta=sc.A_theta(t) @ s.x_theta,
        x_B=sc.A_B(t) @ s.x_B,
        w=sc.S @ s.w,
    )


def measure(sc: Scenario, s: TruthState, t: float, rng=None) -> float:
    """Measured output y = x_1 plus bounded uniform noise (amplitude-scaled)."""
    y = float(s.x[0])
    if sc.noise_amplitude > 0.0 and rng is not None:
        y += sc.noise_amplitude * float(rng.uniform(-1.0, 1.0))
    return y


def true_theta_vector(sc: Scenario) -> np.ndarray:
    """Hidden constant parameter vector (x_theta0; x_B0; eta)."""
    return np.concatenate([sc.x_theta0, sc.x_B0, sc.eta_true])


def true_kappa_vector(sc: Scenario) -> np.ndarray:
    """Hidden bilinear block: eta_k * (x_theta0; x_B0)_j, row-major over (k, j)."""
    x0 = np.concatenate([sc.x_theta0, sc.x_B0])
    return np.outer(sc.eta_true, x0).ravel()
