"""Dense small-matrix constructions: determinant/adjugate, characteristic
polynomial, Sylvester solve, Routh-Hurwitz test and companion-form builders.

Everything here operates on plain 2-D numpy arrays of modest size (n <= ~20).
The determinant, adjugate and characteristic polynomial all come out of one
Faddeev-LeVerrier pass, which stays well defined for singular matrices --
"det times inverse" would not.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DimensionError",
    "SpectraNotDisjointError",
    "InconclusiveStabilityError",
    "faddeev_leverrier",
    "det_adjugate",
    "char_poly",
    "char_poly_roots",
    "solve_sylvester",
    "is_hurwitz",
    "companion_first_col",
    "companion_last_row",
    "gamma_from_charpoly",
    "shift_matrix",
]


class DimensionError(ValueError):
    """Input matrix/vector dimensions are inconsistent."""


class SpectraNotDisjointError(ValueError):
    """Sylvester equation has no unique solution (overlapping spectra)."""


class InconclusiveStabilityError(ValueError):
    """Routh table hit a numerically degenerate pivot."""


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def faddeev_leverrier(M) -> tuple[np.ndarray, float, np.ndarray]:
    """One Faddeev-LeVerrier recursion over M.

    Returns (coeffs, det, adj) where coeffs = (c_1, ..., c_n) are the monic
    characteristic polynomial coefficients lambda^n + c_1 lambda^{n-1} + ...
    + c_n, det = det(M) and adj = adj(M).  Cost O(n^4); singularity-safe.
    """
    M = _as_square(M)
    n = M.shape[0]
    I = np.eye(n)
    coeffs = np.empty(n)
    N = I  # N_0
    Mk = M.copy()
    for k in range(1, n + 1):
        if k > 1:
            Mk = M @ N
        c = -np.trace(Mk) / k
        coeffs[k - 1] = c
        N_prev = N
        N = Mk + c * I
    det = (-1.0) ** n * coeffs[-1]
    adj = (-1.0) ** (n - 1) * N_prev
    return coeffs, det, adj


def det_adjugate(M) -> tuple[float, np.ndarray]:
    """Determinant and adjugate of a square matrix, valid for singular M."""
    _, det, adj = faddeev_leverrier(M)
    return det, adj


def char_poly(M) -> np.ndarray:
    """Monic characteristic polynomial coefficients (gamma_1, ..., gamma_n)
    of lambda^n + gamma_1 lambda^{n-1} + ... + gamma_n."""
    coeffs, _, _ = faddeev_leverrier(M)
    return coeffs


def char_poly_roots(coeffs) -> np.ndarray:
    """Roots of the monic polynomial given by its trailing coefficients."""
    return np.roots(np.concatenate(([1.0], np.asarray(coeffs, dtype=float))))


def solve_sylvester(A, S, C) -> np.ndarray:
    """Solve Pi @ S = A @ Pi + C for Pi by Kronecker vectorization.

    A is n x n, S is m x m, C is n x m.  Unique solvability requires the
    spectra of A and S to be disjoint; a singular vectorized system raises
    SpectraNotDisjointError.
    """
    A = _as_square(A)
    S = _as_square(S)
    C = np.asarray(C, dtype=float)
    n, m = A.shape[0], S.shape[0]
    if C.shape != (n, m):
        raise DimensionError(f"C must be {n}x{m}, got {C.shape}")
    # column-major vec: vec(Pi S) = (S^T kron I_n) vec(Pi), vec(A Pi) = (I_m kron A) vec(Pi)
    K = np.kron(S.T, np.eye(n)) - np.kron(np.eye(m), A)
    try:
        vec = np.linalg.solve(K, C.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SpectraNotDisjointError("spectra not disjoint: singular Sylvester system") from exc
    # guard against solve() succeeding on a numerically singular system
    if not np.all(np.isfinite(vec)):
        raise SpectraNotDisjointError("spectra not disjoint: singular Sylvester system")
    Pi = vec.reshape((n, m), order="F")
    resid = np.max(np.abs(Pi @ S - A @ Pi - C))
    if resid > 1e-8 * (1.0 + np.max(np.abs(C))):
        raise SpectraNotDisjointError(
            f"Sylvester solve residual {resid:.3e} too large; spectra nearly overlap")
    return Pi


def is_hurwitz(M, pivot_tol: float = 1e-12) -> bool:
    """Routh-Hurwitz test: True iff all characteristic roots of M have
    negative real part.  Raises InconclusiveStabilityError on a degenerate
    Routh pivot instead of guessing."""
    coeffs = char_poly(M)
    n = len(coeffs)
    if n == 0:
        return True
    # necessary condition (monic): every coefficient strictly positive
    if np.any(coeffs <= 0.0):
        return False
    poly = np.concatenate(([1.0], coeffs))
    scale = max(1.0, np.max(np.abs(poly)))
    ncols = (n + 2) // 2
    row0 = np.zeros(ncols)
    row1 = np.zeros(ncols)
    row0[: len(poly[0::2])] = poly[0::2]
    row1[: len(poly[1::2])] = poly[1::2]
    first_col = [row0[0]]
    for _ in range(n - 1):
        pivot = row1[0]
        if abs(pivot) <= pivot_tol * scale:
            raise InconclusiveStabilityError("degenerate Routh pivot; stability test inconclusive")
        first_col.append(pivot)
        new = np.zeros(ncols)
        for j in range(ncols - 1):
            new[j] = (pivot * row0[j + 1] - row0[0] * row1[j + 1]) / pivot
        row0, row1 = row1, new
    last = row1[0]
    if abs(last) <= pivot_tol * scale:
        raise InconclusiveStabilityError("near-zero Routh first-column entry; inconclusive")
    first_col.append(last)
    return bool(all(c > 0.0 for c in first_col))


def shift_matrix(n: int) -> np.ndarray:
    """Upper-shift matrix A: ones on the superdiagonal, zeros elsewhere."""
    return np.eye(n, k=1)


def companion_first_col(K, n: int | None = None) -> np.ndarray:
    """A_K = A - K e_1^T: first column -K, identity superdiagonal."""
    K = np.asarray(K, dtype=float).ravel()
    if n is None:
        n = len(K)
    if len(K) != n:
        raise DimensionError(f"gain vector has length {len(K)}, expected {n}")
    A = shift_matrix(n)
    A[:, 0] -= K
    return A


def companion_last_row(f, n: int | None = None) -> np.ndarray:
    """Companion matrix with identity superdiagonal and last row f^T."""
    f = np.asarray(f, dtype=float).ravel()
    if n is None:
        n = len(f)
    if len(f) != n:
        raise DimensionError(f"row vector has length {len(f)}, expected {n}")
    A = shift_matrix(n)
    A[-1, :] = f
    return A


def gamma_from_charpoly(coeffs) -> np.ndarray:
    """Last-row vector Gamma with Gamma_i = -gamma_{n-i+1}, so that
    companion_last_row(Gamma) has exactly the spectrum of the source matrix."""
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    return -coeffs[::-1]
