"""Dense complex linear algebra used by the estimators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The Hermitian
eigensolver is a cyclic complex Jacobi method so that the subspace
estimators do not depend on a particular LAPACK build.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericalError

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending; column ``i`` of ``eigenvectors`` pairs
    with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(R) -> np.ndarray:
    R = np.asarray(R, dtype=np.complex128)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("matrix has non-finite entries")
    return R


def hermitize(R) -> np.ndarray:
    """Return ``(R + R^H) / 2``."""
    R = _as_square(R)
    return 0.5 * (R + R.conj().T)


def sample_covariance(X) -> np.ndarray:
    """Sample autocovariance ``(1/N) sum_n x(n) x(n)^H`` of an ``M x N``
    snapshot matrix, returned exactly Hermitian."""
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2:
        raise ValueError(f"snapshot matrix must be 2-D, got shape {X.shape}")
    if X.shape[1] == 0 or X.shape[0] == 0:
        raise ValueError("empty snapshot matrix")
    R = (X @ X.conj().T) / X.shape[1]
    return 0.5 * (R + R.conj().T)


def _offdiag_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def hermitian_eig(R, max_sweeps: int = MAX_SWEEPS, tol: float = OFFDIAG_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot ``A[p, q]`` and then
    applies the classical real symmetric Jacobi rotation, so that ``A[p, q]``
    is annihilated exactly. Sweeps stop once the off-diagonal Frobenius norm
    drops below ``tol * ||R||_F``.

    Raises
    ------
    ValueError
        If ``R`` is not square or not Hermitian to ``1e-9 * ||R||_F``.
    NumericalError
        If the off-diagonal mass has not converged after ``max_sweeps``.
    """
    R = _as_square(R)
    n = R.shape[0]
    fro = float(np.linalg.norm(R))
    if np.linalg.norm(R - R.conj().T) > 1e-9 * max(fro, np.finfo(float).tiny):
        raise ValueError("matrix is not Hermitian")
    A = 0.5 * (R + R.conj().T)
    V = np.eye(n, dtype=np.complex128)
    target = tol * fro

    for _ in range(max_sweeps):
        if _offdiag_norm(A) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag <= 1e-18 * fro:
                    A[p, q] = A[q, p] = 0.0
                    continue
                phase = apq / mag
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                G = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ G
                A[idx, :] = G.conj().T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                V[:, idx] = V[:, idx] @ G
    else:
        residual = _offdiag_norm(A)
        if residual > target:
            raise NumericalError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {residual:.3e}, target {target:.3e})"
            )

    w = np.real(np.diag(A))
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], V[:, order])


def solve_hermitian(R, b, ridge: float = 0.0) -> np.ndarray:
    """Solve ``(R + ridge I) y = b`` for Hermitian ``R``.

    ``b`` may be a vector or a matrix of right-hand sides (one per column).
    The solution is checked by multiplying back: a normwise backward error
    ``|Ay - b| / (|A| |y| + |b|)`` above ``1e-9`` or a singular factorization
    raises ``NumericalError``.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    A = hermitize(R)
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, matrix is {A.shape[0]}x{A.shape[0]}")
    A = A + ridge * np.eye(A.shape[0])
    try:
        y = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular covariance") from exc
    if not np.all(np.isfinite(y)):
        raise NumericalError("singular covariance")
    scale = np.linalg.norm(A, 2) * np.linalg.norm(y) + np.linalg.norm(b)
    err = np.linalg.norm(A @ y - b) / max(scale, np.finfo(float).tiny)
    if err > 1e-9:
        raise NumericalError(f"singular covariance (backward error {err:.2e})")
    return y
