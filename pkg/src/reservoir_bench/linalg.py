"""Dense linear algebra: spectral radius, radius scaling, ridge regression."""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_RESTARTS = 3
_ZERO_RADIUS = 1e-12
# block width of the subspace iteration; >= 2 so a dominant complex pair is captured
_BLOCK = 4


class ShapeError(ValueError):
    pass


class DegenerateMatrixError(ValueError):
    pass


class SingularSystemError(np.linalg.LinAlgError):
    pass


class RadiusEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _subspace_iteration(M: np.ndarray, Q: np.ndarray, tol: float, max_iter: int):
    """Orthogonal iteration with Rayleigh-Ritz; returns (radius, converged, iters)."""
    best = 0.0
    for it in range(1, max_iter + 1):
        Z = M @ Q
        Q, _ = np.linalg.qr(Z)
        H = Q.T @ M @ Q
        theta, Y = np.linalg.eig(H)
        i = int(np.argmax(np.abs(theta)))
        lam, y = theta[i], Y[:, i]
        best = float(abs(lam))
        if best == 0.0:
            return 0.0, True, it
        v = Q @ y
        resid = np.linalg.norm(M @ v - lam * v) / (best * np.linalg.norm(v))
        if resid < tol:
            return best, True, it
    return best, False, max_iter


def estimate_spectral_radius(
    M,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
) -> RadiusEstimate:
    """Largest eigenvalue magnitude via power (subspace) iteration.

    Converged means the dominant Ritz pair has relative residual below
    ``tol``.  On failure the iteration restarts from a fresh random block up
    to ``restarts`` times and the best estimate is returned unconverged.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 1:
        return RadiusEstimate(abs(float(M[0, 0])), True, 0)
    if not np.any(M):
        return RadiusEstimate(0.0, True, 0)
    k = min(_BLOCK, n)
    rng = np.random.default_rng(seed)
    total = 0
    best = RadiusEstimate(0.0, False, 0)
    for _ in range(1 + restarts):
        Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
        value, ok, its = _subspace_iteration(M, Q, tol, max_iter)
        total += its
        if ok:
            return RadiusEstimate(value, True, total)
        if value > best.value:
            best = RadiusEstimate(value, False, total)
    log.warning("spectral radius did not converge after %d iterations; best %.12g", total, best.value)
    return best


def spectral_radius(M, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    return estimate_spectral_radius(M, tol, max_iter).value


def scale_to_radius(M, target: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    M = _as_square(M)
    if target <= 0:
        raise ValueError("target radius must be positive")
    rho = spectral_radius(M, tol, max_iter)
    # nilpotent matrices come back as round-off noise rather than exact zero
    if rho <= _ZERO_RADIUS * np.linalg.norm(M):
        raise DegenerateMatrixError("matrix has zero spectral radius")
    return M * (target / rho)


def ridge_solve(X, Y, lam: float = 1e-8) -> np.ndarray:
    """Readout weights ``W`` (m x n) minimising ``|X W^T - Y|^2 + lam |W|^2``.

    ``X`` is T x n (one state per row), ``Y`` is T x m or length T.
    Solves the normal equations by Cholesky factorisation.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2:
        raise ShapeError("X must be 2-D (T x n)")
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != X.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if X.shape[0] < 1:
        raise ShapeError("need at least one sample")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    n = X.shape[1]
    G = X.T @ X
    if lam:
        G[np.diag_indices(n)] += lam
    rhs = X.T @ Y
    try:
        c, lower = sla.cho_factor(G, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"normal equations not positive definite ({exc}); use lambda > 0") from exc
    d = np.abs(np.diag(c))
    # pivot ratio 1e-6 ~ condition number 1e12 of the normal matrix
    if lam == 0 and d.min() <= 1e-6 * d.max():
        raise SingularSystemError("normal equations are numerically singular; use lambda > 0")
    return sla.cho_solve((c, lower), rhs).T
