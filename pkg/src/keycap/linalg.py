"""Small dense complex Hermitian linear algebra.

Matrices are plain ``numpy`` complex arrays.  Every routine accepts a stack
of matrices (leading batch axes) so Monte Carlo loops can evaluate a whole
chunk of channel draws per call; results for one matrix never depend on what
else is in the stack.

Logarithms are natural throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, NotPositiveDefinite, RankDeficient

_EPS = np.finfo(np.float64).eps


def ct(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim < 2:
        raise ValueError(f"{name} must be at least 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def is_hermitian(a: np.ndarray, rtol: float = 1e-12) -> bool:
    a = np.asarray(a)
    if a.shape[-1] != a.shape[-2]:
        return False
    scale = max(float(np.max(np.abs(a), initial=0.0)), 1.0)
    return bool(np.max(np.abs(a - ct(a)), initial=0.0) <= rtol * scale)


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + ct(a))


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with a scale-aware pivot test.

    A pivot ``L[i, i]**2`` at or below ``dim * eps * max(diag(A))`` is
    treated as a failure even when LAPACK accepts it.
    """
    a = np.asarray(a, dtype=np.complex128)
    dim = a.shape[-1]
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    piv = np.real(np.diagonal(low, axis1=-2, axis2=-1)) ** 2
    diag = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    tol = dim * _EPS * np.max(diag, axis=-1, keepdims=True)
    if np.any(piv <= tol):
        raise NotPositiveDefinite("pivot below tolerance")
    return low


def hermitian_logdet(a, check: bool = True):
    """``ln det(A)`` for Hermitian positive definite ``A`` via Cholesky.

    Returns a float for a single matrix or an array for a stack.

    >>> hermitian_logdet(np.diag([2.0, 2.0]))  # doctest: +ELLIPSIS
    1.386294...
    """
    a = np.asarray(a, dtype=np.complex128)
    if check:
        a = as_complex_matrix(a)
        if not is_hermitian(a):
            raise ValueError("matrix is not Hermitian")
    low = cholesky(a)
    out = 2.0 * np.sum(np.log(np.real(np.diagonal(low, axis1=-2, axis2=-1))), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def solve_pd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``A^{-1} B`` for Hermitian PD ``A`` through its Cholesky factor."""
    low = cholesky(a)
    y = np.linalg.solve(low, b)
    return np.linalg.solve(ct(low), y)


@dataclass(frozen=True)
class CovarianceBlocks:
    """Blocks of the joint covariance of a stacked vector ``[U; V]``."""

    K_U: np.ndarray
    K_V: np.ndarray
    K_UV: np.ndarray

    def __post_init__(self):
        mu, mv = self.K_U.shape[-1], self.K_V.shape[-1]
        if self.K_U.shape[-2] != mu or self.K_V.shape[-2] != mv:
            raise ValueError("diagonal blocks must be square")
        if self.K_UV.shape[-2:] != (mu, mv):
            raise ValueError(f"K_UV must be {mu}x{mv}, got {self.K_UV.shape[-2:]}")

    def stacked(self) -> np.ndarray:
        top = np.concatenate([self.K_U, self.K_UV], axis=-1)
        bottom = np.concatenate([ct(self.K_UV), self.K_V], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


def schur_complement(blocks: CovarianceBlocks) -> np.ndarray:
    """``K_U - K_UV K_V^{-1} K_VU``, the LMMSE error covariance of U given V."""
    k_uv = np.asarray(blocks.K_UV, dtype=np.complex128)
    correction = k_uv @ solve_pd(blocks.K_V, ct(k_uv))
    return hermitize(np.asarray(blocks.K_U, dtype=np.complex128) - correction)


def svd(h):
    """Full SVD ``H = U diag(s) V^H``; returns ``(U, s, V)`` with ``V`` itself.

    Singular values are non-increasing.
    """
    h = as_complex_matrix(h, "H")
    try:
        u, s, vh = np.linalg.svd(h, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from None
    return u, s, ct(vh)


def numerical_rank(h) -> np.ndarray:
    """Rank with tolerance ``max(s) * max(dims) * 1e-12``."""
    h = np.asarray(h, dtype=np.complex128)
    s = np.linalg.svd(h, compute_uv=False)
    smax = s[..., :1] if s.shape[-1] else np.zeros(s.shape[:-1] + (1,))
    tol = smax * max(h.shape[-2:]) * 1e-12
    return np.sum(s > tol, axis=-1)


def projection_complement(h) -> np.ndarray:
    """Orthogonal projector onto the complement of the row space of ``H``.

    Computes ``I - H^H (H H^H)^{-1} H``; ``H`` must have full row rank.
    A matrix with zero rows gives the identity.
    """
    h = np.asarray(h, dtype=np.complex128)
    rows, cols = h.shape[-2:]
    eye = np.broadcast_to(np.eye(cols, dtype=np.complex128), h.shape[:-2] + (cols, cols))
    if rows == 0:
        return eye.copy()
    if rows > cols or np.any(numerical_rank(h) < rows):
        raise RankDeficient(f"H ({rows}x{cols}) does not have full row rank")
    gram = h @ ct(h)
    proj = ct(h) @ np.linalg.solve(gram, h)
    return hermitize(eye - proj)


def pinv(h) -> np.ndarray:
    """Moore-Penrose pseudo-inverse from the SVD."""
    h = as_complex_matrix(h, "H")
    u, s, v = svd(h)
    k = s.size
    tol = (s[0] if k else 0.0) * max(h.shape) * 1e-12
    inv = np.where(s > tol, 1.0 / np.where(s > tol, s, 1.0), 0.0)
    return (v[:, :k] * inv) @ ct(u[:, :k])
