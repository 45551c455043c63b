"""Dense spectral factorizations with explicit rank truncation.

Every routine here is deterministic (LAPACK via scipy) and pure.  Thresholds
are absolute: eigenvalues (or singular values) must be *strictly* larger than
the threshold to be retained.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import AllTruncated, DimensionMismatch, FactorizationFailed, NonFiniteInput

DEFAULT_EIG_THRESHOLD = 1e-8


def _check_finite(a, name="input"):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return a


@dataclass(frozen=True)
class TruncatedEig:
    """Retained part of a symmetric eigendecomposition, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    threshold_used: float

    @property
    def rank(self):
        return int(self.eigenvalues.shape[0])

    def reconstruct(self):
        E = self.eigenvectors
        return (E * self.eigenvalues) @ E.T


@dataclass(frozen=True)
class TruncatedSvd:
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray  # columns are right singular vectors (V, not V^T)
    threshold_used: float

    @property
    def rank(self):
        return int(self.singular_values.shape[0])

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def truncated_eig_psd(M, threshold=DEFAULT_EIG_THRESHOLD):
    """Eigendecomposition of a symmetric PSD matrix keeping eigenvalues > threshold.

    The input is symmetrized first; raises :class:`AllTruncated` if nothing
    survives (the matrix represents the zero subspace).
    """
    M = _check_finite(M, "M")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if M.shape[0] == 0:
        raise AllTruncated("empty matrix")
    w, V = sla.eigh(symmetrize(M))
    keep = w > threshold
    if not np.any(keep):
        raise AllTruncated(f"no eigenvalue exceeds threshold {threshold:g}")
    order = np.argsort(w[keep])[::-1]
    return TruncatedEig(w[keep][order], V[:, keep][:, order], float(threshold))


def truncated_svd(Z, threshold):
    """Thin SVD of ``Z`` keeping singular values strictly above ``threshold``."""
    Z = _check_finite(Z, "Z")
    if Z.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {Z.shape}")
    if min(Z.shape) == 0:
        raise AllTruncated("empty matrix")
    U, s, Vt = sla.svd(Z, full_matrices=False, lapack_driver="gesdd")
    keep = s > threshold
    if not np.any(keep):
        raise AllTruncated(f"no singular value exceeds threshold {threshold:g}")
    return TruncatedSvd(U[:, keep], s[keep], Vt[keep].T, float(threshold))


def economy_qr(B):
    """QR of a wide (or square) matrix: Q is r x r orthogonal, R is r x s."""
    B = _check_finite(B, "B")
    if B.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {B.shape}")
    Q, R = sla.qr(B, mode="economic")
    return Q, R


def pinv_from_eig(eig):
    """Moore-Penrose pseudoinverse of the truncated PSD matrix ``E diag(w) E^T``."""
    E = eig.eigenvectors
    return (E / eig.eigenvalues) @ E.T


def regularized_symmetric_solve(M, rhs, lam):
    """Solve ``(M + lam I) X = rhs`` via Cholesky.

    Raises :class:`FactorizationFailed` when ``M + lam I`` is not numerically
    positive definite.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    M = _check_finite(M, "M")
    rhs = _check_finite(rhs, "rhs")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if rhs.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"rhs has {rhs.shape[0]} rows, matrix is {M.shape[0]}")
    A = symmetrize(M)
    A[np.diag_indices_from(A)] += lam
    try:
        c = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailed(f"M + {lam:g} I is not positive definite") from exc
    return sla.cho_solve(c, rhs, check_finite=False)
