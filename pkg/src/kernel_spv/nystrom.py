"""Nystrom feature maps and the approximate principal-angle route.

Nothing in this module forms an N x N matrix: memory is O(N D + D^2) and the
work is O(N D s + D^3) per dictionary.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import DimensionMismatch, FactorizationFailed, InvalidCount
from .geometry import principal_from_factors
from .kernels import gram

DEFAULT_LANDMARK_THRESHOLD = 1e-10
DEFAULT_LAMBDA_SCALE = 1e-8
DEFAULT_C_V = 1e-3
DEFAULT_C_KV = 1e-3
APPROX_COSINE_TOL = 1e-3


def threshold_schedule(D, c):
    """Rank-separation threshold ``c / sqrt(D)``."""
    return c / np.sqrt(D)


@dataclass(frozen=True)
class NystromModel:
    landmarks: np.ndarray  # n x D
    eig: linalg.TruncatedEig  # of K_LL
    kernel: object
    landmark_index: np.ndarray = None
    seed: object = None

    @property
    def D(self):
        return int(self.landmarks.shape[1])

    @property
    def d(self):
        return self.eig.rank

    @cached_property
    def _projector(self):
        # Lambda^{-1/2} U^T, d x D
        return self.eig.eigenvectors.T / np.sqrt(self.eig.eigenvalues)[:, None]

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "seed": self.seed,
            "landmark_index": None if self.landmark_index is None
            else self.landmark_index.tolist(),
            "eigenvalues": self.eig.eigenvalues.tolist(),
            "eigenvectors": self.eig.eigenvectors.tolist(),
            "threshold": self.eig.threshold_used,
        }


def model_from_landmarks(L, kernel, threshold=DEFAULT_LANDMARK_THRESHOLD, index=None,
                         seed=None):
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[1] < 1:
        raise InvalidCount("need at least one landmark")
    eig = linalg.truncated_eig_psd(gram(kernel, L), threshold)
    return NystromModel(L, eig, kernel, index, seed)


def fit_landmarks(data, D, seed, kernel, threshold=DEFAULT_LANDMARK_THRESHOLD):
    """Draw ``D`` landmarks uniformly without replacement from the columns of ``data.X``."""
    if int(D) != D or not 1 <= D <= data.N:
        raise InvalidCount(f"D must satisfy 1 <= D <= N={data.N}, got {D}")
    idx = np.random.default_rng(seed).choice(data.N, size=int(D), replace=False)
    return model_from_landmarks(data.X[:, idx], kernel, threshold, idx, seed)


def feature_matrix(model, X):
    """``Psi(X) = Lambda^{-1/2} U^T K_{L,X}`` (d x N)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.landmarks.shape[0]:
        raise DimensionMismatch(f"expected {model.landmarks.shape[0]} x N states")
    if X.shape[1] == 0:
        return np.zeros((model.d, 0))
    return model._projector @ gram(model.kernel, model.landmarks, X)


def feature_map(model, x):
    x = np.asarray(x, dtype=float).ravel()
    return feature_matrix(model, x[:, None])[:, 0]


class NystromFeatures:
    """Feature matrices of one dataset plus the cached regularized factorization.

    ``lam`` defaults to ``1e-8 * trace(Psi Psi^T) / d``.
    """

    def __init__(self, model, data, lam=None, lambda_scale=DEFAULT_LAMBDA_SCALE):
        self.model = model
        self.data = data
        self.Psi_X = feature_matrix(model, data.X)
        self.Psi_TX = feature_matrix(model, data.TX)
        self.G = self.Psi_X @ self.Psi_X.T
        if lam is None:
            lam = lambda_scale * float(np.trace(self.G)) / self.G.shape[0]
        self.lam = float(lam)
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        # Psi(X) Psi(T(X))^T, d x d
        self.C = self.Psi_X @ self.Psi_TX.T

    @cached_property
    def _cho(self):
        A = linalg.symmetrize(self.G)
        A[np.diag_indices_from(A)] += self.lam
        try:
            return sla.cho_factor(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailed("Psi Psi^T + lambda I is not positive definite") from exc

    def targets(self, W_V):
        W_V = np.asarray(W_V, dtype=float)
        if W_V.ndim == 1:
            W_V = W_V[:, None]
        if W_V.shape[0] != self.data.N:
            raise DimensionMismatch(f"W_V must have {self.data.N} rows")
        Z_V = self.Psi_X @ W_V
        Z_KV = sla.cho_solve(self._cho, self.C @ Z_V, check_finite=False)
        M_cross = (self.Psi_TX @ W_V).T @ Z_V
        return Z_V, Z_KV, M_cross


@dataclass(frozen=True)
class ApproxTargets:
    Z_V: np.ndarray
    Z_KV: np.ndarray
    M_cross: np.ndarray
    lam: float
    thresholds: tuple = (None, None)
    svd_V: linalg.TruncatedSvd = field(default=None, repr=False)
    svd_KV: linalg.TruncatedSvd = field(default=None, repr=False)

    @property
    def R_V(self):
        return self.svd_V.singular_values[:, None] * self.svd_V.right_vectors.T

    @property
    def R_KV(self):
        return self.svd_KV.singular_values[:, None] * self.svd_KV.right_vectors.T

    @property
    def R_V_pinv(self):
        return self.svd_V.right_vectors / self.svd_V.singular_values

    @property
    def R_KV_pinv(self):
        return self.svd_KV.right_vectors / self.svd_KV.singular_values


def target_matrices(model, data, W_V, lam=None, features=None):
    """Untruncated targets ``Z_V = Psi(X) W_V`` and the Tikhonov solution ``Z_KV``."""
    features = features or NystromFeatures(model, data, lam)
    Z_V, Z_KV, M_cross = features.targets(W_V)
    return ApproxTargets(Z_V, Z_KV, M_cross, features.lam)


def truncate_targets(t, tau_V, tau_KV):
    return ApproxTargets(t.Z_V, t.Z_KV, t.M_cross, t.lam, (float(tau_V), float(tau_KV)),
                         linalg.truncated_svd(t.Z_V, tau_V),
                         linalg.truncated_svd(t.Z_KV, tau_KV))


def approx_principal(model, data, W_V, lam=None, tau_V=None, tau_KV=None, features=None,
                     cosine_tol=APPROX_COSINE_TOL, return_targets=False):
    """Approximate principal angles/vectors from the Nystrom feature space.

    Thresholds default to ``1e-3 / sqrt(D)``.
    """
    if features is None:
        features = NystromFeatures(model, data, lam)
    tau_V = threshold_schedule(model.D, DEFAULT_C_V) if tau_V is None else tau_V
    tau_KV = threshold_schedule(model.D, DEFAULT_C_KV) if tau_KV is None else tau_KV
    if not (tau_V > 0 and tau_KV > 0):
        raise ValueError("thresholds must be positive")
    t = truncate_targets(target_matrices(model, data, W_V, features=features), tau_V, tau_KV)
    pd = principal_from_factors(t.R_V_pinv, t.R_KV_pinv, t.M_cross, cosine_tol,
                                {"lambda": t.lam, "tau_V": float(tau_V),
                                 "tau_KV": float(tau_KV), "D": model.D, "d": model.d})
    return (pd, t) if return_targets else pd


def orthonormality_residuals(targets, M_V, M_KV):
    """Spectral-norm residuals ``|(R^+)^T M R^+ - I|_2`` against exact Gram matrices."""
    def resid(Rp, M):
        E = Rp.T @ M @ Rp
        return float(np.linalg.norm(E - np.eye(E.shape[0]), 2))

    return resid(targets.R_V_pinv, M_V), resid(targets.R_KV_pinv, M_KV)
