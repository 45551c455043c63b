"""Exact principal angles and vectors between a kernel subspace and its Koopman image.

A dictionary is a coefficient matrix ``W`` (N x s) over the kernel sections
centred at the snapshot states, i.e. observable ``j`` is
``v_j(.) = sum_i W[i, j] k(., x_i)``.  Inner products between such functions
reduce to kernel matrices.  The index convention for the shifted kernel
matrix is ``K_TXX[i, j] = k(T(x_i), x_j)``, which makes
``K_TXX @ w`` the values of ``(Phi_X w) o T`` at the nodes.
"""
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import (
    DimensionMismatch,
    EmptyDecomposition,
    FactorizationFailed,
    NumericalInconsistency,
)
from .kernels import gram

DEFAULT_THRESHOLD = linalg.DEFAULT_EIG_THRESHOLD
DEFAULT_LAMBDA_SCALE = 1e-10
DEFAULT_EXACT_N_CAP = 10_000
COSINE_TOL = 1e-6
_EVAL_CHUNK = 2048


def default_lambda(K_XX, scale=DEFAULT_LAMBDA_SCALE):
    """Tikhonov weight relative to the mean kernel diagonal."""
    return scale * float(np.trace(K_XX)) / K_XX.shape[0]


class KernelOperators:
    """Kernel matrices of one dataset with a cached Cholesky of ``K_XX + lam I``.

    Building this object is the O(N^2) memory / O(N^3) time part of the exact
    route; reuse it across dictionaries of the same dataset.
    """

    def __init__(self, data, kernel, lam=None, lambda_scale=DEFAULT_LAMBDA_SCALE,
                 n_cap=DEFAULT_EXACT_N_CAP, force=False):
        if data.N > n_cap and not force:
            raise FactorizationFailed(
                f"exact route refused for N={data.N} > cap {n_cap}; pass force=True")
        self.data = data
        self.kernel = kernel
        self.K_XX = gram(kernel, data.X)
        self.K_TXX = gram(kernel, data.TX, data.X)
        self.lam = default_lambda(self.K_XX, lambda_scale) if lam is None else float(lam)
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @cached_property
    def _cho(self):
        A = linalg.symmetrize(self.K_XX)
        A[np.diag_indices_from(A)] += self.lam
        try:
            return sla.cho_factor(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationFailed("K_XX + lambda I is not positive definite") from exc

    def solve(self, rhs):
        return sla.cho_solve(self._cho, rhs, check_finite=False)

    def koopman_image(self, W_V):
        W_V = _as_coefficients(W_V, self.data.N)
        return self.solve(self.K_TXX @ W_V)


def _as_coefficients(W, N):
    W = np.asarray(W, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.ndim != 2 or W.shape[0] != N:
        raise DimensionMismatch(f"coefficient matrix must have {N} rows, got shape {W.shape}")
    return W


def solve_koopman_image(W_V, K_XX, K_TXX, lam):
    """Coefficients ``W_KV`` of the Koopman images: ``(K_XX + lam I) W_KV = K_TXX W_V``."""
    K_XX = np.asarray(K_XX, dtype=float)
    W_V = _as_coefficients(W_V, K_XX.shape[0])
    if K_TXX.shape != K_XX.shape:
        raise DimensionMismatch("K_TXX and K_XX must have the same shape")
    return linalg.regularized_symmetric_solve(K_XX, K_TXX @ W_V, lam)


def containment_residual(W_V, W_KV, K_XX, K_TXX):
    """Relative violation ``|K_XX W_KV - K_TXX W_V|_F / |K_TXX W_V|_F``."""
    rhs = K_TXX @ W_V
    denom = np.linalg.norm(rhs)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(K_XX @ W_KV - rhs) / denom)


@dataclass(frozen=True)
class GramTriple:
    M_V: np.ndarray
    M_KV: np.ndarray
    M_cross: np.ndarray


def gram_triple(W_V, W_KV, K_XX, K_TXX):
    N = K_XX.shape[0]
    W_V = _as_coefficients(W_V, N)
    W_KV = _as_coefficients(W_KV, N)
    if W_V.shape != W_KV.shape:
        raise DimensionMismatch("W_V and W_KV must have the same shape")
    KW_KV = K_XX @ W_KV
    return GramTriple(
        M_V=linalg.symmetrize(W_V.T @ K_XX @ W_V),
        M_KV=linalg.symmetrize(W_KV.T @ KW_KV),
        M_cross=W_V.T @ (K_TXX @ W_V),
    )


@dataclass(frozen=True)
class ImplicitQr:
    """Upper-triangular factor of an implicitly represented function collection."""

    R: np.ndarray
    R_pinv: np.ndarray
    side: str = "V"

    @property
    def rank(self):
        return int(self.R.shape[0])


def implicit_qr(M, threshold=DEFAULT_THRESHOLD, side="V"):
    """QR factor of a collection from its Gram matrix ``M``.

    With the truncated eigendecomposition ``M ~ E diag(w) E^T`` and the
    economy QR ``diag(w)^{1/2} E^T = Q_B R``, the orthonormal basis of the
    collection ``F`` is ``F R^+`` with ``R^+ = E diag(w)^{-1/2} Q_B``.
    """
    eig = linalg.truncated_eig_psd(M, threshold)
    root = np.sqrt(eig.eigenvalues)
    B = root[:, None] * eig.eigenvectors.T
    Q_B, R = linalg.economy_qr(B)
    R_pinv = (eig.eigenvectors / root) @ Q_B
    return ImplicitQr(R, R_pinv, side)


@dataclass(frozen=True)
class PrincipalDecomposition:
    """Principal angles (ascending) and coefficient matrices of principal vectors.

    Column ``i`` of ``A_V`` holds the dictionary coordinates of the i-th
    principal vector in S; column ``i`` of ``A_KV`` the coordinates, with
    respect to the Koopman images of the dictionary, of its partner in KS.
    Only angles and spans are unique; individual vectors are not when angles tie.
    """

    angles: np.ndarray
    cosines: np.ndarray
    A_V: np.ndarray
    A_KV: np.ndarray
    rank_V: int
    rank_KV: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def k(self):
        return int(self.angles.shape[0])

    def to_dict(self):
        return {
            "angles": self.angles.tolist(),
            "cosines": self.cosines.tolist(),
            "rank_V": self.rank_V,
            "rank_KV": self.rank_KV,
            "A_V": self.A_V.tolist(),
            "A_KV": self.A_KV.tolist(),
            "diagnostics": dict(self.diagnostics),
        }


def principal_from_factors(R_V_pinv, R_KV_pinv, M_cross, cosine_tol=COSINE_TOL,
                           diagnostics=None):
    """SVD of the cosine matrix ``(R_V^+)^T M_cross R_KV^+`` -> principal arguments."""
    C = R_V_pinv.T @ M_cross @ R_KV_pinv
    U, sigma, Vt = sla.svd(C, full_matrices=False, lapack_driver="gesdd")
    if sigma.size and sigma[0] > 1.0 + cosine_tol:
        raise NumericalInconsistency(
            f"largest cosine {sigma[0]:.3e} exceeds 1 by more than {cosine_tol:g}")
    diag = dict(diagnostics or {})
    diag["max_raw_cosine"] = float(sigma[0]) if sigma.size else 0.0
    cosines = np.clip(sigma, 0.0, 1.0)
    return PrincipalDecomposition(
        angles=np.arccos(cosines),
        cosines=cosines,
        A_V=R_V_pinv @ U,
        A_KV=R_KV_pinv @ Vt.T,
        rank_V=int(R_V_pinv.shape[1]),
        rank_KV=int(R_KV_pinv.shape[1]),
        diagnostics=diag,
    )


def principal_from_grams(g, threshold=DEFAULT_THRESHOLD, cosine_tol=COSINE_TOL,
                         diagnostics=None):
    qr_V = implicit_qr(g.M_V, threshold, "V")
    qr_KV = implicit_qr(g.M_KV, threshold, "KV")
    return principal_from_factors(qr_V.R_pinv, qr_KV.R_pinv, g.M_cross, cosine_tol,
                                  diagnostics)


def exact_principal(W_V, data=None, kernel=None, lam=None, threshold=DEFAULT_THRESHOLD,
                    ops=None, cosine_tol=COSINE_TOL):
    """Exact principal angles/vectors between span(V) and its Koopman image.

    Either pass ``data`` and ``kernel`` or a prebuilt :class:`KernelOperators`
    (``ops``), which is much cheaper when called repeatedly on one dataset.
    """
    if ops is None:
        ops = KernelOperators(data, kernel, lam)
    elif lam is not None and lam != ops.lam:
        raise ValueError("lam conflicts with the operators' regularization")
    W_V = _as_coefficients(W_V, ops.data.N)
    W_KV = ops.koopman_image(W_V)
    g = gram_triple(W_V, W_KV, ops.K_XX, ops.K_TXX)
    diag = {"containment_residual": containment_residual(W_V, W_KV, ops.K_XX, ops.K_TXX),
            "lambda": ops.lam, "threshold": threshold}
    pd = principal_from_grams(g, threshold, cosine_tol, diag)
    return refine_small_angles(pd, W_V, W_KV, ops.K_XX)


def refine_small_angles(pd, W_V, W_KV, K_XX):
    """Recompute angles below pi/4 from sines.

    ``arccos`` of a cosine within rounding of 1 resolves angles only to about
    1e-8.  For each pair with cos^2 > 1/2 the residual ``Kv_i - cos_i u_i`` is
    orthogonal to S and has RKHS norm ``sin(theta_i)``, which is evaluated
    directly from its kernel-section coefficients.
    """
    small = pd.cosines ** 2 > 0.5
    if not np.any(small):
        return pd
    C = W_KV @ pd.A_KV[:, small] - (W_V @ pd.A_V[:, small]) * pd.cosines[small]
    sin2 = np.einsum("ij,ij->j", C, K_XX @ C)
    angles = pd.angles.copy()
    angles[small] = np.arcsin(np.sqrt(np.clip(sin2, 0.0, 0.5)))
    # rounding must not reorder the ascending angle list
    angles = np.maximum.accumulate(angles)
    return replace(pd, angles=angles, cosines=np.cos(angles))


def evaluate_function(w, data, kernel, x):
    """Evaluate ``sum_i w_i k(x_i, x)``; ``x`` is one state or an n x Q array."""
    w = np.asarray(w)
    if w.shape[0] != data.N:
        raise DimensionMismatch(f"expected {data.N} coefficients, got {w.shape[0]}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Q = x[:, None] if single else x
    vals = np.concatenate([gram(kernel, Q[:, i:i + _EVAL_CHUNK], data.X) @ w
                           for i in range(0, max(Q.shape[1], 1), _EVAL_CHUNK)])
    return vals[0] if single else vals


def invariance_proximity(pd):
    """Sine of the largest principal angle."""
    if pd.k == 0:
        raise EmptyDecomposition("no principal angles")
    return float(np.sin(pd.angles.max()))
