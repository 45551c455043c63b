"""Finite-dimensional Koopman models on kernel dictionaries.

Coefficient conventions: a function in the dictionary ``V = Phi_X W`` is
``V alpha``; the models here are matrices ``K`` with ``Koopman(V alpha) ~ V (K alpha)``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import linalg
from .dynamics import advance
from .errors import EigenFailed
from .geometry import DEFAULT_THRESHOLD, KernelOperators, evaluate_function


@dataclass(frozen=True)
class KoopmanMatrix:
    K: np.ndarray
    kind: str  # "kedmd" (over Phi_X) or "reduced" (over a dictionary W)
    lam: float = None
    threshold: float = None


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: complex
    coefficients: np.ndarray  # over the dictionary the matrix acts on
    residual: float = 0.0


def kedmd_matrix(data, kernel, lam=None, ops=None):
    """Full kernel-EDMD matrix ``(K_XX + lam I)^{-1} K_TXX`` (N x N)."""
    ops = ops or KernelOperators(data, kernel, lam)
    return KoopmanMatrix(ops.solve(ops.K_TXX), "kedmd", lam=ops.lam)


def reduced_edmd_matrix(g, threshold=DEFAULT_THRESHOLD):
    """Projected model on span(V): solves ``M_V beta = M_cross alpha`` with a truncated pseudoinverse."""
    eig = linalg.truncated_eig_psd(g.M_V, threshold)
    return KoopmanMatrix(linalg.pinv_from_eig(eig) @ g.M_cross, "reduced", threshold=threshold)


def eigenpairs(K, values=None, order="one", residual_tol=1e-8, null_tol=1e-10):
    """Eigenpairs of a model matrix.

    ``values`` (optional, Q x m) maps dictionary coefficients to function
    values on the dataset; when given, each eigenvector is scaled so the
    eigenfunction has max modulus 1 (and is real and positive at its arg-max)
    and eigenvectors whose functions vanish on the data are dropped.
    ``order`` is ``"one"`` (by ``|lambda - 1|``) or ``"modulus"`` (by ``|lambda|``
    descending).
    """
    M = K.K if isinstance(K, KoopmanMatrix) else np.asarray(K, dtype=float)
    try:
        w, V = sla.eig(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailed(str(exc)) from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(V))):
        raise EigenFailed("non-finite eigenpairs")
    scale = max(1.0, float(np.linalg.norm(M, 2))) if M.size else 1.0
    pairs = []
    for lam, v in zip(w, V.T):
        v = v / np.linalg.norm(v)
        if values is not None:
            f = values @ v
            i = int(np.argmax(np.abs(f)))
            if np.abs(f[i]) <= null_tol * np.linalg.norm(values, 2):
                continue
            v = v / f[i]
        res = float(np.linalg.norm(M @ v - lam * v))
        if res > residual_tol * scale * np.linalg.norm(v):
            raise EigenFailed(f"eigenpair residual {res:.2e} too large")
        pairs.append(EigenPair(complex(lam), v, res))
    if order == "one":
        pairs.sort(key=lambda p: abs(p.eigenvalue - 1.0))
    elif order == "modulus":
        pairs.sort(key=lambda p: -abs(p.eigenvalue))
    else:
        raise ValueError("order must be 'one' or 'modulus'")
    return pairs


def prediction_error_map(pair, system, data, kernel, steps=5, W=None):
    """Per-point ``|phi(T^steps x) - lambda^steps phi(x)|`` over the dataset states.

    ``W`` maps the eigenvector's dictionary coordinates to kernel-section
    coefficients (identity when the pair comes from the full kEDMD matrix).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    c = pair.coefficients if W is None else np.asarray(W) @ pair.coefficients
    now = evaluate_function(c, data, kernel, data.X)
    later = evaluate_function(c, data, kernel, advance(system, data.X, steps))
    return np.abs(later - pair.eigenvalue ** steps * now)
