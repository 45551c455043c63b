"""Positive-definite kernels and kernel-matrix assembly.

States are stored column-wise (``n x N``), matching how snapshot matrices are
written in the Koopman literature.  ``gram(spec, X, Y)[i, j] = k(x_i, y_j)``.

The radial families have two interchangeable assembly paths: an ``@njit``
loop and a chunked numpy path (see :mod:`kernel_spv._backend`).  Both sum the
squared coordinate differences in the same order, so distances agree bit for
bit; the profile functions may differ in the last ulp where numba and numpy
use different ``exp`` implementations.
"""
from dataclasses import asdict, dataclass

import numpy as np

from ._backend import use_numba
from .errors import ConfigError, DimensionMismatch, NonFiniteInput

FAMILIES = ("wendland", "gaussian", "linear")
_CODES = {"wendland": 0, "gaussian": 1}
_CHUNK = 512


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    ``shape`` is the Wendland support radius or the Gaussian bandwidth and is
    ignored for the linear kernel.  ``smoothness`` selects the Wendland
    C^2 (1) or C^4 (2) function.
    """

    family: str = "wendland"
    shape: float = 2.0
    smoothness: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.family in ("wendland", "gaussian") and not self.shape > 0:
            raise ConfigError("kernel shape must be positive")
        if self.family == "wendland" and self.smoothness not in (1, 2):
            raise ConfigError("wendland smoothness must be 1 or 2")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(family=str(d["family"]), shape=float(d.get("shape", 2.0)),
                   smoothness=int(d.get("smoothness", 2)))


def wendland_profile(r, smoothness):
    """Wendland function phi(r) on r = |x - y| / rho, normalised to phi(0) = 1."""
    r = np.asarray(r, dtype=float)
    t = np.maximum(1.0 - r, 0.0)
    t2 = t * t
    if smoothness == 1:
        return t2 * t2 * (4.0 * r + 1.0)
    return t2 * t2 * t2 * ((35.0 * r + 18.0) * r + 3.0) / 3.0


# --- numpy path -------------------------------------------------------------

def _sqdist_numpy(X, Y):
    # X: N x n, Y: M x n (row-major states); accumulate dimension by dimension
    d2 = np.zeros((X.shape[0], Y.shape[0]))
    for k in range(X.shape[1]):
        diff = X[:, k, None] - Y[None, :, k]
        d2 += diff * diff
    return d2


def _radial_numpy(code, shape, smoothness, X, Y):
    out = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], _CHUNK):
        stop = min(start + _CHUNK, X.shape[0])
        d2 = _sqdist_numpy(X[start:stop], Y)
        if code == 0:
            out[start:stop] = wendland_profile(np.sqrt(d2) / shape, smoothness)
        else:
            out[start:stop] = np.exp(-d2 / (2.0 * shape * shape))
    return out


# --- numba path -------------------------------------------------------------

_radial_numba = None


def _compile():
    global _radial_numba
    if _radial_numba is not None:
        return _radial_numba
    from numba import njit

    @njit(cache=True)
    def radial(code, shape, smoothness, X, Y):
        N = X.shape[0]
        M = Y.shape[0]
        n = X.shape[1]
        out = np.empty((N, M))
        inv2s2 = 1.0 / (2.0 * shape * shape)
        for i in range(N):
            for j in range(M):
                d2 = 0.0
                for k in range(n):
                    d = X[i, k] - Y[j, k]
                    d2 += d * d
                if code == 0:
                    r = np.sqrt(d2) / shape
                    t = 1.0 - r
                    if t <= 0.0:
                        out[i, j] = 0.0
                    else:
                        t2 = t * t
                        if smoothness == 1:
                            out[i, j] = t2 * t2 * (4.0 * r + 1.0)
                        else:
                            out[i, j] = t2 * t2 * t2 * ((35.0 * r + 18.0) * r + 3.0) / 3.0
                else:
                    out[i, j] = np.exp(-d2 * inv2s2)
        return out

    _radial_numba = radial
    return radial


def _as_states(A, name):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be an n x N state matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return A


def gram(spec, X, Y=None):
    """Kernel matrix ``K[i, j] = k(X[:, i], Y[:, j])`` for n x N and n x M states."""
    X = _as_states(X, "X")
    Y = X if Y is None else _as_states(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"state dimensions differ: {X.shape[0]} vs {Y.shape[0]}")
    if spec.family == "linear":
        return X.T @ Y
    if X.shape[1] == 0 or Y.shape[1] == 0:
        return np.zeros((X.shape[1], Y.shape[1]))
    code = _CODES[spec.family]
    Xr = np.ascontiguousarray(X.T)
    Yr = np.ascontiguousarray(Y.T)
    if use_numba():
        return _compile()(code, float(spec.shape), int(spec.smoothness), Xr, Yr)
    return _radial_numpy(code, float(spec.shape), int(spec.smoothness), Xr, Yr)


def kernel_eval(spec, x, y):
    """Scalar ``k(x, y)`` for two state vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionMismatch(f"state vectors differ in length: {x.size} vs {y.size}")
    if spec.family == "linear":
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NonFiniteInput("state contains NaN or Inf")
        # sequential sum keeps k(x, y) == k(y, x) bit for bit
        return float(sum(a * b for a, b in zip(x.tolist(), y.tolist())))
    return float(gram(spec, x[:, None], y[:, None])[0, 0])
