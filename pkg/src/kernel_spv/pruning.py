"""Single-principal-vector (SPV) pruning of kernel dictionaries.

Each iteration computes the principal angles between span(V) and its Koopman
image, stops once the invariance proximity ``sin(theta_max)`` is within the
tolerance, and otherwise replaces the dictionary by its principal vectors
minus the worst-aligned one.  The retained principal vectors are orthonormal
in the RKHS, so the next Gram matrix is close to the identity.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import nystrom
from .errors import ConfigError, SubspaceExhausted
from .geometry import (
    DEFAULT_THRESHOLD,
    KernelOperators,
    exact_principal,
    invariance_proximity,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PruneConfig:
    epsilon: float = 0.05
    max_iterations: int = None  # None -> number of dictionary columns
    mode: str = "exact"
    threshold: float = DEFAULT_THRESHOLD
    lam: float = None
    # approximate mode only
    tau_V: float = None
    tau_KV: float = None
    nystrom_lam: float = None
    cosine_tol: float = nystrom.APPROX_COSINE_TOL

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in [0, 1)")
        if self.mode not in ("exact", "approximate"):
            raise ConfigError("mode must be 'exact' or 'approximate'")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigError("max_iterations must be nonnegative")


@dataclass
class PruneReport:
    mode: str
    epsilon: float
    iterations: list = field(default_factory=list)
    final_W: np.ndarray = None
    final_delta: float = float("nan")
    converged: bool = False

    @property
    def dimensions(self):
        return [it["dimension"] for it in self.iterations]

    @property
    def final_dimension(self):
        return int(self.final_W.shape[1])

    def to_dict(self):
        return {
            "mode": self.mode,
            "epsilon": self.epsilon,
            "converged": self.converged,
            "final_delta": self.final_delta,
            "final_dimension": self.final_dimension,
            "iterations": [
                {**it, "angles": [float(a) for a in it["angles"]]} for it in self.iterations
            ],
        }


def spv_step(W_V, pd):
    """Drop the principal vector with the largest angle; keep the rest as the new basis."""
    if pd.k <= 1:
        raise SubspaceExhausted("cannot prune a subspace with fewer than two principal vectors")
    return np.asarray(W_V) @ pd.A_V[:, : pd.k - 1]


def _prune(W_V, principal, config, mode):
    W = np.asarray(W_V, dtype=float)
    limit = W.shape[1] if config.max_iterations is None else config.max_iterations
    report = PruneReport(mode=mode, epsilon=config.epsilon)
    steps = 0
    while True:
        pd = principal(W)
        delta = invariance_proximity(pd)
        report.iterations.append({
            "iteration": steps,
            "dimension": int(W.shape[1]),
            "rank_V": pd.rank_V,
            "rank_KV": pd.rank_KV,
            "delta": delta,
            "max_raw_cosine": pd.diagnostics.get("max_raw_cosine"),
            "angles": pd.angles.copy(),
        })
        logger.debug("%s SPV iteration %d: dim=%d delta=%.3e", mode, steps, W.shape[1], delta)
        if delta <= config.epsilon:
            report.converged = True
            break
        if pd.k <= 1 or steps >= limit:
            break
        W = spv_step(W, pd)
        steps += 1
    report.final_W = W
    report.final_delta = delta
    return report


def kernel_spv(W_V, data, kernel, config=None, ops=None):
    """Exact SPV pruning; ``ops`` may be passed to reuse kernel matrices."""
    config = config or PruneConfig()
    ops = ops or KernelOperators(data, kernel, config.lam)
    return _prune(W_V, lambda W: exact_principal(W, ops=ops, threshold=config.threshold),
                  config, "exact")


def approx_kernel_spv(W_V, data, kernel, model, config=None, features=None):
    """SPV pruning driven by the Nystrom approximation of the principal angles."""
    config = config or PruneConfig(mode="approximate")
    features = features or nystrom.NystromFeatures(model, data, config.nystrom_lam)

    def principal(W):
        return nystrom.approx_principal(model, data, W, tau_V=config.tau_V,
                                        tau_KV=config.tau_KV, features=features,
                                        cosine_tol=config.cosine_tol)

    return _prune(W_V, principal, config, "approximate")


def audit_exact_delta(W, data, kernel, lam=None, threshold=DEFAULT_THRESHOLD, ops=None):
    """True invariance proximity of a dictionary via the exact route."""
    ops = ops or KernelOperators(data, kernel, lam)
    return invariance_proximity(exact_principal(W, ops=ops, threshold=threshold))
