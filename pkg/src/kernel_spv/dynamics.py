"""Discrete-time systems and snapshot generation.

Randomness comes from numpy's PCG64 bit generator seeded with a 64-bit
integer (``numpy.random.default_rng(seed)``); the experiment drivers derive
independent per-purpose seeds with :func:`kernel_spv.config.derive_seed`.
Streams are stable across platforms for a fixed numpy major version.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, InvalidBox, InvalidCount

DEFAULT_DT = 0.01


@dataclass(frozen=True)
class DiscreteSystem:
    """``x+ = T(x)``; ``step`` acts column-wise on ``n x N`` arrays."""

    name: str
    state_dim: int
    step: object = field(repr=False, compare=False)
    params: dict = field(default_factory=dict)

    @property
    def descriptor(self):
        return {"name": self.name, "state_dim": self.state_dim, **self.params}

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.state_dim:
            raise DimensionMismatch(f"{self.name} expects {self.state_dim}-dimensional states")
        return self.step(X)


def duffing_step(x, dt=DEFAULT_DT):
    """Explicit-Euler Duffing map; works on a 2-vector or a 2 x N array."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[0], x[1]
    return np.stack([x1 + dt * x2, x2 + dt * (x1 - 3.0 * x1 ** 3)])


def duffing_system(dt=DEFAULT_DT):
    if not dt > 0:
        raise ConfigError("dt must be positive")
    return DiscreteSystem("duffing", 2, lambda X: duffing_step(X, dt), {"dt": float(dt)})


def linear_system(A):
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A must be square")
    return DiscreteSystem("linear", A.shape[0], lambda X: A @ X, {"A": A.tolist()})


def identity_system(n):
    return DiscreteSystem("identity", int(n), lambda X: np.array(X, dtype=float), {})


def system_from_descriptor(desc):
    name = desc.get("name")
    if name == "duffing":
        return duffing_system(float(desc.get("dt", DEFAULT_DT)))
    if name == "linear":
        return linear_system(desc["A"])
    if name == "identity":
        return identity_system(int(desc.get("state_dim", 2)))
    raise ConfigError(f"unknown system {name!r}")


def advance(system, x, steps):
    """Apply ``system`` ``steps`` times; ``steps = 0`` returns a copy of ``x``."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    x = np.array(x, dtype=float)
    for _ in range(int(steps)):
        x = system(x)
    return x


def rollout(system, x0, length):
    """Trajectory ``[x0, T(x0), ..., T^length(x0)]`` as an n x (length+1) array."""
    traj = [np.asarray(x0, dtype=float)]
    for _ in range(int(length)):
        traj.append(system(traj[-1]))
    return np.stack(traj, axis=1)


@dataclass(frozen=True)
class SnapshotData:
    X: np.ndarray
    TX: np.ndarray
    system: DiscreteSystem
    seed: object = None
    box: tuple = ()

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def N(self):
        return self.X.shape[1]

    def metadata(self):
        return {"seed": self.seed, "system": self.system.descriptor,
                "box": [list(b) for b in self.box], "N": self.N}


def _validate_box(box, n):
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != n:
        raise InvalidBox(f"box has {len(box)} intervals for a {n}-dimensional state")
    for lo, hi in box:
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise InvalidBox(f"invalid interval [{lo}, {hi}]")
    return box


def sample_uniform(system, N, box, seed):
    """I.i.d. uniform states in ``box`` paired with their images under ``system``."""
    if int(N) != N or N < 1:
        raise InvalidCount(f"N must be a positive integer, got {N}")
    box = _validate_box(box, system.state_dim)
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    X = (lo[:, None] + (hi - lo)[:, None] * rng.random((system.state_dim, int(N))))
    return SnapshotData(X, system(X), system, seed, box)


def snapshots_from_states(system, X, seed=None, box=()):
    X = np.asarray(X, dtype=float)
    return SnapshotData(X, system(X), system, seed, tuple(box))
