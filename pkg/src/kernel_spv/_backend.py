"""Selection between the numba-compiled kernels and the pure-numpy fallback.

The backend is read from the ``KSPV_BACKEND`` environment variable on every
call, so it can be switched inside a running process (tests do this):

* ``numba`` (default when numba imports) -- ``@njit`` loops
* ``numpy`` -- vectorised numpy, no compilation
"""
import os

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False

ENV_VAR = "KSPV_BACKEND"
BACKENDS = ("numba", "numpy")


def backend():
    name = os.environ.get(ENV_VAR, "numba" if HAS_NUMBA else "numpy").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"{ENV_VAR} must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


def use_numba():
    return backend() == "numba"
