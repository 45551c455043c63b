"""Experiment configuration: JSON document + ``KSPV_*`` environment overrides.

Precedence (lowest to highest): built-in defaults, ``--config`` file,
environment variables, explicit CLI flags.  Every top-level key ``foo`` can be
overridden by ``KSPV_FOO``; kernel fields use ``KSPV_KERNEL_FAMILY``,
``KSPV_KERNEL_SHAPE`` and ``KSPV_KERNEL_SMOOTHNESS``.  Values are parsed as
JSON when possible (``KSPV_D_LIST=[100,200]``), else kept as strings; a bare
comma-separated list of numbers is also accepted for list-valued keys.
"""
import copy
import json
import os

import numpy as np

from .errors import ConfigError
from .kernels import KernelSpec

ENV_PREFIX = "KSPV_"

DEFAULTS = {
    "system": "duffing",
    "dt": 0.01,
    "box": [[-2.0, 2.0], [-2.0, 2.0]],
    "N": 5000,
    "kernel": {"family": "wendland", "shape": 2.0, "smoothness": 2},
    "s": 200,
    "dictionary_seed": None,
    "D_list": [800, 1000, 2000, 3000, 4000],
    "landmark_seeds": [0],
    "D_prune": 2000,
    "lambda_scale": 1e-10,
    "nystrom_lambda_scale": 1e-8,
    "threshold": 1e-8,
    "landmark_threshold": 1e-10,
    "c_V": 1e-3,
    "c_KV": 1e-3,
    "approx_cosine_tol": 1e-3,
    "epsilon": 0.05,
    "mode": "approximate",
    "max_iterations": None,
    "steps": 5,
    "eigen_order": "one",
    "exact_n_cap": 10000,
    "seed": 0,
    "out": "out",
}

_LIST_KEYS = {"D_list", "landmark_seeds"}


def _parse_env_value(key, raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        if key in _LIST_KEYS:
            try:
                return [int(v) for v in raw.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"cannot parse {ENV_PREFIX}{key.upper()}={raw!r}") from exc
        return raw


def env_overrides(environ=None):
    environ = os.environ if environ is None else environ
    out = {}
    for key in DEFAULTS:
        if key == "kernel":
            for sub in DEFAULTS["kernel"]:
                name = f"{ENV_PREFIX}KERNEL_{sub.upper()}"
                if name in environ:
                    out.setdefault("kernel", {})[sub] = _parse_env_value(sub, environ[name])
            continue
        name = ENV_PREFIX + key.upper()
        if name in environ:
            out[key] = _parse_env_value(key, environ[name])
    return out


def _merge(base, extra):
    for k, v in extra.items():
        if k not in DEFAULTS:
            raise ConfigError(f"unknown config key {k!r}")
        if k == "kernel":
            if not isinstance(v, dict):
                raise ConfigError("kernel must be an object")
            base["kernel"].update(v)
        else:
            base[k] = v
    return base


def load_config(path=None, overrides=None, environ=None):
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        _merge(cfg, doc)
    _merge(cfg, env_overrides(environ))
    _merge(cfg, {k: v for k, v in (overrides or {}).items() if v is not None})
    validate(cfg)
    return cfg


def validate(cfg):
    def positive_int(key, allow_zero=False):
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < (0 if allow_zero else 1):
            raise ConfigError(f"{key} must be a positive integer, got {v!r}")

    positive_int("N")
    positive_int("s")
    positive_int("D_prune")
    positive_int("steps")
    positive_int("exact_n_cap")
    if cfg["max_iterations"] is not None:
        positive_int("max_iterations", allow_zero=True)
    if not isinstance(cfg["D_list"], list) or any(
            isinstance(d, bool) or not isinstance(d, int) or d < 1 for d in cfg["D_list"]):
        raise ConfigError("D_list must be a list of positive integers")
    if not isinstance(cfg["landmark_seeds"], list) or not cfg["landmark_seeds"]:
        raise ConfigError("landmark_seeds must be a non-empty list")
    if not 0.0 <= float(cfg["epsilon"]) < 1.0:
        raise ConfigError("epsilon must lie in [0, 1)")
    if cfg["mode"] not in ("exact", "approximate"):
        raise ConfigError("mode must be 'exact' or 'approximate'")
    if cfg["eigen_order"] not in ("one", "modulus"):
        raise ConfigError("eigen_order must be 'one' or 'modulus'")
    for key in ("dt", "lambda_scale", "nystrom_lambda_scale", "c_V", "c_KV",
                "approx_cosine_tol"):
        if not float(cfg[key]) > 0:
            raise ConfigError(f"{key} must be positive")
    for key in ("threshold", "landmark_threshold"):
        if not float(cfg[key]) >= 0:
            raise ConfigError(f"{key} must be nonnegative")
    if isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")
    kernel_spec(cfg)
    return cfg


def kernel_spec(cfg):
    try:
        return KernelSpec.from_dict(cfg["kernel"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid kernel spec: {exc}") from exc


def derive_seed(seed, *keys):
    """Independent 64-bit seed for a named sub-stream of the global seed."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


DATA_STREAM, DICTIONARY_STREAM, LANDMARK_STREAM = 0, 1, 2


def data_seed(cfg):
    return derive_seed(cfg["seed"], DATA_STREAM)


def dictionary_seed(cfg):
    if cfg["dictionary_seed"] is not None:
        return int(cfg["dictionary_seed"])
    return derive_seed(cfg["seed"], DICTIONARY_STREAM)


def landmark_seed(cfg, key):
    return derive_seed(cfg["seed"], LANDMARK_STREAM, key)
