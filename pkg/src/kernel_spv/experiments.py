"""Experiment drivers shared by the CLI and the acceptance tests."""
import time

import numpy as np

from . import config as cfgmod
from .dynamics import sample_uniform, system_from_descriptor
from .errors import InvalidCount
from .geometry import (
    KernelOperators,
    evaluate_function,
    exact_principal,
    gram_triple,
    invariance_proximity,
)
from .koopman import eigenpairs, prediction_error_map, reduced_edmd_matrix
from .nystrom import (
    NystromFeatures,
    approx_principal,
    fit_landmarks,
    orthonormality_residuals,
    target_matrices,
    threshold_schedule,
    truncate_targets,
)
from .pruning import PruneConfig, approx_kernel_spv, audit_exact_delta, kernel_spv


def make_system(cfg):
    desc = cfg["system"]
    if isinstance(desc, str):
        desc = {"name": desc, "dt": cfg["dt"], "state_dim": len(cfg["box"])}
    return system_from_descriptor(desc)


def make_data(cfg):
    return sample_uniform(make_system(cfg), cfg["N"], cfg["box"], cfgmod.data_seed(cfg))


def make_dictionary(N, s, seed):
    """Selection matrix of ``s`` kernel sections with centres drawn without replacement."""
    if int(s) != s or not 1 <= s <= N:
        raise InvalidCount(f"dictionary size must satisfy 1 <= s <= N={N}, got {s}")
    centers = np.random.default_rng(seed).choice(N, size=int(s), replace=False)
    W = np.zeros((N, int(s)))
    W[centers, np.arange(int(s))] = 1.0
    return W, centers


def exact_operators(data, kernel, cfg, force=False):
    return KernelOperators(data, kernel, lambda_scale=cfg["lambda_scale"],
                           n_cap=cfg["exact_n_cap"], force=force)


def landmark_model(data, kernel, D, key, cfg):
    if D > data.N:
        raise InvalidCount(f"D={D} exceeds N={data.N}")
    return fit_landmarks(data, D, cfgmod.landmark_seed(cfg, key), kernel,
                         cfg["landmark_threshold"])


def nystrom_features(data, kernel, D, key, cfg):
    model = landmark_model(data, kernel, D, key, cfg)
    return model, NystromFeatures(model, data, lambda_scale=cfg["nystrom_lambda_scale"])


def thresholds(cfg, D):
    return threshold_schedule(D, cfg["c_V"]), threshold_schedule(D, cfg["c_KV"])


def residual_sweep(data, W, kernel, cfg, ops):
    """One record per (D, landmark key): orthonormality residuals against exact Grams."""
    g = gram_triple(W, ops.koopman_image(W), ops.K_XX, ops.K_TXX)
    records = []
    for D in cfg["D_list"]:
        for key in cfg["landmark_seeds"]:
            t0 = time.perf_counter()
            model, feats = nystrom_features(data, kernel, D, key, cfg)
            tau_V, tau_KV = thresholds(cfg, D)
            t = truncate_targets(target_matrices(model, data, W, features=feats), tau_V, tau_KV)
            eps_V, eps_KV = orthonormality_residuals(t, g.M_V, g.M_KV)
            records.append({
                "D": D, "landmark_seed": key, "d": model.d,
                "rank_V": t.svd_V.rank, "rank_KV": t.svd_KV.rank,
                "epsilon_V": eps_V, "epsilon_KV": eps_KV,
                "wall_ms": 1e3 * (time.perf_counter() - t0),
            })
    return records


def compare_angles(data, W, kernel, cfg, ops):
    """Exact decomposition plus approximate ones for every (D, landmark key).

    The cosine guard is disabled here: raw cosines are reported instead so the
    comparison covers badly approximated D as well.
    """
    exact = exact_principal(W, ops=ops, threshold=cfg["threshold"])
    approx = []
    for D in cfg["D_list"]:
        for key in cfg["landmark_seeds"]:
            model, feats = nystrom_features(data, kernel, D, key, cfg)
            tau_V, tau_KV = thresholds(cfg, D)
            pd = approx_principal(model, data, W, tau_V=tau_V, tau_KV=tau_KV,
                                  features=feats, cosine_tol=np.inf)
            approx.append((D, key, pd))
    return exact, approx


def max_angle_deviation(exact, approx):
    return abs(float(approx.angles.max()) - float(exact.angles.max()))


def prune_config(cfg, mode=None, D=None):
    mode = mode or cfg["mode"]
    D = D or cfg["D_prune"]
    tau_V, tau_KV = thresholds(cfg, D)
    return PruneConfig(epsilon=float(cfg["epsilon"]), max_iterations=cfg["max_iterations"],
                       mode=mode, threshold=cfg["threshold"], tau_V=tau_V, tau_KV=tau_KV,
                       cosine_tol=cfg["approx_cosine_tol"])


def run_prune(data, W, kernel, cfg, mode=None, ops=None, audit=False, force=False):
    """Run (Approximate) Kernel-SPV; returns ``(report, audited_true_delta_or_None)``."""
    pc = prune_config(cfg, mode)
    if pc.mode == "exact":
        ops = ops or exact_operators(data, kernel, cfg, force)
        report = kernel_spv(W, data, kernel, pc, ops=ops)
    else:
        model, feats = nystrom_features(data, kernel, cfg["D_prune"], cfg["landmark_seeds"][0], cfg)
        report = approx_kernel_spv(W, data, kernel, model, pc, features=feats)
    audited = None
    if audit:
        ops = ops or exact_operators(data, kernel, cfg, force)
        audited = audit_exact_delta(report.final_W, data, kernel, threshold=cfg["threshold"],
                                    ops=ops)
    return report, audited


def leading_eigenfunction(data, W, kernel, cfg, ops):
    g = gram_triple(W, ops.koopman_image(W), ops.K_XX, ops.K_TXX)
    model = reduced_edmd_matrix(g, cfg["threshold"])
    values = evaluate_function(W, data, kernel, data.X)
    return eigenpairs(model, values=values, order=cfg["eigen_order"])[0]


def predict_error(data, W, kernel, cfg, ops):
    pair = leading_eigenfunction(data, W, kernel, cfg, ops)
    errors = prediction_error_map(pair, data.system, data, kernel, cfg["steps"], W=W)
    return pair, errors


def error_summary(errors):
    return {"max": float(np.max(errors)), "mean": float(np.mean(errors)),
            "p95": float(np.percentile(errors, 95))}


def exact_delta(W, ops, cfg):
    return invariance_proximity(exact_principal(W, ops=ops, threshold=cfg["threshold"]))
