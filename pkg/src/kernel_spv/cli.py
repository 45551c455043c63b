"""Command-line driver: ``kernel-spv <command> [--config PATH] [--seed N] [--out DIR]``.

Commands read their inputs from the output directory (``data.csv`` from
``generate``, ``dictionary.csv`` from ``dictionary``, ``prune_final_W.csv``
from ``prune``) and write CSV/JSON next to them, plus a
``manifest-<command>.json`` with the config snapshot, timings and SHA-256
digests of every file written.

Exit codes: 0 success, 2 configuration / input error, 3 numerical failure.
"""
import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from . import experiments as ex
from . import io
from .errors import ConfigError, DimensionMismatch, NumericalError

logger = logging.getLogger("kernel_spv")

COMMANDS = ("generate", "dictionary", "residual-sweep", "compare-angles", "prune",
            "predict-error")


class Run:
    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.timings = {}
        self.outputs = []
        self._t = time.perf_counter()

    def stage(self, name):
        now = time.perf_counter()
        self.timings[name] = round(1e3 * (now - self._t), 3)
        self._t = now

    def path(self, name):
        p = self.out / name
        self.outputs.append(p)
        return p

    def finish(self):
        digests = {p.name: io.sha256(p) for p in self.outputs}
        manifest = self.out / f"manifest-{self.command}.json"
        io.write_json(manifest, {"command": self.command, "version": __version__,
                                 "config": self.cfg, "timings_ms": self.timings,
                                 "outputs": digests})
        for p in self.outputs:
            if io.sha256(p) != digests[p.name]:
                raise ConfigError(f"digest mismatch for {p}")
        return manifest


def _load_data(run):
    out = run.out
    return io.read_snapshots(io.require(out / "data.csv", "run `generate` first"),
                             io.require(out / "data.json", "run `generate` first"))


def _load_dictionary(run, data):
    W = io.read_matrix(io.require(run.out / "dictionary.csv", "run `dictionary` first"))
    if W.shape[0] != data.N:
        raise DimensionMismatch("dictionary rows do not match the dataset size")
    return W


def cmd_generate(run, args):
    data = ex.make_data(run.cfg)
    run.stage("sample")
    io.write_snapshots(data, run.path("data.csv"), run.path("data.json"))
    run.stage("write")


def cmd_dictionary(run, args):
    data = _load_data(run)
    seed = cfgmod.dictionary_seed(run.cfg)
    W, centers = ex.make_dictionary(data.N, run.cfg["s"], seed)
    run.stage("sample")
    io.write_matrix(run.path("dictionary.csv"), W, prefix="w")
    io.write_json(run.path("dictionary.json"),
                  {"s": int(W.shape[1]), "seed": seed, "centers": centers.tolist()})
    run.stage("write")


def cmd_residual_sweep(run, args):
    data = _load_data(run)
    W = _load_dictionary(run, data)
    kernel = cfgmod.kernel_spec(run.cfg)
    ops = ex.exact_operators(data, kernel, run.cfg, args.force_exact)
    run.stage("exact_setup")
    records = ex.residual_sweep(data, W, kernel, run.cfg, ops)
    run.stage("sweep")
    cols = ["D", "landmark_seed", "d", "rank_V", "rank_KV", "epsilon_V", "epsilon_KV"]
    io.write_csv(run.path("residual_sweep.csv"), cols, [[r[c] for c in cols] for r in records])
    # wall-clock times go to the manifest so the CSV stays reproducible
    for r in records:
        run.timings[f"D{r['D']}_seed{r['landmark_seed']}"] = round(r["wall_ms"], 3)
    run.stage("write")


def cmd_compare_angles(run, args):
    data = _load_data(run)
    W = _load_dictionary(run, data)
    kernel = cfgmod.kernel_spec(run.cfg)
    ops = ex.exact_operators(data, kernel, run.cfg, args.force_exact)
    exact, approx = ex.compare_angles(data, W, kernel, run.cfg, ops)
    run.stage("compute")
    first = run.cfg["landmark_seeds"][0]
    columns = [(D, pd) for D, key, pd in approx if key == first]
    k = max([exact.k] + [pd.k for _, pd in columns])

    def cell(angles, i):
        return float(angles[i]) if i < len(angles) else None

    rows = [[i, cell(exact.angles, i)] + [cell(pd.angles, i) for _, pd in columns]
            for i in range(k)]
    io.write_csv(run.path("compare_angles.csv"),
                 ["index", "theta_exact"] + [f"theta_approx_D{D}" for D, _ in columns], rows)
    io.write_csv(run.path("compare_angles_summary.csv"),
                 ["D", "landmark_seed", "rank_V", "rank_KV", "max_angle_exact",
                  "max_angle_approx", "max_angle_deviation", "max_raw_cosine"],
                 [[D, key, pd.rank_V, pd.rank_KV, exact.angles.max(), pd.angles.max(),
                   ex.max_angle_deviation(exact, pd), pd.diagnostics["max_raw_cosine"]]
                  for D, key, pd in approx])
    io.write_json(run.path("exact_principal.json"), exact.to_dict())
    run.stage("write")


def cmd_prune(run, args):
    data = _load_data(run)
    W = _load_dictionary(run, data)
    kernel = cfgmod.kernel_spec(run.cfg)
    report, audited = ex.run_prune(data, W, kernel, run.cfg, audit=args.audit_exact,
                                   force=args.force_exact)
    run.stage("prune")
    doc = report.to_dict()
    if audited is not None:
        doc["audited_exact_delta"] = audited
    io.write_json(run.path("prune_report.json"), doc)
    io.write_csv(run.path("prune_iterations.csv"),
                 ["iteration", "dimension", "rank_V", "rank_KV", "delta"],
                 [[it["iteration"], it["dimension"], it["rank_V"], it["rank_KV"], it["delta"]]
                  for it in report.iterations])
    io.write_matrix(run.path("prune_final_W.csv"), report.final_W, prefix="w")
    if report.mode == "approximate":
        model = ex.landmark_model(data, kernel, run.cfg["D_prune"],
                                  run.cfg["landmark_seeds"][0], run.cfg)
        io.write_matrix(run.path("nystrom_landmarks.csv"), model.landmarks.T, prefix="x")
        io.write_json(run.path("nystrom_model.json"), model.to_dict())
    run.stage("write")
    logger.info("pruned to dimension %d (delta=%.4g, converged=%s)",
                report.final_dimension, report.final_delta, report.converged)


def cmd_predict_error(run, args):
    data = _load_data(run)
    kernel = cfgmod.kernel_spec(run.cfg)
    ops = ex.exact_operators(data, kernel, run.cfg, args.force_exact)
    models = [("unpruned", _load_dictionary(run, data))]
    pruned = run.out / "prune_final_W.csv"
    if pruned.exists():
        models.append(("pruned", io.read_matrix(pruned)))
    summary = []
    for name, W in models:
        pair, errors = ex.predict_error(data, W, kernel, run.cfg, ops)
        rows = np.column_stack([data.X.T, errors])
        header = [f"x{i + 1}" for i in range(data.n)] + ["error"]
        io.write_csv(run.path(f"error_{name}.csv"), header, rows.tolist())
        st = ex.error_summary(errors)
        summary.append([name, W.shape[1], pair.eigenvalue.real, pair.eigenvalue.imag,
                        st["max"], st["mean"], st["p95"]])
    if len(summary) == 2:
        a, b = summary
        summary.append(["delta", b[1] - a[1], None, None, b[4] - a[4], b[5] - a[5], b[6] - a[6]])
    io.write_csv(run.path("predict_error_summary.csv"),
                 ["model", "dimension", "eigenvalue_re", "eigenvalue_im", "max", "mean", "p95"],
                 summary)
    run.stage("compute")


HANDLERS = {
    "generate": cmd_generate,
    "dictionary": cmd_dictionary,
    "residual-sweep": cmd_residual_sweep,
    "compare-angles": cmd_compare_angles,
    "prune": cmd_prune,
    "predict-error": cmd_predict_error,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--audit-exact", action="store_true", default=argparse.SUPPRESS,
                        help="recompute the exact invariance proximity of the pruned subspace")
    common.add_argument("--force-exact", action="store_true", default=argparse.SUPPRESS,
                        help="allow exact computations above the configured N cap")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="kernel-spv", parents=[common],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__name__[4:])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for flag in ("config", "seed", "out"):
        if not hasattr(args, flag):
            setattr(args, flag, None)
    for flag in ("audit_exact", "force_exact", "verbose"):
        if not hasattr(args, flag):
            setattr(args, flag, False)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load_config(args.config, {"seed": args.seed, "out": args.out})
        run = Run(args.command, cfg)
        HANDLERS[args.command](run, args)
        run.finish()
    except (ConfigError, DimensionMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
