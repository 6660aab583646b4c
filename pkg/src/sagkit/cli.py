"""Command-line entry point: ``sagkit {eval,spectral,train,randindex,demo-unseen}``.

Exit codes: 0 success, 1 usage, 2 I/O or bad input file, 3 numerical
degeneracy.  Every failure prints one line ``error[<class>/<code>]: <message>``
to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import fileio, graphspec, numkit
from .errors import (
    ConvergenceError,
    DegenerateInputError,
    FormatError,
    TrainingDivergedError,
    UndefinedCorrelationError,
)
from .sagvicreg.experiment import DEFAULT_EXPERIMENT_SYNTH, unseen_cluster_experiment
from .sagvicreg.losses import VicregConfig
from .sagvicreg.model import ToyEncoder
from .sagvicreg.synth import SynthConfig, synth_generate
from .sagvicreg.train import DEFAULT_BATCH, DEFAULT_LR, VARIANTS, train
from .structmetrics import (
    Hierarchy,
    SimilarityConfig,
    hierarchical_rand,
    rand_sweep,
    structural_similarity,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3
_CLASS = {EXIT_USAGE: "usage", EXIT_IO: "io", EXIT_NUMERIC: "numerical"}


class CliError(Exception):
    def __init__(self, exit_code, code, message):
        super().__init__(message)
        self.exit_code = exit_code
        self.code = code


def usage(code, message):
    return CliError(EXIT_USAGE, code, message)


def bad_input(code, message):
    return CliError(EXIT_IO, code, message)


# -- configuration ------------------------------------------------------------------


@dataclass
class RunConfig:
    """Every tunable of every command; a JSON file may set any subset."""

    # loss
    lambda_inv: float = 25.0
    mu_var: float = 25.0
    nu_cov: float = 1.0
    gamma: float = 1.0
    epsilon: float = 1e-4
    k_neighbors: int = 5
    scale_percentile: float = 20.0
    scale_floor: float = 1e-7
    # synthetic data
    n_clusters: int | None = None
    points_per_cluster: int | None = None
    ambient_dim: int | None = None
    center_spread: float | None = None
    cluster_std: float | None = None
    augment_std: float | None = None
    # training
    variant: str | None = None
    epochs: int = 500
    steps: int = 500
    lr: float = DEFAULT_LR
    batch_size: int = DEFAULT_BATCH
    seed: int = 0
    seeds: int = 1
    train_clusters: list | None = None
    # structure metrics
    linkage: str = "ward"
    metric: str = "cosine"
    lca_mode: str = "hops"
    max_pairs: int | None = None
    # spectral / clustering
    dim: int | None = None
    include_trivial: bool = False
    n_neighbors: int = 7
    sweep_min: int = 2
    sweep_max: int = 20
    # outputs
    out: str | None = None
    history: str | None = None
    out_json: str | None = None
    out_sweep: str | None = None
    out_dir: str | None = None

    @classmethod
    def load(cls, path):
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise bad_input("bad_config", f"{path}: invalid JSON: {exc.msg} at line {exc.lineno}")
        if not isinstance(raw, dict):
            raise bad_input("bad_config", f"{path}: top level must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise usage("unknown_config_key", f"{path}: unknown keys {', '.join(unknown)}")
        return cls(**raw)

    def vicreg(self):
        return VicregConfig(
            lambda_inv=self.lambda_inv, mu_var=self.mu_var, nu_cov=self.nu_cov,
            gamma=self.gamma, epsilon=self.epsilon, k_neighbors=self.k_neighbors,
            scale_percentile=self.scale_percentile, scale_floor=self.scale_floor,
        )

    def synth(self, base):
        over = {
            f.name: getattr(self, f.name)
            for f in fields(SynthConfig)
            if f.name != "seed" and getattr(self, f.name) is not None
        }
        return dataclasses.replace(base, seed=self.seed, **over)

    def similarity(self):
        return SimilarityConfig(self.linkage, self.metric, self.lca_mode, self.max_pairs, self.seed)


def resolve(args):
    """Merge built-in defaults, the ``--config`` file and explicit flags, in that order."""
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    try:
        cfg.vicreg()
        cfg.similarity()
        cfg.synth(SynthConfig())
    except (TypeError, ValueError) as exc:
        raise usage("invalid_config", str(exc)) from None
    if cfg.linkage not in ("ward", "average", "complete", "single"):
        raise usage("invalid_config", f"unknown linkage {cfg.linkage!r}")
    if cfg.metric not in ("cosine", "euclidean"):
        raise usage("invalid_config", f"unknown metric {cfg.metric!r}")
    if cfg.lca_mode not in ("hops", "height"):
        raise usage("invalid_config", f"unknown lca_mode {cfg.lca_mode!r}")
    if cfg.seeds < 1 or cfg.epochs < 0 or cfg.steps < 0 or cfg.lr <= 0 or cfg.batch_size < 2:
        raise usage("invalid_config", "need seeds >= 1, epochs >= 0, steps >= 0, lr > 0, batch_size >= 2")
    return cfg


def require(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise usage("missing_flag", f"missing required flag(s): {flags}")


# -- commands ---------------------------------------------------------------------


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        fileio.write_text(path, text)


def cmd_eval(args):
    cfg = resolve(args)
    a = fileio.load_matrix(args.a)
    b = fileio.load_matrix(args.b)
    if a.shape[0] != b.shape[0]:
        raise bad_input("row_mismatch", f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    report = structural_similarity(a, b, cfg.similarity())
    _emit(report.to_json(), cfg.out)


def cmd_spectral(args):
    cfg = resolve(args)
    require(cfg, "dim", "out")
    w = fileio.load_matrix(args.graph)
    n = w.shape[0]
    if w.shape != (n, n):
        raise bad_input("not_square", f"graph matrix is {w.shape[0]}x{w.shape[1]}, not square")
    try:
        graphspec.check_affinity(w)
    except DegenerateInputError:
        raise
    except ValueError as exc:
        code = "asymmetric_graph" if "symmetric" in str(exc) else "invalid_graph"
        raise bad_input(code, str(exc)) from None
    if not 1 <= cfg.dim < n:
        raise usage("bad_dim", f"--dim must be in [1, {n - 1}] for a {n}-node graph, got {cfg.dim}")
    fileio.save_emb(cfg.out, graphspec.spectral_embed(w, cfg.dim, cfg.include_trivial))


def cmd_train(args):
    cfg = resolve(args)
    require(cfg, "variant", "out")
    if cfg.variant not in VARIANTS:
        raise usage("bad_variant", f"--variant must be one of {', '.join(VARIANTS)}")
    data = synth_generate(cfg.synth(SynthConfig()))
    enc0 = ToyEncoder.init(data.points.shape[1], seed=cfg.seed)
    enc, history = train(
        cfg.variant, data.points, enc0, cfg.vicreg(), cfg.epochs,
        lr=cfg.lr, seed=cfg.seed, augmenter=data.augmenter, batch_size=cfg.batch_size,
    )
    history_path = cfg.history or str(Path(cfg.out).with_suffix(".history.csv"))
    fileio.save_encoder(cfg.out, enc)
    fileio.write_text(history_path, fileio.history_csv(history))
    if history:
        last = history[-1]
        print(
            f"epoch {len(history) - 1}: invariance={last.invariance:.6g} "
            f"variance={last.variance:.6g} covariance={last.covariance:.6g} total={last.total:.6g}"
        )
    else:
        print("no epochs run; initial encoder saved")


def cmd_randindex(args):
    cfg = resolve(args)
    require(cfg, "out_json", "out_sweep")
    x = fileio.load_matrix(args.emb)
    try:
        h = Hierarchy.from_csv(Path(args.hierarchy).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise bad_input("bad_hierarchy", f"{args.hierarchy}: {exc}") from None
    if h.n_items != x.shape[0]:
        raise bad_input("row_mismatch", f"{x.shape[0]} embedding rows but {h.n_items} labelled items")
    if not 1 <= cfg.sweep_min <= cfg.sweep_max < x.shape[0]:
        raise usage("bad_sweep", f"sweep range must satisfy 1 <= min <= max < {x.shape[0]}")
    gcfg = graphspec.GraphConfig(n_neighbors=min(cfg.n_neighbors, x.shape[0] - 1))
    per_level = hierarchical_rand(x, h, cfg.seed, gcfg)
    levels = [
        {"level": lv + 1, "n_classes": h.n_classes(lv), "rand_index": r}
        for lv, r in enumerate(per_level)
    ]
    sweep = rand_sweep(x, h.finest, range(cfg.sweep_min, cfg.sweep_max + 1), cfg.seed, gcfg)
    fileio.write_text(cfg.out_json, fileio.json_text({"n_items": h.n_items, "levels": levels}))
    fileio.write_text(
        cfg.out_sweep,
        fileio.matrix_csv(("n_clusters", "rand_index"), ([k for k, _ in sweep], [r for _, r in sweep])),
    )


def pca_2d(fit_on, *others):
    """Project onto the top two principal axes of ``fit_on``."""
    mean = fit_on.mean(axis=0)
    xc = fit_on - mean
    eig = numkit.symmetric_eig(xc.T @ xc / max(1, len(xc) - 1))
    axes = eig.vectors[:, ::-1][:, :2]
    return [(m - mean) @ axes for m in (fit_on, *others)]


def _aggregate(reports):
    out = {}
    for v in VARIANTS:
        runs = [r.variants[v] for r in reports if r.has_unseen]
        if not runs:
            continue
        out[v] = {
            "mean_seen_dispersion_ratio": float(np.mean([d.seen_ratio for d in runs])),
            "mean_unseen_dispersion_ratio": float(np.mean([d.unseen_ratio for d in runs])),
            "runs_unseen_more_dispersed": sum(d.unseen_ratio > d.seen_ratio for d in runs),
            "mean_unseen_lca_spearman": float(np.mean([d.unseen_similarity.lca_spearman for d in runs])),
        }
    if len(out) == len(VARIANTS):
        out["runs_sag_spearman_ge_vicreg"] = sum(
            r.variants["sag"].unseen_similarity.lca_spearman
            >= r.variants["vicreg"].unseen_similarity.lca_spearman
            for r in reports
        )
    return out


def cmd_demo_unseen(args):
    cfg = resolve(args)
    out_dir = Path(cfg.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    synth = cfg.synth(DEFAULT_EXPERIMENT_SYNTH)
    clusters = tuple(cfg.train_clusters) if cfg.train_clusters is not None else (0, 1, 2)
    try:
        reports = [
            unseen_cluster_experiment(
                synth, clusters, seed, cfg.vicreg(), cfg.steps, cfg.lr, cfg.batch_size,
                dataclasses.replace(cfg.similarity(), seed=seed),
            )
            for seed in range(cfg.seed, cfg.seed + cfg.seeds)
        ]
    except ValueError as exc:
        if isinstance(exc, DegenerateInputError):
            raise
        raise usage("invalid_config", str(exc)) from None

    first = reports[0]
    for v in VARIANTS:
        d = first.variants[v]
        tr, te = pca_2d(d.train_embedding, d.test_embedding)
        seen = set(first.train_clusters)
        for name, xy, labels in (("train", tr, first.train_labels), ("test", te, first.test_labels)):
            flags = [int(int(c) in seen) for c in labels]
            text = fileio.matrix_csv(
                ("x", "y", "cluster", "seen"), (xy[:, 0], xy[:, 1], [int(c) for c in labels], flags)
            )
            fileio.write_text(out_dir / f"scatter_{name}_{v}.csv", text)
    report = {
        "seeds": [r.seed for r in reports],
        "synth": dataclasses.asdict(dataclasses.replace(synth, seed=cfg.seed)),
        "steps": cfg.steps,
        "runs": [r.to_dict() for r in reports],
        "summary": _aggregate(reports),
    }
    fileio.write_text(out_dir / "report.json", fileio.json_text(report))


# -- parser ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise usage("bad_arguments", message)


def _csv_ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p):
    p.add_argument("--config", help="JSON file of settings; explicit flags override it")
    p.add_argument("--seed", type=int)


def _add_metric_flags(p):
    p.add_argument("--linkage", choices=("ward", "average", "complete", "single"))
    p.add_argument("--metric", choices=("cosine", "euclidean"))
    p.add_argument("--lca-mode", dest="lca_mode", choices=("hops", "height"))
    p.add_argument("--max-pairs", dest="max_pairs", type=int)


def _add_training_flags(p):
    for name, typ in (
        ("lambda_inv", float), ("mu_var", float), ("nu_cov", float), ("gamma", float),
        ("epsilon", float), ("k_neighbors", int), ("scale_percentile", float),
        ("scale_floor", float), ("n_clusters", int), ("points_per_cluster", int),
        ("ambient_dim", int), ("center_spread", float), ("cluster_std", float),
        ("augment_std", float), ("lr", float), ("batch_size", int),
    ):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)


def build_parser():
    parser = _Parser(prog="sagkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="structural similarity of two index-aligned embedding sets")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", help="report path (default: stdout)")
    _add_common(p)
    _add_metric_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectral", help="Laplacian eigenmap of a CSV or EMB1 affinity matrix")
    p.add_argument("graph")
    p.add_argument("--dim", type=int)
    p.add_argument("--out")
    p.add_argument("--include-trivial", dest="include_trivial", action="store_const", const=True)
    _add_common(p)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("train", help="train the toy encoder on synthetic clusters")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", help="encoder output path (ENC1)")
    p.add_argument("--history", help="loss history CSV (default: --out with its suffix replaced by .history.csv)")
    _add_common(p)
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("randindex", help="hierarchical Rand index and cluster-count sweep")
    p.add_argument("emb")
    p.add_argument("hierarchy")
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--out-sweep", dest="out_sweep")
    p.add_argument("--sweep-min", dest="sweep_min", type=int)
    p.add_argument("--sweep-max", dest="sweep_max", type=int)
    p.add_argument("--n-neighbors", dest="n_neighbors", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_randindex)

    p = sub.add_parser("demo-unseen", help="synthetic unseen-cluster distortion experiment")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seeds", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--train-clusters", dest="train_clusters", type=_csv_ints)
    _add_common(p)
    _add_training_flags(p)
    _add_metric_flags(p)
    p.set_defaults(func=cmd_demo_unseen)
    return parser


def _classify(exc):
    """Map an exception to ``(exit code, cause code)``."""
    if isinstance(exc, CliError):
        return exc.exit_code, exc.code
    if isinstance(exc, FormatError):
        return EXIT_IO, exc.code
    if isinstance(exc, FileNotFoundError):
        return EXIT_IO, "not_found"
    if isinstance(exc, OSError):
        return EXIT_IO, "unreadable"
    if isinstance(exc, UndefinedCorrelationError):
        return EXIT_NUMERIC, "undefined_correlation"
    if isinstance(exc, TrainingDivergedError):
        return EXIT_NUMERIC, "diverged"
    if isinstance(exc, ConvergenceError):
        return EXIT_NUMERIC, "no_convergence"
    if isinstance(exc, DegenerateInputError):
        return EXIT_NUMERIC, "degenerate_input"
    if isinstance(exc, (ValueError, TypeError)):
        return EXIT_USAGE, "invalid_value"
    return None


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except Exception as exc:
        mapped = _classify(exc)
        if mapped is None:
            raise
        exit_code, code = mapped
        message = " ".join(str(exc).split())
        print(f"error[{_CLASS[exit_code]}/{code}]: {message}", file=sys.stderr)
        return exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
