"""Command-line entry point for the experiment suite.

Subcommands: train, grid-search, depth-study, augment-eval, knn-build,
anova, export-embeddings. Reports are written as JSON plus a CSV mirror,
atomically (temp file + rename), and embed the fully resolved
configuration and seeds so any report can be replayed bit-exactly.

Exit codes: 0 success, 1 invalid usage, 2 data errors, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .augment import (
    CombineMode,
    ConfidenceSource,
    ConfidenceTable,
    LabelExpansion,
    CgConvergenceError,
    combine,
    expand_labels,
    parw_confidence,
)
from .data import DataFormatError, Dataset, label_rate, load_dataset, row_normalize, save_dataset, subsample_split
from .evalstats import AccuracySample, DegenerateSamplesError, one_way_anova
from .graph import GraphError, knn_graph, normalize
from .model import DiffusionMode, ModelConfig, forward
from .rng import Rng
from .trainer import (
    TrainConfig,
    TrainingError,
    depth_study,
    grid_search_beta,
    train,
    train_runs,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad flags, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, GraphError, DegenerateSamplesError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, CgConvergenceError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def build_parser() -> _Parser:
    parser = _Parser(prog="anisogcn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"anisogcn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--dataset", required=True, help="portable dataset directory")
    model_flags.add_argument("--model", choices=["gcn", "agcn"], default="agcn")
    model_flags.add_argument("--diffusion", choices=[m.value for m in DiffusionMode], default=None,
                             help="diffusion placement (default: input-once for agcn, per-layer for gcn)")
    model_flags.add_argument("--beta", type=float, default=0.4)
    model_flags.add_argument("--hidden", type=int, default=16)
    model_flags.add_argument("--layers", type=int, default=2)
    model_flags.add_argument("--dropout", type=float, default=0.5)
    model_flags.add_argument("--weight-decay", type=float, default=5e-4)
    model_flags.add_argument("--row-normalize", choices=["on", "off"], default="on")
    model_flags.add_argument("--trace-normalize", choices=["on", "off"], default="off")

    train_flags = argparse.ArgumentParser(add_help=False)
    train_flags.add_argument("--lr", type=float, default=0.01)
    train_flags.add_argument("--epochs", type=int, default=200)
    train_flags.add_argument("--patience", type=int, default=10)
    train_flags.add_argument("--runs", type=int, default=10)
    train_flags.add_argument("--seed", type=int, default=0)
    train_flags.add_argument("--train-fraction", type=float, default=None,
                             help="resample splits per run at this training fraction")
    train_flags.add_argument("--val-size", type=int, default=500,
                             help="validation size for resampled splits")
    train_flags.add_argument("--test-size", type=int, default=1000,
                             help="test size for resampled splits")
    train_flags.add_argument("--out", default=None, help="report path prefix (default: report_<command>)")

    p = sub.add_parser("train", parents=[model_flags, train_flags], help="train and report accuracy over runs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid-search", parents=[model_flags, train_flags], help="select beta on the validation set")
    p.add_argument("--beta-grid", default=None, help="comma-separated values, default 0.0,0.1,...,5.0")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("depth-study", parents=[model_flags, train_flags], help="accuracy vs depth for agcn and gcn")
    p.add_argument("--depths", default="2,3,4,5,6", help="comma-separated layer counts")
    p.set_defaults(func=cmd_depth_study)

    p = sub.add_parser("augment-eval", parents=[model_flags, train_flags],
                       help="compare augmentation strategies at a low label rate")
    p.add_argument("--augment", choices=["co", "self", "union", "intersection", "all"], default="all")
    p.add_argument("--additions-per-class", type=int, default=None,
                   help="default: sized so the expanded set is ~3x the base")
    p.add_argument("--walk-lambda", type=float, default=1.0)
    p.set_defaults(func=cmd_augment_eval)

    p = sub.add_parser("knn-build", help="build a portable dataset directory from raw features")
    p.add_argument("--features", required=True, help="little-endian float32 feature file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--labels", default=None, help="optional node<TAB>class file")
    p.add_argument("--splits", default=None, help="optional splits.json to copy in")
    p.add_argument("--name", default="knn-dataset")
    p.add_argument("--num-classes", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_knn_build)

    p = sub.add_parser("anova", help="one-way ANOVA over per-run accuracy files")
    p.add_argument("--inputs", nargs="+", required=True,
                   help="CSV files: either report CSVs or one accuracy per line")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_anova)

    p = sub.add_parser("export-embeddings", parents=[model_flags, train_flags],
                       help="train once and export first-layer activations as CSV")
    p.set_defaults(func=cmd_export_embeddings)

    return parser


# ---------------------------------------------------------------------------
# command implementations


def _resolve_model_config(args, num_features: int, num_classes: int) -> ModelConfig:
    if args.layers < 2:
        raise ValueError("--layers must be at least 2")
    if args.diffusion is not None:
        mode = DiffusionMode(args.diffusion)
    else:
        mode = DiffusionMode.PER_LAYER if args.model == "gcn" else DiffusionMode.INPUT_ONCE
    dims = (num_features,) + (args.hidden,) * (args.layers - 1) + (num_classes,)
    return ModelConfig(
        layer_dims=dims,
        beta=args.beta if args.model == "agcn" else 0.0,
        diffusion_mode=mode,
        dropout_rate=args.dropout,
        weight_decay=args.weight_decay,
        anisotropic=args.model == "agcn",
        normalize_trace=args.trace_normalize == "on",
    )


def _resolve_train_config(args, beta_grid=None) -> TrainConfig:
    kwargs = dict(
        learning_rate=args.lr,
        max_epochs=args.epochs,
        patience=args.patience,
        runs=args.runs,
        seed=args.seed,
        resample_splits=args.train_fraction is not None,
        train_fraction=args.train_fraction,
        resample_val_size=args.val_size,
        resample_test_size=args.test_size,
    )
    if beta_grid is not None:
        kwargs["beta_grid"] = tuple(beta_grid)
    return TrainConfig(**kwargs)


def _load_prepared(args) -> Dataset:
    ds = load_dataset(args.dataset)
    if args.row_normalize == "on":
        ds = Dataset(
            name=ds.name, graph=ds.graph, features=row_normalize(ds.features),
            labels=ds.labels, train=ds.train, val=ds.val, test=ds.test,
            num_classes=ds.num_classes,
        )
    return ds


def _config_dict(args, model_cfg: ModelConfig, train_cfg: TrainConfig) -> dict:
    return {
        "command": args.command,
        "dataset": args.dataset,
        "model": args.model,
        "row_normalize": args.row_normalize,
        "model_config": {
            "layer_dims": list(model_cfg.layer_dims),
            "beta": model_cfg.beta,
            "diffusion_mode": model_cfg.diffusion_mode.value,
            "dropout_rate": model_cfg.dropout_rate,
            "weight_decay": model_cfg.weight_decay,
            "anisotropic": model_cfg.anisotropic,
            "normalize_trace": model_cfg.normalize_trace,
        },
        "train_config": {
            "learning_rate": train_cfg.learning_rate,
            "max_epochs": train_cfg.max_epochs,
            "patience": train_cfg.patience,
            "runs": train_cfg.runs,
            "seed": train_cfg.seed,
            "resample_splits": train_cfg.resample_splits,
            "train_fraction": train_cfg.train_fraction,
        },
    }


def cmd_train(args) -> int:
    ds = _load_prepared(args)
    model_cfg = _resolve_model_config(args, ds.features.shape[1], ds.num_classes)
    train_cfg = _resolve_train_config(args)
    if train_cfg.resample_splits:
        base = subsample_split(
            ds, train_cfg.train_fraction, Rng(train_cfg.seed).spawn("split"),
            val_size=train_cfg.resample_val_size, test_size=train_cfg.resample_test_size,
        )
        print(f"resampled base split: train={len(base.train)} (label rate {label_rate(base):.4f})")
    reports = train_runs(ds, model_cfg, train_cfg)
    accs = np.array([r.test_accuracy for r in reports])
    out = args.out or "report_train"

    # per-run epoch histories (losses, accuracies, gate logs) live under
    # <out>.runs/; the report references them by name so its bytes do not
    # depend on the output prefix
    per_run = []
    for idx, r in enumerate(reports):
        name = f"run{idx}.json"
        _atomic_write_text(os.path.join(f"{out}.runs", name), json.dumps(r.to_dict(), indent=2) + "\n")
        per_run.append(
            {"seed": r.seed, "test_accuracy": r.test_accuracy, "stop_epoch": r.stop_epoch,
             "best_epoch": r.best_epoch, "best_val_accuracy": r.best_val_accuracy,
             "final_phi": r.phi_log[-1] if r.phi_log else [],
             "history_file": name}
        )
    payload = {
        "config": _config_dict(args, model_cfg, train_cfg),
        "per_run": per_run,
        "mean": float(accs.mean()),
        "std": float(accs.std()),
    }
    _write_report(out, payload, _per_run_rows(per_run))
    print(f"test accuracy: {accs.mean():.4f} +/- {accs.std():.4f} over {len(reports)} runs")
    print(f"report written to {out}.json / {out}.csv")
    return 0


def cmd_grid_search(args) -> int:
    ds = _load_prepared(args)
    model_cfg = _resolve_model_config(args, ds.features.shape[1], ds.num_classes)
    grid = None
    if args.beta_grid is not None:
        grid = [float(tok) for tok in args.beta_grid.split(",") if tok.strip() != ""]
    train_cfg = _resolve_train_config(args, beta_grid=grid)
    result = grid_search_beta(ds, model_cfg, train_cfg)
    accs = np.array([r.test_accuracy for r in result.best_reports])
    payload = {
        "config": _config_dict(args, model_cfg, train_cfg)
        | {"beta_grid": list(train_cfg.beta_grid)},
        "best_beta": result.best_beta,
        "curve": [row.to_dict() for row in result.rows],
        "per_run": [
            {"seed": r.seed, "test_accuracy": r.test_accuracy, "stop_epoch": r.stop_epoch,
             "best_epoch": r.best_epoch, "best_val_accuracy": r.best_val_accuracy,
             "final_phi": r.phi_log[-1] if r.phi_log else []}
            for r in result.best_reports
        ],
        "mean": float(accs.mean()),
        "std": float(accs.std()),
    }
    out = args.out or "report_grid_search"
    rows = [row.to_dict() for row in result.rows]
    _write_report(out, payload, rows)
    print(f"selected beta = {result.best_beta}")
    print(f"test accuracy at selected beta: {accs.mean():.4f} +/- {accs.std():.4f}")
    print(f"report written to {out}.json / {out}.csv")
    return 0


def cmd_depth_study(args) -> int:
    ds = _load_prepared(args)
    depths = [int(tok) for tok in args.depths.split(",") if tok.strip() != ""]
    train_cfg = _resolve_train_config(args)
    rows = depth_study(
        ds, depths, train_cfg, beta=args.beta, hidden=args.hidden,
        dropout_rate=args.dropout, weight_decay=args.weight_decay,
    )
    model_cfg = _resolve_model_config(args, ds.features.shape[1], ds.num_classes)
    payload = {
        "config": _config_dict(args, model_cfg, train_cfg) | {"depths": depths},
        "rows": [r.to_dict() for r in rows],
    }
    out = args.out or "report_depth_study"
    _write_report(out, payload, [r.to_dict() for r in rows])
    for r in rows:
        print(f"depth {r.depth} {r.model}: {r.mean_test_accuracy:.4f} +/- {r.std_test_accuracy:.4f}")
    print(f"report written to {out}.json / {out}.csv")
    return 0


def _model_confidence(ds: Dataset, model_cfg, train_cfg, seed: int) -> ConfidenceTable:
    state, _ = train(ds, model_cfg, train_cfg, seed)
    ng = normalize(ds.graph)
    yhat, _ = forward(state, ng, ds.features, training=False)
    return ConfidenceTable(yhat, ConfidenceSource.MODEL)


def cmd_augment_eval(args) -> int:
    if args.train_fraction is None:
        raise ValueError("augment-eval requires --train-fraction")
    ds = _load_prepared(args)
    model_cfg = _resolve_model_config(args, ds.features.shape[1], ds.num_classes)
    train_cfg = _resolve_train_config(args)
    methods = ["co", "self", "union", "intersection"] if args.augment == "all" else [args.augment]

    results: dict[str, list[float]] = {"plain": []}
    for m in methods:
        results[m] = []
    ng = normalize(ds.graph)

    for run in range(train_cfg.runs):
        seed = train_cfg.seed + run
        base = subsample_split(
            ds, args.train_fraction, Rng(seed).spawn("split"),
            val_size=train_cfg.resample_val_size, test_size=train_cfg.resample_test_size,
        )
        single = TrainConfig(
            learning_rate=train_cfg.learning_rate, max_epochs=train_cfg.max_epochs,
            patience=train_cfg.patience, runs=1, seed=seed,
        )
        _, plain_report = train(base, model_cfg, single, seed, ng=ng)
        results["plain"].append(plain_report.test_accuracy)

        additions = args.additions_per_class
        if additions is None:
            additions = max(1, round(2 * len(base.train) / ds.num_classes))

        expansions: dict[str, LabelExpansion] = {}
        if {"co", "union", "intersection"} & set(methods):
            conf = parw_confidence(ng, base.labels, base.train, args.walk_lambda, ds.num_classes)
            expansions["co"] = expand_labels(conf, base.labels, base.train, additions)
        if {"self", "union", "intersection"} & set(methods):
            conf = _model_confidence(base, model_cfg, single, seed)
            expansions["self"] = expand_labels(conf, base.labels, base.train, additions)
        if "union" in methods:
            expansions["union"] = combine(expansions["co"], expansions["self"], CombineMode.UNION)
        if "intersection" in methods:
            expansions["intersection"] = combine(expansions["co"], expansions["self"], CombineMode.INTERSECTION)

        for m in methods:
            exp = expansions[m]
            aug_ds = Dataset(
                name=base.name, graph=base.graph, features=base.features,
                labels=exp.labels, train=exp.mask, val=base.val, test=base.test,
                num_classes=base.num_classes,
            )
            _, rep = train(aug_ds, model_cfg, single, seed, ng=ng)
            results[m].append(rep.test_accuracy)

    payload = {
        "config": _config_dict(args, model_cfg, train_cfg) | {
            "augment": methods, "walk_lambda": args.walk_lambda,
            "additions_per_class": args.additions_per_class,
        },
        "methods": {
            name: {"accuracies": vals, "mean": float(np.mean(vals)), "std": float(np.std(vals))}
            for name, vals in results.items()
        },
    }
    out = args.out or "report_augment_eval"
    rows = [
        {"method": name, "mean": float(np.mean(vals)), "std": float(np.std(vals))}
        for name, vals in results.items()
    ]
    _write_report(out, payload, rows)
    for row in rows:
        print(f"{row['method']}: {row['mean']:.4f} +/- {row['std']:.4f}")
    print(f"report written to {out}.json / {out}.csv")
    return 0


def cmd_knn_build(args) -> int:
    expected = args.n * args.f * 4
    actual = os.path.getsize(args.features)
    if actual != expected:
        raise DataFormatError(
            f"{args.features}: expected {expected} bytes for {args.n}x{args.f} float32, found {actual}"
        )
    raw = np.fromfile(args.features, dtype="<f4").astype(np.float64).reshape(args.n, args.f)
    graph = knn_graph(raw, args.k)

    labels = np.full(args.n, -1, dtype=np.int64)
    if args.labels:
        with open(args.labels, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    node, cls = line.split("\t")
                    labels[int(node)] = int(cls)
    num_classes = args.num_classes
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.max() >= 0 else 1

    splits = {"train": [], "val": [], "test": []}
    if args.splits:
        with open(args.splits, encoding="utf-8") as fh:
            splits = json.load(fh)

    ds = Dataset(
        name=args.name, graph=graph, features=raw, labels=labels,
        train=np.asarray(splits["train"], dtype=np.int64),
        val=np.asarray(splits["val"], dtype=np.int64),
        test=np.asarray(splits["test"], dtype=np.int64),
        num_classes=num_classes,
    )
    save_dataset(ds, args.out)
    print(f"dataset written to {args.out} (n={args.n}, F={args.f}, k={args.k}, edges={graph.num_edges})")
    return 0


def _read_accuracy_file(path: str) -> AccuracySample:
    values: list[float] = []
    with open(path, encoding="utf-8", newline="") as fh:
        sample = fh.read()
    lines = [ln for ln in sample.splitlines() if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty accuracy file")
    reader = csv.reader(io.StringIO("\n".join(lines)))
    rows = list(reader)
    header = [cell.strip().lower() for cell in rows[0]]
    if "test_accuracy" in header:
        col = header.index("test_accuracy")
        for row in rows[1:]:
            values.append(float(row[col]))
    else:
        for row in rows:
            try:
                values.append(float(row[0]))
            except ValueError as exc:
                raise DataFormatError(f"{path}: not a number: {row[0]!r}") from exc
    name = os.path.splitext(os.path.basename(path))[0]
    return AccuracySample(name, tuple(values))


def cmd_anova(args) -> int:
    groups = [_read_accuracy_file(path) for path in args.inputs]
    f_stat, p_value = one_way_anova(groups)
    payload = {
        "config": {"command": "anova", "inputs": list(args.inputs)},
        "groups": [
            {"method": g.method, "n": len(g.values), "mean": float(np.mean(g.values)),
             "std": float(np.std(g.values))}
            for g in groups
        ],
        "F": f_stat,
        "p": p_value,
    }
    out = args.out or "report_anova"
    _write_report(out, payload, payload["groups"])
    print(f"F = {f_stat:.6g}, p = {p_value:.6g}")
    print(f"report written to {out}.json / {out}.csv")
    return 0


def cmd_export_embeddings(args) -> int:
    ds = _load_prepared(args)
    model_cfg = _resolve_model_config(args, ds.features.shape[1], ds.num_classes)
    train_cfg = _resolve_train_config(args)
    state, report = train(ds, model_cfg, train_cfg, train_cfg.seed)
    ng = normalize(ds.graph)
    _, cache = forward(state, ng, ds.features, training=False)
    hidden = np.maximum(cache.preacts[0], 0.0)
    out = args.out or "embeddings.csv"
    _atomic_write_text(out, _embeddings_csv(hidden))
    print(f"first-layer activations ({hidden.shape[0]}x{hidden.shape[1]}) written to {out}")
    print(f"model test accuracy: {report.test_accuracy:.4f}")
    return 0


def _embeddings_csv(hidden: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node"] + [f"dim{j}" for j in range(hidden.shape[1])])
    for i, row in enumerate(hidden):
        writer.writerow([i] + [repr(float(v)) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# report writing


def _per_run_rows(per_run: list[dict]) -> list[dict]:
    return [
        {k: v for k, v in row.items() if k not in ("final_phi", "history_file")}
        for row in per_run
    ]


def _atomic_write_text(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_report(prefix: str, payload: dict, rows: list[dict]) -> None:
    _atomic_write_text(prefix + ".json", json.dumps(payload, indent=2) + "\n")
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    _atomic_write_text(prefix + ".csv", buf.getvalue())


if __name__ == "__main__":
    sys.exit(main())
