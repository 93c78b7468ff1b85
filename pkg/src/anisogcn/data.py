"""Portable on-disk dataset format: loading, saving, splits.

A dataset directory contains five files:

* ``meta.json``     {"name", "num_nodes", "num_features", "num_classes"}
* ``edges.tsv``     ``src<TAB>dst<TAB>weight`` per line, 0-indexed,
                    src < dst, ordered by (src, dst), no self-loops.
* ``features.bin``  little-endian float32, row-major, exactly
                    num_nodes * num_features values (widened on load).
* ``labels.tsv``    ``node<TAB>class`` per labeled node, sorted by node.
* ``splits.json``   {"train": [...], "val": [...], "test": [...]},
                    each sorted ascending, pairwise disjoint.

Loading validates every structural invariant and reports the offending
file (and line, where applicable).
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph, build_graph
from .rng import Rng


class DataFormatError(ValueError):
    """A dataset file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Dataset:
    """Graph, features, labels, and train/val/test index sets."""

    name: str
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    num_classes: int

    @property
    def n(self) -> int:
        return self.graph.n

    def validate(self) -> "Dataset":
        n = self.graph.n
        if self.features.shape[0] != n:
            raise DataFormatError(f"features have {self.features.shape[0]} rows for {n} nodes")
        if not np.all(np.isfinite(self.features)):
            raise DataFormatError("features contain non-finite values")
        if self.labels.shape != (n,):
            raise DataFormatError("labels must be one integer per node")
        labeled = self.labels[self.labels >= 0]
        if labeled.size and int(labeled.max()) >= self.num_classes:
            raise DataFormatError("label exceeds num_classes")
        seen: set[int] = set()
        for split_name, split in (("train", self.train), ("val", self.val), ("test", self.test)):
            as_set = set(int(i) for i in split)
            if len(as_set) != len(split):
                raise DataFormatError(f"{split_name} split contains duplicates")
            if as_set & seen:
                raise DataFormatError(f"{split_name} split overlaps another split")
            seen |= as_set
            if split.size and (split.min() < 0 or split.max() >= n):
                raise DataFormatError(f"{split_name} split index out of range")
            if split.size and np.any(self.labels[split] < 0):
                raise DataFormatError(f"{split_name} split contains unlabeled nodes")
        return self


def load_dataset(path: str) -> Dataset:
    """Read and validate a portable dataset directory."""
    meta_path = os.path.join(path, "meta.json")
    for required in ("meta.json", "edges.tsv", "features.bin", "labels.tsv", "splits.json"):
        if not os.path.exists(os.path.join(path, required)):
            raise DataFormatError(f"missing dataset file: {os.path.join(path, required)}")

    with open(meta_path, encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{meta_path}: invalid JSON ({exc})") from exc
    for key in ("name", "num_nodes", "num_features", "num_classes"):
        if key not in meta:
            raise DataFormatError(f"{meta_path}: missing key '{key}'")
    n = int(meta["num_nodes"])
    num_features = int(meta["num_features"])
    num_classes = int(meta["num_classes"])

    edges = _read_edges(os.path.join(path, "edges.tsv"), n)
    graph = build_graph(n, edges)

    feat_path = os.path.join(path, "features.bin")
    expected_bytes = n * num_features * 4
    actual_bytes = os.path.getsize(feat_path)
    if actual_bytes != expected_bytes:
        raise DataFormatError(
            f"{feat_path}: expected {expected_bytes} bytes for {n}x{num_features} float32, found {actual_bytes}"
        )
    raw = np.fromfile(feat_path, dtype="<f4")
    features = raw.astype(np.float64).reshape(n, num_features)

    labels = _read_labels(os.path.join(path, "labels.tsv"), n, num_classes)
    splits = _read_splits(os.path.join(path, "splits.json"), n)

    return Dataset(
        name=str(meta["name"]),
        graph=graph,
        features=features,
        labels=labels,
        train=splits["train"],
        val=splits["val"],
        test=splits["test"],
        num_classes=num_classes,
    ).validate()


def save_dataset(ds: Dataset, path: str) -> None:
    """Write a dataset directory in the portable format."""
    os.makedirs(path, exist_ok=True)
    ds.validate()

    meta = {
        "name": ds.name,
        "num_nodes": ds.n,
        "num_features": int(ds.features.shape[1]),
        "num_classes": ds.num_classes,
    }
    with open(os.path.join(path, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")

    adj = ds.graph.adjacency
    rows = adj.row_indices()
    with open(os.path.join(path, "edges.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for i, j, w in zip(rows, adj.indices, adj.data):
            if i < j:  # each undirected edge once; CSR order is already (src, dst)
                fh.write(f"{i}\t{j}\t{_format_weight(float(w))}\n")

    ds.features.astype("<f4").tofile(os.path.join(path, "features.bin"))

    with open(os.path.join(path, "labels.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for node in range(ds.n):
            if ds.labels[node] >= 0:
                fh.write(f"{node}\t{int(ds.labels[node])}\n")

    splits = {
        "train": [int(i) for i in np.sort(ds.train)],
        "val": [int(i) for i in np.sort(ds.val)],
        "test": [int(i) for i in np.sort(ds.test)],
    }
    with open(os.path.join(path, "splits.json"), "w", encoding="utf-8") as fh:
        json.dump(splits, fh)
        fh.write("\n")


def row_normalize(x: np.ndarray) -> np.ndarray:
    """Divide each row by its 1-norm; zero rows pass through unchanged."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.abs(x).sum(axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return x / safe


def label_rate(ds: Dataset) -> float:
    """Fraction of nodes whose labels are used for training."""
    return len(ds.train) / ds.n


def subsample_split(
    ds: Dataset,
    train_fraction: float,
    rng: Rng,
    val_size: int = 500,
    test_size: int = 1000,
) -> Dataset:
    """Resample splits at a given training fraction, stratified by class.

    round(train_fraction * n) training nodes are allocated across classes
    proportionally (every class gets at least one when the budget allows).
    Validation and test sets are drawn from the remaining labeled nodes.
    """
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must be in (0, 1]")
    labels = ds.labels
    total = int(round(train_fraction * ds.n))
    total = max(total, 1)

    class_members = [np.flatnonzero(labels == c) for c in range(ds.num_classes)]
    present = [c for c in range(ds.num_classes) if len(class_members[c]) > 0]
    labeled_total = sum(len(class_members[c]) for c in present)
    if total > labeled_total:
        raise ValueError(f"cannot draw {total} training nodes from {labeled_total} labeled nodes")
    if total < len(present):
        warnings.warn(
            f"training budget {total} cannot cover all {len(present)} classes; some will be absent"
        )

    quotas = _proportional_quotas(
        total, {c: len(class_members[c]) for c in present}, minimum=1 if total >= len(present) else 0
    )

    train_parts = []
    for c in present:
        members = class_members[c]
        picked = rng.shuffled(members)[: quotas[c]]
        train_parts.append(picked)
    train = np.sort(np.concatenate(train_parts)).astype(np.int64)

    remaining = np.setdiff1d(np.flatnonzero(labels >= 0), train)
    order = rng.permutation(len(remaining))
    shuffled = remaining[order]
    if len(remaining) < val_size + test_size:
        # short pool: keep the requested val:test proportion instead of
        # letting the validation set swallow everything
        scaled_val = int(round(len(remaining) * val_size / (val_size + test_size)))
        warnings.warn(
            f"only {len(remaining)} labeled nodes remain for val/test "
            f"(requested {val_size}/{test_size}); using "
            f"{scaled_val}/{len(remaining) - scaled_val}"
        )
        val_size, test_size = scaled_val, len(remaining) - scaled_val
    val = np.sort(shuffled[:val_size]).astype(np.int64)
    test = np.sort(shuffled[val_size : val_size + test_size]).astype(np.int64)
    return replace(ds, train=train, val=val, test=test).validate()


def _proportional_quotas(total: int, counts: dict[int, int], minimum: int) -> dict[int, int]:
    """Largest-remainder allocation of `total` across classes, capped by
    availability, with an optional per-class minimum."""
    pool = sum(counts.values())
    raw = {c: total * counts[c] / pool for c in counts}
    quotas = {c: min(int(raw[c]), counts[c]) for c in counts}
    if minimum:
        for c in counts:
            if counts[c] > 0:
                quotas[c] = max(quotas[c], minimum)

    def assigned() -> int:
        return sum(quotas.values())

    # hand out remaining seats by largest fractional part, then take back
    # overshoot from the largest quotas; both orders are deterministic
    remainders = sorted(counts, key=lambda c: (-(raw[c] - int(raw[c])), c))
    idx = 0
    while assigned() < total:
        c = remainders[idx % len(remainders)]
        if quotas[c] < counts[c]:
            quotas[c] += 1
        idx += 1
        if idx > 10 * len(remainders) * (total + 1):
            break
    overshoot_order = sorted(counts, key=lambda c: (-quotas[c], c))
    idx = 0
    while assigned() > total:
        c = overshoot_order[idx % len(overshoot_order)]
        if quotas[c] > minimum:
            quotas[c] -= 1
        idx += 1
    return quotas


def _format_weight(w: float) -> str:
    """Shortest decimal with a forced fractional part for integral values."""
    if w == int(w) and abs(w) < 1e16:
        return f"{int(w)}.0"
    return repr(w)


def _read_edges(path: str, n: int) -> list[tuple[int, int, float]]:
    edges: list[tuple[int, int, float]] = []
    prev: tuple[int, int] | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataFormatError(f"{path}:{lineno}: expected 'src<TAB>dst<TAB>weight'")
            try:
                src, dst, weight = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
            if not 0 <= src < n or not 0 <= dst < n:
                raise DataFormatError(f"{path}:{lineno}: node index out of range")
            if src >= dst:
                raise DataFormatError(f"{path}:{lineno}: edges must satisfy src < dst")
            if prev is not None and (src, dst) <= prev:
                raise DataFormatError(f"{path}:{lineno}: edges must be sorted by (src, dst)")
            if weight <= 0:
                raise DataFormatError(f"{path}:{lineno}: weight must be positive")
            prev = (src, dst)
            edges.append((src, dst, weight))
    return edges


def _read_labels(path: str, n: int, num_classes: int) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    prev = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected 'node<TAB>class'")
            try:
                node, cls = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
            if not 0 <= node < n:
                raise DataFormatError(f"{path}:{lineno}: node index out of range")
            if node <= prev:
                raise DataFormatError(f"{path}:{lineno}: labels must be sorted by node")
            if not 0 <= cls < num_classes:
                raise DataFormatError(f"{path}:{lineno}: class out of range")
            prev = node
            labels[node] = cls
    return labels


def _read_splits(path: str, n: int) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    out: dict[str, np.ndarray] = {}
    for key in ("train", "val", "test"):
        if key not in raw:
            raise DataFormatError(f"{path}: missing split '{key}'")
        arr = np.asarray(raw[key], dtype=np.int64)
        if arr.size and not np.all(arr[1:] > arr[:-1]):
            raise DataFormatError(f"{path}: split '{key}' must be strictly ascending")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise DataFormatError(f"{path}: split '{key}' index out of range")
        out[key] = arr
    return out
