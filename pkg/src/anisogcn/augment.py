"""Training-set expansion for low-label-rate regimes.

Co-training confidence comes from a partially absorbing random walk,
realized as the absorption-regularized Laplacian system
(lambda*I + L) P = lambda * Y_onehot solved column by column with
conjugate gradients. Self-training confidence is the trained model's own
softmax output. `combine` merges two expansions by union or intersection.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import NormalizedGraph


class CgConvergenceError(RuntimeError):
    """Conjugate gradients missed the residual target within the budget."""


class ConfidenceSource(enum.Enum):
    RANDOM_WALK = "random-walk"
    MODEL = "model"


@dataclass(frozen=True)
class ConfidenceTable:
    """Per-node, per-class confidence scores."""

    scores: np.ndarray
    source: ConfidenceSource

    def __post_init__(self):
        if not np.all(np.isfinite(self.scores)) or np.any(self.scores < 0):
            raise ValueError("confidence scores must be finite and nonnegative")


@dataclass(frozen=True)
class LabelExpansion:
    """An expanded training set: indices, labels, and the base it grew from."""

    mask: np.ndarray
    labels: np.ndarray
    base_mask: np.ndarray

    def added(self) -> np.ndarray:
        return np.setdiff1d(self.mask, self.base_mask)


def parw_confidence(
    ng: NormalizedGraph,
    labels: np.ndarray,
    train_mask: np.ndarray,
    lam: float = 1.0,
    num_classes: int | None = None,
    tol: float = 1e-8,
    max_iter: int | None = None,
) -> ConfidenceTable:
    """Absorbing-random-walk class confidence for every node.

    Solves (lam*I + L) p_c = lam * y_c for each class indicator y_c. The
    operator is symmetric positive definite, so plain CG converges; the
    relative residual target is 1e-8 with an iteration budget of 10n
    (overridable for testing the failure report).
    """
    if lam <= 0:
        raise ValueError("absorption strength lambda must be positive")
    train_mask = np.asarray(train_mask, dtype=np.int64)
    if train_mask.size == 0:
        raise ValueError("train mask is empty")
    labels = np.asarray(labels, dtype=np.int64)
    n = ng.n
    if num_classes is None:
        num_classes = int(labels[train_mask].max()) + 1

    scores = np.zeros((n, num_classes))
    lap = ng.laplacian
    if max_iter is None:
        max_iter = 10 * n

    def apply(v: np.ndarray) -> np.ndarray:
        return lam * v + lap.matmul_dense(v)

    for c in range(num_classes):
        b = np.zeros(n)
        b[train_mask[labels[train_mask] == c]] = lam
        b_norm = float(np.linalg.norm(b))
        if b_norm == 0.0:
            continue
        x = np.zeros(n)
        r = b.copy()
        p = r.copy()
        rs = float(r @ r)
        converged = rs**0.5 / b_norm <= tol
        for _ in range(max_iter):
            if converged:
                break
            ap = apply(p)
            alpha = rs / float(p @ ap)
            x += alpha * p
            r -= alpha * ap
            rs_new = float(r @ r)
            if rs_new**0.5 / b_norm <= tol:
                converged = True
                break
            p = r + (rs_new / rs) * p
            rs = rs_new
        if not converged:
            raise CgConvergenceError(
                f"class {c}: residual {rs**0.5 / b_norm:.3e} above {tol} after {max_iter} iterations"
            )
        scores[:, c] = x
    # absorbed mass can dip microscopically below zero from rounding
    np.clip(scores, 0.0, None, out=scores)
    return ConfidenceTable(scores, ConfidenceSource.RANDOM_WALK)


def expand_labels(
    conf: ConfidenceTable,
    labels: np.ndarray,
    train_mask: np.ndarray,
    additions_per_class: int,
) -> LabelExpansion:
    """Add the most confident unlabeled nodes per class as pseudo-labels.

    Confidence ties break to the smaller node index. A node selected for
    several classes is assigned its row-argmax class (ties to the smaller
    class index). Existing labels are never overwritten.
    """
    if additions_per_class < 1:
        raise ValueError("additions_per_class must be at least 1")
    train_mask = np.asarray(train_mask, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64).copy()
    n, num_classes = conf.scores.shape

    unlabeled = np.setdiff1d(np.arange(n, dtype=np.int64), train_mask)
    if unlabeled.size == 0:
        warnings.warn("no unlabeled nodes available; training set unchanged")
        return LabelExpansion(np.sort(train_mask), labels, np.sort(train_mask))
    if unlabeled.size < additions_per_class * num_classes:
        warnings.warn(
            f"requested {additions_per_class * num_classes} additions but only "
            f"{unlabeled.size} unlabeled nodes exist; adding what is available"
        )

    winners: dict[int, int] = {}
    for c in range(num_classes):
        col = conf.scores[unlabeled, c]
        # sort by descending confidence, index-ascending among ties
        order = np.lexsort((unlabeled, -col))
        for node in unlabeled[order[:additions_per_class]]:
            node = int(node)
            if node in winners and winners[node] != c:
                winners[node] = int(np.argmax(conf.scores[node]))
            else:
                winners[node] = c

    added = np.array(sorted(winners), dtype=np.int64)
    for node in added:
        labels[node] = winners[int(node)]
    mask = np.sort(np.concatenate([train_mask, added]))
    return LabelExpansion(mask, labels, np.sort(train_mask))


class CombineMode(enum.Enum):
    UNION = "union"
    INTERSECTION = "intersection"


def combine(a: LabelExpansion, b: LabelExpansion, mode: CombineMode) -> LabelExpansion:
    """Merge two expansions grown from the same base training set.

    Union keeps every added node; on label conflicts the first argument
    (by convention the random-walk/co-training expansion) wins.
    Intersection keeps only nodes both expansions added with the same
    label.
    """
    if not np.array_equal(a.base_mask, b.base_mask):
        raise ValueError("expansions were not built from the same base training set")
    base = a.base_mask
    added_a = {int(i): int(a.labels[i]) for i in a.added()}
    added_b = {int(i): int(b.labels[i]) for i in b.added()}

    if mode is CombineMode.UNION:
        merged = dict(added_b)
        merged.update(added_a)  # a wins conflicts
    else:
        merged = {
            node: lab for node, lab in added_a.items() if added_b.get(node) == lab
        }

    added = np.array(sorted(merged), dtype=np.int64)
    labels = a.labels.copy()
    for node in added:
        labels[node] = merged[int(node)]
    mask = np.sort(np.concatenate([base, added]))
    return LabelExpansion(mask, labels, base.copy())
