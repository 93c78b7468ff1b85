"""Compressed-row sparse matrices.

Only what the graph operators need: construction from coordinate triplets,
row sums, entry lookup, densification, and a cached scipy view used for the
sparse-times-dense product. Instances are immutable after construction; the
backing arrays are marked read-only.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as _sp


class CsrMatrix:
    """Square or rectangular sparse matrix in compressed-row layout.

    Fields follow the usual CSR convention: `indptr` has one offset per row
    plus a terminator, `indices` holds column indices sorted strictly
    ascending within each row, `data` the matching float64 values.
    """

    __slots__ = ("shape", "indptr", "indices", "data", "_scipy", "_rows")

    def __init__(self, shape: tuple[int, int], indptr: np.ndarray, indices: np.ndarray, data: np.ndarray):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.data):
            arr.setflags(write=False)
        self._scipy = None
        self._rows = None

    @classmethod
    def from_coo(cls, shape: tuple[int, int], rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> "CsrMatrix":
        """Build from coordinate triplets; duplicates are the caller's bug."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(shape, indptr, cols, vals)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def row_entry_counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry (cached)."""
        if self._rows is None:
            self._rows = np.repeat(np.arange(self.shape[0], dtype=np.int64), self.row_entry_counts())
            self._rows.setflags(write=False)
        return self._rows

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.shape[0])
        np.add.at(out, self.row_indices(), self.data)
        return out

    def get(self, i: int, j: int) -> float:
        """Entry (i, j), or 0.0 if not stored."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = lo + np.searchsorted(self.indices[lo:hi], j)
        if pos < hi and self.indices[pos] == j:
            return float(self.data[pos])
        return 0.0

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.row_indices(), self.indices] = self.data
        return out

    def as_scipy(self) -> _sp.csr_matrix:
        if self._scipy is None:
            self._scipy = _sp.csr_matrix(
                (self.data, self.indices.astype(np.int32), self.indptr.astype(np.int32)),
                shape=self.shape,
            )
        return self._scipy

    def matmul_dense(self, dense: np.ndarray) -> np.ndarray:
        """Product with a dense matrix or vector.

        Accumulation runs per row in ascending column order (scipy's CSR
        kernel), so results are deterministic for a fixed input.
        """
        out = self.as_scipy() @ dense
        return np.ascontiguousarray(out, dtype=np.float64)

    def scale_entries(self, factors: np.ndarray) -> "CsrMatrix":
        """New matrix with per-entry data multiplied by `factors`."""
        return CsrMatrix(self.shape, self.indptr, self.indices, self.data * factors)

    def __repr__(self) -> str:
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"
