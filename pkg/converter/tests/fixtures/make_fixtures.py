#!/usr/bin/env python3
"""Generate miniature upstream-format fixtures for the converter tests.

Produces three citation-style fixture directories in the legacy serialized
layout (ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}) plus tiny IDX
and CIFAR-batch files:

* planetoid_mini: protocol-2 pickles as a modern Python writes them
  (BINBYTES payloads, dict graph).
* planetoid_iso:  like planetoid_mini but test.index skips one id, the
  isolated-node case of the public Citeseer distribution.
* planetoid_py2:  the same data hand-assembled the way Python 2 pickled it
  (BINSTRING/STRING payloads, numpy.core paths, copy_reg._reconstructor,
  protocol 0 opcodes for the graph), so the parser's legacy paths stay
  covered without the original files.

Ground-truth expectations go to expected.json.
"""

import json
import os
import pickle
import struct
from collections import defaultdict

import numpy as np
import scipy.sparse as sp

HERE = os.path.dirname(os.path.abspath(__file__))

F = 5
C = 3
N_ALL = 8  # nodes 0..7 in allx/ally
N_TEST = 4  # nodes 8..11
N = N_ALL + N_TEST
TEST_INDEX = [10, 8, 11, 9]  # shuffled, as the upstream files are


def dense_rows():
    """Feature rows by FINAL graph node id (the converter must realize this)."""
    rows = np.zeros((N, F), dtype=np.float32)
    for node in range(N):
        rows[node, node % F] = node + 1.0
        rows[node, (node + 2) % F] = 0.5
    return rows


def labels_by_node():
    return np.array([node % C for node in range(N)], dtype=np.int64)


def one_hot(values):
    out = np.zeros((len(values), C), dtype=np.int32)
    out[np.arange(len(values)), values] = 1
    return out


GRAPH_LISTS = {
    0: [1, 2, 8],
    1: [0, 3],
    2: [0, 2, 4],  # contains a self-loop entry (2 -> 2)
    3: [1, 5, 5],  # duplicate entry 3 -> 5
    4: [2, 9],
    5: [3, 6],
    6: [5, 10],
    7: [11, 8],
    8: [0, 7],
    9: [4],
    10: [6],
    11: [7],
}


def expected_edges():
    pairs = set()
    for u, neighbors in GRAPH_LISTS.items():
        for v in neighbors:
            if u != v:
                pairs.add((min(u, v), max(u, v)))
    return sorted(pairs)


def build_objects(test_index):
    """Upstream objects for a given test.index (order defines tx rows)."""
    rows = dense_rows()
    labels = labels_by_node()
    x = sp.csr_matrix(rows[: C], dtype=np.float32)  # labeled train nodes 0..2
    y = one_hot(labels[: C])
    allx = sp.csr_matrix(rows[:N_ALL], dtype=np.float32)
    ally = one_hot(labels[:N_ALL])
    tx = sp.csr_matrix(rows[test_index], dtype=np.float32)
    ty = one_hot(labels[test_index])
    graph = defaultdict(list)
    for u, neighbors in GRAPH_LISTS.items():
        graph[u] = list(neighbors)
    return x, y, tx, ty, allx, ally, graph


def write_pickles(dirname, name, test_index):
    os.makedirs(dirname, exist_ok=True)
    x, y, tx, ty, allx, ally, graph = build_objects(test_index)
    blobs = {
        "x": x, "y": y, "tx": tx, "ty": ty, "allx": allx, "ally": ally, "graph": graph,
    }
    for suffix, obj in blobs.items():
        with open(os.path.join(dirname, f"ind.{name}.{suffix}"), "wb") as fh:
            pickle.dump(obj, fh, protocol=2)
    with open(os.path.join(dirname, f"ind.{name}.test.index"), "w") as fh:
        fh.write("\n".join(str(i) for i in test_index) + "\n")


# --- hand-rolled Python-2-style pickles -------------------------------------

MARK, STOP, REDUCE, BUILD = b"(", b".", b"R", b"b"
EMPTY_DICT, SETITEMS, EMPTY_LIST, APPENDS = b"}", b"u", b"]", b"e"
TUPLE, DICT, LIST, APPEND, SETITEM = b"t", b"d", b"l", b"a", b"s"
NONE = b"N"


def p2_global(module, name):
    return b"c" + module.encode() + b"\n" + name.encode() + b"\n"


def p2_int(value):
    if 0 <= value < 256:
        return b"K" + struct.pack("<B", value)
    return b"J" + struct.pack("<i", value)


def p0_int(value):
    return b"I" + str(value).encode() + b"\n"


def p2_short_binstring(data: bytes):
    assert len(data) < 256
    return b"U" + struct.pack("<B", len(data)) + data


def p2_binstring(data: bytes):
    return b"T" + struct.pack("<i", len(data)) + data


def p0_string(data: bytes):
    body = "".join(
        chr(b) if 32 <= b < 127 and b not in (0x27, 0x5C) else f"\\x{b:02x}"
        for b in data
    )
    return b"S'" + body.encode("latin1") + b"'\n"


def p2_tuple(*items):
    if len(items) == 0:
        return b")"
    if len(items) == 1:
        return items[0] + b"\x85"
    if len(items) == 2:
        return items[0] + items[1] + b"\x86"
    if len(items) == 3:
        return items[0] + items[1] + items[2] + b"\x87"
    return MARK + b"".join(items) + TUPLE


def py2_dtype(descr: str):
    # cnumpy dtype (U<descr> K0 K1 tR (K3 U< N N N J-1 J-1 K0 t b
    return (
        p2_global("numpy", "dtype")
        + p2_tuple(p2_short_binstring(descr.encode()), p2_int(0), p2_int(1))
        + REDUCE
        + p2_tuple(
            p2_int(3),
            p2_short_binstring(b"<"),
            NONE,
            NONE,
            NONE,
            b"J" + struct.pack("<i", -1),
            b"J" + struct.pack("<i", -1),
            p2_int(0),
        )
        + BUILD
    )


def py2_ndarray(arr: np.ndarray, string_style="bin"):
    arr = np.ascontiguousarray(arr)
    descr = {"float32": "f4", "int32": "i4", "int64": "i8"}[arr.dtype.name]
    payload = arr.tobytes()
    data_op = p0_string(payload) if string_style == "text" else p2_binstring(payload)
    shape = p2_tuple(*[p2_int(d) for d in arr.shape])
    return (
        p2_global("numpy.core.multiarray", "_reconstruct")
        + p2_tuple(p2_global("numpy", "ndarray"), p2_tuple(p2_int(0)), p2_short_binstring(b"b"))
        + REDUCE
        + p2_tuple(p2_int(1), shape, py2_dtype(descr), p0_int(0), data_op)
        + BUILD
    )


def py2_csr(mat: sp.csr_matrix):
    state_items = (
        p2_short_binstring(b"_shape") + p2_tuple(p2_int(mat.shape[0]), p2_int(mat.shape[1]))
        + p2_short_binstring(b"data") + py2_ndarray(mat.data.astype(np.float32))
        + p2_short_binstring(b"indices") + py2_ndarray(mat.indices.astype(np.int32))
        + p2_short_binstring(b"indptr") + py2_ndarray(mat.indptr.astype(np.int32))
        + p2_short_binstring(b"maxprint") + p2_int(50)
    )
    return (
        p2_global("copy_reg", "_reconstructor")
        + p2_tuple(
            p2_global("scipy.sparse.csr", "csr_matrix"),
            p2_global("__builtin__", "object"),
            NONE,
        )
        + REDUCE
        + EMPTY_DICT + MARK + state_items + SETITEMS
        + BUILD
    )


def py2_graph(graph):
    # protocol-0 flavored: defaultdict via REDUCE, items via MARK..SETITEMS,
    # neighbor lists via EMPTY_LIST/MARK/APPENDS, ints via INT lines
    body = b""
    for u in sorted(graph):
        neighbors = b"".join(p0_int(v) for v in graph[u])
        body += p0_int(u) + EMPTY_LIST + MARK + neighbors + APPENDS
    return (
        p2_global("collections", "defaultdict")
        + p2_tuple(p2_global("__builtin__", "list"))
        + REDUCE
        + MARK + body + SETITEMS
        + STOP
    )


def write_py2_pickles(dirname, name, test_index):
    os.makedirs(dirname, exist_ok=True)
    x, y, tx, ty, allx, ally, graph = build_objects(test_index)
    proto = b"\x80\x02"
    blobs = {
        "x": proto + py2_csr(x) + STOP,
        "tx": proto + py2_csr(tx) + STOP,
        "allx": proto + py2_csr(allx) + STOP,
        # label arrays with protocol-0 STRING payloads (escape-parser path)
        "y": proto + py2_ndarray(y, string_style="text") + STOP,
        "ty": proto + py2_ndarray(ty, string_style="text") + STOP,
        "ally": proto + py2_ndarray(ally, string_style="text") + STOP,
        "graph": proto + py2_graph(graph),
    }
    for suffix, blob in blobs.items():
        with open(os.path.join(dirname, f"ind.{name}.{suffix}"), "wb") as fh:
            fh.write(blob)
        # every hand-rolled stream must round-trip through Python's own loader
        with open(os.path.join(dirname, f"ind.{name}.{suffix}"), "rb") as fh:
            pickle.load(fh, encoding="latin1")
    with open(os.path.join(dirname, f"ind.{name}.test.index"), "w") as fh:
        fh.write("\n".join(str(i) for i in test_index) + "\n")


# --- image fixtures ----------------------------------------------------------


def write_mnist_mini(dirname):
    os.makedirs(dirname, exist_ok=True)
    rng = np.random.default_rng(7)
    count, rows, cols = 15, 4, 4
    labels = np.array([i % 3 for i in range(count)], dtype=np.uint8)
    pixels = rng.integers(0, 256, size=(count, rows * cols)).astype(np.uint8)
    with open(os.path.join(dirname, "images-idx3-ubyte"), "wb") as fh:
        fh.write(struct.pack(">IIII", 0x803, count, rows, cols))
        fh.write(pixels.tobytes())
    with open(os.path.join(dirname, "labels-idx1-ubyte"), "wb") as fh:
        fh.write(struct.pack(">II", 0x801, count))
        fh.write(labels.tobytes())
    return {"count": count, "rows": rows, "cols": cols, "labels": labels.tolist()}


def write_cifar_mini(dirname):
    os.makedirs(dirname, exist_ok=True)
    rng = np.random.default_rng(8)
    count = 12
    labels = np.array([i % 3 for i in range(count)], dtype=np.uint8)
    records = bytearray()
    for i in range(count):
        records.append(labels[i])
        records.extend(rng.integers(0, 256, size=3072).astype(np.uint8).tobytes())
    with open(os.path.join(dirname, "data_batch_mini.bin"), "wb") as fh:
        fh.write(bytes(records))
    return {"count": count, "labels": labels.tolist()}


def main():
    rows = dense_rows()
    labels = labels_by_node()
    edges = expected_edges()

    write_pickles(os.path.join(HERE, "planetoid_mini"), "mini", TEST_INDEX)
    write_py2_pickles(os.path.join(HERE, "planetoid_py2"), "mini", TEST_INDEX)

    iso_index = [10, 8, 11]  # node 9 missing: the isolated-node case
    write_pickles(os.path.join(HERE, "planetoid_iso"), "iso", iso_index)

    iso_rows = rows.copy()
    iso_rows[9] = 0.0
    iso_labels = labels.copy()
    iso_labels[9] = -1
    iso_edges = edges  # the graph still references node 9

    expected = {
        "mini": {
            "num_nodes": N,
            "num_features": F,
            "num_classes": C,
            "edges": [list(e) for e in edges],
            "features": rows.astype(float).tolist(),
            "labels": labels.tolist(),
            "train": [0, 1, 2],
            "val": [3, 4, 5, 6, 7],
            "test": sorted(TEST_INDEX),
        },
        "iso": {
            "num_nodes": N,
            "num_features": F,
            "num_classes": C,
            "edges": [list(e) for e in iso_edges],
            "features": iso_rows.astype(float).tolist(),
            "labels": iso_labels.tolist(),
            "train": [0, 1, 2],
            "val": [3, 4, 5, 6, 7],
            "test": sorted(iso_index),
            "isolated": [9],
        },
        "mnist": write_mnist_mini(os.path.join(HERE, "mnist_mini")),
        "cifar": write_cifar_mini(os.path.join(HERE, "cifar_mini")),
    }
    with open(os.path.join(HERE, "expected.json"), "w") as fh:
        json.dump(expected, fh, indent=2)
        fh.write("\n")
    print("fixtures written under", HERE)


if __name__ == "__main__":
    main()
