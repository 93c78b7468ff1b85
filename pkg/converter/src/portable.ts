/**
 * Writer for the portable dataset directory format consumed by the
 * training library:
 *
 *   meta.json     {"name", "num_nodes", "num_features", "num_classes"}
 *   edges.tsv     src<TAB>dst<TAB>weight, 0-indexed, src < dst,
 *                 ordered by (src, dst), no self-loops
 *   features.bin  little-endian float32, row-major
 *   labels.tsv    node<TAB>class per labeled node, sorted by node
 *   splits.json   {"train", "val", "test"}, sorted ascending
 *
 * edges.tsv must match the training library's writer byte for byte, so the
 * weight format is pinned: integral values as "<int>.0", anything else as
 * the shortest round-trip decimal.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import type { UndirectedEdge } from "./knn.js";

export interface PortableDataset {
  name: string;
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  edges: Array<UndirectedEdge & { weight?: number }>;
  /** row-major, numNodes * numFeatures, already in final (float64) values */
  features: Float64Array;
  /** -1 for unlabeled */
  labels: Int32Array;
  train: number[];
  val: number[];
  test: number[];
}

export function formatWeight(w: number): string {
  if (Number.isInteger(w) && Math.abs(w) < 1e16) return `${w}.0`;
  return String(w);
}

export function writePortableDataset(ds: PortableDataset, outDir: string): void {
  validate(ds);
  fs.mkdirSync(outDir, { recursive: true });

  const meta =
    JSON.stringify(
      {
        name: ds.name,
        num_nodes: ds.numNodes,
        num_features: ds.numFeatures,
        num_classes: ds.numClasses,
      },
      null,
      2,
    ) + "\n";
  fs.writeFileSync(path.join(outDir, "meta.json"), meta);

  const edgeLines: string[] = [];
  for (const e of ds.edges) {
    edgeLines.push(`${e.src}\t${e.dst}\t${formatWeight(e.weight ?? 1.0)}\n`);
  }
  fs.writeFileSync(path.join(outDir, "edges.tsv"), edgeLines.join(""));

  const buf = Buffer.allocUnsafe(ds.features.length * 4);
  for (let i = 0; i < ds.features.length; i++) buf.writeFloatLE(Math.fround(ds.features[i]), i * 4);
  fs.writeFileSync(path.join(outDir, "features.bin"), buf);

  const labelLines: string[] = [];
  for (let node = 0; node < ds.numNodes; node++) {
    if (ds.labels[node] >= 0) labelLines.push(`${node}\t${ds.labels[node]}\n`);
  }
  fs.writeFileSync(path.join(outDir, "labels.tsv"), labelLines.join(""));

  const splits = JSON.stringify({
    train: [...ds.train].sort((a, b) => a - b),
    val: [...ds.val].sort((a, b) => a - b),
    test: [...ds.test].sort((a, b) => a - b),
  });
  fs.writeFileSync(path.join(outDir, "splits.json"), splits + "\n");
}

function validate(ds: PortableDataset): void {
  if (ds.features.length !== ds.numNodes * ds.numFeatures) {
    throw new Error(
      `feature buffer has ${ds.features.length} values, expected ${ds.numNodes * ds.numFeatures}`,
    );
  }
  if (ds.labels.length !== ds.numNodes) {
    throw new Error("labels must cover every node (-1 for unlabeled)");
  }
  let prevSrc = -1;
  let prevDst = -1;
  for (const e of ds.edges) {
    if (e.src >= e.dst) throw new Error(`edge (${e.src}, ${e.dst}) violates src < dst`);
    if (e.dst >= ds.numNodes) throw new Error(`edge (${e.src}, ${e.dst}) out of range`);
    if (e.src < prevSrc || (e.src === prevSrc && e.dst <= prevDst)) {
      throw new Error("edges must be strictly ordered by (src, dst)");
    }
    prevSrc = e.src;
    prevDst = e.dst;
  }
  const seen = new Set<number>();
  for (const [splitName, split] of [
    ["train", ds.train],
    ["val", ds.val],
    ["test", ds.test],
  ] as const) {
    for (const idx of split) {
      if (idx < 0 || idx >= ds.numNodes) throw new Error(`${splitName} index ${idx} out of range`);
      if (seen.has(idx)) throw new Error(`splits overlap at node ${idx}`);
      seen.add(idx);
      if (ds.labels[idx] < 0) throw new Error(`${splitName} node ${idx} is unlabeled`);
      if (ds.labels[idx] >= ds.numClasses) throw new Error(`label out of range at node ${idx}`);
    }
  }
}
