/**
 * Conversion of the legacy serialized citation distribution
 * (Cora/Citeseer/Pubmed) to the portable dataset format.
 *
 * The upstream layout ships eight files per dataset name:
 *   ind.<name>.x      CSR float32: labeled-training-node features
 *   ind.<name>.y      int one-hot labels matching x
 *   ind.<name>.tx     CSR float32: test-node features (in test.index order)
 *   ind.<name>.ty     one-hot labels matching tx
 *   ind.<name>.allx   CSR: features of all non-test nodes (x is a prefix)
 *   ind.<name>.ally   one-hot labels matching allx
 *   ind.<name>.graph  dict: node -> neighbor list over the full node set
 *   ind.<name>.test.index  shuffled test node ids, one per line
 *
 * The full ordering places the allx nodes first and the test nodes last;
 * test rows arrive shuffled and must be scattered back via test.index.
 * Citeseer's test.index skips a few ids: those nodes exist in the graph
 * but have no features or label (the distribution's isolated nodes); they
 * get zero features, no label, and membership in no split.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { NumpyArray, ScipyCsr, loads } from "./pickle.js";
import type { PortableDataset } from "./portable.js";
import { writePortableDataset } from "./portable.js";
import { ConversionManifest, hashFile } from "./manifest.js";

const UPSTREAM_SUFFIXES = ["x", "y", "tx", "ty", "allx", "ally", "graph", "test.index"] as const;

const VAL_SIZE = 500;

export interface CitationResult {
  manifest: ConversionManifest;
}

export function convertCitation(
  sourceDir: string,
  name: string,
  outDir: string,
  expectedChecksums?: Record<string, string>,
): CitationResult {
  const sources = UPSTREAM_SUFFIXES.map((suffix) => path.join(sourceDir, `ind.${name}.${suffix}`));
  for (const p of sources) {
    if (!fs.existsSync(p)) throw new Error(`missing upstream file: ${p}`);
  }
  const checksums = sources.map((p) => ({ path: p, sha256: hashFile(p) }));
  if (expectedChecksums) {
    for (const { path: p, sha256 } of checksums) {
      const expected = expectedChecksums[path.basename(p)];
      if (expected && expected !== sha256) {
        throw new Error(`checksum mismatch for ${p}: expected ${expected}, found ${sha256}`);
      }
    }
  }

  const read = (suffix: string) => new Uint8Array(fs.readFileSync(path.join(sourceDir, `ind.${name}.${suffix}`)));
  const x = expectCsr(loads(read("x")), "x");
  const y = expectArray(loads(read("y")), "y");
  const tx = expectCsr(loads(read("tx")), "tx");
  const ty = expectArray(loads(read("ty")), "ty");
  const allx = expectCsr(loads(read("allx")), "allx");
  const ally = expectArray(loads(read("ally")), "ally");
  const graph = loads(read("graph"));
  if (!(graph instanceof Map)) throw new Error("graph file did not contain a dict");

  const testIdxReorder = fs
    .readFileSync(path.join(sourceDir, `ind.${name}.test.index`), "utf-8")
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => parseInt(line, 10));
  const testIdxSorted = [...testIdxReorder].sort((a, b) => a - b);

  const numFeatures = allx.shape[1];
  const numClasses = widthOf(ally);
  if (tx.shape[1] !== numFeatures) throw new Error("tx feature width disagrees with allx");
  if (y.shape.length !== 2 || y.shape[1] !== numClasses) {
    throw new Error("y one-hot width disagrees with ally");
  }

  const nAll = allx.shape[0];
  const minTest = testIdxSorted[0];
  const maxTest = testIdxSorted[testIdxSorted.length - 1];
  if (minTest !== nAll) {
    throw new Error(`test indices start at ${minTest}, expected ${nAll} (allx row count)`);
  }
  const n = maxTest + 1;
  const fullRange = maxTest - minTest + 1;

  // Scatter features and labels: position minTest+i initially holds tx row
  // for graph node testIdxReorder[i] when the range is dense; with gaps
  // (Citeseer) the present ids keep their tx rows and the gaps stay zero.
  const features = new Float64Array(n * numFeatures);
  fillCsrRows(features, allx, 0, numFeatures);
  const labelsOneHot = new Float64Array(n * numClasses);
  fillArrayRows(labelsOneHot, ally, 0, numClasses);

  const txRows = tx.toDenseRows();
  const tyRows = rowsOf(ty);
  if (txRows.length !== testIdxReorder.length) {
    throw new Error("tx row count disagrees with test.index");
  }
  for (let i = 0; i < testIdxReorder.length; i++) {
    const node = testIdxReorder[i];
    features.set(txRows[i], node * numFeatures);
    labelsOneHot.set(tyRows[i], node * numClasses);
  }

  const isolated: number[] = [];
  if (testIdxSorted.length < fullRange) {
    const present = new Set(testIdxSorted);
    for (let node = minTest; node <= maxTest; node++) {
      if (!present.has(node)) isolated.push(node);
    }
  }

  // labels: argmax of one-hot; all-zero rows stay unlabeled
  const labels = new Int32Array(n).fill(-1);
  let unlabeled = 0;
  for (let node = 0; node < n; node++) {
    let best = -1;
    let bestVal = 0;
    for (let c = 0; c < numClasses; c++) {
      const v = labelsOneHot[node * numClasses + c];
      if (v > bestVal) {
        bestVal = v;
        best = c;
      }
    }
    if (best >= 0) labels[node] = best;
    else unlabeled++;
  }

  // undirected edge set from the neighbor lists
  const pairKeys = new Set<number>();
  let selfLoops = 0;
  let duplicates = 0;
  for (const [rawNode, rawNeighbors] of graph.entries()) {
    const u = Number(rawNode);
    if (!Array.isArray(rawNeighbors)) throw new Error(`graph entry for node ${u} is not a list`);
    for (const rawV of rawNeighbors) {
      const v = Number(rawV);
      if (u < 0 || v < 0 || u >= n || v >= n) {
        throw new Error(`graph edge (${u}, ${v}) out of range for n=${n}`);
      }
      if (u === v) {
        selfLoops++;
        continue;
      }
      const key = u < v ? u * n + v : v * n + u;
      if (pairKeys.has(key)) duplicates++;
      else pairKeys.add(key);
    }
  }
  const edges = [...pairKeys]
    .map((key) => ({ src: Math.floor(key / n), dst: key % n }))
    .sort((a, b) => a.src - b.src || a.dst - b.dst);

  const train = range(0, y.shape[0]);
  // the upstream recipe takes the next 500 nodes for validation; clamp to
  // the allx region so miniature inputs stay structurally valid
  const val = range(y.shape[0], Math.min(y.shape[0] + VAL_SIZE, nAll));
  const dataset: PortableDataset = {
    name,
    numNodes: n,
    numFeatures,
    numClasses,
    edges,
    features,
    labels,
    train,
    val,
    test: testIdxSorted,
  };
  writePortableDataset(dataset, outDir);

  const warnings: string[] = [];
  if (selfLoops > 0) warnings.push(`dropped ${selfLoops} self-loop entries`);
  if (duplicates > 0) warnings.push(`collapsed ${duplicates} duplicate/reciprocal edge entries`);
  if (isolated.length > 0) {
    warnings.push(`${isolated.length} isolated test-range nodes have zero features and no label`);
  }
  if (unlabeled > 0) warnings.push(`${unlabeled} nodes are unlabeled`);

  const manifest: ConversionManifest = {
    name,
    sources: checksums,
    output: outDir,
    counts: {
      nodes: n,
      edges: edges.length,
      features: numFeatures,
      classes: numClasses,
    },
    warnings,
  };
  return { manifest };
}

function expectCsr(v: unknown, label: string): ScipyCsr {
  if (v instanceof ScipyCsr) return v;
  throw new Error(`${label}: expected a CSR matrix`);
}

function expectArray(v: unknown, label: string): NumpyArray {
  if (v instanceof NumpyArray) return v;
  throw new Error(`${label}: expected an ndarray`);
}

function widthOf(arr: NumpyArray): number {
  if (arr.shape.length !== 2) throw new Error("expected a 2-D one-hot array");
  return arr.shape[1];
}

function rowsOf(arr: NumpyArray): number[][] {
  const flat = arr.toNumbers();
  const [rows, cols] = arr.shape;
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) out.push(flat.slice(r * cols, (r + 1) * cols));
  return out;
}

function fillCsrRows(target: Float64Array, csr: ScipyCsr, startRow: number, width: number): void {
  const data = csr.data.toNumbers();
  const indices = csr.indices.toNumbers();
  const indptr = csr.indptr.toNumbers();
  for (let r = 0; r < csr.shape[0]; r++) {
    const base = (startRow + r) * width;
    for (let k = indptr[r]; k < indptr[r + 1]; k++) target[base + indices[k]] = data[k];
  }
}

function fillArrayRows(target: Float64Array, arr: NumpyArray, startRow: number, width: number): void {
  const flat = arr.toNumbers();
  const rows = arr.shape[0];
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < width; c++) target[(startRow + r) * width + c] = flat[r * width + c];
  }
}

function range(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let i = lo; i < hi; i++) out.push(i);
  return out;
}
