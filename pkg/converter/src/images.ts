/**
 * Image-dataset conversion: stratified per-class sampling, optional raw
 * pixel scaling to [0, 1], k-NN graph construction (same rule as the
 * training library), and a labeled-sample/validation/test split in the
 * proportions used for the image experiments (3000/1000/rest by default
 * for a 10000-image sample).
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { CIFAR_PIXELS, parseCifarBatch } from "./cifar.js";
import { parseIdxImages, parseIdxLabels } from "./idx.js";
import { knnEdges } from "./knn.js";
import { ConversionManifest, hashFile } from "./manifest.js";
import type { PortableDataset } from "./portable.js";
import { writePortableDataset } from "./portable.js";
import { Rng } from "./rng.js";

export interface ImagePool {
  /** row-major float features, count * dim */
  features: Float64Array;
  labels: Uint8Array;
  dim: number;
  count: number;
}

export interface ImageConvertOptions {
  name: string;
  k: number;
  samplePerClass: number;
  seed: number;
  outDir: string;
  trainPerClass?: number;
  valSize?: number;
}

export function poolFromIdx(imagesPath: string, labelsPath: string): ImagePool {
  const images = parseIdxImages(new Uint8Array(fs.readFileSync(imagesPath)));
  const labels = parseIdxLabels(new Uint8Array(fs.readFileSync(labelsPath)));
  if (labels.length !== images.count) {
    throw new Error(`IDX image/label counts disagree: ${images.count} vs ${labels.length}`);
  }
  const dim = images.rows * images.cols;
  const features = new Float64Array(images.count * dim);
  for (let i = 0; i < images.pixels.length; i++) features[i] = images.pixels[i] / 255.0;
  return { features, labels, dim, count: images.count };
}

export function poolFromCifarBatches(batchPaths: string[]): ImagePool {
  const parts = batchPaths.map((p) => parseCifarBatch(new Uint8Array(fs.readFileSync(p))));
  const count = parts.reduce((acc, b) => acc + b.labels.length, 0);
  const labels = new Uint8Array(count);
  const features = new Float64Array(count * CIFAR_PIXELS);
  let offset = 0;
  for (const batch of parts) {
    labels.set(batch.labels, offset);
    for (let i = 0; i < batch.pixels.length; i++) {
      features[offset * CIFAR_PIXELS + i] = batch.pixels[i] / 255.0;
    }
    offset += batch.labels.length;
  }
  return { features, labels, dim: CIFAR_PIXELS, count };
}

/** Precomputed descriptors: little-endian float32 rows + a labels file. */
export function poolFromDescriptors(featuresPath: string, labelsPath: string, dim: number): ImagePool {
  const raw = new Uint8Array(fs.readFileSync(featuresPath));
  if (raw.byteLength % (4 * dim) !== 0) {
    throw new Error(`descriptor file size ${raw.byteLength} is not a multiple of ${4 * dim} bytes`);
  }
  const count = raw.byteLength / (4 * dim);
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  const features = new Float64Array(count * dim);
  for (let i = 0; i < features.length; i++) features[i] = view.getFloat32(i * 4, true);
  const labelText = fs.readFileSync(labelsPath, "utf-8");
  const labels = new Uint8Array(count);
  let seen = 0;
  for (const line of labelText.split("\n")) {
    if (line.trim() === "") continue;
    if (seen >= count) throw new Error("more labels than descriptor rows");
    labels[seen++] = parseInt(line.trim(), 10);
  }
  if (seen !== count) throw new Error(`label count ${seen} disagrees with descriptor rows ${count}`);
  return { features, labels, dim, count };
}

export function convertImagePool(
  pool: ImagePool,
  sources: string[],
  opts: ImageConvertOptions,
): ConversionManifest {
  const numClasses = Math.max(...pool.labels) + 1;
  const rng = new Rng(opts.seed);

  // stratified sample: per class, a seeded shuffle of that class's pool
  const byClass: number[][] = Array.from({ length: numClasses }, () => []);
  for (let i = 0; i < pool.count; i++) byClass[pool.labels[i]].push(i);
  const selected: number[] = [];
  for (let c = 0; c < numClasses; c++) {
    if (byClass[c].length < opts.samplePerClass) {
      throw new Error(
        `class ${c} has ${byClass[c].length} images, fewer than per-class sample ${opts.samplePerClass}`,
      );
    }
    const shuffled = rng.spawn(`sample-class-${c}`).shuffled(byClass[c]);
    selected.push(...shuffled.slice(0, opts.samplePerClass));
  }

  const n = selected.length;
  const features = new Float64Array(n * pool.dim);
  const labels = new Int32Array(n);
  for (let node = 0; node < n; node++) {
    const src = selected[node];
    features.set(pool.features.subarray(src * pool.dim, (src + 1) * pool.dim), node * pool.dim);
    labels[node] = pool.labels[src];
  }

  const edges = knnEdges(features, n, pool.dim, opts.k);

  // labeled sample stratified per class; validation from the remainder
  const trainPerClass = opts.trainPerClass ?? Math.max(1, Math.round(0.3 * opts.samplePerClass));
  const valSize = opts.valSize ?? Math.max(1, Math.round(0.1 * n));
  const train: number[] = [];
  for (let c = 0; c < numClasses; c++) {
    const members: number[] = [];
    for (let node = 0; node < n; node++) if (labels[node] === c) members.push(node);
    const shuffled = rng.spawn(`train-class-${c}`).shuffled(members);
    train.push(...shuffled.slice(0, Math.min(trainPerClass, members.length)));
  }
  const trainSet = new Set(train);
  const rest: number[] = [];
  for (let node = 0; node < n; node++) if (!trainSet.has(node)) rest.push(node);
  const restShuffled = rng.spawn("val-test").shuffled(rest);
  const val = restShuffled.slice(0, valSize);
  const test = restShuffled.slice(valSize);

  const dataset: PortableDataset = {
    name: opts.name,
    numNodes: n,
    numFeatures: pool.dim,
    numClasses,
    edges,
    features,
    labels,
    train,
    val,
    test,
  };
  writePortableDataset(dataset, opts.outDir);

  return {
    name: opts.name,
    sources: sources.map((p) => ({ path: p, sha256: hashFile(p) })),
    output: opts.outDir,
    counts: { nodes: n, edges: edges.length, features: pool.dim, classes: numClasses },
    warnings: [],
  };
}
