/**
 * Euclidean k-nearest-neighbor graph, identical in rule to the training
 * library: each node links to its k nearest other nodes (distance ties
 * broken by the smaller candidate index), directed lists merged into an
 * undirected unit-weight edge set.
 */

export interface UndirectedEdge {
  src: number;
  dst: number;
}

export function knnEdges(features: Float64Array, n: number, dim: number, k: number): UndirectedEdge[] {
  if (k < 1) throw new Error(`k must be positive, got ${k}`);
  if (k >= n) throw new Error(`k=${k} must be smaller than the number of points n=${n}`);
  for (let i = 0; i < features.length; i++) {
    if (!Number.isFinite(features[i])) throw new Error("features contain non-finite values");
  }

  const pairs = new Set<number>();
  const bestIdx = new Int32Array(k);
  const bestDist = new Float64Array(k);

  for (let i = 0; i < n; i++) {
    let filled = 0;
    const base = i * dim;
    for (let j = 0; j < n; j++) {
      if (j === i) continue;
      let d = 0;
      const other = j * dim;
      for (let t = 0; t < dim; t++) {
        const diff = features[base + t] - features[other + t];
        d += diff * diff;
      }
      // insertion into the k-best list; strict < keeps earlier (smaller)
      // indices on ties because j increases monotonically
      if (filled < k) {
        let pos = filled++;
        while (pos > 0 && bestDist[pos - 1] > d) {
          bestDist[pos] = bestDist[pos - 1];
          bestIdx[pos] = bestIdx[pos - 1];
          pos--;
        }
        bestDist[pos] = d;
        bestIdx[pos] = j;
      } else if (d < bestDist[k - 1]) {
        let pos = k - 1;
        while (pos > 0 && bestDist[pos - 1] > d) {
          bestDist[pos] = bestDist[pos - 1];
          bestIdx[pos] = bestIdx[pos - 1];
          pos--;
        }
        bestDist[pos] = d;
        bestIdx[pos] = j;
      }
    }
    for (let t = 0; t < k; t++) {
      const j = bestIdx[t];
      pairs.add(i < j ? i * n + j : j * n + i);
    }
  }

  const edges: UndirectedEdge[] = [];
  for (const key of pairs) {
    edges.push({ src: Math.floor(key / n), dst: key % n });
  }
  edges.sort((a, b) => a.src - b.src || a.dst - b.dst);
  return edges;
}
