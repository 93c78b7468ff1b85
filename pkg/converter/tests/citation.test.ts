import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";

import { convertCitation } from "../src/citation.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "fixtures");
const expected = JSON.parse(
  fs.readFileSync(path.join(FIXTURES, "expected.json"), "utf-8"),
);

const scratch = fs.mkdtempSync(path.join(os.tmpdir(), "converter-test-"));
afterAll(() => fs.rmSync(scratch, { recursive: true, force: true }));

function readFeatures(dir: string, n: number, f: number): number[][] {
  const buf = fs.readFileSync(path.join(dir, "features.bin"));
  expect(buf.byteLength).toBe(n * f * 4);
  const out: number[][] = [];
  for (let r = 0; r < n; r++) {
    const row: number[] = [];
    for (let c = 0; c < f; c++) row.push(buf.readFloatLE((r * f + c) * 4));
    out.push(row);
  }
  return out;
}

function readEdges(dir: string): number[][] {
  return fs
    .readFileSync(path.join(dir, "edges.tsv"), "utf-8")
    .split("\n")
    .filter((l) => l !== "")
    .map((l) => {
      const [src, dst, w] = l.split("\t");
      expect(w).toBe("1.0");
      return [parseInt(src, 10), parseInt(dst, 10)];
    });
}

function readLabels(dir: string, n: number): number[] {
  const labels = new Array(n).fill(-1);
  for (const line of fs.readFileSync(path.join(dir, "labels.tsv"), "utf-8").split("\n")) {
    if (line === "") continue;
    const [node, cls] = line.split("\t").map((t) => parseInt(t, 10));
    labels[node] = cls;
  }
  return labels;
}

describe.each([
  ["planetoid_mini", "mini"],
  ["planetoid_py2", "mini"],
])("citation conversion from %s", (fixtureDir, name) => {
  const out = path.join(scratch, `${fixtureDir}-out`);
  const { manifest } = convertCitation(path.join(FIXTURES, fixtureDir), name, out);
  const want = expected.mini;

  it("reports the right counts", () => {
    expect(manifest.counts.nodes).toBe(want.num_nodes);
    expect(manifest.counts.features).toBe(want.num_features);
    expect(manifest.counts.classes).toBe(want.num_classes);
    expect(manifest.counts.edges).toBe(want.edges.length);
    expect(manifest.sources.length).toBe(8);
    for (const src of manifest.sources) {
      expect(src.sha256).toMatch(/^[0-9a-f]{64}$/);
    }
  });

  it("undoes the test-index shuffle", () => {
    const rows = readFeatures(out, want.num_nodes, want.num_features);
    expect(rows).toEqual(want.features);
  });

  it("collapses reciprocal edges and drops self-loops with warnings", () => {
    expect(readEdges(out)).toEqual(want.edges);
    expect(manifest.warnings.some((w) => w.includes("self-loop"))).toBe(true);
    expect(manifest.warnings.some((w) => w.includes("duplicate"))).toBe(true);
  });

  it("writes argmax labels and the standard splits", () => {
    expect(readLabels(out, want.num_nodes)).toEqual(want.labels);
    const splits = JSON.parse(fs.readFileSync(path.join(out, "splits.json"), "utf-8"));
    expect(splits.train).toEqual(want.train);
    expect(splits.val).toEqual(want.val);
    expect(splits.test).toEqual(want.test);
  });
});

describe("isolated-node handling (citeseer-style gap)", () => {
  const out = path.join(scratch, "iso-out");
  const { manifest } = convertCitation(path.join(FIXTURES, "planetoid_iso"), "iso", out);
  const want = expected.iso;

  it("zero-fills the missing node and leaves it unlabeled", () => {
    const rows = readFeatures(out, want.num_nodes, want.num_features);
    expect(rows).toEqual(want.features);
    expect(readLabels(out, want.num_nodes)).toEqual(want.labels);
  });

  it("keeps the missing node out of every split", () => {
    const splits = JSON.parse(fs.readFileSync(path.join(out, "splits.json"), "utf-8"));
    expect(splits.test).toEqual(want.test);
    for (const split of [splits.train, splits.val, splits.test]) {
      expect(split).not.toContain(9);
    }
  });

  it("warns about the isolated node", () => {
    expect(manifest.warnings.some((w) => w.includes("isolated"))).toBe(true);
  });
});

it("conversion is byte-deterministic", () => {
  const out1 = path.join(scratch, "det-1");
  const out2 = path.join(scratch, "det-2");
  convertCitation(path.join(FIXTURES, "planetoid_mini"), "mini", out1);
  convertCitation(path.join(FIXTURES, "planetoid_mini"), "mini", out2);
  for (const name of ["meta.json", "edges.tsv", "features.bin", "labels.tsv", "splits.json"]) {
    const a = fs.readFileSync(path.join(out1, name));
    const b = fs.readFileSync(path.join(out2, name));
    expect(a.equals(b)).toBe(true);
  }
});

it("missing upstream files are reported by path", () => {
  expect(() => convertCitation(path.join(FIXTURES, "nope"), "mini", path.join(scratch, "x")))
    .toThrow(/missing upstream file/);
});

it("checksum mismatches are rejected", () => {
  expect(() =>
    convertCitation(path.join(FIXTURES, "planetoid_mini"), "mini", path.join(scratch, "x"), {
      "ind.mini.x": "0".repeat(64),
    }),
  ).toThrow(/checksum mismatch/);
});
