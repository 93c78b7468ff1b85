#!/usr/bin/env node
/**
 * One-shot dataset conversion commands. The manifest (sources + checksums,
 * output counts, warnings) is printed as JSON to standard output.
 *
 *   node dist/cli.js citation --source DIR --name cora --out DIR
 *                             [--checksums file.json]
 *   node dist/cli.js mnist    --images FILE --labels FILE --out DIR
 *                             [--per-class 1000] [--k 8] [--seed 0]
 *   node dist/cli.js cifar    --batches FILE[,FILE...] --out DIR
 *                             [--per-class 1000] [--k 8] [--seed 0]
 *   node dist/cli.js cifar    --descriptors FILE --labels FILE --dim D ...
 */

import * as fs from "node:fs";

import { convertCitation } from "./citation.js";
import {
  convertImagePool,
  poolFromCifarBatches,
  poolFromDescriptors,
  poolFromIdx,
} from "./images.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed flag near '${key}'`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (v === undefined) throw new Error(`missing required flag --${name}`);
  return v;
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command) {
    console.error("usage: cli.js <citation|mnist|cifar> --flags ...");
    return 1;
  }
  try {
    const flags = parseFlags(rest);
    if (command === "citation") {
      let expected: Record<string, string> | undefined;
      const checksumsPath = flags.get("checksums");
      if (checksumsPath) expected = JSON.parse(fs.readFileSync(checksumsPath, "utf-8"));
      const { manifest } = convertCitation(
        required(flags, "source"),
        required(flags, "name"),
        required(flags, "out"),
        expected,
      );
      console.log(JSON.stringify(manifest, null, 2));
      return 0;
    }
    if (command === "mnist") {
      const images = required(flags, "images");
      const labels = required(flags, "labels");
      const pool = poolFromIdx(images, labels);
      const manifest = convertImagePool(pool, [images, labels], {
        name: flags.get("name") ?? "mnist",
        k: parseInt(flags.get("k") ?? "8", 10),
        samplePerClass: parseInt(flags.get("per-class") ?? "1000", 10),
        seed: parseInt(flags.get("seed") ?? "0", 10),
        outDir: required(flags, "out"),
      });
      console.log(JSON.stringify(manifest, null, 2));
      return 0;
    }
    if (command === "cifar") {
      const descriptors = flags.get("descriptors");
      let pool;
      let sources: string[];
      if (descriptors) {
        const labels = required(flags, "labels");
        const dim = parseInt(required(flags, "dim"), 10);
        pool = poolFromDescriptors(descriptors, labels, dim);
        sources = [descriptors, labels];
      } else {
        // fallback documented in the README: raw 3072-dim pixels
        sources = required(flags, "batches").split(",");
        pool = poolFromCifarBatches(sources);
      }
      const manifest = convertImagePool(pool, sources, {
        name: flags.get("name") ?? "cifar10",
        k: parseInt(flags.get("k") ?? "8", 10),
        samplePerClass: parseInt(flags.get("per-class") ?? "1000", 10),
        seed: parseInt(flags.get("seed") ?? "0", 10),
        outDir: required(flags, "out"),
      });
      console.log(JSON.stringify(manifest, null, 2));
      return 0;
    }
    console.error(`unknown command '${command}'`);
    return 1;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

process.exit(main(process.argv.slice(2)));
