/** Conversion manifest: sources with checksums, output counts, warnings. */

import * as crypto from "node:crypto";
import * as fs from "node:fs";

export interface SourceChecksum {
  path: string;
  sha256: string;
}

export interface ConversionManifest {
  name: string;
  sources: SourceChecksum[];
  output: string;
  counts: {
    nodes: number;
    edges: number;
    features: number;
    classes: number;
  };
  warnings: string[];
}

export function hashFile(path: string): string {
  const hash = crypto.createHash("sha256");
  hash.update(fs.readFileSync(path));
  return hash.digest("hex");
}
