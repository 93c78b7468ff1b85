/** IDX file parsing (the MNIST distribution format, big-endian headers). */

export interface IdxImages {
  count: number;
  rows: number;
  cols: number;
  /** pixel bytes, count * rows * cols */
  pixels: Uint8Array;
}

export function parseIdxImages(buf: Uint8Array): IdxImages {
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  if (buf.byteLength < 16 || view.getUint32(0, false) !== 0x00000803) {
    throw new Error("not an IDX image file (bad magic)");
  }
  const count = view.getUint32(4, false);
  const rows = view.getUint32(8, false);
  const cols = view.getUint32(12, false);
  const expected = 16 + count * rows * cols;
  if (buf.byteLength !== expected) {
    throw new Error(`IDX image file size mismatch: expected ${expected}, found ${buf.byteLength}`);
  }
  return { count, rows, cols, pixels: buf.subarray(16) };
}

export function parseIdxLabels(buf: Uint8Array): Uint8Array {
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  if (buf.byteLength < 8 || view.getUint32(0, false) !== 0x00000801) {
    throw new Error("not an IDX label file (bad magic)");
  }
  const count = view.getUint32(4, false);
  if (buf.byteLength !== 8 + count) {
    throw new Error(`IDX label file size mismatch: expected ${8 + count}, found ${buf.byteLength}`);
  }
  return buf.subarray(8);
}
