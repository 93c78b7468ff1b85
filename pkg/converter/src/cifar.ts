/** CIFAR-10 binary batch parsing: fixed 3073-byte records (label + RGB). */

export const CIFAR_PIXELS = 3072;
const RECORD = 1 + CIFAR_PIXELS;

export interface CifarBatch {
  labels: Uint8Array;
  /** pixel bytes, count * 3072, channel-major RGB as distributed */
  pixels: Uint8Array;
}

export function parseCifarBatch(buf: Uint8Array): CifarBatch {
  if (buf.byteLength === 0 || buf.byteLength % RECORD !== 0) {
    throw new Error(
      `CIFAR batch size ${buf.byteLength} is not a multiple of ${RECORD}-byte records`,
    );
  }
  const count = buf.byteLength / RECORD;
  const labels = new Uint8Array(count);
  const pixels = new Uint8Array(count * CIFAR_PIXELS);
  for (let i = 0; i < count; i++) {
    labels[i] = buf[i * RECORD];
    pixels.set(buf.subarray(i * RECORD + 1, (i + 1) * RECORD), i * CIFAR_PIXELS);
  }
  return { labels, pixels };
}
