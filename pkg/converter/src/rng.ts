/**
 * Counter-based SplitMix64 stream, the exact twin of the training library's
 * generator: output[i] = mix64(seed + (i + 1) * GOLDEN) over wrapping
 * 64-bit arithmetic. Identical seeds produce identical samples in both
 * implementations, which keeps converted datasets reproducible everywhere.
 */

const MASK64 = 0xffffffffffffffffn;
const GOLDEN = 0x9e3779b97f4a7c15n;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return z ^ (z >> 31n);
}

export class Rng {
  private readonly seed: bigint;
  private counter = 0n;

  constructor(seed: bigint | number) {
    this.seed = BigInt(seed) & MASK64;
  }

  raw(): bigint {
    this.counter += 1n;
    return mix64((this.counter * GOLDEN + this.seed) & MASK64);
  }

  /** Uniform double on [0, 1) from the top 53 bits. */
  uniform(): number {
    return Number(this.raw() >> 11n) * 2 ** -53;
  }

  /** Fisher-Yates permutation of 0..n-1; swap index is raw % (i + 1). */
  permutation(n: number): Int32Array {
    const perm = new Int32Array(n);
    for (let i = 0; i < n; i++) perm[i] = i;
    for (let i = n - 1; i >= 1; i--) {
      const j = Number(this.raw() % BigInt(i + 1));
      const tmp = perm[i];
      perm[i] = perm[j];
      perm[j] = tmp;
    }
    return perm;
  }

  /** Copy of `values` in randomly permuted order. */
  shuffled(values: number[]): number[] {
    const perm = this.permutation(values.length);
    const out = new Array<number>(values.length);
    for (let i = 0; i < values.length; i++) out[i] = values[perm[i]];
    return out;
  }

  spawn(label: string): Rng {
    return new Rng(mix64(this.seed ^ fnv1a64(label)));
  }
}

export function fnv1a64(text: string): bigint {
  let h = 0xcbf29ce484222325n;
  const bytes = new TextEncoder().encode(text);
  for (const b of bytes) {
    h = ((h ^ BigInt(b)) * 0x100000001b3n) & MASK64;
  }
  return h;
}
