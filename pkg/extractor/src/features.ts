/**
 * Deterministic feature primitives shared by the local encoders.
 *
 * Everything here is a pure function of its input bytes, so repeated
 * extraction of the same file or caption yields bit-identical vectors.
 */

import type { Bitmap } from "./types.js";

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

/** 32-bit FNV-1a over a UTF-8 string. */
export function fnv1a(text: string): number {
  let hash = FNV_OFFSET;
  const bytes = Buffer.from(text, "utf-8");
  for (const byte of bytes) {
    hash ^= byte;
    hash = Math.imul(hash, FNV_PRIME) >>> 0;
  }
  return hash >>> 0;
}

/**
 * Per-cell RGB means over a grid x grid partition, scaled to [0, 1].
 * Cells cover the image completely; ragged edges join the last cell.
 */
export function gridColorMeans(bitmap: Bitmap, grid: number): number[] {
  const { width, height, data } = bitmap;
  const sums = new Float64Array(grid * grid * 3);
  const counts = new Float64Array(grid * grid);
  for (let y = 0; y < height; y++) {
    const cy = Math.min(grid - 1, Math.floor((y * grid) / height));
    for (let x = 0; x < width; x++) {
      const cx = Math.min(grid - 1, Math.floor((x * grid) / width));
      const cell = cy * grid + cx;
      const px = (y * width + x) * 4;
      sums[cell * 3] += data[px];
      sums[cell * 3 + 1] += data[px + 1];
      sums[cell * 3 + 2] += data[px + 2];
      counts[cell] += 1;
    }
  }
  const out: number[] = [];
  for (let cell = 0; cell < grid * grid; cell++) {
    for (let ch = 0; ch < 3; ch++) {
      out.push(sums[cell * 3 + ch] / (255 * counts[cell]));
    }
  }
  return out;
}

/**
 * Per-cell mean absolute luminance gradient (horizontal + vertical),
 * scaled to [0, 1]. Captures local texture energy.
 */
export function gridGradientEnergy(bitmap: Bitmap, grid: number): number[] {
  const { width, height, data } = bitmap;
  const luma = new Float64Array(width * height);
  for (let i = 0; i < width * height; i++) {
    const px = i * 4;
    luma[i] = 0.299 * data[px] + 0.587 * data[px + 1] + 0.114 * data[px + 2];
  }
  const sums = new Float64Array(grid * grid);
  const counts = new Float64Array(grid * grid);
  for (let y = 0; y < height; y++) {
    const cy = Math.min(grid - 1, Math.floor((y * grid) / height));
    for (let x = 0; x < width; x++) {
      const cx = Math.min(grid - 1, Math.floor((x * grid) / width));
      const i = y * width + x;
      let energy = 0;
      if (x + 1 < width) energy += Math.abs(luma[i + 1] - luma[i]);
      if (y + 1 < height) energy += Math.abs(luma[i + width] - luma[i]);
      sums[cy * grid + cx] += energy;
      counts[cy * grid + cx] += 1;
    }
  }
  const out: number[] = [];
  for (let cell = 0; cell < grid * grid; cell++) {
    out.push(sums[cell] / (510 * counts[cell]));
  }
  return out;
}

/**
 * Signed feature hashing of word unigrams and character trigrams into
 * `dim` buckets; counts are dampened by sqrt so long captions do not
 * dominate.
 */
export function hashedTextFeatures(caption: string, dim: number): number[] {
  const out = new Float64Array(dim);
  const tokens: string[] = [];
  const normalized = caption.toLowerCase();
  for (const word of normalized.split(/[^a-z0-9]+/)) {
    if (word) tokens.push(`w:${word}`);
  }
  const padded = `^${normalized}$`;
  for (let i = 0; i + 3 <= padded.length; i++) {
    tokens.push(`t:${padded.slice(i, i + 3)}`);
  }
  const damp = 1 / Math.sqrt(Math.max(tokens.length, 1));
  for (const token of tokens) {
    const hash = fnv1a(token);
    const bucket = hash % dim;
    const sign = (hash >>> 31) & 1 ? -1 : 1;
    out[bucket] += sign * damp;
  }
  return Array.from(out);
}
