/**
 * Batch extraction: (image, caption, label) samples -> JSONL records.
 *
 * Vectors are emitted raw (no normalization; that is the consumer's job)
 * and rounded to 9 significant decimal digits, which survives the
 * decimal -> float64 -> decimal round trip on the consumer side with
 * cosine error below 1e-8.
 */

import { writeFileSync } from "node:fs";

import { Jimp } from "jimp";

import type { Encoder } from "./encoders.js";
import type { EmbeddingRecord, RawSample } from "./types.js";

export type Logger = (message: string) => void;

export function roundSignificant(value: number, digits = 9): number {
  if (value === 0 || !Number.isFinite(value)) return value === 0 ? 0 : value;
  return Number(value.toPrecision(digits));
}

function roundVector(vector: number[]): number[] {
  return vector.map((v) => roundSignificant(v));
}

/**
 * Encode every sample; undecodable images and empty captions are skipped
 * with a logged reason rather than aborting the batch.
 */
export async function extractSamples(
  samples: RawSample[],
  encoder: Encoder,
  log: Logger = (m) => console.error(m)
): Promise<EmbeddingRecord[]> {
  const records: EmbeddingRecord[] = [];
  for (const sample of samples) {
    if (!sample.caption.trim()) {
      log(`[extract] skipping ${sample.id}: empty caption`);
      continue;
    }
    let bitmap;
    try {
      const image = await Jimp.read(sample.imagePath);
      bitmap = image.bitmap;
    } catch (err) {
      log(`[extract] skipping ${sample.id}: cannot decode ${sample.imagePath}: ${(err as Error).message}`);
      continue;
    }
    records.push({
      id: sample.id,
      label: sample.label,
      dim: encoder.dim,
      e_img: roundVector(encoder.encodeImage(bitmap)),
      e_txt: roundVector(encoder.encodeText(sample.caption)),
      text: sample.caption,
    });
  }
  return records;
}

export function toJsonl(records: EmbeddingRecord[]): string {
  return records.map((r) => JSON.stringify(r)).join("\n") + (records.length ? "\n" : "");
}

export function writeJsonl(records: EmbeddingRecord[], outPath: string): void {
  writeFileSync(outPath, toJsonl(records), "utf-8");
}
