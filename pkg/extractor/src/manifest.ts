/**
 * Manifest loading: CSV with columns id,image_path,caption,label.
 * Relative image paths resolve against the manifest's own directory.
 */

import { readFileSync } from "node:fs";
import { dirname, isAbsolute, resolve } from "node:path";

import Papa from "papaparse";

import type { RawSample } from "./types.js";

export const MANIFEST_COLUMNS = ["id", "image_path", "caption", "label"] as const;

export class ManifestError extends Error {}

function parseLabel(raw: string | undefined | null): 0 | 1 | null {
  const text = (raw ?? "").trim();
  if (text === "" || text.toLowerCase() === "null") return null;
  if (text === "0") return 0;
  if (text === "1") return 1;
  throw new ManifestError(`label must be 0, 1, or empty; got "${text}"`);
}

export function loadManifest(path: string): RawSample[] {
  let content: string;
  try {
    content = readFileSync(path, "utf-8");
  } catch (err) {
    throw new ManifestError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Record<string, string>>(content.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new ManifestError(`manifest parse error at row ${first.row}: ${first.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of MANIFEST_COLUMNS) {
    if (!fields.includes(column)) {
      throw new ManifestError(
        `manifest must have columns ${MANIFEST_COLUMNS.join(",")}; got ${fields.join(",")}`
      );
    }
  }
  const base = dirname(resolve(path));
  return parsed.data.map((row, index) => {
    const id = (row.id ?? "").trim();
    if (!id) throw new ManifestError(`row ${index + 1}: empty id`);
    const imagePath = (row.image_path ?? "").trim();
    if (!imagePath) throw new ManifestError(`row ${index + 1}: empty image_path`);
    return {
      id,
      imagePath: isAbsolute(imagePath) ? imagePath : resolve(base, imagePath),
      caption: row.caption ?? "",
      label: parseLabel(row.label),
    };
  });
}
