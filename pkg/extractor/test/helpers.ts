import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Jimp } from "jimp";

/** Deterministic test image: smooth ramps plus LCG speckle. */
export async function writeTestImage(
  path: string,
  seed: number,
  width = 48,
  height = 40
): Promise<void> {
  const img = new Jimp({ width, height });
  let state = (seed >>> 0) || 1;
  const next = () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const px = (y * width + x) * 4;
      img.bitmap.data[px] = Math.floor(40 + (170 * y) / height + 20 * next());
      img.bitmap.data[px + 1] = Math.floor(30 + (180 * x) / width + 20 * next());
      img.bitmap.data[px + 2] = Math.floor(80 + 60 * next());
      img.bitmap.data[px + 3] = 255;
    }
  }
  await img.write(path as `${string}.${string}`);
}

export interface ManifestRow {
  id: string;
  image: string;
  caption: string;
  label: string;
}

export function writeManifest(dir: string, rows: ManifestRow[]): string {
  const lines = ["id,image_path,caption,label"];
  for (const row of rows) {
    const caption = row.caption.includes(",") ? `"${row.caption}"` : row.caption;
    lines.push(`${row.id},${row.image},${caption},${row.label}`);
  }
  const path = join(dir, "manifest.csv");
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
  return path;
}

export function freshDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export async function buildFixture(
  dir: string,
  count: number,
  opts: { brokenIds?: string[]; emptyCaptionIds?: string[] } = {}
): Promise<string> {
  const rows: ManifestRow[] = [];
  for (let i = 0; i < count; i++) {
    const id = `s${i}`;
    const ext = i % 2 === 0 ? "png" : "bmp";
    const image = `img_${i}.${ext}`;
    if (opts.brokenIds?.includes(id)) {
      writeFileSync(join(dir, image), "definitely not an image");
    } else {
      await writeTestImage(join(dir, image), 100 + i);
    }
    const caption = opts.emptyCaptionIds?.includes(id)
      ? ""
      : `a scene with landmark ${i}, captured outdoors`;
    rows.push({ id, image, caption, label: i % 3 === 2 ? "" : String(i % 2) });
  }
  return writeManifest(dir, rows);
}
