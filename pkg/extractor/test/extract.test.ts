import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { availableEncoders, getEncoder, UnknownEncoderError } from "../src/encoders.js";
import { extractSamples, roundSignificant, toJsonl } from "../src/extract.js";
import { loadManifest, ManifestError } from "../src/manifest.js";
import { main } from "../src/cli.js";
import { buildFixture, freshDir, writeManifest, writeTestImage } from "./helpers.js";

const ENC = "grid-moments-64";

describe("encoder registry", () => {
  it("exposes deterministic encoders with fixed dims", () => {
    expect(getEncoder("grid-moments-64").dim).toBe(64);
    expect(getEncoder("grid-moments-16").dim).toBe(16);
    expect(availableEncoders()).toContain("grid-moments-64");
  });

  it("rejects unknown names and lists the alternatives", () => {
    expect(() => getEncoder("clip-vit-b32")).toThrowError(UnknownEncoderError);
    expect(() => getEncoder("clip-vit-b32")).toThrowError(/available:/);
  });
});

describe("manifest", () => {
  it("parses rows, resolves relative paths, maps labels", async () => {
    const dir = freshDir("manifest-");
    const manifest = await buildFixture(dir, 3);
    const samples = loadManifest(manifest);
    expect(samples).toHaveLength(3);
    expect(samples[0].imagePath).toBe(join(dir, "img_0.png"));
    expect(samples.map((s) => s.label)).toEqual([0, 1, null]);
  });

  it("rejects missing columns and bad labels", () => {
    const dir = freshDir("manifest-bad-");
    const badColumns = join(dir, "bad.csv");
    writeFileSync(badColumns, "id,path\nx,y\n");
    expect(() => loadManifest(badColumns)).toThrowError(ManifestError);

    const badLabel = writeManifest(dir, [
      { id: "a", image: "i.png", caption: "c", label: "7" },
    ]);
    expect(() => loadManifest(badLabel)).toThrowError(/label/);
  });
});

describe("extraction", () => {
  it("three samples in, three records out, constant dim", async () => {
    const dir = freshDir("extract3-");
    const manifest = await buildFixture(dir, 3);
    const records = await extractSamples(loadManifest(manifest), getEncoder(ENC), () => {});
    expect(records).toHaveLength(3);
    expect(new Set(records.map((r) => r.dim))).toEqual(new Set([64]));
    for (const record of records) {
      expect(record.e_img).toHaveLength(64);
      expect(record.e_txt).toHaveLength(64);
    }
  });

  it("same input twice gives identical vectors", async () => {
    const dir = freshDir("extract-det-");
    const manifest = await buildFixture(dir, 4);
    const encoder = getEncoder(ENC);
    const first = await extractSamples(loadManifest(manifest), encoder, () => {});
    const second = await extractSamples(loadManifest(manifest), encoder, () => {});
    expect(toJsonl(second)).toBe(toJsonl(first));
  });

  it("skips undecodable images and empty captions with logged reasons", async () => {
    const dir = freshDir("extract-skip-");
    const manifest = await buildFixture(dir, 5, {
      brokenIds: ["s1"],
      emptyCaptionIds: ["s3"],
    });
    const logs: string[] = [];
    const records = await extractSamples(
      loadManifest(manifest), getEncoder(ENC), (m) => logs.push(m)
    );
    expect(records.map((r) => r.id)).toEqual(["s0", "s2", "s4"]);
    expect(logs.some((l) => l.includes("s1") && l.includes("cannot decode"))).toBe(true);
    expect(logs.some((l) => l.includes("s3") && l.includes("empty caption"))).toBe(true);
  });

  it("emits raw, un-normalized vectors", async () => {
    const dir = freshDir("extract-raw-");
    const manifest = await buildFixture(dir, 1);
    const [record] = await extractSamples(loadManifest(manifest), getEncoder(ENC), () => {});
    const norm = Math.hypot(...record.e_img);
    expect(norm).toBeGreaterThan(0);
    expect(Math.abs(norm - 1)).toBeGreaterThan(1e-3);
  });
});

describe("decimal serialization", () => {
  it("rounds to at most 9 significant digits", () => {
    expect(roundSignificant(0.123456789123)).toBe(0.123456789);
    expect(roundSignificant(0)).toBe(0);
    expect(roundSignificant(-7.000000001234e-5)).toBe(-7.00000000e-5);
    for (const v of [Math.PI, 1 / 3, 2 / 7, 123456.789123]) {
      const text = String(roundSignificant(v));
      const digits = text.replace(/[-.e+]/g, "").replace(/^0+/, "").length;
      expect(digits).toBeLessThanOrEqual(9);
    }
  });

  it("keeps cosine similarity within 1e-8 of the full-precision value", async () => {
    const dir = freshDir("extract-cos-");
    const manifest = await buildFixture(dir, 1);
    const encoder = getEncoder(ENC);
    const [sample] = loadManifest(manifest);
    const { Jimp } = await import("jimp");
    const bitmap = (await Jimp.read(sample.imagePath)).bitmap;
    const full = encoder.encodeImage(bitmap);
    const fullTxt = encoder.encodeText(sample.caption);
    const [record] = await extractSamples([sample], encoder, () => {});

    const cosine = (a: number[], b: number[]) => {
      const dot = a.reduce((acc, v, i) => acc + v * b[i], 0);
      return dot / (Math.hypot(...a) * Math.hypot(...b));
    };
    expect(Math.abs(cosine(full, fullTxt) - cosine(record.e_img, record.e_txt)))
      .toBeLessThan(1e-8);
  });
});

describe("cli", () => {
  it("runs end to end and writes the dataset", async () => {
    const dir = freshDir("cli-");
    const manifest = await buildFixture(dir, 3);
    const out = join(dir, "dataset.jsonl");
    const code = await main(["--input", manifest, "--encoder", ENC, "--out", out]);
    expect(code).toBe(0);
    const lines = readFileSync(out, "utf-8").trim().split("\n");
    expect(lines).toHaveLength(3);
    const first = JSON.parse(lines[0]);
    expect(Object.keys(first).sort()).toEqual(
      ["dim", "e_img", "e_txt", "id", "label", "text"]
    );
  });

  it("exits 2 on missing flags and 1 on unknown encoder", async () => {
    expect(await main(["--input", "x.csv"])).toBe(2);
    const dir = freshDir("cli-err-");
    const manifest = await buildFixture(dir, 1);
    expect(await main([
      "--input", manifest, "--encoder", "nope", "--out", join(dir, "o.jsonl"),
    ])).toBe(1);
  });
});

describe("image formats", () => {
  it("reads png and bmp fixtures alike", async () => {
    const dir = freshDir("formats-");
    await writeTestImage(join(dir, "a.png"), 7);
    await writeTestImage(join(dir, "b.bmp"), 7);
    const manifest = writeManifest(dir, [
      { id: "png", image: "a.png", caption: "same pixels", label: "0" },
      { id: "bmp", image: "b.bmp", caption: "same pixels", label: "1" },
    ]);
    const records = await extractSamples(loadManifest(manifest), getEncoder(ENC), () => {});
    expect(records).toHaveLength(2);
    // identical pixel content: identical image embeddings across formats
    expect(records[0].e_img).toEqual(records[1].e_img);
  });
});
