#!/usr/bin/env node
/**
 * extract --input manifest.csv --encoder <name> --out dataset.jsonl
 *
 * Exit codes: 0 success, 1 domain error (bad manifest, unknown encoder),
 * 2 usage error. Progress goes to stderr; the dataset goes to --out.
 */

import { pathToFileURL } from "node:url";

import { availableEncoders, getEncoder, UnknownEncoderError } from "./encoders.js";
import { extractSamples, writeJsonl } from "./extract.js";
import { loadManifest, ManifestError } from "./manifest.js";

interface CliArgs {
  input: string;
  encoder: string;
  out: string;
}

function usage(): string {
  return (
    "usage: extract --input manifest.csv --encoder <name> --out dataset.jsonl\n" +
    `encoders: ${availableEncoders().join(", ")}`
  );
}

export function parseArgs(argv: string[]): CliArgs {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new RangeError(`malformed arguments near "${flag}"`);
    }
    values.set(flag.slice(2), value);
  }
  const input = values.get("input");
  const encoderName = values.get("encoder");
  const out = values.get("out");
  if (!input || !encoderName || !out) {
    throw new RangeError("--input, --encoder, and --out are all required");
  }
  return { input, encoder: encoderName, out };
}

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}\n${usage()}`);
    return 2;
  }
  try {
    const encoder = getEncoder(args.encoder);
    const samples = loadManifest(args.input);
    const records = await extractSamples(samples, encoder);
    writeJsonl(records, args.out);
    console.error(
      `[extract] wrote ${records.length}/${samples.length} records ` +
      `(dim ${encoder.dim}, encoder ${encoder.name}) to ${args.out}`
    );
    return 0;
  } catch (err) {
    if (err instanceof UnknownEncoderError || err instanceof ManifestError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
