/**
 * Encoder registry. The encoder is always named explicitly on the command
 * line: the embedding dimension is a property of the chosen encoder, and
 * silently defaulting to one would bake an invisible dependency into
 * every dataset produced.
 *
 * The bundled encoders are deterministic local featurizers (grid color
 * moments + texture energy for images, hashed n-grams for text). They
 * share each encoder's output dimension across modalities, which is the
 * contract the downstream fusion classifier needs. A pretrained
 * vision-language backbone can be registered under a new name behind the
 * same interface when its weights are available locally.
 */

import { gridColorMeans, gridGradientEnergy, hashedTextFeatures } from "./features.js";
import type { Bitmap } from "./types.js";

export interface Encoder {
  name: string;
  dim: number;
  encodeImage(bitmap: Bitmap): number[];
  encodeText(caption: string): number[];
}

function gridMomentEncoder(name: string, grid: number): Encoder {
  // 3 color means + 1 gradient energy per cell
  const dim = grid * grid * 4;
  return {
    name,
    dim,
    encodeImage(bitmap: Bitmap): number[] {
      return [...gridColorMeans(bitmap, grid), ...gridGradientEnergy(bitmap, grid)];
    },
    encodeText(caption: string): number[] {
      return hashedTextFeatures(caption, dim);
    },
  };
}

const REGISTRY = new Map<string, () => Encoder>([
  ["grid-moments-64", () => gridMomentEncoder("grid-moments-64", 4)],
  ["grid-moments-16", () => gridMomentEncoder("grid-moments-16", 2)],
]);

export function availableEncoders(): string[] {
  return [...REGISTRY.keys()].sort();
}

export class UnknownEncoderError extends Error {}

export function getEncoder(name: string): Encoder {
  const factory = REGISTRY.get(name);
  if (!factory) {
    throw new UnknownEncoderError(
      `unknown encoder "${name}"; available: ${availableEncoders().join(", ")}`
    );
  }
  return factory();
}
