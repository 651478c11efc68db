/** One manifest row: an image on disk paired with its caption. */
export interface RawSample {
  id: string;
  imagePath: string;
  caption: string;
  label: 0 | 1 | null;
}

/**
 * One line of the embedding dataset. Field layout matches what the
 * downstream detector's loader expects: raw (un-normalized) vectors and
 * one constant `dim` per file.
 */
export interface EmbeddingRecord {
  id: string;
  label: 0 | 1 | null;
  dim: number;
  e_img: number[];
  e_txt: number[];
  text: string;
}

/** Decoded RGBA pixels as produced by the image reader. */
export interface Bitmap {
  width: number;
  height: number;
  data: Uint8Array | Buffer;
}
