/**
 * Word-level [CLS]-attention extraction.
 *
 * For each document: encode [CLS] + subwords + [SEP], take the final
 * layer's [CLS] attention row, average across heads, and assign each
 * word its first subword's weight. Words past the truncation window get
 * 0, as does attention mass on the special tokens (dropped, not
 * redistributed).
 */

import { CorpusDoc } from "./data.js";
import { Encoder, Tape, Tensor } from "./encoder.js";
import { encodeDocument, Tokenizer } from "./subwords.js";

export interface ExtractionConfig {
  encoder: Encoder;
  tok: Tokenizer;
  maxPositions?: number;
  /** Attention layer to read; defaults to the final layer. */
  layer?: number;
}

export interface ExtractionResult {
  id: string;
  weights: number[];
}

/** Head-averaged [CLS] row of one attention layer. */
export function clsRowHeadAverage(attnHeads: Tensor[]): number[] {
  const t = attnHeads[0]!.cols;
  const row = new Array<number>(t).fill(0);
  for (const head of attnHeads) {
    for (let j = 0; j < t; j++) row[j]! += head.at(0, j) / attnHeads.length;
  }
  return row;
}

export function extractDocument(
  doc: CorpusDoc,
  cfg: ExtractionConfig,
): ExtractionResult {
  const maxPositions = cfg.maxPositions ?? cfg.encoder.config.maxPositions;
  const { ids, firstSubword } = encodeDocument(doc.words, cfg.tok, maxPositions);
  if (doc.words.length > 0 && firstSubword.every((i) => i < 0)) {
    // first word alone exceeds the window
    process.stderr.write(`warning: document ${doc.id} fully truncated\n`);
    return { id: doc.id, weights: doc.words.map(() => 0) };
  }
  const tape = new Tape();
  const { attention } = cfg.encoder.forward(tape, ids);
  const layer = cfg.layer ?? attention.length - 1;
  const clsRow = clsRowHeadAverage(attention[layer]!);
  const weights = firstSubword.map((idx) => (idx >= 0 ? clsRow[idx]! : 0));
  return { id: doc.id, weights };
}

export function extractAll(
  docs: CorpusDoc[],
  cfg: ExtractionConfig,
): ExtractionResult[] {
  return docs.map((doc) => extractDocument(doc, cfg));
}
