/**
 * Tokenization layers for the toy encoder.
 *
 * The pipeline's canonical unit is the lowercased alphanumeric word
 * (same rule as the corpus tooling). The encoder itself runs on
 * subwords: either hash-bucketed character chunks (no trained vocab
 * needed) or a word-level vocabulary where every word is its own single
 * subword.
 */

import { fnv1a } from "./rng.js";

export const PAD = 0;
export const CLS = 1;
export const SEP = 2;
export const MASK = 3;
export const UNK = 4;
export const NUM_SPECIALS = 5;

const WORD_RE = /[^0-9a-z]+/;

/** Same word rule as the corpus pipeline: lowercase, alphanumeric runs. */
export function tokenizeWords(text: string): string[] {
  return text.toLowerCase().split(WORD_RE).filter((w) => w.length > 0);
}

export interface Tokenizer {
  readonly kind: "hash-subword" | "word";
  readonly vocabSize: number;
  /** Subword ids for one word; never empty. */
  encodeWord(word: string): number[];
}

/** Character chunks of up to 4, bucketed by a stable hash. */
export class HashSubwordTokenizer implements Tokenizer {
  readonly kind = "hash-subword" as const;

  constructor(readonly vocabSize: number = 1024, readonly chunk: number = 4) {
    if (vocabSize <= NUM_SPECIALS) throw new Error("vocabSize too small");
  }

  encodeWord(word: string): number[] {
    const ids: number[] = [];
    for (let i = 0; i < word.length; i += this.chunk) {
      const piece = (i === 0 ? "" : "##") + word.slice(i, i + this.chunk);
      ids.push(NUM_SPECIALS + (fnv1a(piece) % (this.vocabSize - NUM_SPECIALS)));
    }
    return ids;
  }
}

/** One subword per word, over a fixed word vocabulary. */
export class WordTokenizer implements Tokenizer {
  readonly kind = "word" as const;
  readonly vocabSize: number;
  private ids = new Map<string, number>();
  private words: string[];

  constructor(words: string[]) {
    this.words = words;
    words.forEach((w, i) => this.ids.set(w, NUM_SPECIALS + i));
    this.vocabSize = NUM_SPECIALS + words.length;
  }

  static fromCorpus(texts: string[]): WordTokenizer {
    const seen = new Set<string>();
    for (const text of texts) {
      for (const w of tokenizeWords(text)) seen.add(w);
    }
    return new WordTokenizer([...seen].sort());
  }

  encodeWord(word: string): number[] {
    return [this.ids.get(word) ?? UNK];
  }

  wordList(): string[] {
    return this.words;
  }
}

export interface EncodedDocument {
  /** [CLS] + subwords + [SEP], truncated to maxPositions. */
  ids: number[];
  /** Index into `ids` of each word's first subword; -1 if truncated away. */
  firstSubword: number[];
}

export function encodeDocument(
  words: string[],
  tok: Tokenizer,
  maxPositions: number,
): EncodedDocument {
  const ids: number[] = [CLS];
  const firstSubword: number[] = [];
  let full = false;
  for (const word of words) {
    const pieces = tok.encodeWord(word);
    // the whole word must fit before the closing [SEP]; truncation is
    // suffix-only, so the first overflow closes the window
    if (full || ids.length + pieces.length + 1 > maxPositions) {
      full = true;
      firstSubword.push(-1);
      continue;
    }
    firstSubword.push(ids.length);
    ids.push(...pieces);
  }
  ids.push(SEP);
  return { ids, firstSubword };
}
