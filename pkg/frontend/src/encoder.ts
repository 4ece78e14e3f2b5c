/**
 * Toy transformer encoder: multi-head self-attention with residual
 * connections, learned position and segment embeddings, an MLM head and
 * an MLP scoring head over the [CLS] state.
 *
 * "Pretrained" encoders are deterministic seeded initializations or
 * checkpoints saved by the trainer; both are addressed by the same
 * identifier syntax (see `loadEncoder`).
 */

import * as fs from "node:fs";

import { Rng } from "./rng.js";
import { Adam, Tape, Tensor } from "./tensor.js";
import { HashSubwordTokenizer, Tokenizer, WordTokenizer } from "./subwords.js";

export interface EncoderConfig {
  vocabSize: number;
  dModel: number;
  nHeads: number;
  nLayers: number;
  dFf: number;
  maxPositions: number;
  seed: number;
}

export const DEFAULT_CONFIG: EncoderConfig = {
  vocabSize: 1024,
  dModel: 64,
  nHeads: 4,
  nLayers: 2,
  dFf: 128,
  maxPositions: 128,
  seed: 1,
};

interface LayerParams {
  wq: Tensor[];
  wk: Tensor[];
  wv: Tensor[];
  wo: Tensor;
  bo: Tensor;
  w1: Tensor;
  b1: Tensor;
  w2: Tensor;
  b2: Tensor;
}

export interface ForwardResult {
  hidden: Tensor; // [T, dModel]
  /** attention[layer][head] is the row-stochastic [T, T] weight matrix */
  attention: Tensor[][];
}

export class Encoder {
  readonly config: EncoderConfig;
  tokEmb: Tensor;
  posEmb: Tensor;
  segEmb: Tensor;
  layers: LayerParams[];
  mlmW: Tensor;
  mlmB: Tensor;
  scoreW1: Tensor;
  scoreB1: Tensor;
  scoreW2: Tensor;
  scoreB2: Tensor;

  constructor(config: EncoderConfig) {
    this.config = config;
    const rng = new Rng(config.seed);
    const d = config.dModel;
    const dh = Math.floor(d / config.nHeads);
    if (dh * config.nHeads !== d) throw new Error("dModel must divide by nHeads");
    const std = 0.08;
    const g = (r: number, c: number) => Tensor.gaussian(r, c, std, rng);
    this.tokEmb = g(config.vocabSize, d);
    this.posEmb = g(config.maxPositions, d);
    this.segEmb = g(2, d);
    this.layers = [];
    for (let l = 0; l < config.nLayers; l++) {
      this.layers.push({
        wq: Array.from({ length: config.nHeads }, () => g(d, dh)),
        wk: Array.from({ length: config.nHeads }, () => g(d, dh)),
        wv: Array.from({ length: config.nHeads }, () => g(d, dh)),
        wo: g(d, d),
        bo: new Tensor(1, d),
        w1: g(d, config.dFf),
        b1: new Tensor(1, config.dFf),
        w2: g(config.dFf, d),
        b2: new Tensor(1, d),
      });
    }
    this.mlmW = g(d, config.vocabSize);
    this.mlmB = new Tensor(1, config.vocabSize);
    this.scoreW1 = g(d, d);
    this.scoreB1 = new Tensor(1, d);
    this.scoreW2 = g(d, 1);
    this.scoreB2 = new Tensor(1, 1);
  }

  parameters(): Tensor[] {
    const ps = [this.tokEmb, this.posEmb, this.segEmb];
    for (const l of this.layers) {
      ps.push(...l.wq, ...l.wk, ...l.wv, l.wo, l.bo, l.w1, l.b1, l.w2, l.b2);
    }
    ps.push(this.mlmW, this.mlmB, this.scoreW1, this.scoreB1, this.scoreW2, this.scoreB2);
    return ps;
  }

  parameterCount(): number {
    return this.parameters().reduce((s, p) => s + p.size, 0);
  }

  forward(tape: Tape, ids: number[], segments?: number[]): ForwardResult {
    const cfg = this.config;
    if (ids.length > cfg.maxPositions) throw new Error("sequence too long");
    const positions = ids.map((_, i) => i);
    const segs = segments ?? ids.map(() => 0);
    let x = tape.add(
      tape.add(
        tape.gatherRows(this.tokEmb, ids),
        tape.gatherRows(this.posEmb, positions),
      ),
      tape.gatherRows(this.segEmb, segs),
    );
    const dh = cfg.dModel / cfg.nHeads;
    const attention: Tensor[][] = [];
    for (const layer of this.layers) {
      const headsOut: Tensor[] = [];
      const headsAttn: Tensor[] = [];
      for (let h = 0; h < cfg.nHeads; h++) {
        const q = tape.matmul(x, layer.wq[h]!);
        const k = tape.matmul(x, layer.wk[h]!);
        const v = tape.matmul(x, layer.wv[h]!);
        const scores = tape.scale(tape.matmulT(q, k), 1 / Math.sqrt(dh));
        const attn = tape.softmaxRows(scores);
        headsAttn.push(attn);
        headsOut.push(tape.matmul(attn, v));
      }
      attention.push(headsAttn);
      const proj = tape.addRow(
        tape.matmul(tape.concatCols(headsOut), layer.wo),
        layer.bo,
      );
      x = tape.add(x, proj);
      const ff = tape.addRow(
        tape.matmul(
          tape.relu(tape.addRow(tape.matmul(x, layer.w1), layer.b1)),
          layer.w2,
        ),
        layer.b2,
      );
      x = tape.add(x, ff);
    }
    return { hidden: x, attention };
  }

  /** MLP over the [CLS] hidden state -> unbounded representativeness score. */
  score(tape: Tape, hidden: Tensor): Tensor {
    const cls = tape.pickRow(hidden, 0);
    const h = tape.relu(tape.addRow(tape.matmul(cls, this.scoreW1), this.scoreB1));
    return tape.addRow(tape.matmul(h, this.scoreW2), this.scoreB2);
  }

  /** Vocabulary logits for the given positions of a hidden-state matrix. */
  mlmLogits(tape: Tape, hidden: Tensor, positions: number[]): Tensor {
    const picked = tape.gatherRows(hidden, positions);
    return tape.addRow(tape.matmul(picked, this.mlmW), this.mlmB);
  }
}

// --- checkpoints ---------------------------------------------------------

export interface Checkpoint {
  config: EncoderConfig;
  tokenizer: { kind: "hash-subword"; vocabSize: number } | {
    kind: "word";
    words: string[];
  };
  params: number[][];
}

export function saveCheckpoint(
  path: string,
  encoder: Encoder,
  tok: Tokenizer,
): void {
  const checkpoint: Checkpoint = {
    config: encoder.config,
    tokenizer:
      tok.kind === "word"
        ? { kind: "word", words: (tok as WordTokenizer).wordList() }
        : { kind: "hash-subword", vocabSize: tok.vocabSize },
    params: encoder.parameters().map((p) => Array.from(p.data)),
  };
  fs.writeFileSync(path, JSON.stringify(checkpoint));
}

export function loadCheckpoint(path: string): { encoder: Encoder; tok: Tokenizer } {
  const checkpoint = JSON.parse(fs.readFileSync(path, "utf-8")) as Checkpoint;
  const encoder = new Encoder(checkpoint.config);
  const params = encoder.parameters();
  if (params.length !== checkpoint.params.length) {
    throw new Error("checkpoint does not match the encoder layout");
  }
  params.forEach((p, i) => p.data.set(checkpoint.params[i]!));
  const tok =
    checkpoint.tokenizer.kind === "word"
      ? new WordTokenizer(checkpoint.tokenizer.words)
      : new HashSubwordTokenizer(checkpoint.tokenizer.vocabSize);
  return { encoder, tok };
}

/**
 * Resolve an encoder identifier: either a checkpoint file path or
 * `seeded[:seed]` for a deterministic fresh encoder with the hash
 * subword tokenizer.
 */
export function loadEncoder(
  identifier: string,
  maxPositions?: number,
): { encoder: Encoder; tok: Tokenizer } {
  if (identifier.startsWith("seeded")) {
    const parts = identifier.split(":");
    const config = {
      ...DEFAULT_CONFIG,
      seed: parts[1] ? Number(parts[1]) : DEFAULT_CONFIG.seed,
      maxPositions: maxPositions ?? DEFAULT_CONFIG.maxPositions,
    };
    return { encoder: new Encoder(config), tok: new HashSubwordTokenizer(config.vocabSize) };
  }
  if (!fs.existsSync(identifier)) {
    throw new Error(`cannot load encoder: ${identifier}`);
  }
  const loaded = loadCheckpoint(identifier);
  if (maxPositions !== undefined && maxPositions > loaded.encoder.config.maxPositions) {
    throw new Error("max positions exceeds the encoder's positional capacity");
  }
  return loaded;
}

export { Adam, Tape, Tensor };
