/**
 * Joint training demo: pairwise hinge preference over sampled word sets
 * plus masked-LM over the document side, optimized together as an
 * unweighted sum.
 */

import { CorpusDoc, RopInstance, writeTrajectory } from "./data.js";
import { Adam, Encoder, EncoderConfig, Tape, Tensor, saveCheckpoint } from "./encoder.js";
import { Rng } from "./rng.js";
import { CLS, MASK, NUM_SPECIALS, SEP, Tokenizer, WordTokenizer } from "./subwords.js";

export const MASK_RATE = 0.15;

/** Hinge on the score difference: max(0, 1 - sHi + sLo). */
export function ropHingeValue(scoreHi: number, scoreLo: number): number {
  return Math.max(0, 1 - scoreHi + scoreLo);
}

export function ropHinge(tape: Tape, scoreHi: Tensor, scoreLo: Tensor): Tensor {
  return tape.relu(tape.addScalar(tape.sub(scoreLo, scoreHi), 1));
}

export function mlmLoss(
  tape: Tape,
  encoder: Encoder,
  hidden: Tensor,
  positions: number[],
  targets: number[],
): Tensor {
  if (positions.length === 0) throw new Error("mlm loss needs masked positions");
  return tape.meanNll(encoder.mlmLogits(tape, hidden, positions), targets);
}

export interface EncodedPair {
  ids: number[];
  segments: number[];
  /** Positions that were masked/corrupted, with their original ids. */
  maskedPositions: number[];
  targets: number[];
  /** Span [start, end) of the word-set tokens, for the no-mask invariant. */
  setSpan: [number, number];
}

/**
 * [CLS] word-set [SEP] document [SEP] with segment markers, 15% of the
 * document tokens selected for MLM with the 80/10/10 corruption split.
 * The sampled word set is never masked.
 */
export function encodeSequence(
  wordSet: string[],
  docWords: string[],
  tok: Tokenizer,
  maxPositions: number,
  rng: Rng | null,
  vocabSize: number,
): EncodedPair {
  const ids: number[] = [CLS];
  const segments: number[] = [0];
  const setStart = ids.length;
  for (const w of wordSet) {
    for (const id of tok.encodeWord(w)) {
      ids.push(id);
      segments.push(0);
    }
  }
  const setEnd = ids.length;
  ids.push(SEP);
  segments.push(0);
  const docStart = ids.length;
  for (const w of docWords) {
    const pieces = tok.encodeWord(w);
    if (ids.length + pieces.length + 1 > maxPositions) break;
    for (const id of pieces) {
      ids.push(id);
      segments.push(1);
    }
  }
  const docEnd = ids.length;
  ids.push(SEP);
  segments.push(1);

  const maskedPositions: number[] = [];
  const targets: number[] = [];
  if (rng && docEnd > docStart) {
    const candidates: number[] = [];
    for (let p = docStart; p < docEnd; p++) candidates.push(p);
    let chosen = candidates.filter(() => rng.next() < MASK_RATE);
    if (chosen.length === 0) {
      chosen = [candidates[rng.int(candidates.length)]!];
    }
    for (const p of chosen) {
      maskedPositions.push(p);
      targets.push(ids[p]!);
      const roll = rng.next();
      if (roll < 0.8) {
        ids[p] = MASK;
      } else if (roll < 0.9) {
        ids[p] = NUM_SPECIALS + rng.int(vocabSize - NUM_SPECIALS);
      } // else keep the original token
    }
  }
  return { ids, segments, maskedPositions, targets, setSpan: [setStart, setEnd] };
}

export interface TrainOptions {
  steps: number;
  seed: number;
  learningRate: number;
  maxPositions: number;
  heldoutFraction: number;
  encoderConfig?: Partial<EncoderConfig>;
  trajectoryPath?: string;
  checkpointPath?: string;
  log?: (line: string) => void;
}

export interface TrainResult {
  encoder: Encoder;
  tok: WordTokenizer;
  trajectory: Array<{ step: number; rop: number; mlm: number }>;
  heldoutAccuracy: number;
  heldoutCount: number;
}

export function train(
  instances: RopInstance[],
  corpus: CorpusDoc[],
  options: TrainOptions,
): TrainResult {
  if (instances.length === 0) throw new Error("instance file is empty");
  const docs = new Map(corpus.map((d) => [d.id, d.words]));
  const usable = instances.filter((inst) => docs.has(inst.id));
  if (usable.length === 0) throw new Error("no instance matches a corpus document");

  const tok = WordTokenizer.fromCorpus(corpus.map((d) => d.words.join(" ")));
  const config: EncoderConfig = {
    vocabSize: tok.vocabSize,
    dModel: 32,
    nHeads: 4,
    nLayers: 2,
    dFf: 64,
    maxPositions: options.maxPositions,
    seed: options.seed,
    ...options.encoderConfig,
  };
  const encoder = new Encoder(config);
  const rng = new Rng(options.seed ^ 0x5eed);

  const order = [...usable];
  rng.shuffle(order);
  const nHeld = Math.max(1, Math.floor(order.length * options.heldoutFraction));
  const heldout = order.slice(0, nHeld);
  const trainSet = order.slice(nHeld);
  if (trainSet.length === 0) throw new Error("not enough instances to train on");

  const optim = new Adam(encoder.parameters(), options.learningRate);
  const trajectory: Array<{ step: number; rop: number; mlm: number }> = [];

  for (let step = 0; step < options.steps; step++) {
    const inst = trainSet[step % trainSet.length]!;
    const docWords = docs.get(inst.id)!;
    const tape = new Tape();

    const seqHi = encodeSequence(
      inst.rep, docWords, tok, config.maxPositions, rng, config.vocabSize,
    );
    const seqLo = encodeSequence(
      inst.nonRep, docWords, tok, config.maxPositions, rng, config.vocabSize,
    );
    const outHi = encoder.forward(tape, seqHi.ids, seqHi.segments);
    const outLo = encoder.forward(tape, seqLo.ids, seqLo.segments);
    const rop = ropHinge(
      tape,
      encoder.score(tape, outHi.hidden),
      encoder.score(tape, outLo.hidden),
    );
    const mlmHi = mlmLoss(tape, encoder, outHi.hidden, seqHi.maskedPositions, seqHi.targets);
    const mlmLo = mlmLoss(tape, encoder, outLo.hidden, seqLo.maskedPositions, seqLo.targets);
    const mlm = tape.scale(tape.add(mlmHi, mlmLo), 0.5);
    const total = tape.add(rop, mlm);

    optim.zeroGrad();
    tape.backward(total);
    optim.step();

    const row = { step, rop: rop.data[0]!, mlm: mlm.data[0]! };
    trajectory.push(row);
    options.log?.(JSON.stringify(row));
  }

  let correct = 0;
  for (const inst of heldout) {
    const [sHi, sLo] = scorePair(encoder, tok, inst, docs.get(inst.id)!, config);
    if (sHi > sLo) correct += 1;
  }
  const heldoutAccuracy = correct / heldout.length;

  if (options.trajectoryPath) writeTrajectory(options.trajectoryPath, trajectory);
  if (options.checkpointPath) saveCheckpoint(options.checkpointPath, encoder, tok);
  return { encoder, tok, trajectory, heldoutAccuracy, heldoutCount: heldout.length };
}

export function scorePair(
  encoder: Encoder,
  tok: Tokenizer,
  inst: RopInstance,
  docWords: string[],
  config: EncoderConfig,
): [number, number] {
  const tape = new Tape();
  const seqHi = encodeSequence(inst.rep, docWords, tok, config.maxPositions, null, config.vocabSize);
  const seqLo = encodeSequence(inst.nonRep, docWords, tok, config.maxPositions, null, config.vocabSize);
  const sHi = encoder.score(tape, encoder.forward(tape, seqHi.ids, seqHi.segments).hidden);
  const sLo = encoder.score(tape, encoder.forward(tape, seqLo.ids, seqLo.segments).hidden);
  return [sHi.data[0]!, sLo.data[0]!];
}
