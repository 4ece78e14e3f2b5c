import { describe, expect, it } from "vitest";

import { Encoder } from "../src/encoder.js";
import { Tape, Tensor } from "../src/tensor.js";
import { mlmLoss, ropHingeValue, ropHinge } from "../src/trainer.js";

describe("pairwise hinge", () => {
  it("known values", () => {
    expect(ropHingeValue(2.0, 0.5)).toBe(0);
    expect(ropHingeValue(0.5, 0.5)).toBe(1);
    expect(ropHingeValue(0.2, 0.9)).toBeCloseTo(1.7, 12);
  });

  it("tape version matches the scalar helper", () => {
    const tape = new Tape();
    for (const [hi, lo] of [[2.0, 0.5], [0.5, 0.5], [0.2, 0.9], [-1, 3]]) {
      const out = ropHinge(tape, Tensor.scalar(hi!), Tensor.scalar(lo!));
      expect(out.data[0]).toBeCloseTo(ropHingeValue(hi!, lo!), 12);
    }
  });
});

describe("masked-lm loss", () => {
  function logitsOf(rows: number[][]): Tensor {
    const t = new Tensor(rows.length, rows[0]!.length);
    rows.forEach((r, i) => r.forEach((v, j) => (t.data[i * t.cols + j] = v)));
    return t;
  }

  it("near zero for a confident correct predictor", () => {
    const logits = logitsOf([
      [30, 0, 0, 0],
      [0, 0, 30, 0],
    ]);
    const loss = new Tape().meanNll(logits, [0, 2]);
    expect(loss.data[0]).toBeLessThan(1e-10);
  });

  it("log K for uniform logits", () => {
    const k = 7;
    const logits = logitsOf([new Array(k).fill(0.25)]);
    const loss = new Tape().meanNll(logits, [3]);
    expect(loss.data[0]).toBeCloseTo(Math.log(k), 12);
  });

  it("invariant to a constant logit shift", () => {
    const rows = [
      [0.3, -1.2, 0.8, 2.1],
      [1.0, 0.0, -0.5, 0.2],
    ];
    const targets = [2, 0];
    const base = new Tape().meanNll(logitsOf(rows), targets).data[0]!;
    const shifted = new Tape().meanNll(
      logitsOf(rows.map((r) => r.map((v) => v + 17.5))),
      targets,
    ).data[0]!;
    expect(shifted).toBeCloseTo(base, 10);
  });

  it("refuses an empty mask set", () => {
    const encoder = new Encoder({
      vocabSize: 10,
      dModel: 4,
      nHeads: 2,
      nLayers: 1,
      dFf: 8,
      maxPositions: 8,
      seed: 1,
    });
    const tape = new Tape();
    const { hidden } = encoder.forward(tape, [1, 5, 2]);
    expect(() => mlmLoss(tape, encoder, hidden, [], [])).toThrow(/masked/);
  });
});
