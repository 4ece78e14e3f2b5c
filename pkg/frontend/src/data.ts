/** Line-delimited readers/writers for the pipeline's file contracts. */

import * as fs from "node:fs";

import { tokenizeWords } from "./subwords.js";

export interface CorpusDoc {
  id: string;
  words: string[];
}

export interface RopInstance {
  id: string;
  rep: string[];
  nonRep: string[];
  repScore: number;
  nonRepScore: number;
}

function readLines(path: string): string[] {
  return fs
    .readFileSync(path, "utf-8")
    .split("\n")
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
}

export function readCorpus(path: string): CorpusDoc[] {
  return readLines(path).map((line, i) => {
    const rec = JSON.parse(line) as { id?: string; title?: string; text?: string };
    if (rec.id === undefined || rec.text === undefined) {
      throw new Error(`corpus line ${i + 1}: missing 'id' or 'text'`);
    }
    const text = rec.title ? `${rec.title} ${rec.text}` : rec.text;
    return { id: String(rec.id), words: tokenizeWords(text) };
  });
}

export function readInstances(path: string): RopInstance[] {
  return readLines(path).map((line, i) => {
    const rec = JSON.parse(line) as {
      id: string;
      rep: string[];
      non_rep: string[];
      rep_score: number;
      non_rep_score: number;
    };
    if (!rec.rep?.length || rec.rep.length !== rec.non_rep?.length) {
      throw new Error(`instance line ${i + 1}: malformed word sets`);
    }
    return {
      id: String(rec.id),
      rep: rec.rep,
      nonRep: rec.non_rep,
      repScore: rec.rep_score,
      nonRepScore: rec.non_rep_score,
    };
  });
}

export function writeAttention(
  path: string,
  records: Array<{ id: string; weights: number[] }>,
): void {
  const out = records
    .map((r) => JSON.stringify({ id: r.id, weights: r.weights }))
    .join("\n");
  fs.writeFileSync(path, out.length ? out + "\n" : "");
}

export function writeTrajectory(
  path: string,
  rows: Array<{ step: number; rop: number; mlm: number }>,
): void {
  const out = rows.map((r) => JSON.stringify(r)).join("\n");
  fs.writeFileSync(path, out.length ? out + "\n" : "");
}
