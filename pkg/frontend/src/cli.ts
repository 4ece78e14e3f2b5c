/**
 * Command line front end.
 *
 *   extract --input corpus.jsonl --encoder seeded:7 --output attention.jsonl
 *   train   --instances inst.jsonl --corpus corpus.jsonl --steps 200
 */

import { readCorpus, readInstances, writeAttention } from "./data.js";
import { loadEncoder } from "./encoder.js";
import { extractAll } from "./extract.js";
import { train } from "./trainer.js";

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]!;
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new UsageError(`expected '--option value' pairs, got '${key}'`);
    }
    args.set(key.slice(2), value);
  }
  return args;
}

class UsageError extends Error {}

function required(args: Map<string, string>, key: string): string {
  const value = args.get(key);
  if (value === undefined) throw new UsageError(`missing --${key}`);
  return value;
}

function numeric(args: Map<string, string>, key: string, fallback: number): number {
  const raw = args.get(key);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new UsageError(`--${key} must be a number`);
  return value;
}

const USAGE = `usage:
  extract --input <corpus.jsonl> --encoder <id|checkpoint> --output <attention.jsonl>
          [--max-positions 512] [--layer N]
  train   --instances <instances.jsonl> --corpus <corpus.jsonl>
          [--steps 200] [--seed 1] [--learning-rate 0.005]
          [--max-positions 128] [--heldout-fraction 0.1]
          [--trajectory <path>] [--checkpoint <path>]`;

function runExtract(args: Map<string, string>): void {
  const docs = readCorpus(required(args, "input"));
  const maxPositions = numeric(args, "max-positions", 512);
  const { encoder, tok } = loadEncoder(required(args, "encoder"), maxPositions);
  const layerArg = args.get("layer");
  const results = extractAll(docs, {
    encoder,
    tok,
    maxPositions,
    layer: layerArg === undefined ? undefined : Number(layerArg),
  });
  writeAttention(required(args, "output"), results);
  process.stderr.write(`wrote ${results.length} attention records\n`);
}

function runTrain(args: Map<string, string>): void {
  const instances = readInstances(required(args, "instances"));
  const corpus = readCorpus(required(args, "corpus"));
  const result = train(instances, corpus, {
    steps: numeric(args, "steps", 200),
    seed: numeric(args, "seed", 1),
    learningRate: numeric(args, "learning-rate", 0.005),
    maxPositions: numeric(args, "max-positions", 128),
    heldoutFraction: numeric(args, "heldout-fraction", 0.1),
    trajectoryPath: args.get("trajectory"),
    checkpointPath: args.get("checkpoint"),
    log: (line) => process.stdout.write(line + "\n"),
  });
  process.stderr.write(
    `heldout accuracy ${result.heldoutAccuracy.toFixed(3)} ` +
      `over ${result.heldoutCount} pairs\n`,
  );
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "extract") {
      runExtract(parseArgs(rest));
    } else if (command === "train") {
      runTrain(parseArgs(rest));
    } else {
      process.stderr.write(USAGE + "\n");
      return 1;
    }
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`error: ${err.message}\n${USAGE}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

process.exit(main(process.argv.slice(2)));
