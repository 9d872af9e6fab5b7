/**
 * File-level operations tying the models to the benchmark's exchange
 * formats: train from a train-split JSONL plus vocabulary file into a
 * checkpoint directory, then generate a responses JSONL for a test split.
 *
 * The checkpoint directory written by `trainFromFiles` additionally holds a
 * verbatim copy of the vocabulary file (`vocab.txt`) so generation needs
 * nothing beyond the directory itself.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  AnyModel,
  CheckpointError,
  ModelKind,
  loadCheckpoint,
  saveCheckpoint,
} from "./checkpoint";
import { DialogTuple, ResponseRecord, readTuplesJsonl, sourceText, writeResponsesJsonl } from "./data";
import { Seq2SeqConfig, Seq2SeqModel, TrainingBatch } from "./seq2seq";
import { TransformerConfig, TransformerModel } from "./transformer";
import { Vocab, detokenize, encodeSource, encodeTarget, tokenize } from "./tokens";
import { PretrainedTable } from "./embeddings";

export interface TrainResult {
  checkpointDir: string;
  lossCurve: number[];
  examples: number;
}

/** Encode dialog tuples into one teacher-forcing batch. */
export function buildBatch(vocab: Vocab, tuples: readonly DialogTuple[], maxSteps: number): TrainingBatch {
  const src: number[][] = [];
  const tgtIn: number[][] = [];
  const tgtOut: number[][] = [];
  for (const t of tuples) {
    src.push(encodeSource(vocab, tokenize(sourceText(t)), maxSteps));
    const target = encodeTarget(vocab, tokenize(t.answer), maxSteps);
    tgtIn.push(target.inputs);
    tgtOut.push(target.targets);
  }
  return { src, tgtIn, tgtOut };
}

export interface TrainOptions {
  kind: ModelKind;
  config: Seq2SeqConfig | TransformerConfig;
  trainPath: string;
  vocabPath: string;
  epochs: number;
  checkpointDir: string;
  pretrained?: PretrainedTable | null;
  onEpoch?: (epoch: number, loss: number) => void;
}

export function trainFromFiles(opts: TrainOptions): TrainResult {
  const vocab = Vocab.load(opts.vocabPath);
  const tuples = readTuplesJsonl(opts.trainPath);
  const batch = buildBatch(vocab, tuples, opts.config.maxSteps);

  let model: AnyModel;
  if (opts.kind === "seq2seq") {
    model = new Seq2SeqModel(opts.config as Seq2SeqConfig, vocab, opts.pretrained ?? null);
  } else {
    model = new TransformerModel(opts.config as TransformerConfig, vocab, opts.pretrained ?? null);
  }
  try {
    const lossCurve = model.train(batch, opts.epochs, opts.onEpoch);
    saveCheckpoint(opts.checkpointDir, opts.kind, model, lossCurve);
    fs.copyFileSync(opts.vocabPath, path.join(opts.checkpointDir, "vocab.txt"));
    return { checkpointDir: opts.checkpointDir, lossCurve, examples: tuples.length };
  } finally {
    model.dispose();
  }
}

export interface GenerateResult {
  outPath: string;
  responses: number;
  system: ModelKind;
}

/** Batch size for greedy decoding; keeps peak memory flat on large splits. */
const GENERATION_CHUNK = 32;

export function generateFromCheckpoint(
  checkpointDir: string,
  testPath: string,
  outPath: string,
  maxLen = 60
): GenerateResult {
  const vocabCopy = path.join(checkpointDir, "vocab.txt");
  if (!fs.existsSync(vocabCopy)) {
    throw new CheckpointError(`checkpoint is missing vocab.txt: ${vocabCopy}`);
  }
  const vocab = Vocab.load(vocabCopy);
  const { kind, model } = loadCheckpoint(checkpointDir, vocab);
  try {
    const tuples = readTuplesJsonl(testPath);
    const records: ResponseRecord[] = [];
    for (let start = 0; start < tuples.length; start += GENERATION_CHUNK) {
      const chunk = tuples.slice(start, start + GENERATION_CHUNK);
      const srcIds = chunk.map((t) =>
        encodeSource(vocab, tokenize(sourceText(t)), model.cfg.maxSteps)
      );
      const result = model.generate(srcIds, Math.min(maxLen, model.cfg.maxSteps));
      chunk.forEach((t, i) => {
        records.push({
          dialogId: t.dialogId,
          turnIndex: t.turnIndex,
          context: t.context,
          question: t.question,
          goldAnswer: t.answer,
          response: detokenize(vocab.decode(result.ids[i])),
          system: kind,
        });
      });
    }
    const responses = writeResponsesJsonl(outPath, records);
    return { outPath, responses, system: kind };
  } finally {
    model.dispose();
  }
}
