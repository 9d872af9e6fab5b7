/** Shared toy corpus, vocabularies, and tiny model configs for the tests. */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import type { DialogTuple } from "../src/data";
import { SPECIALS, Vocab, tokenize } from "../src/tokens";
import type { Seq2SeqConfig } from "../src/seq2seq";
import type { TransformerConfig } from "../src/transformer";

export function tmpdir(tag: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), `nb-${tag}-`));
}

/*
 * Every word below survives the benchmark's text normalization unchanged
 * (lowercase, no trailing sibilants, no URLs/mentions/digits), so split
 * files, vocabulary files, and generated responses agree token for token
 * across the two packages.
 */
export const DEVICES = [
  "phone",
  "tablet",
  "watch",
  "laptop",
  "router",
  "camera",
  "speaker",
  "monitor",
] as const;
export const PROBLEMS = ["frozen", "blank", "slow", "loud"] as const;
export const ACTIONS = ["restart", "recharge", "update", "unplug"] as const;
export const FOLLOWUPS = [
  "wait one minute",
  "check the cable",
  "open the setting menu",
  "poke the reset pin",
  "clean the port",
  "update the firmware",
  "check the battery level",
  "move closer to the router",
] as const;

/** 32 distinct question → answer pairs for memorization runs. */
export function toyCorpus(): DialogTuple[] {
  const tuples: DialogTuple[] = [];
  let id = 1;
  for (let d = 0; d < DEVICES.length; d++) {
    for (let p = 0; p < PROBLEMS.length; p++) {
      const minute = String(id).padStart(2, "0");
      tuples.push({
        dialogId: id,
        turnIndex: 1,
        context: "",
        question: `my ${DEVICES[d]} went ${PROBLEMS[p]} today`,
        answer: `please ${ACTIONS[p]} the ${DEVICES[d]} then ${FOLLOWUPS[d]}`,
        answerTime: `2017-10-01T12:${minute}:00Z`,
      });
      id++;
    }
  }
  return tuples;
}

/** First-seen-order vocabulary over the toy corpus. */
export function corpusVocab(tuples: readonly DialogTuple[] = toyCorpus()): Vocab {
  const seen = new Set<string>();
  const words: string[] = [];
  for (const t of tuples) {
    for (const tok of [...tokenize(t.question), ...tokenize(t.answer)]) {
      if (!seen.has(tok)) {
        seen.add(tok);
        words.push(tok);
      }
    }
  }
  return new Vocab(words);
}

export function writeSplitJsonl(filePath: string, tuples: readonly DialogTuple[]): void {
  const lines = tuples.map((t) =>
    JSON.stringify({
      dialog_id: t.dialogId,
      turn_index: t.turnIndex,
      context: t.context,
      question: t.question,
      answer: t.answer,
      answer_time: t.answerTime,
    })
  );
  fs.writeFileSync(filePath, lines.join("\n") + "\n", "utf-8");
}

export function writeVocabFile(filePath: string, vocab: Vocab): void {
  fs.writeFileSync(filePath, vocab.tokens.join("\n") + "\n", "utf-8");
}

/**
 * Deterministic nonzero vector for a word; used to synthesize embedding
 * files that cover the whole toy vocabulary.
 */
export function toyVector(word: string, dim: number): number[] {
  let h = 17;
  for (let i = 0; i < word.length; i++) {
    h = (h * 31 + word.charCodeAt(i)) % 9973;
  }
  const out: number[] = [];
  for (let j = 0; j < dim; j++) {
    out.push(((h * (j + 3)) % 97) / 97 + 0.05);
  }
  return out;
}

export function writeEmbeddingFile(filePath: string, words: readonly string[], dim: number): void {
  const lines = words
    .filter((w) => !(SPECIALS as readonly string[]).includes(w))
    .map((w) => `${w} ${toyVector(w, dim).map((v) => v.toFixed(6)).join(" ")}`);
  fs.writeFileSync(filePath, lines.join("\n") + "\n", "utf-8");
}

export function tinySeq2SeqConfig(vocabSize: number): Seq2SeqConfig {
  return {
    vocabSize,
    embeddingDim: 32,
    encoderUnits: 48,
    decoderUnits: 48,
    maxSteps: 12,
    dropoutKeep: 1.0,
    baseLearningRate: 3e-3,
    decayPerEpoch: 0.998,
    seed: 7,
  };
}

export function tinyTransformerConfig(vocabSize: number): TransformerConfig {
  return {
    vocabSize,
    layers: 2,
    heads: 2,
    dModel: 32,
    dInner: 64,
    dK: 16,
    dV: 16,
    dropoutKeep: 1.0,
    warmupSteps: 30,
    maxSteps: 12,
    seed: 11,
  };
}
