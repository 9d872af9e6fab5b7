/**
 * Pretrained word vectors and the embedding matrices built from them.
 *
 * The loader reads the common text layout (one `word v1 … vd` line per
 * entry, optional `count dim` header, duplicates keep the first row) — the
 * same file the benchmark's evaluator consumes, so one vector file serves
 * both sides of the pipeline.
 */

import * as fs from "node:fs";
import * as tf from "@tensorflow/tfjs";

import { SPECIALS, Vocab } from "./tokens";

export class EmbeddingError extends Error {}

export interface PretrainedTable {
  dimension: number;
  vectors: Map<string, Float32Array>;
}

export function loadTextEmbeddings(path: string): PretrainedTable {
  const raw = fs.readFileSync(path, "utf-8");
  const lines = raw.split("\n");
  const vectors = new Map<string, Float32Array>();
  let dimension = 0;
  let start = 0;

  const firstNonEmpty = lines.findIndex((l) => l.trim() !== "");
  if (firstNonEmpty === -1) {
    throw new EmbeddingError(`${path}: no embedding entries found`);
  }
  const headParts = lines[firstNonEmpty].trim().split(/\s+/u);
  if (headParts.length === 2 && headParts.every((p) => /^\d+$/u.test(p))) {
    start = firstNonEmpty + 1; // "count dim" header line
  }

  for (let i = start; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") {
      continue;
    }
    const parts = line.split(/\s+/u);
    if (parts.length < 2) {
      throw new EmbeddingError(`${path} line ${i + 1}: expected a word and at least one value`);
    }
    const word = parts[0];
    const values = new Float32Array(parts.length - 1);
    for (let j = 1; j < parts.length; j++) {
      const v = Number(parts[j]);
      if (!Number.isFinite(v)) {
        throw new EmbeddingError(`${path} line ${i + 1}: non-numeric value ${JSON.stringify(parts[j])}`);
      }
      values[j - 1] = v;
    }
    if (dimension === 0) {
      dimension = values.length;
    } else if (values.length !== dimension) {
      throw new EmbeddingError(
        `${path} line ${i + 1}: dimension ${values.length} does not match ${dimension}`
      );
    }
    if (!vectors.has(word)) {
      vectors.set(word, values);
    }
  }
  if (vectors.size === 0) {
    throw new EmbeddingError(`${path}: no embedding entries found`);
  }
  return { dimension, vectors };
}

export interface EmbeddingMatrices {
  encoder: tf.Variable<tf.Rank.R2>;
  decoder: tf.Variable<tf.Rank.R2>;
  /** Vocabulary entries whose rows were copied from the pretrained table. */
  pretrainedRows: number;
}

/**
 * One [vocab.size, dim] matrix per side. Rows for words found in the
 * pretrained table are copied from it; the remaining rows are seeded
 * random draws. Both matrices are trainable variables, and the encoder
 * and decoder never share storage — fine-tuning moves them independently.
 */
/**
 * Embedding lookup as a one-hot matrix product. Unlike tf.gather, every op
 * here has a registered gradient on all tfjs backends (the wasm backend has
 * no scatter-style gather gradient), and at the corpus scales this package
 * trains at, the extra multiply is negligible.
 */
export function embedRows(ids: tf.Tensor, table: tf.Tensor, vocabSize: number): tf.Tensor {
  const flat = ids.reshape([-1]) as tf.Tensor1D;
  const hot = tf.oneHot(flat, vocabSize).cast("float32") as tf.Tensor2D;
  const rows: tf.Tensor2D = tf.matMul(hot, table as tf.Tensor2D);
  return rows.reshape([...ids.shape, rows.shape[1]]);
}

let embeddingInstance = 0;

export function buildEmbeddings(
  vocab: Vocab,
  pretrained: PretrainedTable | null,
  dim: number,
  seed = 1,
  names?: { encoder: string; decoder: string }
): EmbeddingMatrices {
  if (pretrained !== null && pretrained.dimension !== dim) {
    throw new EmbeddingError(
      `pretrained vectors have dimension ${pretrained.dimension}, expected ${dim}`
    );
  }
  // Variable names must be globally unique in the tfjs registry, and
  // gradient maps are keyed by them; callers that train pass their own.
  const unique = embeddingInstance++;
  const encoderName = names?.encoder ?? `emb${unique}/encoder`;
  const decoderName = names?.decoder ?? `emb${unique}/decoder`;
  let pretrainedRows = 0;

  const build = (matrixSeed: number, name: string): tf.Variable<tf.Rank.R2> => {
    const init = tf.randomNormal([vocab.size, dim], 0, 0.08, "float32", matrixSeed);
    const buffer = init.dataSync() as Float32Array;
    init.dispose();
    if (pretrained !== null) {
      // Specials keep their random rows: they are placeholders, not words,
      // even when a vector table happens to contain their literal spelling.
      for (let row = SPECIALS.length; row < vocab.size; row++) {
        const vec = pretrained.vectors.get(vocab.tokens[row]);
        if (vec !== undefined) {
          buffer.set(vec, row * dim);
        }
      }
    }
    return tf.variable(tf.tensor2d(buffer, [vocab.size, dim]), true, name) as tf.Variable<tf.Rank.R2>;
  };

  if (pretrained !== null) {
    for (const token of vocab.tokens.slice(SPECIALS.length)) {
      if (pretrained.vectors.has(token)) {
        pretrainedRows += 1;
      }
    }
  }
  return {
    encoder: build(seed, encoderName),
    decoder: build(seed + 104729, decoderName),
    pretrainedRows,
  };
}
