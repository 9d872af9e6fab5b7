/**
 * Checkpoint directory layout:
 *
 *   config.json      {"kind", "config", "vocab_fingerprint"}
 *   weights.json     [{"name", "shape", "values"}, ...]  (float32 values)
 *   loss_curve.json  [epoch-mean nats/token, ...]
 *
 * Weight names are stored without the per-instance prefix so a checkpoint
 * written by one process can be loaded by any other. JSON serialization of
 * float32 values is lossless: every float32 round-trips exactly through a
 * decimal double.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { Seq2SeqConfig, Seq2SeqModel, ConfigError, validateSeq2SeqConfig } from "./seq2seq";
import { TransformerConfig, TransformerModel, validateTransformerConfig } from "./transformer";
import { Vocab } from "./tokens";

export type ModelKind = "seq2seq" | "transformer";
export type AnyModel = Seq2SeqModel | TransformerModel;

export class CheckpointError extends Error {}

interface WeightEntry {
  name: string;
  shape: number[];
  values: number[];
}

interface CheckpointHeader {
  kind: ModelKind;
  config: Seq2SeqConfig | TransformerConfig;
  vocab_fingerprint: string;
}

/** Stable 16-hex-digit digest binding a checkpoint to its vocabulary. */
export function vocabFingerprint(vocab: Vocab): string {
  const canonical = JSON.stringify(vocab.tokens);
  return crypto.createHash("sha256").update(canonical, "utf-8").digest("hex").slice(0, 16);
}

function stripPrefix(name: string, prefix: string): string {
  return name.startsWith(prefix) ? name.slice(prefix.length) : name;
}

export function saveCheckpoint(
  dir: string,
  kind: ModelKind,
  model: AnyModel,
  lossCurve: number[]
): void {
  fs.mkdirSync(dir, { recursive: true });
  const header: CheckpointHeader = {
    kind,
    config: model.cfg,
    vocab_fingerprint: vocabFingerprint(model.vocab),
  };
  const weights: WeightEntry[] = [];
  for (const [name, variable] of model.variables) {
    weights.push({
      name: stripPrefix(name, model.prefix),
      shape: [...variable.shape],
      values: Array.from(variable.dataSync() as Float32Array),
    });
  }
  fs.writeFileSync(path.join(dir, "config.json"), JSON.stringify(header, null, 2) + "\n");
  fs.writeFileSync(path.join(dir, "weights.json"), JSON.stringify(weights) + "\n");
  fs.writeFileSync(path.join(dir, "loss_curve.json"), JSON.stringify(lossCurve) + "\n");
}

function readJson(dir: string, file: string): unknown {
  const full = path.join(dir, file);
  if (!fs.existsSync(full)) {
    throw new CheckpointError(`checkpoint is missing ${file}: ${full}`);
  }
  try {
    return JSON.parse(fs.readFileSync(full, "utf-8"));
  } catch (err) {
    throw new CheckpointError(`checkpoint file ${full} is not valid JSON: ${err}`);
  }
}

export interface LoadedCheckpoint {
  kind: ModelKind;
  model: AnyModel;
  lossCurve: number[];
}

export function loadCheckpoint(dir: string, vocab: Vocab): LoadedCheckpoint {
  const header = readJson(dir, "config.json") as CheckpointHeader;
  if (header.kind !== "seq2seq" && header.kind !== "transformer") {
    throw new CheckpointError(`unknown checkpoint kind: ${String(header.kind)}`);
  }
  const expected = vocabFingerprint(vocab);
  if (header.vocab_fingerprint !== expected) {
    throw new CheckpointError(
      `checkpoint was trained against a different vocabulary ` +
        `(${header.vocab_fingerprint} != ${expected})`
    );
  }

  let model: AnyModel;
  if (header.kind === "seq2seq") {
    const cfg = header.config as Seq2SeqConfig;
    validateSeq2SeqConfig(cfg);
    model = new Seq2SeqModel(cfg, vocab, null);
  } else {
    const cfg = header.config as TransformerConfig;
    validateTransformerConfig(cfg);
    model = new TransformerModel(cfg, vocab, null);
  }

  const weights = readJson(dir, "weights.json") as WeightEntry[];
  const seen = new Set<string>();
  for (const entry of weights) {
    const key = `${model.prefix}${entry.name}`;
    const variable = model.variables.get(key);
    if (!variable) {
      model.dispose();
      throw new CheckpointError(`checkpoint has unknown weight: ${entry.name}`);
    }
    if (JSON.stringify([...variable.shape]) !== JSON.stringify(entry.shape)) {
      model.dispose();
      throw new CheckpointError(
        `weight ${entry.name} has shape [${entry.shape}], model expects [${variable.shape}]`
      );
    }
    variable.assign(tf.tensor(entry.values, entry.shape, "float32"));
    seen.add(entry.name);
  }
  for (const name of model.variables.keys()) {
    const bare = stripPrefix(name, model.prefix);
    if (!seen.has(bare)) {
      model.dispose();
      throw new CheckpointError(`checkpoint is missing weight: ${bare}`);
    }
  }

  const lossCurve = readJson(dir, "loss_curve.json") as number[];
  return { kind: header.kind, model, lossCurve };
}
