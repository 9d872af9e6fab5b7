/**
 * Transformer responder: sinusoidal positions, multi-head scaled
 * dot-product attention, post-norm residual blocks, and the inverse
 * square-root learning-rate schedule driving Adam step by step.
 */

import * as tf from "@tensorflow/tfjs";

import { PretrainedTable, buildEmbeddings, embedRows } from "./embeddings";
import { Adam } from "./optim";
import { lrate } from "./schedule";
import { ConfigError } from "./seq2seq";
import { Vocab } from "./tokens";
import type { GreedyResult, TrainingBatch } from "./seq2seq";

export interface TransformerConfig {
  /** Total vocabulary size including the specials block. */
  vocabSize: number;
  /** Identical encoder and decoder depth. */
  layers: number;
  heads: number;
  dModel: number;
  dInner: number;
  dK: number;
  dV: number;
  /** Keep probability; 1.0 disables dropout. */
  dropoutKeep: number;
  warmupSteps: number;
  maxSteps: number;
  seed: number;
}

/** Production-scale defaults; tests shrink everything but the shape rules. */
export function defaultTransformerConfig(vocabSize: number): TransformerConfig {
  return {
    vocabSize,
    layers: 2,
    heads: 4,
    dModel: 256,
    dInner: 512,
    dK: 64,
    dV: 64,
    dropoutKeep: 0.9,
    warmupSteps: 4000,
    maxSteps: 60,
    seed: 11,
  };
}

export function validateTransformerConfig(cfg: TransformerConfig): void {
  const positiveInt = (v: number, what: string) => {
    if (!Number.isInteger(v) || v < 1) {
      throw new ConfigError(`${what} must be a positive integer, got ${v}`);
    }
  };
  positiveInt(cfg.vocabSize, "vocabSize");
  positiveInt(cfg.layers, "layers");
  positiveInt(cfg.heads, "heads");
  positiveInt(cfg.dModel, "dModel");
  positiveInt(cfg.dInner, "dInner");
  positiveInt(cfg.dK, "dK");
  positiveInt(cfg.dV, "dV");
  positiveInt(cfg.warmupSteps, "warmupSteps");
  positiveInt(cfg.maxSteps, "maxSteps");
  if (cfg.dModel % cfg.heads !== 0) {
    throw new ConfigError(`dModel (${cfg.dModel}) must be divisible by heads (${cfg.heads})`);
  }
  if (!(cfg.dropoutKeep > 0 && cfg.dropoutKeep <= 1)) {
    throw new ConfigError(`dropoutKeep must be in (0, 1], got ${cfg.dropoutKeep}`);
  }
}

/** Sinusoidal position table: [maxSteps, dModel]. */
export function positionalEncoding(maxSteps: number, dModel: number): tf.Tensor2D {
  const data = new Float32Array(maxSteps * dModel);
  for (let pos = 0; pos < maxSteps; pos++) {
    for (let i = 0; i < dModel; i++) {
      const angle = pos / Math.pow(10000, (2 * Math.floor(i / 2)) / dModel);
      data[pos * dModel + i] = i % 2 === 0 ? Math.sin(angle) : Math.cos(angle);
    }
  }
  return tf.tensor2d(data, [maxSteps, dModel]);
}

export interface AttentionMaps {
  /** Per encoder layer: [B, H, Tsrc, Tsrc]. */
  encoderSelf: number[][][][][];
  /** Per decoder layer: [B, H, Ttgt, Ttgt]. */
  decoderSelf: number[][][][][];
  /** Per decoder layer: [B, H, Ttgt, Tsrc]. */
  encoderDecoder: number[][][][][];
}

let instanceCounter = 0;

export class TransformerModel {
  readonly cfg: TransformerConfig;
  readonly vocab: Vocab;
  readonly variables = new Map<string, tf.Variable>();
  readonly prefix: string;
  /** Learning rate applied at each optimizer step, in order. */
  readonly lrTrace: number[] = [];
  private readonly posTable: tf.Tensor2D;
  private readonly optimizer = new Adam();

  constructor(cfg: TransformerConfig, vocab: Vocab, pretrained: PretrainedTable | null = null) {
    validateTransformerConfig(cfg);
    if (cfg.vocabSize !== vocab.size) {
      throw new ConfigError(
        `config expects vocabulary of ${cfg.vocabSize} tokens, file has ${vocab.size}`
      );
    }
    this.cfg = cfg;
    this.vocab = vocab;
    this.prefix = `transformer${instanceCounter++}/`;
    this.posTable = positionalEncoding(cfg.maxSteps, cfg.dModel);

    const emb = buildEmbeddings(vocab, pretrained, cfg.dModel, cfg.seed, {
      encoder: `${this.prefix}encEmb`,
      decoder: `${this.prefix}decEmb`,
    });
    this.variables.set(`${this.prefix}encEmb`, emb.encoder);
    this.variables.set(`${this.prefix}decEmb`, emb.decoder);

    const { layers, heads, dModel, dInner, dK, dV, vocabSize } = cfg;
    let seedOffset = 31;
    const attnBlock = (name: string) => {
      this.addVar(`${name}/Wq`, [dModel, heads * dK], seedOffset++);
      this.addVar(`${name}/Wk`, [dModel, heads * dK], seedOffset++);
      this.addVar(`${name}/Wv`, [dModel, heads * dV], seedOffset++);
      this.addVar(`${name}/Wo`, [heads * dV, dModel], seedOffset++);
    };
    const normBlock = (name: string) => {
      this.addConst(`${name}/gamma`, [dModel], 1);
      this.addConst(`${name}/beta`, [dModel], 0);
    };
    const ffnBlock = (name: string) => {
      this.addVar(`${name}/W1`, [dModel, dInner], seedOffset++);
      this.addConst(`${name}/b1`, [dInner], 0);
      this.addVar(`${name}/W2`, [dInner, dModel], seedOffset++);
      this.addConst(`${name}/b2`, [dModel], 0);
    };
    for (let l = 0; l < layers; l++) {
      attnBlock(`enc${l}/self`);
      normBlock(`enc${l}/ln1`);
      ffnBlock(`enc${l}/ffn`);
      normBlock(`enc${l}/ln2`);
      attnBlock(`dec${l}/self`);
      normBlock(`dec${l}/ln1`);
      attnBlock(`dec${l}/cross`);
      normBlock(`dec${l}/ln2`);
      ffnBlock(`dec${l}/ffn`);
      normBlock(`dec${l}/ln3`);
    }
    this.addVar("proj/kernel", [dModel, vocabSize], seedOffset++);
    this.addConst("proj/bias", [vocabSize], 0);
  }

  private addVar(name: string, shape: number[], seedOffset: number): void {
    const stddev = Math.sqrt(1 / shape[0]);
    const init = tf.randomNormal(shape, 0, stddev, "float32", this.cfg.seed * 1000 + seedOffset);
    this.variables.set(`${this.prefix}${name}`, tf.variable(init, true, `${this.prefix}${name}`));
  }

  private addConst(name: string, shape: number[], fill: number): void {
    const init = fill === 0 ? tf.zeros(shape) : tf.ones(shape).mul(fill);
    this.variables.set(`${this.prefix}${name}`, tf.variable(init, true, `${this.prefix}${name}`));
  }

  private v(name: string): tf.Tensor {
    return this.variables.get(`${this.prefix}${name}`)!;
  }

  private layerNorm(x: tf.Tensor3D, name: string): tf.Tensor3D {
    const mean = x.mean(-1, true);
    const variance = x.sub(mean).square().mean(-1, true);
    const normed = x.sub(mean).div(variance.add(1e-6).sqrt());
    return normed.mul(this.v(`${name}/gamma`)).add(this.v(`${name}/beta`)) as tf.Tensor3D;
  }

  /** Multi-head attention; returns the block output and the softmax maps. */
  private mha(
    name: string,
    queries: tf.Tensor3D,
    keysValues: tf.Tensor3D,
    maskBias: tf.Tensor
  ): { output: tf.Tensor3D; attn: tf.Tensor } {
    const { heads, dK, dV } = this.cfg;
    const [b, tq] = [queries.shape[0], queries.shape[1]];
    const tk = keysValues.shape[1];
    const split = (x: tf.Tensor3D, w: tf.Tensor, t: number, depth: number) =>
      tf
        .matMul(x.reshape([-1, x.shape[2]]), w as tf.Tensor2D)
        .reshape([b, t, heads, depth])
        .transpose([0, 2, 1, 3]); // [B, H, T, depth]
    const q = split(queries, this.v(`${name}/Wq`), tq, dK);
    const k = split(keysValues, this.v(`${name}/Wk`), tk, dK);
    const val = split(keysValues, this.v(`${name}/Wv`), tk, dV);
    const scores = tf
      .matMul(q, k, false, true)
      .div(Math.sqrt(dK))
      .add(maskBias); // [B, H, Tq, Tk]
    const attn = tf.softmax(scores, -1);
    const mixed = tf
      .matMul(attn, val) // [B, H, Tq, dV]
      .transpose([0, 2, 1, 3])
      .reshape([b, tq, heads * dV]);
    const output = tf
      .matMul(mixed.reshape([-1, heads * dV]), this.v(`${name}/Wo`) as tf.Tensor2D)
      .reshape([b, tq, this.cfg.dModel]) as tf.Tensor3D;
    return { output, attn };
  }

  private ffn(name: string, x: tf.Tensor3D): tf.Tensor3D {
    const [b, t, d] = x.shape;
    const hidden = tf
      .matMul(x.reshape([-1, d]), this.v(`${name}/W1`) as tf.Tensor2D)
      .add(this.v(`${name}/b1`))
      .relu();
    return tf
      .matMul(hidden, this.v(`${name}/W2`) as tf.Tensor2D)
      .add(this.v(`${name}/b2`))
      .reshape([b, t, d]) as tf.Tensor3D;
  }

  private maybeDropout(x: tf.Tensor3D, training: boolean, seed: number): tf.Tensor3D {
    if (training && this.cfg.dropoutKeep < 1) {
      return tf.dropout(x, 1 - this.cfg.dropoutKeep, undefined, seed) as tf.Tensor3D;
    }
    return x;
  }

  private embed(ids: tf.Tensor2D, table: tf.Tensor, length: number): tf.Tensor3D {
    const rows = embedRows(ids, table, this.cfg.vocabSize);
    const scaled = rows.mul(Math.sqrt(this.cfg.dModel)) as tf.Tensor3D;
    const positions = this.posTable.slice([0, 0], [length, this.cfg.dModel]);
    return scaled.add(positions.expandDims(0)) as tf.Tensor3D;
  }

  /** Additive bias that hides padded key positions: [B, 1, 1, Tk]. */
  private padBias(ids: tf.Tensor2D): tf.Tensor {
    const mask = tf.notEqual(ids, tf.scalar(this.vocab.padId, "int32")).cast("float32");
    return mask.sub(1).mul(1e9).reshape([ids.shape[0], 1, 1, ids.shape[1]]);
  }

  /** Additive bias hiding future positions: [1, 1, T, T]. */
  private causalBias(t: number): tf.Tensor {
    const data = new Float32Array(t * t);
    for (let i = 0; i < t; i++) {
      for (let j = i + 1; j < t; j++) {
        data[i * t + j] = -1e9;
      }
    }
    return tf.tensor(data, [1, 1, t, t]);
  }

  private encodeStack(
    src: tf.Tensor2D,
    training: boolean,
    seed: number,
    collect?: tf.Tensor[]
  ): tf.Tensor3D {
    const mask = this.padBias(src);
    let x = this.maybeDropout(
      this.embed(src, this.v("encEmb"), src.shape[1]),
      training,
      seed
    );
    for (let l = 0; l < this.cfg.layers; l++) {
      const { output, attn } = this.mha(`enc${l}/self`, x, x, mask);
      collect?.push(attn);
      x = this.layerNorm(x.add(this.maybeDropout(output, training, seed + l + 1)) as tf.Tensor3D, `enc${l}/ln1`);
      const f = this.ffn(`enc${l}/ffn`, x);
      x = this.layerNorm(x.add(this.maybeDropout(f, training, seed + l + 101)) as tf.Tensor3D, `enc${l}/ln2`);
    }
    return x;
  }

  private decodeStack(
    tgtIn: tf.Tensor2D,
    memory: tf.Tensor3D,
    srcPadBias: tf.Tensor,
    training: boolean,
    seed: number,
    collectSelf?: tf.Tensor[],
    collectCross?: tf.Tensor[]
  ): tf.Tensor3D {
    const t = tgtIn.shape[1];
    const selfBias = this.causalBias(t).add(this.padBias(tgtIn));
    let x = this.maybeDropout(this.embed(tgtIn, this.v("decEmb"), t), training, seed + 500);
    for (let l = 0; l < this.cfg.layers; l++) {
      const self = this.mha(`dec${l}/self`, x, x, selfBias);
      collectSelf?.push(self.attn);
      x = this.layerNorm(x.add(this.maybeDropout(self.output, training, seed + l + 201)) as tf.Tensor3D, `dec${l}/ln1`);
      const cross = this.mha(`dec${l}/cross`, x, memory, srcPadBias);
      collectCross?.push(cross.attn);
      x = this.layerNorm(x.add(this.maybeDropout(cross.output, training, seed + l + 301)) as tf.Tensor3D, `dec${l}/ln2`);
      const f = this.ffn(`dec${l}/ffn`, x);
      x = this.layerNorm(x.add(this.maybeDropout(f, training, seed + l + 401)) as tf.Tensor3D, `dec${l}/ln3`);
    }
    return x;
  }

  private logitsFor(
    src: tf.Tensor2D,
    tgtIn: tf.Tensor2D,
    training: boolean,
    seed: number
  ): tf.Tensor3D {
    const memory = this.encodeStack(src, training, seed);
    const decoded = this.decodeStack(tgtIn, memory, this.padBias(src), training, seed);
    const [b, t, d] = decoded.shape;
    return tf
      .matMul(decoded.reshape([-1, d]), this.v("proj/kernel") as tf.Tensor2D)
      .add(this.v("proj/bias"))
      .reshape([b, t, this.cfg.vocabSize]) as tf.Tensor3D;
  }

  /** Teacher-forced mean cross-entropy in nats per non-pad target token. */
  loss(batch: TrainingBatch, training = true, seed = 0): tf.Scalar {
    return tf.tidy(() => {
      const src = tf.tensor2d(batch.src, undefined, "int32");
      const tgtIn = tf.tensor2d(batch.tgtIn, undefined, "int32");
      const tgtOut = tf.tensor2d(batch.tgtOut, undefined, "int32");
      const logits = this.logitsFor(src, tgtIn, training, seed);
      const logProbs = tf.logSoftmax(logits, -1);
      const oneHot = tf.oneHot(tgtOut, this.cfg.vocabSize).cast("float32");
      const nll = oneHot.mul(logProbs).sum(-1).neg();
      const mask = tf.notEqual(tgtOut, tf.scalar(this.vocab.padId, "int32")).cast("float32");
      return nll.mul(mask).sum().div(mask.sum()) as tf.Scalar;
    });
  }

  /**
   * Full-batch training; one optimizer step per epoch. The step-n learning
   * rate is the schedule value lrate(n, dModel, warmupSteps), recorded in
   * `lrTrace`.
   */
  train(batch: TrainingBatch, epochs: number, onEpoch?: (epoch: number, loss: number) => void): number[] {
    const varList = [...this.variables.values()];
    const curve: number[] = [];
    for (let epoch = 0; epoch < epochs; epoch++) {
      const step = this.optimizer.stepCount + 1;
      const lr = lrate(step, this.cfg.dModel, this.cfg.warmupSteps);
      const { value, grads } = tf.variableGrads(
        () => this.loss(batch, true, this.cfg.seed + epoch),
        varList
      );
      this.optimizer.applyGradients(lr, this.variables, grads);
      this.lrTrace.push(lr);
      const lossValue = value.dataSync()[0];
      value.dispose();
      for (const g of Object.values(grads)) {
        g.dispose();
      }
      curve.push(lossValue);
      onEpoch?.(epoch, lossValue);
    }
    return curve;
  }

  /** Greedy decoding by re-running the decoder over the growing prefix. */
  generate(srcIds: number[][], maxLen = this.cfg.maxSteps): GreedyResult {
    // The position table only covers maxSteps positions.
    maxLen = Math.min(maxLen, this.cfg.maxSteps - 1);
    const batch = srcIds.length;
    const outputs: number[][] = srcIds.map(() => []);
    const done = new Array<boolean>(batch).fill(false);
    const prefix: number[][] = srcIds.map(() => [this.vocab.bosId]);

    const enc = tf.tidy(() => {
      const src = tf.tensor2d(srcIds, undefined, "int32");
      return {
        memory: tf.keep(this.encodeStack(src, false, 0)),
        srcPadBias: tf.keep(this.padBias(src)),
      };
    });
    try {
      for (let step = 0; step < maxLen && !done.every(Boolean); step++) {
        const picked = tf.tidy(() => {
          const tgtIn = tf.tensor2d(prefix, undefined, "int32");
          const decoded = this.decodeStack(
            tgtIn,
            enc.memory as tf.Tensor3D,
            enc.srcPadBias,
            false,
            0
          );
          const last = decoded.slice(
            [0, decoded.shape[1] - 1, 0],
            [batch, 1, this.cfg.dModel]
          );
          const logits = tf
            .matMul(last.reshape([batch, this.cfg.dModel]), this.v("proj/kernel") as tf.Tensor2D)
            .add(this.v("proj/bias"));
          return Array.from(logits.argMax(-1).dataSync() as Int32Array);
        });
        for (let b = 0; b < batch; b++) {
          if (done[b]) {
            prefix[b].push(this.vocab.padId);
            continue;
          }
          if (picked[b] === this.vocab.eosId) {
            done[b] = true;
            prefix[b].push(this.vocab.padId);
          } else {
            outputs[b].push(picked[b]);
            prefix[b].push(picked[b]);
          }
        }
      }
    } finally {
      enc.memory.dispose();
      enc.srcPadBias.dispose();
    }
    return { ids: outputs };
  }

  /** Softmax maps from every attention block for one forced batch. */
  attentionMaps(src: number[][], tgtIn: number[][]): AttentionMaps {
    const encSelf: tf.Tensor[] = [];
    const decSelf: tf.Tensor[] = [];
    const cross: tf.Tensor[] = [];
    tf.tidy(() => {
      const srcT = tf.tensor2d(src, undefined, "int32");
      const tgtT = tf.tensor2d(tgtIn, undefined, "int32");
      const memory = this.encodeStack(srcT, false, 0, encSelf);
      this.decodeStack(tgtT, memory, this.padBias(srcT), false, 0, decSelf, cross);
      for (const t of [...encSelf, ...decSelf, ...cross]) {
        tf.keep(t);
      }
    });
    const toArrays = (tensors: tf.Tensor[]) =>
      tensors.map((t) => {
        const out = t.arraySync() as number[][][][];
        t.dispose();
        return out;
      });
    return {
      encoderSelf: toArrays(encSelf) as AttentionMaps["encoderSelf"],
      decoderSelf: toArrays(decSelf) as AttentionMaps["decoderSelf"],
      encoderDecoder: toArrays(cross) as AttentionMaps["encoderDecoder"],
    };
  }

  dispose(): void {
    for (const variable of this.variables.values()) {
      variable.dispose();
    }
    this.variables.clear();
    this.posTable.dispose();
    this.optimizer.dispose();
  }
}
