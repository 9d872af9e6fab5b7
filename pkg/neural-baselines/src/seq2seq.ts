/**
 * Recurrent responder: bidirectional LSTM encoder, two-layer LSTM decoder
 * with additive attention over the encoder states, trained teacher-forced
 * with per-token cross-entropy (natural log, so the reported loss is
 * nats/token).
 */

import * as tf from "@tensorflow/tfjs";

import { EmbeddingMatrices, PretrainedTable, buildEmbeddings, embedRows } from "./embeddings";
import { Adam } from "./optim";
import { Vocab } from "./tokens";

export class ConfigError extends Error {}

export interface Seq2SeqConfig {
  /** Total vocabulary size including the specials block. */
  vocabSize: number;
  embeddingDim: number;
  /** Hidden units per encoder direction (the decoder layers match). */
  encoderUnits: number;
  decoderUnits: number;
  /** Sequence length for both encoder and decoder. */
  maxSteps: number;
  /** Keep probability; 1.0 disables dropout. */
  dropoutKeep: number;
  baseLearningRate: number;
  /** Multiplicative learning-rate decay applied once per epoch. */
  decayPerEpoch: number;
  seed: number;
}

/** Production-scale defaults; tests shrink everything but the shape rules. */
export function defaultSeq2SeqConfig(vocabSize: number): Seq2SeqConfig {
  return {
    vocabSize,
    embeddingDim: 200,
    encoderUnits: 512,
    decoderUnits: 512,
    maxSteps: 60,
    dropoutKeep: 0.8,
    baseLearningRate: 1e-3,
    decayPerEpoch: 0.99,
    seed: 7,
  };
}

export function validateSeq2SeqConfig(cfg: Seq2SeqConfig): void {
  const positiveInt = (v: number, what: string) => {
    if (!Number.isInteger(v) || v < 1) {
      throw new ConfigError(`${what} must be a positive integer, got ${v}`);
    }
  };
  positiveInt(cfg.vocabSize, "vocabSize");
  positiveInt(cfg.embeddingDim, "embeddingDim");
  positiveInt(cfg.encoderUnits, "encoderUnits");
  positiveInt(cfg.decoderUnits, "decoderUnits");
  positiveInt(cfg.maxSteps, "maxSteps");
  if (!(cfg.dropoutKeep > 0 && cfg.dropoutKeep <= 1)) {
    throw new ConfigError(`dropoutKeep must be in (0, 1], got ${cfg.dropoutKeep}`);
  }
  if (!(cfg.baseLearningRate > 0)) {
    throw new ConfigError(`baseLearningRate must be positive, got ${cfg.baseLearningRate}`);
  }
  if (!(cfg.decayPerEpoch > 0 && cfg.decayPerEpoch <= 1)) {
    throw new ConfigError(`decayPerEpoch must be in (0, 1], got ${cfg.decayPerEpoch}`);
  }
}

export interface TrainingBatch {
  /** [batch, maxSteps] source token ids. */
  src: number[][];
  /** [batch, maxSteps] decoder inputs (starts with <s>). */
  tgtIn: number[][];
  /** [batch, maxSteps] prediction targets (ends with </s>). */
  tgtOut: number[][];
}

export interface GreedyResult {
  /** Generated ids per batch item, truncated before the end symbol. */
  ids: number[][];
  /** Attention rows per item per decode step when collected: [B][steps][srcLen]. */
  attention?: number[][][];
}

let instanceCounter = 0;

export class Seq2SeqModel {
  readonly cfg: Seq2SeqConfig;
  readonly vocab: Vocab;
  readonly variables = new Map<string, tf.Variable>();
  readonly embeddings: EmbeddingMatrices;
  readonly prefix: string;

  constructor(cfg: Seq2SeqConfig, vocab: Vocab, pretrained: PretrainedTable | null = null) {
    validateSeq2SeqConfig(cfg);
    if (cfg.vocabSize !== vocab.size) {
      throw new ConfigError(
        `config expects vocabulary of ${cfg.vocabSize} tokens, file has ${vocab.size}`
      );
    }
    this.cfg = cfg;
    this.vocab = vocab;
    this.prefix = `seq2seq${instanceCounter++}/`;

    this.embeddings = buildEmbeddings(vocab, pretrained, cfg.embeddingDim, cfg.seed, {
      encoder: `${this.prefix}encEmb`,
      decoder: `${this.prefix}decEmb`,
    });
    this.variables.set(`${this.prefix}encEmb`, this.embeddings.encoder);
    this.variables.set(`${this.prefix}decEmb`, this.embeddings.decoder);

    const E = cfg.embeddingDim;
    const U = cfg.encoderUnits;
    const D = cfg.decoderUnits;
    const A = cfg.decoderUnits; // attention projection width
    const V = cfg.vocabSize;
    this.addVar("fwdKernel", [E + U, 4 * U], 11);
    this.addVar("fwdBias", [4 * U], 12, true);
    this.addVar("bwdKernel", [E + U, 4 * U], 13);
    this.addVar("bwdBias", [4 * U], 14, true);
    this.addVar("dec1Kernel", [E + D, 4 * D], 15);
    this.addVar("dec1Bias", [4 * D], 16, true);
    this.addVar("dec2Kernel", [2 * D, 4 * D], 17);
    this.addVar("dec2Bias", [4 * D], 18, true);
    this.addVar("attnQuery", [D, A], 19);
    this.addVar("attnKeys", [2 * U, A], 20);
    this.addVar("attnScore", [A], 21);
    this.addVar("outKernel", [D + 2 * U + E, V], 22);
    this.addVar("outBias", [V], 23, true);
  }

  private addVar(name: string, shape: number[], seedOffset: number, zeros = false): void {
    const init = zeros
      ? tf.zeros(shape)
      : tf.randomNormal(shape, 0, 0.08, "float32", this.cfg.seed * 1000 + seedOffset);
    this.variables.set(
      `${this.prefix}${name}`,
      tf.variable(init, true, `${this.prefix}${name}`)
    );
  }

  private v(name: string): tf.Variable {
    return this.variables.get(`${this.prefix}${name}`)!;
  }

  /** Run both encoder directions; returns [B, T, 2U] states and the pad mask. */
  private encode(src: tf.Tensor2D, training: boolean, seed: number) {
    const cfg = this.cfg;
    const batch = src.shape[0];
    const T = src.shape[1];
    let embedded = embedRows(src, this.embeddings.encoder, cfg.vocabSize) as tf.Tensor3D;
    if (training && cfg.dropoutKeep < 1) {
      embedded = tf.dropout(embedded, 1 - cfg.dropoutKeep, undefined, seed) as tf.Tensor3D;
    }
    const steps = tf.unstack(embedded, 1); // T × [B, E]
    const forgetBias = tf.scalar(1.0);

    const runDirection = (kernel: tf.Variable, bias: tf.Variable, reverse: boolean) => {
      let c = tf.zeros([batch, cfg.encoderUnits]) as tf.Tensor2D;
      let h = tf.zeros([batch, cfg.encoderUnits]) as tf.Tensor2D;
      const outputs: tf.Tensor2D[] = new Array(T);
      for (let i = 0; i < T; i++) {
        const t = reverse ? T - 1 - i : i;
        [c, h] = tf.basicLSTMCell(
          forgetBias,
          kernel as tf.Tensor2D,
          bias as tf.Tensor1D,
          steps[t] as tf.Tensor2D,
          c,
          h
        );
        outputs[t] = h;
      }
      return outputs;
    };

    const fwd = runDirection(this.v("fwdKernel"), this.v("fwdBias"), false);
    const bwd = runDirection(this.v("bwdKernel"), this.v("bwdBias"), true);
    const perStep = fwd.map((f, t) => tf.concat([f, bwd[t]], 1));
    const encStates = tf.stack(perStep, 1) as tf.Tensor3D; // [B, T, 2U]
    const srcMask = tf.notEqual(src, tf.scalar(this.vocab.padId, "int32")).cast("float32");
    return { encStates, srcMask: srcMask as tf.Tensor2D };
  }

  /**
   * One decoder step: two stacked cells, additive attention, output logits.
   * `projEnc` is the precomputed key projection [B, T, A].
   */
  private decodeStep(
    x: tf.Tensor2D,
    state: { c1: tf.Tensor2D; h1: tf.Tensor2D; c2: tf.Tensor2D; h2: tf.Tensor2D },
    encStates: tf.Tensor3D,
    projEnc: tf.Tensor3D,
    maskBias: tf.Tensor2D,
    forgetBias: tf.Scalar
  ) {
    const [c1, h1] = tf.basicLSTMCell(
      forgetBias,
      this.v("dec1Kernel") as tf.Tensor2D,
      this.v("dec1Bias") as tf.Tensor1D,
      x,
      state.c1,
      state.h1
    );
    const [c2, h2] = tf.basicLSTMCell(
      forgetBias,
      this.v("dec2Kernel") as tf.Tensor2D,
      this.v("dec2Bias") as tf.Tensor1D,
      h1,
      state.c2,
      state.h2
    );
    const s = h2; // [B, D]
    const projQuery = tf.matMul(s, this.v("attnQuery") as tf.Tensor2D).expandDims(1); // [B,1,A]
    const energies = tf
      .tanh(projEnc.add(projQuery))
      .mul(this.v("attnScore").reshape([1, 1, -1]))
      .sum(-1) as tf.Tensor2D; // [B, T]
    const alpha = tf.softmax(energies.add(maskBias), -1) as tf.Tensor2D;
    const context = encStates.mul(alpha.expandDims(-1)).sum(1) as tf.Tensor2D; // [B, 2U]
    const features = tf.concat([s, context, x], 1);
    const logits = tf
      .matMul(features, this.v("outKernel") as tf.Tensor2D)
      .add(this.v("outBias")) as tf.Tensor2D;
    return { state: { c1, h1, c2, h2 }, logits, alpha };
  }

  private maskBiasFrom(srcMask: tf.Tensor2D): tf.Tensor2D {
    return srcMask.sub(tf.scalar(1)).mul(tf.scalar(1e9)) as tf.Tensor2D;
  }

  /** Teacher-forced mean cross-entropy in nats per non-pad target token. */
  loss(batch: TrainingBatch, training = true, seed = 0): tf.Scalar {
    return tf.tidy(() => {
      const cfg = this.cfg;
      const src = tf.tensor2d(batch.src, undefined, "int32");
      const tgtIn = tf.tensor2d(batch.tgtIn, undefined, "int32");
      const tgtOut = tf.tensor2d(batch.tgtOut, undefined, "int32");
      const { encStates, srcMask } = this.encode(src, training, seed);
      const maskBias = this.maskBiasFrom(srcMask);
      const projEnc = this.projectKeys(encStates);
      const batchSize = src.shape[0];

      let embedded = embedRows(tgtIn, this.embeddings.decoder, cfg.vocabSize) as tf.Tensor3D;
      if (training && cfg.dropoutKeep < 1) {
        embedded = tf.dropout(embedded, 1 - cfg.dropoutKeep, undefined, seed + 1) as tf.Tensor3D;
      }
      const inputs = tf.unstack(embedded, 1);
      const forgetBias = tf.scalar(1.0);
      let state = this.zeroState(batchSize);
      const logitsPerStep: tf.Tensor2D[] = [];
      for (const x of inputs) {
        const out = this.decodeStep(
          x as tf.Tensor2D,
          state,
          encStates,
          projEnc,
          maskBias,
          forgetBias
        );
        state = out.state;
        logitsPerStep.push(out.logits);
      }
      const logits = tf.stack(logitsPerStep, 1); // [B, T, V]
      const logProbs = tf.logSoftmax(logits, -1);
      const oneHot = tf.oneHot(tgtOut, cfg.vocabSize).cast("float32");
      const nll = oneHot.mul(logProbs).sum(-1).neg(); // [B, T]
      const tgtMask = tf
        .notEqual(tgtOut, tf.scalar(this.vocab.padId, "int32"))
        .cast("float32");
      return nll.mul(tgtMask).sum().div(tgtMask.sum()) as tf.Scalar;
    });
  }

  private projectKeys(encStates: tf.Tensor3D): tf.Tensor3D {
    const [b, t, twoU] = encStates.shape;
    const flat = encStates.reshape([b * t, twoU]);
    const proj = tf.matMul(flat, this.v("attnKeys") as tf.Tensor2D);
    return proj.reshape([b, t, -1]) as tf.Tensor3D;
  }

  private zeroState(batch: number) {
    const zero = () => tf.zeros([batch, this.cfg.decoderUnits]) as tf.Tensor2D;
    return { c1: zero(), h1: zero(), c2: zero(), h2: zero() };
  }

  /**
   * Full-batch training; returns the per-epoch loss curve in nats/token.
   * The learning rate for epoch e is base · decay^e.
   */
  train(batch: TrainingBatch, epochs: number, onEpoch?: (epoch: number, loss: number) => void): number[] {
    const optimizer = new Adam();
    const varList = [...this.variables.values()];
    const curve: number[] = [];
    try {
      for (let epoch = 0; epoch < epochs; epoch++) {
        const lr = this.cfg.baseLearningRate * Math.pow(this.cfg.decayPerEpoch, epoch);
        const { value, grads } = tf.variableGrads(
          () => this.loss(batch, true, this.cfg.seed + epoch),
          varList
        );
        optimizer.applyGradients(lr, this.variables, grads);
        const lossValue = value.dataSync()[0];
        value.dispose();
        for (const g of Object.values(grads)) {
          g.dispose();
        }
        curve.push(lossValue);
        onEpoch?.(epoch, lossValue);
      }
    } finally {
      optimizer.dispose();
    }
    return curve;
  }

  /** Greedy decoding until the end symbol or `maxLen` tokens. */
  generate(srcIds: number[][], maxLen = this.cfg.maxSteps, collectAttention = false): GreedyResult {
    const batch = srcIds.length;
    const outputs: number[][] = srcIds.map(() => []);
    const attention: number[][][] | undefined = collectAttention
      ? srcIds.map(() => [])
      : undefined;

    const enc = tf.tidy(() => {
      const src = tf.tensor2d(srcIds, undefined, "int32");
      const { encStates, srcMask } = this.encode(src, false, 0);
      return {
        encStates: tf.keep(encStates),
        maskBias: tf.keep(this.maskBiasFrom(srcMask)),
        projEnc: tf.keep(this.projectKeys(encStates)),
      };
    });

    let state = this.zeroState(batch);
    let current = new Array<number>(batch).fill(this.vocab.bosId);
    const done = new Array<boolean>(batch).fill(false);
    try {
      for (let step = 0; step < maxLen && !done.every(Boolean); step++) {
        const previousState = state;
        let nextState = previousState;
        let picked: number[] = [];
        let alphaRows: number[][] | null = null;
        tf.tidy(() => {
          const forgetBias = tf.scalar(1.0);
          const x = embedRows(
            tf.tensor1d(current, "int32"),
            this.embeddings.decoder,
            this.cfg.vocabSize
          ) as tf.Tensor2D;
          const out = this.decodeStep(
            x,
            previousState,
            enc.encStates as tf.Tensor3D,
            enc.projEnc as tf.Tensor3D,
            enc.maskBias as tf.Tensor2D,
            forgetBias
          );
          const ids = out.logits.argMax(-1).dataSync() as Int32Array;
          alphaRows = collectAttention ? (out.alpha.arraySync() as number[][]) : null;
          nextState = {
            c1: tf.keep(out.state.c1),
            h1: tf.keep(out.state.h1),
            c2: tf.keep(out.state.c2),
            h2: tf.keep(out.state.h2),
          };
          picked = Array.from(ids);
        });
        Object.values(previousState).forEach((t) => t.dispose());
        state = nextState;
        for (let b = 0; b < batch; b++) {
          if (done[b]) {
            continue;
          }
          if (alphaRows !== null && attention !== undefined) {
            attention[b].push(alphaRows[b]);
          }
          if (picked[b] === this.vocab.eosId) {
            done[b] = true;
          } else {
            outputs[b].push(picked[b]);
          }
        }
        current = picked;
      }
    } finally {
      Object.values(state).forEach((t) => t.dispose());
      enc.encStates.dispose();
      enc.maskBias.dispose();
      enc.projEnc.dispose();
    }
    return attention !== undefined ? { ids: outputs, attention } : { ids: outputs };
  }

  dispose(): void {
    for (const variable of this.variables.values()) {
      variable.dispose();
    }
    this.variables.clear();
  }
}
