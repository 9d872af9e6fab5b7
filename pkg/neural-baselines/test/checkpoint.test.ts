import * as fs from "node:fs";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import {
  CheckpointError,
  loadCheckpoint,
  saveCheckpoint,
  vocabFingerprint,
} from "../src/checkpoint";
import { buildBatch } from "../src/pipeline";
import { Seq2SeqModel } from "../src/seq2seq";
import { TransformerModel } from "../src/transformer";
import { Vocab, encodeSource, tokenize } from "../src/tokens";
import {
  corpusVocab,
  tinySeq2SeqConfig,
  tinyTransformerConfig,
  tmpdir,
  toyCorpus,
} from "./fixtures";

const sources = (vocab: Vocab, maxSteps: number) =>
  toyCorpus()
    .slice(0, 4)
    .map((t) => encodeSource(vocab, tokenize(t.question), maxSteps));

describe("vocabFingerprint", () => {
  it("is stable for equal vocabularies and moves when a word changes", () => {
    const a = new Vocab(["alpha", "beta"]);
    const b = new Vocab(["alpha", "beta"]);
    const c = new Vocab(["alpha", "gamma"]);
    expect(vocabFingerprint(a)).toBe(vocabFingerprint(b));
    expect(vocabFingerprint(a)).not.toBe(vocabFingerprint(c));
    expect(vocabFingerprint(a)).toMatch(/^[0-9a-f]{16}$/);
  });
});

describe("checkpoint round trip", () => {
  it("restores a trained recurrent model bit for bit", () => {
    const vocab = corpusVocab();
    const cfg = tinySeq2SeqConfig(vocab.size);
    const model = new Seq2SeqModel(cfg, vocab);
    const dir = tmpdir("ckpt");
    try {
      const curve = model.train(buildBatch(vocab, toyCorpus().slice(0, 8), cfg.maxSteps), 3);
      const before = model.generate(sources(vocab, cfg.maxSteps), 8).ids;
      saveCheckpoint(dir, "seq2seq", model, curve);

      const loaded = loadCheckpoint(dir, vocab);
      try {
        expect(loaded.kind).toBe("seq2seq");
        expect(loaded.lossCurve).toEqual(curve);
        for (const [name, variable] of model.variables) {
          const bare = name.slice(model.prefix.length);
          const restored = loaded.model.variables.get(`${loaded.model.prefix}${bare}`)!;
          expect(Array.from(restored.dataSync())).toEqual(Array.from(variable.dataSync()));
        }
        const after = loaded.model.generate(sources(vocab, cfg.maxSteps), 8).ids;
        expect(after).toEqual(before);
      } finally {
        loaded.model.dispose();
      }
    } finally {
      model.dispose();
    }
  });

  it("restores a transformer identically under greedy decoding", () => {
    const vocab = corpusVocab();
    const cfg = tinyTransformerConfig(vocab.size);
    const model = new TransformerModel(cfg, vocab);
    const dir = tmpdir("ckpt");
    try {
      const curve = model.train(buildBatch(vocab, toyCorpus().slice(0, 6), cfg.maxSteps), 2);
      const before = model.generate(sources(vocab, cfg.maxSteps), 8).ids;
      saveCheckpoint(dir, "transformer", model, curve);
      const loaded = loadCheckpoint(dir, vocab);
      try {
        expect(loaded.kind).toBe("transformer");
        const after = loaded.model.generate(sources(vocab, cfg.maxSteps), 8).ids;
        expect(after).toEqual(before);
      } finally {
        loaded.model.dispose();
      }
    } finally {
      model.dispose();
    }
  });
});

describe("checkpoint validation", () => {
  function savedDir(): { dir: string; vocab: Vocab } {
    const vocab = corpusVocab();
    const cfg = tinySeq2SeqConfig(vocab.size);
    const model = new Seq2SeqModel(cfg, vocab);
    const dir = tmpdir("ckpt");
    try {
      saveCheckpoint(dir, "seq2seq", model, []);
    } finally {
      model.dispose();
    }
    return { dir, vocab };
  }

  it("rejects a vocabulary that differs from the training one", () => {
    const { dir } = savedDir();
    const other = new Vocab(["different", "word", "list"]);
    expect(() => loadCheckpoint(dir, other)).toThrow(/different vocabulary/);
  });

  it("rejects a missing weights file", () => {
    const { dir, vocab } = savedDir();
    fs.rmSync(path.join(dir, "weights.json"));
    expect(() => loadCheckpoint(dir, vocab)).toThrow(/missing weights.json/);
  });

  it("rejects an unknown weight name", () => {
    const { dir, vocab } = savedDir();
    const file = path.join(dir, "weights.json");
    const weights = JSON.parse(fs.readFileSync(file, "utf-8"));
    weights[0].name = "neverHeardOfIt";
    fs.writeFileSync(file, JSON.stringify(weights));
    expect(() => loadCheckpoint(dir, vocab)).toThrow(CheckpointError);
  });

  it("rejects a shape mismatch", () => {
    const { dir, vocab } = savedDir();
    const file = path.join(dir, "weights.json");
    const weights = JSON.parse(fs.readFileSync(file, "utf-8"));
    weights[0].shape = [1, 1];
    weights[0].values = [0];
    fs.writeFileSync(file, JSON.stringify(weights));
    expect(() => loadCheckpoint(dir, vocab)).toThrow(/shape/);
  });

  it("rejects an incomplete weight set", () => {
    const { dir, vocab } = savedDir();
    const file = path.join(dir, "weights.json");
    const weights = JSON.parse(fs.readFileSync(file, "utf-8"));
    weights.pop();
    fs.writeFileSync(file, JSON.stringify(weights));
    expect(() => loadCheckpoint(dir, vocab)).toThrow(/missing weight/);
  });

  it("rejects an unknown checkpoint kind", () => {
    const { dir, vocab } = savedDir();
    const file = path.join(dir, "config.json");
    const header = JSON.parse(fs.readFileSync(file, "utf-8"));
    header.kind = "markov";
    fs.writeFileSync(file, JSON.stringify(header));
    expect(() => loadCheckpoint(dir, vocab)).toThrow(/unknown checkpoint kind/);
  });
});
