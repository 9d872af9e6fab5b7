/**
 * Acceptance gate for the neural responders, one test per criterion, each
 * printing a [PASS] line with the measured numbers (run vitest with
 * --reporter=verbose or check stdout).
 *
 * The interop criterion drives the benchmark CLI itself (`supportbench`);
 * when that executable is not on PATH the interop test is skipped with a
 * note, and the rest of the gate still runs.
 */

import { execFileSync, spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { generateFromCheckpoint, trainFromFiles } from "../src/pipeline";
import { lrate } from "../src/schedule";
import { Vocab } from "../src/tokens";
import type { Seq2SeqConfig } from "../src/seq2seq";
import {
  corpusVocab,
  tmpdir,
  toyCorpus,
  writeEmbeddingFile,
  writeSplitJsonl,
  writeVocabFile,
} from "./fixtures";

function pass(line: string): void {
  console.log(`[PASS] ${line}`);
}

const cliProbe = spawnSync("supportbench", ["--help"], { encoding: "utf-8" });
const HAS_CLI = cliProbe.status === 0;

const BUDGET_SECONDS = 300;
const OVERFIT_EPOCHS = 160;

describe("warmup schedule criterion", () => {
  it("matches direct evaluation at the stated points and is monotone up then down", () => {
    const atWarmup = lrate(4000, 256, 4000);
    const atOne = lrate(1, 256, 4000);
    expect(Math.abs(atWarmup - Math.pow(256, -0.5) * Math.pow(4000, -0.5))).toBeLessThanOrEqual(
      1e-8
    );
    expect(Math.abs(atOne - Math.pow(256, -0.5) * Math.pow(4000, -1.5))).toBeLessThanOrEqual(
      1e-12
    );
    expect(atWarmup.toExponential(4)).toBe("9.8821e-4");
    expect(atOne.toExponential(4)).toBe("2.4705e-7");

    for (let step = 1; step < 4000; step++) {
      expect(lrate(step, 256, 4000)).toBeLessThan(lrate(step + 1, 256, 4000));
    }
    for (let step = 4000; step < 20000; step++) {
      expect(lrate(step, 256, 4000)).toBeGreaterThan(lrate(step + 1, 256, 4000));
    }
    pass(
      `schedule: lrate(4000,256,4000)=${atWarmup.toExponential(4)}, ` +
        `lrate(1,256,4000)=${atOne.toExponential(4)}, monotone over steps 1..20000`
    );
  });
});

describe("toy overfit and pipeline interop criteria", () => {
  const dir = tmpdir("accept");
  const trainPath = path.join(dir, "train.jsonl");
  const testPath = path.join(dir, "test.jsonl");
  const vocabPath = path.join(dir, "vocab.txt");
  const ckptDir = path.join(dir, "checkpoint");
  const memorizedPath = path.join(dir, "responses-train.jsonl");
  const responsesPath = path.join(dir, "responses.jsonl");
  const embeddingsPath = path.join(dir, "vectors.txt");
  const evalDir = path.join(dir, "eval");
  const reportDir = path.join(dir, "report");

  const tuples = toyCorpus();
  let vocab: Vocab;
  let lossCurve: number[] = [];
  let elapsedSeconds = 0;

  beforeAll(() => {
    writeSplitJsonl(trainPath, tuples);
    // One question per device; every test tuple is a memorized training pair.
    writeSplitJsonl(
      testPath,
      tuples.filter((_, i) => i % 4 === 0)
    );
    if (HAS_CLI) {
      execFileSync("supportbench", ["vocab", "--train", trainPath, "--out", vocabPath], {
        encoding: "utf-8",
      });
    } else {
      writeVocabFile(vocabPath, corpusVocab(tuples));
    }
    vocab = Vocab.load(vocabPath);

    const config: Seq2SeqConfig = {
      vocabSize: vocab.size,
      embeddingDim: 32,
      encoderUnits: 48,
      decoderUnits: 48,
      maxSteps: 12,
      dropoutKeep: 1.0,
      baseLearningRate: 8e-3,
      decayPerEpoch: 0.999,
      seed: 7,
    };
    const started = Date.now();
    const result = trainFromFiles({
      kind: "seq2seq",
      config,
      trainPath,
      vocabPath,
      epochs: OVERFIT_EPOCHS,
      checkpointDir: ckptDir,
    });
    generateFromCheckpoint(ckptDir, trainPath, memorizedPath, config.maxSteps - 1);
    elapsedSeconds = (Date.now() - started) / 1000;
    lossCurve = result.lossCurve;
  });

  it("memorizes the 32-pair corpus under 0.1 nats/token within the time budget", () => {
    const finalLoss = lossCurve[lossCurve.length - 1];
    expect(lossCurve).toHaveLength(OVERFIT_EPOCHS);
    expect(finalLoss).toBeLessThan(0.1);
    expect(elapsedSeconds).toBeLessThan(BUDGET_SECONDS);

    const records = fs
      .readFileSync(memorizedPath, "utf-8")
      .trim()
      .split("\n")
      .map((l) => JSON.parse(l));
    expect(records).toHaveLength(tuples.length);
    const exact = records.filter((r) => r.response === r.gold_answer).length;
    expect(exact / records.length).toBeGreaterThanOrEqual(0.9);
    pass(
      `toy overfit: final loss ${finalLoss.toFixed(4)} nats/token after ` +
        `${OVERFIT_EPOCHS} epochs in ${elapsedSeconds.toFixed(1)}s; ` +
        `greedy reproduction ${exact}/${records.length} token-exact`
    );
  });

  it.skipIf(!HAS_CLI)(
    "produces responses the benchmark evaluator scores and reports unchanged",
    () => {
      const generated = generateFromCheckpoint(ckptDir, testPath, responsesPath, 11);
      expect(generated.responses).toBe(8);
      expect(generated.system).toBe("seq2seq");
      writeEmbeddingFile(embeddingsPath, vocab.tokens, 3);

      const evaluate = spawnSync(
        "supportbench",
        [
          "evaluate",
          "--responses",
          responsesPath,
          "--embeddings",
          embeddingsPath,
          "--test",
          testPath,
          "--out",
          evalDir,
        ],
        { encoding: "utf-8" }
      );
      // Progress logs go to stderr; only a nonzero exit signals failure.
      expect(evaluate.status, evaluate.stderr).toBe(0);
      expect(evaluate.stdout).toContain("system: seq2seq");
      const reportJson = path.join(evalDir, "report-seq2seq.json");
      expect(fs.existsSync(reportJson)).toBe(true);

      const report = spawnSync(
        "supportbench",
        ["report", "--in", reportJson, "--out", reportDir],
        { encoding: "utf-8" }
      );
      expect(report.status, report.stderr).toBe(0);
      expect(report.stdout).toContain("seq2seq");
      const csv = fs.readFileSync(path.join(reportDir, "report.csv"), "utf-8");
      const row = csv.split("\n").find((l) => l.startsWith("seq2seq"));
      expect(row).toBeDefined();
      pass(
        `pipeline interop: evaluator accepted ${generated.responses} responses ` +
          `(coverage check on), report row: ${row}`
      );
    }
  );
});
