import * as fs from "node:fs";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import {
  BOS,
  EOS,
  PAD,
  SPECIALS,
  UNK,
  Vocab,
  VocabError,
  detokenize,
  encodeSource,
  encodeTarget,
  tokenize,
} from "../src/tokens";
import { tmpdir } from "./fixtures";

describe("Vocab", () => {
  it("places specials first and words after, in order", () => {
    const v = new Vocab(["alpha", "beta"]);
    expect(v.size).toBe(SPECIALS.length + 2);
    expect(v.tokens.slice(0, SPECIALS.length)).toEqual([...SPECIALS]);
    expect(v.idOf("alpha")).toBe(SPECIALS.length);
    expect(v.idOf("beta")).toBe(SPECIALS.length + 1);
  });

  it("exposes the special ids the models rely on", () => {
    const v = new Vocab(["alpha"]);
    expect(v.tokenOf(v.unkId)).toBe(UNK);
    expect(v.tokenOf(v.padId)).toBe(PAD);
    expect(v.tokenOf(v.bosId)).toBe(BOS);
    expect(v.tokenOf(v.eosId)).toBe(EOS);
  });

  it("maps out-of-vocabulary tokens to the unknown id", () => {
    const v = new Vocab(["alpha"]);
    expect(v.idOf("missing")).toBe(v.unkId);
    expect(v.encode(["alpha", "missing"])).toEqual([SPECIALS.length, v.unkId]);
  });

  it("round-trips known tokens through encode and decode", () => {
    const v = new Vocab(["alpha", "beta", "gamma"]);
    const tokens = ["gamma", "alpha", "beta"];
    expect(v.decode(v.encode(tokens))).toEqual(tokens);
  });

  it("rejects ids outside the table", () => {
    const v = new Vocab(["alpha"]);
    expect(() => v.tokenOf(v.size)).toThrow(VocabError);
    expect(() => v.tokenOf(-1)).toThrow(VocabError);
  });

  it("rejects duplicate words and words that collide with specials", () => {
    expect(() => new Vocab(["alpha", "alpha"])).toThrow(VocabError);
    expect(() => new Vocab([UNK])).toThrow(VocabError);
  });
});

describe("Vocab.load", () => {
  it("reads a specials header followed by one word per line", () => {
    const dir = tmpdir("vocab");
    const file = path.join(dir, "vocab.txt");
    fs.writeFileSync(file, [...SPECIALS, "alpha", "beta"].join("\n") + "\n");
    const v = Vocab.load(file);
    expect(v.size).toBe(SPECIALS.length + 2);
    expect(v.idOf("beta")).toBe(SPECIALS.length + 1);
  });

  it("rejects a wrong specials header with the offending line number", () => {
    const dir = tmpdir("vocab");
    const file = path.join(dir, "vocab.txt");
    const lines = [...SPECIALS, "alpha"];
    lines[2] = "<wrong>";
    fs.writeFileSync(file, lines.join("\n") + "\n");
    expect(() => Vocab.load(file)).toThrow(/line 3/);
  });

  it("rejects duplicate words in the file", () => {
    const dir = tmpdir("vocab");
    const file = path.join(dir, "vocab.txt");
    fs.writeFileSync(file, [...SPECIALS, "alpha", "alpha"].join("\n") + "\n");
    expect(() => Vocab.load(file)).toThrow(VocabError);
  });
});

describe("tokenize / detokenize", () => {
  it("lowercases and splits on whitespace runs", () => {
    expect(tokenize("Hold  the\tPower button")).toEqual(["hold", "the", "power", "button"]);
  });

  it("returns no tokens for blank text", () => {
    expect(tokenize("   ")).toEqual([]);
    expect(tokenize("")).toEqual([]);
  });

  it("joins tokens with single spaces", () => {
    expect(detokenize(["hold", "the", "button"])).toBe("hold the button");
  });
});

describe("encodeSource", () => {
  it("pads short sources to the step budget", () => {
    const v = new Vocab(["alpha", "beta"]);
    const ids = encodeSource(v, ["alpha"], 4);
    expect(ids).toEqual([SPECIALS.length, v.padId, v.padId, v.padId]);
  });

  it("truncates long sources to the step budget", () => {
    const v = new Vocab(["alpha", "beta"]);
    const ids = encodeSource(v, ["alpha", "beta", "alpha", "beta", "alpha"], 3);
    expect(ids).toEqual([SPECIALS.length, SPECIALS.length + 1, SPECIALS.length]);
  });
});

describe("encodeTarget", () => {
  it("builds shifted teacher-forcing rows with start and end symbols", () => {
    const v = new Vocab(["alpha", "beta"]);
    const a = v.idOf("alpha");
    const b = v.idOf("beta");
    const { inputs, targets } = encodeTarget(v, ["alpha", "beta"], 5);
    expect(inputs).toEqual([v.bosId, a, b, v.padId, v.padId]);
    expect(targets).toEqual([a, b, v.eosId, v.padId, v.padId]);
  });

  it("keeps room for the end symbol when truncating", () => {
    const v = new Vocab(["alpha", "beta"]);
    const a = v.idOf("alpha");
    const { inputs, targets } = encodeTarget(v, ["alpha", "alpha", "alpha", "alpha"], 3);
    expect(inputs).toEqual([v.bosId, a, a]);
    expect(targets).toEqual([a, a, v.eosId]);
  });
});
