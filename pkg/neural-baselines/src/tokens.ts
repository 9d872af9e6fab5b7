/**
 * Vocabulary handling shared by both responders.
 *
 * The vocabulary file is produced by the benchmark pipeline (`supportbench
 * vocab`): one token per line, the fixed specials block first, then the
 * in-vocabulary words in frequency order. This module reads that file and
 * maps between tokens and ids; it never builds vocabularies itself.
 */

import * as fs from "node:fs";

export const UNK = "<unk>";
export const URL_TOKEN = "<url>";
export const USER_TOKEN = "<user>";
export const HASHTAG_TOKEN = "<hashtag>";
export const PAD = "<pad>";
export const BOS = "<s>";
export const EOS = "</s>";

/** The specials header every vocabulary file starts with, in file order. */
export const SPECIALS = [UNK, URL_TOKEN, USER_TOKEN, HASHTAG_TOKEN, PAD, BOS, EOS] as const;

export class VocabError extends Error {}

export class Vocab {
  /** All tokens in id order: specials first, then words. */
  readonly tokens: readonly string[];
  private readonly ids: Map<string, number>;

  constructor(words: readonly string[]) {
    const seen = new Set<string>(SPECIALS);
    for (const w of words) {
      if (seen.has(w)) {
        throw new VocabError(`duplicate or special token in word list: ${JSON.stringify(w)}`);
      }
      seen.add(w);
    }
    this.tokens = [...SPECIALS, ...words];
    this.ids = new Map(this.tokens.map((t, i) => [t, i]));
  }

  /** Total table size: specials plus words. Embedding matrices use this. */
  get size(): number {
    return this.tokens.length;
  }

  get padId(): number {
    return this.ids.get(PAD)!;
  }

  get bosId(): number {
    return this.ids.get(BOS)!;
  }

  get eosId(): number {
    return this.ids.get(EOS)!;
  }

  get unkId(): number {
    return this.ids.get(UNK)!;
  }

  has(token: string): boolean {
    return this.ids.has(token);
  }

  /** Token → id, out-of-vocabulary tokens map to `<unk>`. */
  idOf(token: string): number {
    return this.ids.get(token) ?? this.unkId;
  }

  tokenOf(id: number): string {
    const token = this.tokens[id];
    if (token === undefined) {
      throw new VocabError(`id ${id} outside vocabulary of size ${this.size}`);
    }
    return token;
  }

  encode(tokens: readonly string[]): number[] {
    return tokens.map((t) => this.idOf(t));
  }

  decode(ids: readonly number[]): string[] {
    return ids.map((i) => this.tokenOf(i));
  }

  static load(path: string): Vocab {
    const raw = fs.readFileSync(path, "utf-8");
    const lines = raw.split("\n");
    if (lines.length > 0 && lines[lines.length - 1] === "") {
      lines.pop();
    }
    if (lines.length < SPECIALS.length) {
      throw new VocabError(`${path}: vocabulary file too short for the specials header`);
    }
    for (let i = 0; i < SPECIALS.length; i++) {
      if (lines[i] !== SPECIALS[i]) {
        throw new VocabError(
          `${path}: line ${i + 1} should be ${SPECIALS[i]}, found ${JSON.stringify(lines[i])}`
        );
      }
    }
    return new Vocab(lines.slice(SPECIALS.length));
  }
}

/**
 * Minimal text tokenizer for model input: lowercase, whitespace split.
 *
 * The benchmark's own normalization (URL/mention/hashtag placeholders,
 * contraction rewrites) happens upstream when the splits and vocabulary
 * are built; this package re-tokenizes only to feed the models, and the
 * toy corpora it is meant for are plain lowercase words. The evaluator
 * applies its own normalization to whatever text we emit, so response
 * scoring never depends on this function.
 */
export function tokenize(text: string): string[] {
  return text.toLowerCase().split(/\s+/u).filter((t) => t.length > 0);
}

/** Join generated tokens back into response text. */
export function detokenize(tokens: readonly string[]): string {
  return tokens.join(" ");
}

/**
 * Fixed-length id window for one source text: tokens encoded, truncated to
 * `maxSteps`, right-padded with `<pad>`.
 */
export function encodeSource(vocab: Vocab, tokens: readonly string[], maxSteps: number): number[] {
  const ids = vocab.encode(tokens).slice(0, maxSteps);
  while (ids.length < maxSteps) {
    ids.push(vocab.padId);
  }
  return ids;
}

/**
 * Teacher-forcing pair for one target text: decoder inputs start with
 * `<s>`, targets end with `</s>`, both right-padded to `maxSteps`.
 */
export function encodeTarget(
  vocab: Vocab,
  tokens: readonly string[],
  maxSteps: number
): { inputs: number[]; targets: number[] } {
  const body = vocab.encode(tokens).slice(0, maxSteps - 1);
  const inputs = [vocab.bosId, ...body];
  const targets = [...body, vocab.eosId];
  while (inputs.length < maxSteps) {
    inputs.push(vocab.padId);
    targets.push(vocab.padId);
  }
  return { inputs, targets };
}
