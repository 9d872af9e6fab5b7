/**
 * File interchange with the benchmark pipeline.
 *
 * Reads the prepared split files (one dialog tuple per JSONL line) and
 * writes the exchange-format responses file the evaluator consumes. Key
 * order in emitted records matches the benchmark's own writer so that
 * artifacts stay byte-stable.
 */

import * as fs from "node:fs";

export class DataFormatError extends Error {}

export interface DialogTuple {
  dialogId: number;
  turnIndex: number;
  context: string;
  question: string;
  answer: string;
  answerTime: string;
}

export interface ResponseRecord {
  dialogId: number;
  turnIndex: number;
  context: string;
  question: string;
  goldAnswer: string;
  response: string;
  system: string;
}

function requireField(record: Record<string, unknown>, key: string, where: string): unknown {
  if (!(key in record)) {
    throw new DataFormatError(`${where}: record is missing key "${key}"`);
  }
  return record[key];
}

export function readTuplesJsonl(path: string): DialogTuple[] {
  const raw = fs.readFileSync(path, "utf-8");
  const tuples: DialogTuple[] = [];
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") {
      continue;
    }
    const where = `${path} line ${i + 1}`;
    let record: Record<string, unknown>;
    try {
      record = JSON.parse(line) as Record<string, unknown>;
    } catch {
      throw new DataFormatError(`${where}: invalid JSON`);
    }
    tuples.push({
      dialogId: Number(requireField(record, "dialog_id", where)),
      turnIndex: Number(requireField(record, "turn_index", where)),
      context: String(requireField(record, "context", where)),
      question: String(requireField(record, "question", where)),
      answer: String(requireField(record, "answer", where)),
      answerTime: String(requireField(record, "answer_time", where)),
    });
  }
  if (tuples.length === 0) {
    throw new DataFormatError(`${path}: no dialog tuples found`);
  }
  return tuples;
}

/** The text a responder conditions on: context-augmented question. */
export function sourceText(t: DialogTuple): string {
  return t.context !== "" ? `${t.context} ${t.question}` : t.question;
}

export function writeResponsesJsonl(path: string, records: readonly ResponseRecord[]): number {
  const lines = records.map((r) =>
    JSON.stringify({
      dialog_id: r.dialogId,
      turn_index: r.turnIndex,
      context: r.context,
      question: r.question,
      gold_answer: r.goldAnswer,
      response: r.response,
      system: r.system,
    })
  );
  fs.writeFileSync(path, lines.join("\n") + "\n", "utf-8");
  return records.length;
}
