/**
 * Optional acceleration: swap tfjs onto its WebAssembly backend when the
 * package is installed. Everything in this package also runs on the default
 * pure-JS backend with identical semantics, only slower — callers that care
 * about wall-clock time (training runs, the test suite) await this once at
 * startup.
 */

import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

export async function enableFastBackend(): Promise<string> {
  if (tf.getBackend() === "wasm") {
    return "wasm";
  }
  try {
    const wasm = await import("@tensorflow/tfjs-backend-wasm");
    const dist = path.dirname(require.resolve("@tensorflow/tfjs-backend-wasm"));
    wasm.setWasmPaths(dist + path.sep);
    if (await tf.setBackend("wasm")) {
      await tf.ready();
    }
  } catch {
    // Keep whichever backend tfjs selected on its own.
  }
  return tf.getBackend();
}
