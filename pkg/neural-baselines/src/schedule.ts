/**
 * Noam learning-rate schedule used by the Transformer responder:
 *
 *     lrate = dModel^{-1/2} * min(step^{-1/2}, step * warmup^{-3/2})
 *
 * The rate rises linearly for the first `warmupSteps` optimizer steps and
 * decays as the inverse square root of the step number afterwards; the two
 * branches meet exactly at step = warmupSteps.
 */

export class ScheduleError extends Error {}

export function lrate(stepNum: number, dModel: number, warmupSteps: number): number {
  if (!Number.isFinite(stepNum) || !Number.isInteger(stepNum) || stepNum < 1) {
    throw new ScheduleError(`stepNum must be a positive integer, got ${stepNum}`);
  }
  if (!Number.isFinite(dModel) || dModel <= 0) {
    throw new ScheduleError(`dModel must be positive, got ${dModel}`);
  }
  if (!Number.isFinite(warmupSteps) || !Number.isInteger(warmupSteps) || warmupSteps < 1) {
    throw new ScheduleError(`warmupSteps must be a positive integer, got ${warmupSteps}`);
  }
  return (
    Math.pow(dModel, -0.5) *
    Math.min(Math.pow(stepNum, -0.5), stepNum * Math.pow(warmupSteps, -1.5))
  );
}
