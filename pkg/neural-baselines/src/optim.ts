/**
 * Adam with an externally supplied learning rate per step.
 *
 * tfjs ships Adam, but its learning rate is fixed at construction and the
 * Transformer needs a different rate on every optimizer step (the Noam
 * schedule). This keeps the standard update rule and takes the rate as an
 * argument to `applyGradients` instead.
 */

import * as tf from "@tensorflow/tfjs";

export class Adam {
  private readonly beta1: number;
  private readonly beta2: number;
  private readonly epsilon: number;
  private step = 0;
  private readonly firstMoment = new Map<string, tf.Variable>();
  private readonly secondMoment = new Map<string, tf.Variable>();

  constructor(beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8) {
    this.beta1 = beta1;
    this.beta2 = beta2;
    this.epsilon = epsilon;
  }

  /** Number of applied steps so far. */
  get stepCount(): number {
    return this.step;
  }

  applyGradients(
    learningRate: number,
    variables: ReadonlyMap<string, tf.Variable>,
    gradients: tf.NamedTensorMap
  ): void {
    this.step += 1;
    const correction1 = 1 - Math.pow(this.beta1, this.step);
    const correction2 = 1 - Math.pow(this.beta2, this.step);
    for (const [name, variable] of variables) {
      const grad = gradients[name];
      if (grad === undefined) {
        continue;
      }
      let m = this.firstMoment.get(name);
      let v = this.secondMoment.get(name);
      if (m === undefined) {
        m = tf.variable(tf.zerosLike(variable), false);
        v = tf.variable(tf.zerosLike(variable), false);
        this.firstMoment.set(name, m);
        this.secondMoment.set(name, v);
      }
      tf.tidy(() => {
        const newM = m!.mul(this.beta1).add(grad.mul(1 - this.beta1));
        const newV = v!.mul(this.beta2).add(grad.square().mul(1 - this.beta2));
        m!.assign(newM);
        v!.assign(newV);
        const mHat = newM.div(correction1);
        const vHat = newV.div(correction2);
        variable.assign(
          variable.sub(mHat.mul(learningRate).div(vHat.sqrt().add(this.epsilon)))
        );
      });
    }
  }

  dispose(): void {
    for (const m of this.firstMoment.values()) {
      m.dispose();
    }
    for (const v of this.secondMoment.values()) {
      v.dispose();
    }
    this.firstMoment.clear();
    this.secondMoment.clear();
  }
}
