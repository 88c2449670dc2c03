/**
 * Denoising score matching: corrupt a clean sample with x_t = x0 + sigma*z,
 * train the network to predict the corruption-kernel score -z/sigma, and
 * weight each draw by sigma^2 so every noise level contributes O(1).
 */

import { Complex2D } from "./grid";
import { Rng } from "./rng";

export interface Draw {
  input: Float64Array; // [re..., im..., ln sigma]
  target: Float64Array; // [-z/sigma] as [re..., im...]
  sigma: number;
}

export type Scorer = (input: Float64Array, sigma: number) => Float64Array;

export function packInput(x: Complex2D, sigma: number): Float64Array {
  const n = x.re.length;
  const out = new Float64Array(2 * n + 1);
  out.set(x.re, 0);
  out.set(x.im, n);
  out[2 * n] = Math.log(sigma);
  return out;
}

export function makeDraw(x0: Complex2D, sigmas: Float64Array, rng: Rng): Draw {
  const n = x0.re.length;
  const sigma = sigmas[rng.int(sigmas.length)];
  const input = new Float64Array(2 * n + 1);
  const target = new Float64Array(2 * n);
  for (let i = 0; i < n; i++) {
    const zr = rng.gaussian();
    const zi = rng.gaussian();
    input[i] = x0.re[i] + sigma * zr;
    input[n + i] = x0.im[i] + sigma * zi;
    target[i] = -zr / sigma;
    target[n + i] = -zi / sigma;
  }
  input[2 * n] = Math.log(sigma);
  return { input, target, sigma };
}

/** sigma^2-weighted squared error of one prediction against its target. */
export function drawLoss(pred: Float64Array, draw: Draw): number {
  let acc = 0;
  for (let i = 0; i < pred.length; i++) {
    const d = pred[i] - draw.target[i];
    acc += d * d;
  }
  return draw.sigma * draw.sigma * acc;
}

/** Mean DSM loss of an arbitrary scorer over a fixed set of draws. */
export function lossOverDraws(scorer: Scorer, draws: Draw[]): number {
  let acc = 0;
  for (const draw of draws) {
    acc += drawLoss(scorer(draw.input, draw.sigma), draw);
  }
  return acc / draws.length;
}
