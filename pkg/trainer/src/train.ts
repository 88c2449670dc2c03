/** Training loop: Adam on the sigma^2-weighted DSM objective. */

import { Dataset, TrainSpec, makeDataset, sigmaLadder } from "./data";
import { Draw, Scorer, drawLoss, lossOverDraws, makeDraw, packInput } from "./dsm";
import { Complex2D } from "./grid";
import { Adam, Mlp } from "./mlp";
import { Rng } from "./rng";
import { quantized } from "./weights";

export interface TrainResult {
  model: Mlp;
  lossCurve: number[];
  finalLoss: number;
  diverged: boolean;
  dataset: Dataset;
  sigmas: Float64Array;
}

export interface EvalReport {
  trainedDsmLoss: number;
  analyticDsmLoss: number | null;
  zeroDsmLoss: number;
  trainedScoreMse: number | null;
  zeroScoreMse: number | null;
}

export function buildModel(spec: TrainSpec, rng: Rng): Mlp {
  const n = spec.gridSize * spec.gridSize;
  return Mlp.init(
    [
      { inDim: 2 * n + 1, outDim: spec.hiddenDim, activation: "tanh" },
      { inDim: spec.hiddenDim, outDim: spec.hiddenDim, activation: "tanh" },
      { inDim: spec.hiddenDim, outDim: 2 * n, activation: "none" },
    ],
    rng,
  );
}

export function train(spec: TrainSpec): TrainResult {
  const rng = new Rng(spec.seed);
  const dataset = makeDataset(spec);
  const sigmas = sigmaLadder(spec.schedule);
  const model = buildModel(spec, rng);
  const adam = new Adam(spec.learningRate);
  const params = model.layers.flatMap((l) => [l.weight, l.bias]);

  const lossCurve: number[] = [];
  let lastGood = model.snapshot();
  let diverged = false;

  for (let step = 0; step < spec.steps; step++) {
    const grads = model.zeroGrads();
    let batchLoss = 0;
    for (let b = 0; b < spec.batchSize; b++) {
      const draw = makeDraw(dataset.sample(rng), sigmas, rng);
      const traced = model.trace(draw.input);
      const pred = traced.inputs[traced.inputs.length - 1];
      batchLoss += drawLoss(pred, draw);
      // d(loss)/d(pred) for the sigma^2-weighted squared error, averaged
      const gradOut = new Float64Array(pred.length);
      const scale = (2 * draw.sigma * draw.sigma) / spec.batchSize;
      for (let i = 0; i < pred.length; i++) {
        gradOut[i] = scale * (pred[i] - draw.target[i]);
      }
      model.backward(traced, gradOut, grads);
    }
    batchLoss /= spec.batchSize;
    if (!Number.isFinite(batchLoss)) {
      model.restore(lastGood);
      diverged = true;
      break;
    }
    lossCurve.push(batchLoss);
    adam.step(params, model.layers.flatMap((_, i) => [grads[i].weight, grads[i].bias]));
    if (step % 50 === 0) {
      lastGood = model.snapshot();
    }
  }

  return {
    model,
    lossCurve,
    finalLoss: lossCurve.length ? lossCurve[lossCurve.length - 1] : NaN,
    diverged,
    dataset,
    sigmas,
  };
}

export function modelScorer(model: Mlp): Scorer {
  return (input) => model.forward(input);
}

function analyticScorer(dataset: Dataset, n: number): Scorer | null {
  const fn = dataset.analyticScore;
  if (!fn) {
    return null;
  }
  return (input, sigma) => {
    const x: Complex2D = {
      h: 1,
      w: n,
      re: Float64Array.from(input.slice(0, n)),
      im: Float64Array.from(input.slice(n, 2 * n)),
    };
    const s = fn(x, sigma);
    const out = new Float64Array(2 * n);
    out.set(s.re, 0);
    out.set(s.im, n);
    return out;
  };
}

/** Fixed evaluation draws shared by every scorer under comparison. */
export function evalDraws(result: TrainResult, count: number, seed: number): Draw[] {
  const rng = new Rng(seed);
  const draws: Draw[] = [];
  for (let i = 0; i < count; i++) {
    draws.push(makeDraw(result.dataset.sample(rng), result.sigmas, rng));
  }
  return draws;
}

/** Mean squared score error against the analytic truth on a sigma grid. */
function scoreMse(
  scorer: Scorer,
  result: TrainResult,
  drawsPerSigma: number,
  seed: number,
): number | null {
  const truth = result.dataset.analyticScore;
  if (!truth) {
    return null;
  }
  const rng = new Rng(seed);
  const { sigmaMin, sigmaMax } = {
    sigmaMin: result.sigmas[0],
    sigmaMax: result.sigmas[result.sigmas.length - 1],
  };
  // sigma grid: endpoints plus geometric midpoints
  const points = 9;
  const grid: number[] = [];
  for (let i = 0; i < points; i++) {
    grid.push(sigmaMin * Math.pow(sigmaMax / sigmaMin, i / (points - 1)));
  }
  let acc = 0;
  let count = 0;
  for (const sigma of grid) {
    for (let k = 0; k < drawsPerSigma; k++) {
      const x0 = result.dataset.sample(rng);
      const n = x0.re.length;
      const noisy: Complex2D = { h: x0.h, w: x0.w, re: x0.re.slice(), im: x0.im.slice() };
      for (let i = 0; i < n; i++) {
        noisy.re[i] += sigma * rng.gaussian();
        noisy.im[i] += sigma * rng.gaussian();
      }
      const want = truth(noisy, sigma);
      const got = scorer(packInput(noisy, sigma), sigma);
      for (let i = 0; i < n; i++) {
        const dr = got[i] - want.re[i];
        const di = got[n + i] - want.im[i];
        acc += dr * dr + di * di;
        count += 2;
      }
    }
  }
  return acc / count;
}

export function evaluate(result: TrainResult, seed = 7, evalCount = 2000): EvalReport {
  const n = result.dataset.gaussianParams
    ? result.dataset.gaussianParams.mean.re.length
    : result.model.layers[result.model.layers.length - 1].shape.outDim / 2;
  // quantize exactly as the export does, so numbers match what readers see
  const exported = quantized(result.model);
  const trained = modelScorer(exported);
  const zero: Scorer = (input) => new Float64Array(2 * n);
  const analytic = analyticScorer(result.dataset, n);

  const draws = evalDraws(result, evalCount, seed);
  return {
    trainedDsmLoss: lossOverDraws(trained, draws),
    analyticDsmLoss: analytic ? lossOverDraws(analytic, draws) : null,
    zeroDsmLoss: lossOverDraws(zero, draws),
    trainedScoreMse: scoreMse(trained, result, 60, seed + 1),
    zeroScoreMse: scoreMse(zero, result, 60, seed + 1),
  };
}
