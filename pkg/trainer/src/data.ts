/** Toy training distributions and the k-space transforms applied to them. */

import { Complex2D, circleMask, dft2c, scalePointwise, weightMatrix, zeros } from "./grid";
import { Rng } from "./rng";

export type TransformSpec =
  | { kind: "none" }
  | { kind: "weighted"; r: number; p: number }
  | { kind: "masked"; a: number };

export type DatasetKind = "gaussian" | "mixture" | "phantom-patches";

export interface ScheduleSpec {
  sigmaMin: number;
  sigmaMax: number;
  levels: number;
}

export interface TrainSpec {
  dataset: DatasetKind;
  gridSize: number;
  transform: TransformSpec;
  schedule: ScheduleSpec;
  steps: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  hiddenDim: number;
}

export const DEFAULT_SPEC: TrainSpec = {
  dataset: "gaussian",
  gridSize: 2,
  transform: { kind: "none" },
  schedule: { sigmaMin: 0.1, sigmaMax: 5, levels: 200 },
  steps: 10000,
  batchSize: 128,
  learningRate: 2e-3,
  seed: 1,
  hiddenDim: 64,
};

export function sigmaLadder(s: ScheduleSpec): Float64Array {
  const out = new Float64Array(s.levels + 1);
  for (let i = 0; i <= s.levels; i++) {
    out[i] = s.sigmaMin * Math.pow(s.sigmaMax / s.sigmaMin, i / s.levels);
  }
  out[0] = s.sigmaMin;
  out[s.levels] = s.sigmaMax;
  return out;
}

export function transformFactors(spec: TransformSpec, h: number, w: number): Float64Array {
  if (spec.kind === "weighted") {
    return weightMatrix(h, w, spec.r, spec.p);
  }
  if (spec.kind === "masked") {
    return circleMask(h, w, spec.a);
  }
  const ones = new Float64Array(h * w);
  ones.fill(1);
  return ones;
}

export interface Dataset {
  /** One clean sample, already transformed. */
  sample(rng: Rng): Complex2D;
  /**
   * Exact per-component score of the transformed distribution at noise
   * level sigma, when it has a closed form (gaussian dataset); null else.
   */
  analyticScore: ((x: Complex2D, sigma: number) => Complex2D) | null;
  /** Per-pixel mean/variance of the transformed distribution, if gaussian. */
  gaussianParams: { mean: Complex2D; variance: Float64Array } | null;
}

function gaussianDataset(spec: TrainSpec, factors: Float64Array): Dataset {
  const n = spec.gridSize * spec.gridSize;
  const seedRng = new Rng(spec.seed ^ 0x5eed);
  const mean = zeros(spec.gridSize, spec.gridSize);
  for (let i = 0; i < n; i++) {
    mean.re[i] = seedRng.gaussian();
    mean.im[i] = seedRng.gaussian();
  }
  const baseVar = 0.5;
  const tMean = scalePointwise(mean, factors);
  // off-support variance is exactly zero; the analytic score stays defined
  // because it always divides by variance + sigma^2 with sigma > 0
  const tVar = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    tVar[i] = baseVar * factors[i] * factors[i];
  }
  return {
    sample(rng: Rng): Complex2D {
      const out = zeros(spec.gridSize, spec.gridSize);
      for (let i = 0; i < n; i++) {
        const sd = Math.sqrt(tVar[i]);
        out.re[i] = tMean.re[i] + sd * rng.gaussian();
        out.im[i] = tMean.im[i] + sd * rng.gaussian();
      }
      return out;
    },
    analyticScore(x: Complex2D, sigma: number): Complex2D {
      const out = zeros(x.h, x.w);
      for (let i = 0; i < n; i++) {
        const s = tVar[i] + sigma * sigma;
        out.re[i] = -(x.re[i] - tMean.re[i]) / s;
        out.im[i] = -(x.im[i] - tMean.im[i]) / s;
      }
      return out;
    },
    gaussianParams: { mean: tMean, variance: tVar },
  };
}

function mixtureDataset(spec: TrainSpec, factors: Float64Array): Dataset {
  const n = spec.gridSize * spec.gridSize;
  const seedRng = new Rng(spec.seed ^ 0x317);
  const centers = [zeros(spec.gridSize, spec.gridSize), zeros(spec.gridSize, spec.gridSize)];
  for (let i = 0; i < n; i++) {
    const re = 1.5 * seedRng.gaussian();
    const im = 1.5 * seedRng.gaussian();
    centers[0].re[i] = re;
    centers[0].im[i] = im;
    centers[1].re[i] = -re;
    centers[1].im[i] = -im;
  }
  const sd = Math.sqrt(0.25);
  return {
    sample(rng: Rng): Complex2D {
      const c = centers[rng.next() < 0.5 ? 0 : 1];
      const out = zeros(spec.gridSize, spec.gridSize);
      for (let i = 0; i < n; i++) {
        out.re[i] = c.re[i] + sd * rng.gaussian();
        out.im[i] = c.im[i] + sd * rng.gaussian();
      }
      return scalePointwise(out, factors);
    },
    analyticScore: null,
    gaussianParams: null,
  };
}

function phantomDataset(spec: TrainSpec, factors: Float64Array): Dataset {
  const size = spec.gridSize;
  return {
    sample(rng: Rng): Complex2D {
      // random bright rectangle on a dark background, moved to k-space
      const img = zeros(size, size);
      const u0 = rng.int(size);
      const v0 = rng.int(size);
      const du = 1 + rng.int(size - u0);
      const dv = 1 + rng.int(size - v0);
      const level = 0.5 + rng.next();
      for (let u = u0; u < u0 + du; u++) {
        for (let v = v0; v < v0 + dv; v++) {
          img.re[u * size + v] = level;
        }
      }
      return scalePointwise(dft2c(img), factors);
    },
    analyticScore: null,
    gaussianParams: null,
  };
}

export function makeDataset(spec: TrainSpec): Dataset {
  const factors = transformFactors(spec.transform, spec.gridSize, spec.gridSize);
  switch (spec.dataset) {
    case "gaussian":
      return gaussianDataset(spec, factors);
    case "mixture":
      return mixtureDataset(spec, factors);
    case "phantom-patches":
      return phantomDataset(spec, factors);
  }
}
