import { execFile } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { promisify } from "util";

import { describe, expect, it } from "vitest";

import { DEFAULT_SPEC, TrainSpec, makeDataset, sigmaLadder } from "../src/data";
import { train } from "../src/train";
import { Rng } from "../src/rng";

const execFileAsync = promisify(execFile);

function spec(overrides: Partial<TrainSpec> = {}): TrainSpec {
  return { ...DEFAULT_SPEC, ...overrides };
}

describe("schedule", () => {
  it("builds the geometric ladder with exact endpoints", () => {
    const sig = sigmaLadder({ sigmaMin: 0.01, sigmaMax: 10, levels: 100 });
    expect(sig.length).toBe(101);
    expect(sig[0]).toBe(0.01);
    expect(sig[100]).toBe(10);
    const ratio = sig[1] / sig[0];
    for (let i = 1; i < 100; i++) {
      expect(sig[i + 1] / sig[i]).toBeCloseTo(ratio, 10);
    }
  });
});

describe("datasets", () => {
  it("gaussian sampling is deterministic given the seed", () => {
    const s = spec();
    const a = makeDataset(s).sample(new Rng(3));
    const b = makeDataset(s).sample(new Rng(3));
    expect(Array.from(a.re)).toEqual(Array.from(b.re));
    expect(Array.from(a.im)).toEqual(Array.from(b.im));
  });

  it("gaussian empirical moments match the declared parameters", () => {
    const ds = makeDataset(spec());
    const params = ds.gaussianParams!;
    const rng = new Rng(8);
    const n = params.mean.re.length;
    const acc = new Float64Array(n);
    const accSq = new Float64Array(n);
    const reps = 20000;
    for (let k = 0; k < reps; k++) {
      const x = ds.sample(rng);
      for (let i = 0; i < n; i++) {
        acc[i] += x.re[i];
        accSq[i] += x.re[i] * x.re[i];
      }
    }
    for (let i = 0; i < n; i++) {
      const mean = acc[i] / reps;
      const variance = accSq[i] / reps - mean * mean;
      expect(mean).toBeCloseTo(params.mean.re[i], 1);
      expect(Math.abs(variance - params.variance[i]) / params.variance[i])
        .toBeLessThan(0.1);
    }
  });

  it("masked transform zeroes everything off support", () => {
    const ds = makeDataset(spec({ gridSize: 4, transform: { kind: "masked", a: 2.0 } }));
    const x = ds.sample(new Rng(1));
    // diameter 2 keeps a single center pixel on a 4x4 grid
    for (let i = 0; i < 16; i++) {
      if (i !== 2 * 4 + 2) {
        expect(Math.abs(x.re[i])).toBe(0);
        expect(Math.abs(x.im[i])).toBe(0);
      }
    }
  });

  it("phantom patches live in k-space with a bright center", () => {
    const ds = makeDataset(spec({ dataset: "phantom-patches", gridSize: 4 }));
    const x = ds.sample(new Rng(5));
    const center = Math.hypot(x.re[2 * 4 + 2], x.im[2 * 4 + 2]);
    let maxOff = 0;
    for (let i = 0; i < 16; i++) {
      if (i !== 2 * 4 + 2) {
        maxOff = Math.max(maxOff, Math.hypot(x.re[i], x.im[i]));
      }
    }
    expect(center).toBeGreaterThan(0);
    expect(center).toBeGreaterThanOrEqual(maxOff * 0.5);
  });
});

describe("train", () => {
  it("is deterministic given the seed", () => {
    const s = spec({ steps: 30, batchSize: 16 });
    const a = train(s);
    const b = train(s);
    expect(Array.from(a.model.layers[0].weight)).toEqual(
      Array.from(b.model.layers[0].weight),
    );
    expect(a.lossCurve).toEqual(b.lossCurve);
  });

  it("moving-average loss is non-increasing on the gaussian toy", () => {
    const result = train(spec({ steps: 600, batchSize: 64, seed: 2 }));
    const chunk = 100;
    const averages: number[] = [];
    for (let start = 0; start + chunk <= result.lossCurve.length; start += chunk) {
      const slice = result.lossCurve.slice(start, start + chunk);
      averages.push(slice.reduce((a, b) => a + b, 0) / chunk);
    }
    for (let i = 1; i < averages.length; i++) {
      expect(averages[i]).toBeLessThanOrEqual(averages[i - 1] * 1.02);
    }
  }, 120000);

  it("meets the gaussian-toy criteria: loss within 2x of analytic, score mse 10x under zero", async () => {
    // full default run through the built CLI, kept off the test event loop
    const cli = path.join(__dirname, "..", "dist", "cli.js");
    expect(fs.existsSync(cli), "run `npm run build` first").toBe(true);
    const out1 = fs.mkdtempSync(path.join(os.tmpdir(), "trainer-a-"));
    const out2 = fs.mkdtempSync(path.join(os.tmpdir(), "trainer-b-"));
    await execFileAsync("node", [cli, "train", "--out", out1, "--seed", "1"]);
    await execFileAsync("node", [cli, "train", "--out", out2, "--seed", "1"]);

    const report = JSON.parse(
      fs.readFileSync(path.join(out1, "report.json"), "utf-8"),
    );
    expect(report.diverged).toBe(false);
    const ev = report.evaluation;
    expect(ev.analyticDsmLoss).not.toBeNull();
    expect(ev.trainedDsmLoss).toBeLessThanOrEqual(ev.analyticDsmLoss * 2);
    expect(ev.trainedScoreMse * 10).toBeLessThanOrEqual(ev.zeroScoreMse);

    // same seed, same bytes
    const w1 = fs.readFileSync(path.join(out1, "weights.mlps"));
    const w2 = fs.readFileSync(path.join(out2, "weights.mlps"));
    expect(w1.equals(w2)).toBe(true);

    const fixtures = JSON.parse(
      fs.readFileSync(path.join(out1, "fixtures.json"), "utf-8"),
    ).fixtures;
    expect(fixtures).toHaveLength(10);
    expect(fs.existsSync(path.join(out1, "loss_curve.csv"))).toBe(true);
  }, 600000);
});
