/**
 * Command line: train a score MLP and export everything a consumer needs.
 *
 *   node dist/cli.js train --out <dir> [--spec spec.json] [--seed n]
 *                          [--steps n] [--dataset gaussian|mixture|phantom-patches]
 *
 * Writes into --out:
 *   weights.mlps     binary weights (shared interchange format)
 *   report.json      dataset parameters, schedule, and evaluation losses
 *   fixtures.json    10 random inputs with this trainer's forward outputs
 *   loss_curve.csv   step,loss
 */

import * as fs from "fs";
import * as path from "path";

import { DEFAULT_SPEC, TrainSpec } from "./data";
import { packInput } from "./dsm";
import { Rng } from "./rng";
import { evaluate, train } from "./train";
import { encodeWeights, quantized } from "./weights";

function parseArgs(argv: string[]): { spec: TrainSpec; outDir: string } {
  if (argv[0] !== "train") {
    throw new Error(`unknown command ${argv[0] ?? "(none)"}; expected "train"`);
  }
  let outDir = "";
  const spec: TrainSpec = { ...DEFAULT_SPEC, transform: { ...DEFAULT_SPEC.transform } };
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`missing value for ${key}`);
    }
    switch (key) {
      case "--out":
        outDir = value;
        break;
      case "--spec": {
        const fromFile = JSON.parse(fs.readFileSync(value, "utf-8"));
        Object.assign(spec, fromFile);
        break;
      }
      case "--seed":
        spec.seed = Number(value);
        break;
      case "--steps":
        spec.steps = Number(value);
        break;
      case "--dataset":
        spec.dataset = value as TrainSpec["dataset"];
        break;
      case "--grid-size":
        spec.gridSize = Number(value);
        break;
      default:
        throw new Error(`unknown flag ${key}`);
    }
  }
  if (!outDir) {
    throw new Error("--out <dir> is required");
  }
  return { spec, outDir };
}

export function runCli(argv: string[]): number {
  const { spec, outDir } = parseArgs(argv);
  fs.mkdirSync(outDir, { recursive: true });

  const result = train(spec);
  if (result.diverged) {
    process.stderr.write("training diverged; exported last good checkpoint\n");
  }
  const report = evaluate(result);

  fs.writeFileSync(path.join(outDir, "weights.mlps"), encodeWeights(result.model));

  // fixtures: forward outputs of the quantized model, exactly what a
  // reader of weights.mlps should reproduce
  const exported = quantized(result.model);
  const n = spec.gridSize * spec.gridSize;
  const fixtureRng = new Rng(spec.seed ^ 0xf1c);
  const fixtures = [];
  for (let k = 0; k < 10; k++) {
    const x = {
      h: spec.gridSize,
      w: spec.gridSize,
      re: Float64Array.from({ length: n }, () => 2 * fixtureRng.gaussian()),
      im: Float64Array.from({ length: n }, () => 2 * fixtureRng.gaussian()),
    };
    const sigma = Math.exp(
      Math.log(spec.schedule.sigmaMin) +
        fixtureRng.next() * Math.log(spec.schedule.sigmaMax / spec.schedule.sigmaMin),
    );
    const input = packInput(x, sigma);
    const output = exported.forward(input);
    fixtures.push({ input: Array.from(input), sigma, output: Array.from(output) });
  }
  fs.writeFileSync(path.join(outDir, "fixtures.json"),
                   JSON.stringify({ fixtures }, null, 2));

  const params = result.dataset.gaussianParams;
  fs.writeFileSync(path.join(outDir, "report.json"), JSON.stringify({
    spec,
    finalTrainLoss: result.finalLoss,
    diverged: result.diverged,
    evaluation: report,
    gaussian: params
      ? {
          meanRe: Array.from(params.mean.re),
          meanIm: Array.from(params.mean.im),
          variance: Array.from(params.variance),
        }
      : null,
  }, null, 2));

  const curve = result.lossCurve.map((loss, step) => `${step},${loss}`).join("\n");
  fs.writeFileSync(path.join(outDir, "loss_curve.csv"), `step,loss\n${curve}\n`);

  process.stdout.write(
    `trained ${spec.dataset} grid=${spec.gridSize} steps=${spec.steps} ` +
    `final_loss=${result.finalLoss.toFixed(4)} ` +
    `analytic_loss=${report.analyticDsmLoss?.toFixed(4) ?? "n/a"}\n`,
  );
  return 0;
}

if (require.main === module) {
  try {
    process.exit(runCli(process.argv.slice(2)));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    process.exit(1);
  }
}
