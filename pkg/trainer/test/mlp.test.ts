import { describe, expect, it } from "vitest";

import { Adam, Mlp } from "../src/mlp";
import { Rng } from "../src/rng";

function numericalGrad(
  mlp: Mlp,
  input: Float64Array,
  target: Float64Array,
  layer: number,
  param: "weight" | "bias",
  index: number,
  h = 1e-6,
): number {
  const loss = () => {
    const out = mlp.forward(input);
    let acc = 0;
    for (let i = 0; i < out.length; i++) {
      const d = out[i] - target[i];
      acc += d * d;
    }
    return acc;
  };
  const store = mlp.layers[layer][param];
  const orig = store[index];
  store[index] = orig + h;
  const up = loss();
  store[index] = orig - h;
  const down = loss();
  store[index] = orig;
  return (up - down) / (2 * h);
}

describe("Mlp backprop", () => {
  it("matches finite differences on every parameter", () => {
    const rng = new Rng(5);
    const mlp = Mlp.init(
      [
        { inDim: 3, outDim: 5, activation: "tanh" },
        { inDim: 5, outDim: 4, activation: "relu" },
        { inDim: 4, outDim: 2, activation: "none" },
      ],
      rng,
    );
    const input = Float64Array.from([0.3, -0.7, 1.1]);
    const target = Float64Array.from([0.25, -0.5]);

    const traced = mlp.trace(input);
    const out = traced.inputs[traced.inputs.length - 1];
    const gradOut = new Float64Array(out.length);
    for (let i = 0; i < out.length; i++) {
      gradOut[i] = 2 * (out[i] - target[i]);
    }
    const grads = mlp.zeroGrads();
    mlp.backward(traced, gradOut, grads);

    for (let layer = 0; layer < mlp.layers.length; layer++) {
      for (const param of ["weight", "bias"] as const) {
        const store = grads[layer][param];
        for (let index = 0; index < store.length; index++) {
          const numeric = numericalGrad(mlp, input, target, layer, param, index);
          expect(store[index]).toBeCloseTo(numeric, 5);
        }
      }
    }
  });

  it("rejects mismatched layer chains", () => {
    expect(
      () =>
        new Mlp([
          {
            shape: { inDim: 3, outDim: 5, activation: "tanh" },
            weight: new Float64Array(15),
            bias: new Float64Array(5),
          },
          {
            shape: { inDim: 4, outDim: 2, activation: "none" },
            weight: new Float64Array(8),
            bias: new Float64Array(2),
          },
        ]),
    ).toThrow(/layer 1/);
  });
});

describe("Adam", () => {
  it("minimizes a simple quadratic", () => {
    const p = Float64Array.from([5.0, -3.0]);
    const adam = new Adam(0.1);
    for (let step = 0; step < 500; step++) {
      const g = Float64Array.from([2 * p[0], 2 * p[1]]);
      adam.step([p], [g]);
    }
    expect(Math.abs(p[0])).toBeLessThan(1e-2);
    expect(Math.abs(p[1])).toBeLessThan(1e-2);
  });
});
