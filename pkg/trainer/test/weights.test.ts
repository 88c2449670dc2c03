import { describe, expect, it } from "vitest";

import { Mlp } from "../src/mlp";
import { Rng } from "../src/rng";
import { decodeWeights, encodeWeights, quantized } from "../src/weights";

function toyModel(seed = 9): Mlp {
  return Mlp.init(
    [
      { inDim: 9, outDim: 12, activation: "tanh" },
      { inDim: 12, outDim: 8, activation: "none" },
    ],
    new Rng(seed),
  );
}

describe("weight serialization", () => {
  it("encode/decode round trip is byte-stable", () => {
    const model = toyModel();
    const blob = encodeWeights(model);
    const again = encodeWeights(decodeWeights(blob));
    expect(Buffer.from(again).equals(Buffer.from(blob))).toBe(true);
  });

  it("reloaded weights reproduce forward outputs bit-exactly", () => {
    const model = quantized(toyModel());
    const blob = encodeWeights(model);
    const reloaded = decodeWeights(blob);
    const rng = new Rng(4);
    for (let k = 0; k < 10; k++) {
      const input = Float64Array.from({ length: 9 }, () => rng.gaussian());
      const a = model.forward(input);
      const b = reloaded.forward(input);
      for (let i = 0; i < a.length; i++) {
        expect(b[i]).toBe(a[i]);
      }
    }
  });

  it("rejects a bad magic", () => {
    const blob = encodeWeights(toyModel());
    blob[0] = 0x58;
    expect(() => decodeWeights(blob)).toThrow(/magic/);
  });

  it("rejects an unsupported version", () => {
    const blob = encodeWeights(toyModel());
    blob[4] = 9;
    expect(() => decodeWeights(blob)).toThrow(/version/);
  });

  it("rejects truncated payloads", () => {
    const blob = encodeWeights(toyModel());
    expect(() => decodeWeights(blob.slice(0, blob.length - 5))).toThrow(/truncated/);
  });
});
