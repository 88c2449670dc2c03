/**
 * Binary MLP weight interchange format (little-endian):
 *   magic "MLPS" | u32 version=1 | u32 layer_count
 *   per layer: u32 in_dim | u32 out_dim | u8 activation (0=relu,1=tanh,2=none)
 *   all weight matrices row-major float32, then all bias vectors float32.
 */

import { Activation, Layer, Mlp } from "./mlp";

const MAGIC = 0x53504c4d; // "MLPS" read as LE u32
const VERSION = 1;
const ACT_CODE: Record<Activation, number> = { relu: 0, tanh: 1, none: 2 };
const CODE_ACT: Activation[] = ["relu", "tanh", "none"];

export function encodeWeights(mlp: Mlp): Uint8Array {
  let size = 4 + 8;
  for (const layer of mlp.layers) {
    size += 9 + 4 * (layer.weight.length + layer.bias.length);
  }
  const buf = new ArrayBuffer(size);
  const view = new DataView(buf);
  let off = 0;
  view.setUint32(off, MAGIC, true);
  off += 4;
  view.setUint32(off, VERSION, true);
  off += 4;
  view.setUint32(off, mlp.layers.length, true);
  off += 4;
  for (const layer of mlp.layers) {
    view.setUint32(off, layer.shape.inDim, true);
    off += 4;
    view.setUint32(off, layer.shape.outDim, true);
    off += 4;
    view.setUint8(off, ACT_CODE[layer.shape.activation]);
    off += 1;
  }
  for (const layer of mlp.layers) {
    for (let i = 0; i < layer.weight.length; i++) {
      view.setFloat32(off, layer.weight[i], true);
      off += 4;
    }
  }
  for (const layer of mlp.layers) {
    for (let i = 0; i < layer.bias.length; i++) {
      view.setFloat32(off, layer.bias[i], true);
      off += 4;
    }
  }
  return new Uint8Array(buf);
}

export function decodeWeights(data: Uint8Array): Mlp {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let off = 0;
  const need = (n: number, what: string) => {
    if (off + n > data.byteLength) {
      throw new Error(`weight file truncated while reading ${what}`);
    }
  };
  need(12, "header");
  if (view.getUint32(off, true) !== MAGIC) {
    throw new Error("bad magic, expected MLPS");
  }
  off += 4;
  const version = view.getUint32(off, true);
  off += 4;
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const count = view.getUint32(off, true);
  off += 4;
  if (count < 1 || count > 1024) {
    throw new Error(`implausible layer count ${count}`);
  }
  const shapes = [];
  for (let i = 0; i < count; i++) {
    need(9, `layer ${i} header`);
    const inDim = view.getUint32(off, true);
    off += 4;
    const outDim = view.getUint32(off, true);
    off += 4;
    const act = view.getUint8(off);
    off += 1;
    if (act > 2) {
      throw new Error(`layer ${i} has unknown activation code ${act}`);
    }
    shapes.push({ inDim, outDim, activation: CODE_ACT[act] });
  }
  const layers: Layer[] = [];
  const weights: Float64Array[] = [];
  for (let i = 0; i < count; i++) {
    const n = shapes[i].inDim * shapes[i].outDim;
    need(4 * n, `layer ${i} weights`);
    const w = new Float64Array(n);
    for (let k = 0; k < n; k++) {
      w[k] = view.getFloat32(off, true);
      off += 4;
    }
    weights.push(w);
  }
  for (let i = 0; i < count; i++) {
    const n = shapes[i].outDim;
    need(4 * n, `layer ${i} bias`);
    const b = new Float64Array(n);
    for (let k = 0; k < n; k++) {
      b[k] = view.getFloat32(off, true);
      off += 4;
    }
    layers.push({ shape: shapes[i], weight: weights[i], bias: b });
  }
  return new Mlp(layers);
}

/** Export quantizes to float32; use this to see exactly what a reader gets. */
export function quantized(mlp: Mlp): Mlp {
  return decodeWeights(encodeWeights(mlp));
}
