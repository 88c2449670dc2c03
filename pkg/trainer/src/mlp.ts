/** Small dense MLP with manual backprop and an Adam optimizer. */

export type Activation = "relu" | "tanh" | "none";

export interface LayerShape {
  inDim: number;
  outDim: number;
  activation: Activation;
}

export interface Layer {
  shape: LayerShape;
  weight: Float64Array; // row-major (outDim x inDim)
  bias: Float64Array;
}

import { Rng } from "./rng";

export class Mlp {
  layers: Layer[];

  constructor(layers: Layer[]) {
    for (let i = 1; i < layers.length; i++) {
      if (layers[i].shape.inDim !== layers[i - 1].shape.outDim) {
        throw new Error(
          `layer ${i} input ${layers[i].shape.inDim} != previous output ${layers[i - 1].shape.outDim}`,
        );
      }
    }
    this.layers = layers;
  }

  static init(shapes: LayerShape[], rng: Rng): Mlp {
    const layers = shapes.map((shape) => {
      const scale = Math.sqrt(2 / (shape.inDim + shape.outDim));
      const weight = new Float64Array(shape.outDim * shape.inDim);
      for (let i = 0; i < weight.length; i++) {
        weight[i] = scale * rng.gaussian();
      }
      return { shape, weight, bias: new Float64Array(shape.outDim) };
    });
    return new Mlp(layers);
  }

  forward(input: Float64Array): Float64Array {
    let h = input;
    for (const layer of this.layers) {
      h = applyLayer(layer, h);
    }
    return h;
  }

  /** Forward pass keeping pre-activations for backprop. */
  trace(input: Float64Array): { inputs: Float64Array[]; pre: Float64Array[] } {
    const inputs: Float64Array[] = [input];
    const pre: Float64Array[] = [];
    let h = input;
    for (const layer of this.layers) {
      const z = affine(layer, h);
      pre.push(z);
      h = activate(z, layer.shape.activation);
      inputs.push(h);
    }
    return { inputs, pre };
  }

  /**
   * Backprop of dLoss/dOutput through the trace; accumulates into the given
   * gradient buffers (same shapes as the layers).
   */
  backward(
    traceResult: { inputs: Float64Array[]; pre: Float64Array[] },
    gradOut: Float64Array,
    grads: { weight: Float64Array; bias: Float64Array }[],
  ): void {
    let delta = gradOut;
    for (let li = this.layers.length - 1; li >= 0; li--) {
      const layer = this.layers[li];
      const { inDim, outDim, activation } = layer.shape;
      const z = traceResult.pre[li];
      const x = traceResult.inputs[li];
      const dz = new Float64Array(outDim);
      for (let o = 0; o < outDim; o++) {
        let g = delta[o];
        if (activation === "relu") {
          g = z[o] > 0 ? g : 0;
        } else if (activation === "tanh") {
          const t = Math.tanh(z[o]);
          g *= 1 - t * t;
        }
        dz[o] = g;
      }
      const gw = grads[li].weight;
      const gb = grads[li].bias;
      for (let o = 0; o < outDim; o++) {
        const row = o * inDim;
        const g = dz[o];
        gb[o] += g;
        for (let i = 0; i < inDim; i++) {
          gw[row + i] += g * x[i];
        }
      }
      if (li > 0) {
        const prevDim = inDim;
        const next = new Float64Array(prevDim);
        for (let o = 0; o < outDim; o++) {
          const row = o * inDim;
          const g = dz[o];
          for (let i = 0; i < prevDim; i++) {
            next[i] += g * layer.weight[row + i];
          }
        }
        delta = next;
      }
    }
  }

  zeroGrads(): { weight: Float64Array; bias: Float64Array }[] {
    return this.layers.map((l) => ({
      weight: new Float64Array(l.weight.length),
      bias: new Float64Array(l.bias.length),
    }));
  }

  snapshot(): Layer[] {
    return this.layers.map((l) => ({
      shape: { ...l.shape },
      weight: l.weight.slice(),
      bias: l.bias.slice(),
    }));
  }

  restore(saved: Layer[]): void {
    this.layers = saved.map((l) => ({
      shape: { ...l.shape },
      weight: l.weight.slice(),
      bias: l.bias.slice(),
    }));
  }
}

function affine(layer: Layer, x: Float64Array): Float64Array {
  const { inDim, outDim } = layer.shape;
  const out = new Float64Array(outDim);
  for (let o = 0; o < outDim; o++) {
    let acc = layer.bias[o];
    const row = o * inDim;
    for (let i = 0; i < inDim; i++) {
      acc += layer.weight[row + i] * x[i];
    }
    out[o] = acc;
  }
  return out;
}

function activate(z: Float64Array, activation: Activation): Float64Array {
  if (activation === "none") {
    return z;
  }
  const out = new Float64Array(z.length);
  for (let i = 0; i < z.length; i++) {
    out[i] = activation === "relu" ? Math.max(0, z[i]) : Math.tanh(z[i]);
  }
  return out;
}

function applyLayer(layer: Layer, x: Float64Array): Float64Array {
  return activate(affine(layer, x), layer.shape.activation);
}

/** Adam with the standard bias correction; beta1=0.9, beta2=0.999. */
export class Adam {
  private m: Float64Array[] = [];
  private v: Float64Array[] = [];
  private t = 0;
  lr: number;

  constructor(
    lr: number,
    private readonly beta1 = 0.9,
    private readonly beta2 = 0.999,
    private readonly eps = 1e-8,
  ) {
    this.lr = lr;
  }

  step(params: Float64Array[], grads: Float64Array[]): void {
    if (this.m.length === 0) {
      this.m = params.map((p) => new Float64Array(p.length));
      this.v = params.map((p) => new Float64Array(p.length));
    }
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (let k = 0; k < params.length; k++) {
      const p = params[k];
      const g = grads[k];
      const m = this.m[k];
      const v = this.v[k];
      for (let i = 0; i < p.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        p[i] -= (this.lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps);
      }
    }
  }
}
