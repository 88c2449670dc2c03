/**
 * Tiny complex-grid helpers mirroring the reconstruction service's k-space
 * conventions: grid center at (floor(h/2), floor(w/2)), radial power-law
 * weighting w = max(eps, (r*du^2 + r*dv^2)^p), and circular masks with a
 * strict d < a/2 boundary. The transform formulas here must stay numerically
 * identical to the service's, since trained models are consumed over there.
 */

export interface Complex2D {
  h: number;
  w: number;
  re: Float64Array;
  im: Float64Array;
}

export function zeros(h: number, w: number): Complex2D {
  return { h, w, re: new Float64Array(h * w), im: new Float64Array(h * w) };
}

export function clone(x: Complex2D): Complex2D {
  return { h: x.h, w: x.w, re: x.re.slice(), im: x.im.slice() };
}

export function gridCenter(h: number, w: number): [number, number] {
  return [Math.floor(h / 2), Math.floor(w / 2)];
}

export function weightMatrix(
  h: number,
  w: number,
  r: number,
  p: number,
  eps = 1e-6,
): Float64Array {
  const [cu, cv] = gridCenter(h, w);
  const out = new Float64Array(h * w);
  for (let u = 0; u < h; u++) {
    for (let v = 0; v < w; v++) {
      const raw = Math.pow(r * (u - cu) ** 2 + r * (v - cv) ** 2, p);
      out[u * w + v] = Math.max(eps, raw);
    }
  }
  return out;
}

export function circleMask(h: number, w: number, a: number): Float64Array {
  const [cu, cv] = gridCenter(h, w);
  const out = new Float64Array(h * w);
  for (let u = 0; u < h; u++) {
    for (let v = 0; v < w; v++) {
      const d = Math.hypot(u - cu, v - cv);
      out[u * w + v] = d < a / 2 ? 1 : 0;
    }
  }
  return out;
}

/** Elementwise real scaling of a complex grid (weighting or masking). */
export function scalePointwise(x: Complex2D, factors: Float64Array): Complex2D {
  const out = clone(x);
  for (let i = 0; i < factors.length; i++) {
    out.re[i] *= factors[i];
    out.im[i] *= factors[i];
  }
  return out;
}

/** Centered orthonormal 2-D DFT by direct summation; fine at toy sizes. */
export function dft2c(x: Complex2D): Complex2D {
  const { h, w } = x;
  const [cu, cv] = gridCenter(h, w);
  const out = zeros(h, w);
  const scale = 1 / Math.sqrt(h * w);
  for (let ku = 0; ku < h; ku++) {
    for (let kv = 0; kv < w; kv++) {
      let accRe = 0;
      let accIm = 0;
      for (let u = 0; u < h; u++) {
        for (let v = 0; v < w; v++) {
          const phase =
            -2 * Math.PI * (((ku - cu) * (u - cu)) / h + ((kv - cv) * (v - cv)) / w);
          const c = Math.cos(phase);
          const s = Math.sin(phase);
          const re = x.re[u * w + v];
          const im = x.im[u * w + v];
          accRe += re * c - im * s;
          accIm += re * s + im * c;
        }
      }
      out.re[ku * w + kv] = accRe * scale;
      out.im[ku * w + kv] = accIm * scale;
    }
  }
  return out;
}
