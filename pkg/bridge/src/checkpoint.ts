import { readFileSync, writeFileSync } from "node:fs";
import { Rng } from "./rng.js";

/** One encoder block. Projection matrices are dim x dim, split per head by column. */
export interface LayerWeights {
  wq: number[][];
  wk: number[][];
  wv: number[][];
  wo: number[][];
  attnGamma: number[];
  attnBeta: number[];
  w1: number[][];
  b1: number[];
  w2: number[][];
  b2: number[];
  ffnGamma: number[];
  ffnBeta: number[];
}

/**
 * A complete model: encoder weights plus a linear head over the mean-pooled
 * hidden states. Token embeddings are not stored; they are derived on the
 * fly from embedSeed and the token string, so the file stays small and any
 * surface token has a vector.
 */
export interface Checkpoint {
  name: string;
  dim: number;
  heads: number;
  ffnDim: number;
  labels: string[];
  embedSeed: number;
  cls: number[];
  layers: LayerWeights[];
  headW: number[][];
  headB: number[];
}

export interface CheckpointSpec {
  seed: number;
  dim?: number;
  heads?: number;
  layers?: number;
  ffnDim?: number;
  labels?: string[];
}

function gaussMatrix(rng: Rng, rows: number, cols: number, scale: number): number[][] {
  return Array.from({ length: rows }, () =>
    Array.from({ length: cols }, () => rng.gauss() * scale)
  );
}

export function makeCheckpoint(name: string, spec: CheckpointSpec): Checkpoint {
  const dim = spec.dim ?? 16;
  const heads = spec.heads ?? 2;
  const nLayers = spec.layers ?? 2;
  const ffnDim = spec.ffnDim ?? 32;
  const labels = spec.labels ?? ["neg", "pos"];
  if (dim % heads !== 0) throw new Error(`dim ${dim} not divisible by ${heads} heads`);
  if (labels.length < 2) throw new Error("need at least two labels");

  const rng = new Rng(`${name}:${spec.seed}`);
  const scale = 1 / Math.sqrt(dim);
  const layers: LayerWeights[] = [];
  for (let l = 0; l < nLayers; l++) {
    layers.push({
      wq: gaussMatrix(rng, dim, dim, scale),
      wk: gaussMatrix(rng, dim, dim, scale),
      wv: gaussMatrix(rng, dim, dim, scale),
      wo: gaussMatrix(rng, dim, dim, scale),
      attnGamma: new Array(dim).fill(1),
      attnBeta: new Array(dim).fill(0),
      w1: gaussMatrix(rng, dim, ffnDim, scale),
      b1: new Array(ffnDim).fill(0),
      w2: gaussMatrix(rng, ffnDim, dim, 1 / Math.sqrt(ffnDim)),
      b2: new Array(dim).fill(0),
      ffnGamma: new Array(dim).fill(1),
      ffnBeta: new Array(dim).fill(0),
    });
  }
  return {
    name,
    dim,
    heads,
    ffnDim,
    labels,
    embedSeed: spec.seed,
    cls: Array.from({ length: dim }, () => rng.gauss() * scale),
    layers,
    headW: gaussMatrix(rng, dim, labels.length, scale),
    headB: new Array(labels.length).fill(0),
  };
}

// Spread kept small so seed variants stay near the base model's behavior.
const JITTER_SIGMA = 0.02;

/**
 * Derive the seed-variant model used for consistency runs: every learned
 * weight gets deterministic gaussian noise keyed on (checkpoint, seed).
 * Embeddings are untouched so all variants share one token space.
 */
export function jitterCheckpoint(ckpt: Checkpoint, seed: number): Checkpoint {
  const rng = new Rng(`${ckpt.name}:jitter:${seed}`);
  const vec = (v: number[]) => v.map((x) => x + rng.gauss() * JITTER_SIGMA);
  const mat = (m: number[][]) => m.map(vec);
  return {
    ...ckpt,
    cls: vec(ckpt.cls),
    layers: ckpt.layers.map((l) => ({
      wq: mat(l.wq),
      wk: mat(l.wk),
      wv: mat(l.wv),
      wo: mat(l.wo),
      attnGamma: vec(l.attnGamma),
      attnBeta: vec(l.attnBeta),
      w1: mat(l.w1),
      b1: vec(l.b1),
      w2: mat(l.w2),
      b2: vec(l.b2),
      ffnGamma: vec(l.ffnGamma),
      ffnBeta: vec(l.ffnBeta),
    })),
    headW: mat(ckpt.headW),
    headB: vec(ckpt.headB),
  };
}

function checkVector(v: unknown, length: number, what: string): number[] {
  if (!Array.isArray(v) || v.length !== length || v.some((x) => typeof x !== "number" || !Number.isFinite(x))) {
    throw new Error(`bad checkpoint: ${what} must be ${length} finite numbers`);
  }
  return v as number[];
}

function checkMatrix(m: unknown, rows: number, cols: number, what: string): number[][] {
  if (!Array.isArray(m) || m.length !== rows) {
    throw new Error(`bad checkpoint: ${what} must have ${rows} rows`);
  }
  return m.map((row, i) => checkVector(row, cols, `${what}[${i}]`));
}

export function loadCheckpoint(path: string): Checkpoint {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new Error(`cannot read checkpoint ${path}: ${(err as Error).message}`);
  }
  const obj = parsed as Record<string, unknown>;
  if (typeof obj !== "object" || obj === null) throw new Error("bad checkpoint: not an object");
  const { name, dim, heads, ffnDim, embedSeed, labels } = obj;
  if (typeof name !== "string" || name.length === 0) throw new Error("bad checkpoint: missing name");
  if (typeof dim !== "number" || typeof heads !== "number" || typeof ffnDim !== "number" || typeof embedSeed !== "number") {
    throw new Error("bad checkpoint: dim, heads, ffnDim, embedSeed must be numbers");
  }
  if (!Array.isArray(labels) || labels.length < 2 || labels.some((l) => typeof l !== "string")) {
    throw new Error("bad checkpoint: labels must be at least two strings");
  }
  if (dim % heads !== 0) throw new Error(`bad checkpoint: dim ${dim} not divisible by ${heads} heads`);
  const rawLayers = obj.layers;
  if (!Array.isArray(rawLayers) || rawLayers.length === 0) {
    throw new Error("bad checkpoint: layers must be a non-empty array");
  }
  const layers = rawLayers.map((raw, i): LayerWeights => {
    const l = raw as Record<string, unknown>;
    return {
      wq: checkMatrix(l.wq, dim, dim, `layers[${i}].wq`),
      wk: checkMatrix(l.wk, dim, dim, `layers[${i}].wk`),
      wv: checkMatrix(l.wv, dim, dim, `layers[${i}].wv`),
      wo: checkMatrix(l.wo, dim, dim, `layers[${i}].wo`),
      attnGamma: checkVector(l.attnGamma, dim, `layers[${i}].attnGamma`),
      attnBeta: checkVector(l.attnBeta, dim, `layers[${i}].attnBeta`),
      w1: checkMatrix(l.w1, dim, ffnDim, `layers[${i}].w1`),
      b1: checkVector(l.b1, ffnDim, `layers[${i}].b1`),
      w2: checkMatrix(l.w2, ffnDim, dim, `layers[${i}].w2`),
      b2: checkVector(l.b2, dim, `layers[${i}].b2`),
      ffnGamma: checkVector(l.ffnGamma, dim, `layers[${i}].ffnGamma`),
      ffnBeta: checkVector(l.ffnBeta, dim, `layers[${i}].ffnBeta`),
    };
  });
  return {
    name,
    dim,
    heads,
    ffnDim,
    labels: labels as string[],
    embedSeed,
    cls: checkVector(obj.cls, dim, "cls"),
    layers,
    headW: checkMatrix(obj.headW, dim, labels.length, "headW"),
    headB: checkVector(obj.headB, labels.length, "headB"),
  };
}

export function saveCheckpoint(ckpt: Checkpoint, path: string): void {
  writeFileSync(path, JSON.stringify(ckpt) + "\n");
}
