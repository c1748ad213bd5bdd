import type { Checkpoint } from "./checkpoint.js";
import { layerNorm, relu, softmax, vecmat, zeroMatrix, zeros } from "./linalg.js";
import { Rng } from "./rng.js";

export interface ForwardResult {
  logits: number[];
  probs: number[];
  /** Final encoder output, (T+1) x dim; row 0 is the classification position. */
  hidden: number[][];
  /** Mean of all hidden rows, the head's input. */
  pooled: number[];
  /**
   * One row per layer: the classification position's attention over the T
   * real tokens, averaged across heads. The self entry is dropped so the
   * row length matches the token count downstream files expect.
   */
  clsAttention: number[][];
}

export interface Prediction {
  labelIndex: number;
  label: string;
  probs: number[];
}

/**
 * Deterministic toy transformer encoder with a mean-pool linear head.
 * Small enough to run thousands of forwards per second in pure JS, which
 * is what the sampling-based explainers need.
 */
export class TinyEncoder {
  private readonly embedCache = new Map<string, number[]>();

  constructor(readonly ckpt: Checkpoint) {}

  get labels(): string[] {
    return this.ckpt.labels;
  }

  /** Embedding derived from the token string; any surface form has one. */
  embedToken(token: string): number[] {
    let cached = this.embedCache.get(token);
    if (cached === undefined) {
      const rng = new Rng(`emb:${this.ckpt.embedSeed}:${token}`);
      const scale = 1 / Math.sqrt(this.ckpt.dim);
      cached = Array.from({ length: this.ckpt.dim }, () => rng.gauss() * scale);
      this.embedCache.set(token, cached);
    }
    return cached;
  }

  /** Sequence input: classification vector first, then tokens, plus positions. */
  embed(tokens: string[]): number[][] {
    if (tokens.length === 0) throw new Error("cannot embed an empty token sequence");
    const dim = this.ckpt.dim;
    const rows = [this.ckpt.cls, ...tokens.map((t) => this.embedToken(t))];
    return rows.map((row, pos) => {
      const out = new Array<number>(dim);
      for (let i = 0; i < dim; i++) {
        const angle = pos / Math.pow(10000, (2 * Math.floor(i / 2)) / dim);
        out[i] = row[i] + (i % 2 === 0 ? Math.sin(angle) : Math.cos(angle));
      }
      return out;
    });
  }

  /** Run the encoder on an already embedded (T+1) x dim sequence. */
  forwardEmbedded(input: number[][]): ForwardResult {
    const { dim, heads } = this.ckpt;
    const seq = input.length;
    const dHead = dim / heads;
    const invSqrt = 1 / Math.sqrt(dHead);
    let x = input;
    const clsAttention: number[][] = [];

    for (const layer of this.ckpt.layers) {
      const q = x.map((row) => vecmat(row, layer.wq));
      const k = x.map((row) => vecmat(row, layer.wk));
      const v = x.map((row) => vecmat(row, layer.wv));
      const context = zeroMatrix(seq, dim);
      const headMeanRow0 = zeros(seq);

      for (let h = 0; h < heads; h++) {
        const base = h * dHead;
        for (let i = 0; i < seq; i++) {
          const scores = new Array<number>(seq);
          for (let j = 0; j < seq; j++) {
            let s = 0;
            for (let c = 0; c < dHead; c++) s += q[i][base + c] * k[j][base + c];
            scores[j] = s * invSqrt;
          }
          const attn = softmax(scores);
          if (i === 0) {
            for (let j = 0; j < seq; j++) headMeanRow0[j] += attn[j] / heads;
          }
          const ctxRow = context[i];
          for (let j = 0; j < seq; j++) {
            const a = attn[j];
            if (a === 0) continue;
            for (let c = 0; c < dHead; c++) ctxRow[base + c] += a * v[j][base + c];
          }
        }
      }

      const projected = context.map((row) => vecmat(row, layer.wo));
      x = x.map((row, i) =>
        layerNorm(row.map((val, d) => val + projected[i][d]), layer.attnGamma, layer.attnBeta)
      );
      x = x.map((row) => {
        const inner = vecmat(row, layer.w1);
        for (let j = 0; j < inner.length; j++) inner[j] += layer.b1[j];
        const outer = vecmat(relu(inner), layer.w2);
        return layerNorm(row.map((val, d) => val + outer[d] + layer.b2[d]),
                         layer.ffnGamma, layer.ffnBeta);
      });
      clsAttention.push(headMeanRow0.slice(1));
    }

    const pooled = zeros(dim);
    for (const row of x) {
      for (let d = 0; d < dim; d++) pooled[d] += row[d];
    }
    for (let d = 0; d < dim; d++) pooled[d] /= seq;
    const logits = vecmat(pooled, this.ckpt.headW);
    for (let j = 0; j < logits.length; j++) logits[j] += this.ckpt.headB[j];
    return { logits, probs: softmax(logits), hidden: x, pooled, clsAttention };
  }

  /**
   * Forward over surface tokens. mask, when given, has one entry per token;
   * false zeroes that token's embedded row (occlusion used by the
   * sampling-based explainers). The classification position never drops.
   */
  forward(tokens: string[], mask?: boolean[]): ForwardResult {
    const input = this.embed(tokens);
    if (mask !== undefined) {
      if (mask.length !== tokens.length) {
        throw new Error(`mask length ${mask.length} != token count ${tokens.length}`);
      }
      for (let i = 0; i < mask.length; i++) {
        if (!mask[i]) input[i + 1] = zeros(this.ckpt.dim);
      }
    }
    return this.forwardEmbedded(input);
  }

  predict(tokens: string[]): Prediction {
    const { probs } = this.forward(tokens);
    let best = 0;
    for (let i = 1; i < probs.length; i++) {
      if (probs[i] > probs[best]) best = i;
    }
    return { labelIndex: best, label: this.ckpt.labels[best], probs };
  }
}
