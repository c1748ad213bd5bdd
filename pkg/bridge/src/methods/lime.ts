import { solveLinear } from "../linalg.js";
import type { TinyEncoder } from "../model.js";
import { Rng } from "../rng.js";

const KERNEL_WIDTH = 0.25;
const RIDGE_LAMBDA = 1e-3;

/**
 * Local surrogate weights: sample token keep/drop masks, score the masked
 * inputs with the model, then fit a distance-weighted ridge regression.
 * The coefficient on each token's presence indicator is its score.
 */
export function lime(
  model: TinyEncoder,
  tokens: string[],
  targetIndex: number,
  samples: number,
  seed: string
): number[] {
  const n = tokens.length;
  if (samples < 1) throw new Error("lime needs at least one sample");
  const rng = new Rng(seed);

  const features: number[][] = [];
  const outcomes: number[] = [];
  const weights: number[] = [];

  const push = (mask: boolean[], weight: number) => {
    features.push([1, ...mask.map((m) => (m ? 1 : 0))]);
    outcomes.push(model.forward(tokens, mask).probs[targetIndex]);
    weights.push(weight);
  };

  // the unperturbed input anchors the fit at full weight
  push(new Array<boolean>(n).fill(true), 1);
  for (let s = 0; s < samples; s++) {
    const mask = tokens.map(() => rng.next() < 0.5);
    if (!mask.some(Boolean)) mask[rng.int(n)] = true;
    const dropped = mask.filter((m) => !m).length / n;
    push(mask, Math.exp(-(dropped * dropped) / (KERNEL_WIDTH * KERNEL_WIDTH)));
  }

  // (X^T W X + lambda R) beta = X^T W y, intercept left unregularized
  const cols = n + 1;
  const lhs = Array.from({ length: cols }, () => new Array<number>(cols).fill(0));
  const rhs = new Array<number>(cols).fill(0);
  for (let r = 0; r < features.length; r++) {
    const row = features[r];
    const w = weights[r];
    for (let i = 0; i < cols; i++) {
      if (row[i] === 0) continue;
      const wi = w * row[i];
      rhs[i] += wi * outcomes[r];
      for (let j = i; j < cols; j++) lhs[i][j] += wi * row[j];
    }
  }
  for (let i = 0; i < cols; i++) {
    for (let j = 0; j < i; j++) lhs[i][j] = lhs[j][i];
  }
  for (let i = 1; i < cols; i++) lhs[i][i] += RIDGE_LAMBDA;

  return solveLinear(lhs, rhs).slice(1);
}
