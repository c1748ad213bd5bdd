import type { TinyEncoder } from "../model.js";
import { Rng } from "../rng.js";

/**
 * Shapley value estimate by permutation sampling. Tokens enter a coalition
 * in random order; each token is credited with the change in the target
 * class probability the moment it is revealed. Within one permutation the
 * credits telescope, so the estimate is exactly efficient: the scores sum
 * to p(full input) - p(everything masked).
 */
export function shap(
  model: TinyEncoder,
  tokens: string[],
  targetIndex: number,
  samples: number,
  seed: string
): number[] {
  const n = tokens.length;
  if (samples < 1) throw new Error("shap needs at least one sample");
  const rng = new Rng(seed);
  const phi = new Array<number>(n).fill(0);
  const emptyValue = model.forward(tokens, new Array<boolean>(n).fill(false)).probs[targetIndex];

  for (let s = 0; s < samples; s++) {
    const order = rng.shuffle(Array.from({ length: n }, (_, i) => i));
    const mask = new Array<boolean>(n).fill(false);
    let previous = emptyValue;
    for (const idx of order) {
      mask[idx] = true;
      const current = model.forward(tokens, mask).probs[targetIndex];
      phi[idx] += current - previous;
      previous = current;
    }
  }
  return phi.map((v) => v / samples);
}
