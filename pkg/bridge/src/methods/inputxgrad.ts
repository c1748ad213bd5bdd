import type { TinyEncoder } from "../model.js";

// Central-difference step; the encoder is smooth so 1e-3 is well inside
// the regime where truncation and rounding error are both negligible.
const STEP = 1e-3;

/**
 * Gradient-times-input on the embedded sequence. The gradient of the
 * target class probability is taken numerically against each embedding
 * component, multiplied by that component, and summed per token.
 */
export function inputXGradient(model: TinyEncoder, tokens: string[], targetIndex: number): number[] {
  const input = model.embed(tokens);
  const dim = model.ckpt.dim;
  const scores: number[] = [];
  for (let t = 0; t < tokens.length; t++) {
    const row = input[t + 1];
    let total = 0;
    for (let d = 0; d < dim; d++) {
      const original = row[d];
      row[d] = original + STEP;
      const up = model.forwardEmbedded(input).probs[targetIndex];
      row[d] = original - STEP;
      const down = model.forwardEmbedded(input).probs[targetIndex];
      row[d] = original;
      total += ((up - down) / (2 * STEP)) * original;
    }
    scores.push(total);
  }
  return scores;
}
