import type { TinyEncoder } from "../model.js";

/**
 * Class activation mapping over the final encoder layer. With a mean-pool
 * linear head the gradient of the target logit against hidden[t][d] is
 * headW[d][target] / seq for every position, so the channel weights are
 * exact rather than sampled. Scores are the rectified weighted sums at
 * each real token position.
 */
export function gradCam(model: TinyEncoder, tokens: string[], targetIndex: number): number[] {
  const { hidden } = model.forward(tokens);
  const seq = hidden.length;
  const headW = model.ckpt.headW;
  const dim = model.ckpt.dim;
  const scores: number[] = [];
  for (let t = 1; t < seq; t++) {
    let s = 0;
    for (let d = 0; d < dim; d++) s += (headW[d][targetIndex] / seq) * hidden[t][d];
    scores.push(s > 0 ? s : 0);
  }
  return scores;
}
