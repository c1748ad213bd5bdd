import type { TinyEncoder } from "../model.js";

/**
 * Epsilon-rule relevance propagation through the classifier head and the
 * mean pooling, stopping at the final hidden layer. The target logit is
 * the starting relevance; each pooled channel takes its stabilized share,
 * then each position takes its share of every channel. Relevance landing
 * on the classification position is not reported, only the real tokens.
 */
export function lrp(
  model: TinyEncoder,
  tokens: string[],
  targetIndex: number,
  epsilon: number
): number[] {
  if (!(epsilon > 0)) throw new Error("lrp epsilon must be positive");
  const { hidden, pooled, logits } = model.forward(tokens);
  const headW = model.ckpt.headW;
  const dim = model.ckpt.dim;
  const seq = hidden.length;
  const stabilize = (z: number) => z + (z >= 0 ? epsilon : -epsilon);

  const logit = logits[targetIndex];
  const channelRelevance = pooled.map(
    (p, d) => ((p * headW[d][targetIndex]) / stabilize(logit)) * logit
  );

  const scores: number[] = [];
  for (let t = 1; t < seq; t++) {
    let s = 0;
    for (let d = 0; d < dim; d++) {
      s += ((hidden[t][d] / seq) / stabilize(pooled[d])) * channelRelevance[d];
    }
    scores.push(s);
  }
  return scores;
}
