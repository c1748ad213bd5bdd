import type { TinyEncoder } from "../model.js";

/**
 * Attention as explanation: the classification position's head-averaged
 * attention over tokens, averaged across layers. Class-independent by
 * construction, so every target label sees the same scores.
 */
export function amv(model: TinyEncoder, tokens: string[]): number[] {
  const { clsAttention } = model.forward(tokens);
  const layers = clsAttention.length;
  const scores = new Array<number>(tokens.length).fill(0);
  for (const row of clsAttention) {
    for (let t = 0; t < row.length; t++) scores[t] += row[t] / layers;
  }
  return scores;
}
