/**
 * Whitespace tokenizer. The surface strings emitted here are exactly what
 * lands in the interchange files; the evaluation side owns normalization.
 */
export function tokenize(text: string): string[] {
  return text.split(/\s+/u).filter((t) => t.length > 0);
}
