import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

/** One explanation line in the engine's interchange schema. */
export interface ExplanationRecord {
  instance_id: string;
  dataset: string;
  model: string;
  method: string;
  variant: string;
  predicted_label: string;
  target_label: string;
  tokens: string[];
  scores: number[];
}

/** One attention line; layers is L rows of T head-averaged weights. */
export interface AttentionFileRecord {
  instance_id: string;
  model: string;
  seed: number;
  layers: number[][];
}

function assertFinite(values: number[], what: string): void {
  for (let i = 0; i < values.length; i++) {
    if (typeof values[i] !== "number" || !Number.isFinite(values[i])) {
      throw new Error(`refusing to write non-finite value at ${what}[${i}]`);
    }
  }
}

export function explanationToLine(rec: ExplanationRecord): string {
  if (rec.tokens.length !== rec.scores.length) {
    throw new Error(
      `token/score length mismatch for ${rec.instance_id}: ` +
        `${rec.tokens.length} vs ${rec.scores.length}`
    );
  }
  if (rec.tokens.length === 0) throw new Error(`empty token list for ${rec.instance_id}`);
  assertFinite(rec.scores, `scores of ${rec.instance_id}`);
  return JSON.stringify({
    instance_id: rec.instance_id,
    dataset: rec.dataset,
    model: rec.model,
    method: rec.method,
    variant: rec.variant,
    predicted_label: rec.predicted_label,
    target_label: rec.target_label,
    tokens: rec.tokens,
    scores: rec.scores,
  });
}

export function attentionToLine(rec: AttentionFileRecord): string {
  if (rec.layers.length === 0) throw new Error(`no attention layers for ${rec.instance_id}`);
  const width = rec.layers[0].length;
  rec.layers.forEach((row, l) => {
    if (row.length !== width) {
      throw new Error(`ragged attention rows for ${rec.instance_id} (layer ${l})`);
    }
    assertFinite(row, `attention of ${rec.instance_id}, layer ${l}`);
  });
  return JSON.stringify({
    instance_id: rec.instance_id,
    model: rec.model,
    seed: rec.seed,
    layers: rec.layers,
  });
}

/** Header line carrying run provenance; readers treat it as comment data. */
export function metaToLine(meta: Record<string, unknown>): string {
  return JSON.stringify({ meta });
}

/** Write lines as one newline-terminated file, creating parent directories. */
export function writeLines(path: string, lines: string[]): void {
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, lines.join("\n") + "\n");
}
