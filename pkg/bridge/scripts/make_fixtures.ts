/**
 * Regenerates the committed fixtures: a tiny seeded checkpoint and a ten
 * instance dataset slice. Output is deterministic; rerunning must produce
 * byte-identical files.
 */
import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { makeCheckpoint, saveCheckpoint } from "../src/checkpoint.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtures = join(here, "..", "fixtures");
mkdirSync(fixtures, { recursive: true });

saveCheckpoint(makeCheckpoint("tiny-sentiment", { seed: 42 }), join(fixtures, "tiny-sentiment.json"));

const slice = [
  { instance_id: "r01", text: "a warm funny and quietly moving picture", label: "pos" },
  { instance_id: "r02", text: "the plot collapses under its own dull weight", label: "neg" },
  { instance_id: "r03", text: "brilliant acting carries an otherwise thin script", label: "pos" },
  { instance_id: "r04", text: "two hours of lifeless scenes and wooden dialogue", label: "neg" },
  { instance_id: "r05", text: "a delightful surprise from start to finish", label: "pos" },
  { instance_id: "r06", text: "the jokes land flat and the pacing drags badly", label: "neg" },
  { instance_id: "r07", text: "gorgeous photography with a tender human story", label: "pos" },
  { instance_id: "r08", text: "predictable twists and a painfully slow middle act", label: "neg" },
  { instance_id: "r09", text: "sharp writing makes every scene feel alive", label: "pos" },
  { instance_id: "r10", text: "a tired formula stretched far past its welcome", label: "neg" },
];
writeFileSync(
  join(fixtures, "imdb-mini.jsonl"),
  slice.map((row) => JSON.stringify(row)).join("\n") + "\n"
);

console.log(`wrote fixtures to ${fixtures}`);
