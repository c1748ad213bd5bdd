import { join } from "node:path";
import { parseArgs } from "node:util";
import { loadCheckpoint } from "./checkpoint.js";
import { readPerturbedInputs, readSplit, runJob, type PerturbedEntry } from "./job.js";
import { METHOD_NAMES, METHOD_DEFAULTS, resolveMethodName } from "./methods/index.js";
import { writeLines } from "./records.js";
import { tokenize } from "./tokenizer.js";

export const VERSION = "0.1.0";

const USAGE = `usage: xaieval-bridge --model CKPT --method NAME --split FILE --out DIR
                      [--dataset NAME] [--classes both|predicted]
                      [--seeds N,M] [--perturbed FILE] [--seed N]
                      [--lime-samples N] [--shap-samples N] [--lrp-epsilon X]

Runs one attribution method over a toy checkpoint and writes the
evaluation engine's interchange files into DIR.

methods: ${METHOD_NAMES.join(", ")}

  --model PATH       checkpoint JSON
  --method NAME      attribution method to run
  --split PATH       dataset slice, JSONL of {"instance_id", "text"}
  --out DIR          destination directory, created if missing
  --dataset NAME     dataset recorded in the records (default: split stem)
  --classes MODE     'both' emits one original record per label,
                     'predicted' only the predicted class (default: both)
  --seeds N,M        distinct seeds; adds seed-variant records plus
                     attention.jsonl from jittered re-runs
  --perturbed PATH   perturbed_inputs.jsonl to re-explain as
                     perturbed:<strategy> records
  --seed N           sampling seed for LIME/SHAP draws (default: 0)
  --lime-samples N   surrogate sample count (default: ${METHOD_DEFAULTS.limeSamples})
  --shap-samples N   permutations per instance (default: ${METHOD_DEFAULTS.shapSamples})
  --lrp-epsilon X    stabilizer for the epsilon rule (default: ${METHOD_DEFAULTS.lrpEpsilon})
`;

class UsageError extends Error {}

function intFlag(value: string | undefined, flag: string, fallback: number): number {
  if (value === undefined) return fallback;
  if (!/^[+-]?\d+$/.test(value)) throw new UsageError(`${flag} expects an integer, got '${value}'`);
  return parseInt(value, 10);
}

function floatFlag(value: string | undefined, flag: string, fallback: number): number {
  if (value === undefined) return fallback;
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) throw new UsageError(`${flag} expects a number, got '${value}'`);
  return parsed;
}

function parseSeeds(value: string | undefined): number[] {
  if (value === undefined) return [];
  const parts = value.split(",").map((p) => p.trim());
  const seeds = parts.map((p) => {
    if (!/^\d+$/.test(p)) throw new UsageError(`--seeds expects non-negative integers, got '${p}'`);
    return parseInt(p, 10);
  });
  if (new Set(seeds).size !== seeds.length) throw new UsageError("--seeds must be distinct");
  return seeds;
}

function splitStem(path: string): string {
  const name = path.replace(/\\/g, "/").split("/").pop() ?? path;
  const dot = name.lastIndexOf(".");
  return dot > 0 ? name.slice(0, dot) : name;
}

type Emit = (line: string) => void;

export function main(
  argv: string[],
  log: Emit = (s) => process.stdout.write(s + "\n"),
  error: Emit = (s) => process.stderr.write(s + "\n")
): number {
  try {
    return run(argv, log);
  } catch (err) {
    if (err instanceof UsageError) {
      error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof Error) {
      error(`internal error: ${err.message}`);
      return 1;
    }
    error(`internal error: ${String(err)}`);
    return 1;
  }
}

function run(argv: string[], log: Emit): number {
  let parsed: ReturnType<typeof parseArgs<{ options: Record<string, { type: "string" | "boolean" }> }>>;
  try {
    parsed = parseArgs({
      args: argv,
      strict: true,
      allowPositionals: false,
      options: {
        model: { type: "string" },
        method: { type: "string" },
        split: { type: "string" },
        out: { type: "string" },
        dataset: { type: "string" },
        classes: { type: "string" },
        seeds: { type: "string" },
        perturbed: { type: "string" },
        seed: { type: "string" },
        "lime-samples": { type: "string" },
        "shap-samples": { type: "string" },
        "lrp-epsilon": { type: "string" },
        help: { type: "boolean" },
        version: { type: "boolean" },
      },
    });
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  const values = parsed.values as Record<string, string | boolean | undefined>;

  if (values.help) {
    log(USAGE.trimEnd());
    return 0;
  }
  if (values.version) {
    log(`xaieval-bridge ${VERSION}`);
    return 0;
  }
  for (const flag of ["model", "method", "split", "out"] as const) {
    if (values[flag] === undefined) throw new UsageError(`--${flag} is required`);
  }

  const method = resolveMethodName(values.method as string);
  if (method === undefined) {
    throw new UsageError(
      `unsupported method '${values.method}' (expected one of ${METHOD_NAMES.join(", ")})`
    );
  }
  const classes = (values.classes as string | undefined) ?? "both";
  if (classes !== "both" && classes !== "predicted") {
    throw new UsageError(`--classes expects 'both' or 'predicted', got '${classes}'`);
  }
  const seeds = parseSeeds(values.seeds as string | undefined);
  const samplingSeed = intFlag(values.seed as string | undefined, "--seed", 0);
  const limeSamples = intFlag(
    values["lime-samples"] as string | undefined, "--lime-samples", METHOD_DEFAULTS.limeSamples);
  const shapSamples = intFlag(
    values["shap-samples"] as string | undefined, "--shap-samples", METHOD_DEFAULTS.shapSamples);
  const lrpEpsilon = floatFlag(
    values["lrp-epsilon"] as string | undefined, "--lrp-epsilon", METHOD_DEFAULTS.lrpEpsilon);
  if (limeSamples < 1) throw new UsageError("--lime-samples must be at least 1");
  if (shapSamples < 1) throw new UsageError("--shap-samples must be at least 1");
  if (!(lrpEpsilon > 0)) throw new UsageError("--lrp-epsilon must be positive");

  // every input is loaded and checked before any extraction starts, so a
  // rejected job cannot leave files behind
  let checkpoint;
  let instances;
  let perturbed: PerturbedEntry[] = [];
  try {
    checkpoint = loadCheckpoint(values.model as string);
    instances = readSplit(values.split as string);
    if (values.perturbed !== undefined) {
      perturbed = readPerturbedInputs(values.perturbed as string);
    }
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  const known = new Set(instances.map((i) => i.instance_id));
  for (const inst of instances) {
    if (tokenize(inst.text).length === 0) {
      throw new UsageError(`instance '${inst.instance_id}' has no tokens`);
    }
  }
  for (const entry of perturbed) {
    if (!known.has(entry.instance_id)) {
      throw new UsageError(
        `perturbed input references unknown instance '${entry.instance_id}'`
      );
    }
  }

  const dataset = (values.dataset as string | undefined) ?? splitStem(values.split as string);
  const output = runJob({
    checkpoint,
    method,
    dataset,
    instances,
    classes,
    seeds,
    perturbed,
    samplingSeed,
    limeSamples,
    shapSamples,
    lrpEpsilon,
  });

  const outDir = values.out as string;
  const explanationsPath = join(outDir, "explanations.jsonl");
  writeLines(explanationsPath, output.explanationLines);
  log(`wrote ${output.explanationCount} explanation record(s) to ${explanationsPath}`);
  if (output.attentionLines !== undefined) {
    const attentionPath = join(outDir, "attention.jsonl");
    writeLines(attentionPath, output.attentionLines);
    log(`wrote ${output.attentionCount} attention record(s) to ${attentionPath}`);
  }
  return 0;
}
