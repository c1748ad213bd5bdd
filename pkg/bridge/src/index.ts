export { Rng, hashString } from "./rng.js";
export { tokenize } from "./tokenizer.js";
export {
  makeCheckpoint,
  jitterCheckpoint,
  loadCheckpoint,
  saveCheckpoint,
  type Checkpoint,
  type CheckpointSpec,
  type LayerWeights,
} from "./checkpoint.js";
export { TinyEncoder, type ForwardResult, type Prediction } from "./model.js";
export {
  METHOD_NAMES,
  METHOD_DEFAULTS,
  resolveMethodName,
  runMethod,
  type MethodName,
  type MethodOptions,
} from "./methods/index.js";
export {
  explanationToLine,
  attentionToLine,
  metaToLine,
  writeLines,
  type ExplanationRecord,
  type AttentionFileRecord,
} from "./records.js";
export {
  readSplit,
  readPerturbedInputs,
  runJob,
  type ExtractionJob,
  type JobOutput,
  type PerturbedEntry,
  type SplitInstance,
} from "./job.js";
export { main, VERSION } from "./cli.js";
