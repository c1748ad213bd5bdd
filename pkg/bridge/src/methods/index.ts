import type { TinyEncoder } from "../model.js";
import { amv } from "./amv.js";
import { gradCam } from "./gradcam.js";
import { inputXGradient } from "./inputxgrad.js";
import { lime } from "./lime.js";
import { lrp } from "./lrp.js";
import { shap } from "./shap.js";

export const METHOD_NAMES = ["LIME", "SHAP", "InputXGradient", "Grad-CAM", "LRP", "AMV"] as const;
export type MethodName = (typeof METHOD_NAMES)[number];

export interface MethodOptions {
  /** Sampling seed string; derived per instance and target by the caller. */
  samplingSeed: string;
  limeSamples: number;
  shapSamples: number;
  lrpEpsilon: number;
}

export const METHOD_DEFAULTS = {
  limeSamples: 200,
  shapSamples: 32,
  lrpEpsilon: 1e-6,
} as const;

/** Case- and punctuation-insensitive lookup, e.g. "gradcam" finds Grad-CAM. */
export function resolveMethodName(raw: string): MethodName | undefined {
  const wanted = raw.toLowerCase().replace(/[^a-z]/g, "");
  return METHOD_NAMES.find((name) => name.toLowerCase().replace(/[^a-z]/g, "") === wanted);
}

export function runMethod(
  name: MethodName,
  model: TinyEncoder,
  tokens: string[],
  targetIndex: number,
  opts: MethodOptions
): number[] {
  switch (name) {
    case "LIME":
      return lime(model, tokens, targetIndex, opts.limeSamples, opts.samplingSeed);
    case "SHAP":
      return shap(model, tokens, targetIndex, opts.shapSamples, opts.samplingSeed);
    case "InputXGradient":
      return inputXGradient(model, tokens, targetIndex);
    case "Grad-CAM":
      return gradCam(model, tokens, targetIndex);
    case "LRP":
      return lrp(model, tokens, targetIndex, opts.lrpEpsilon);
    case "AMV":
      return amv(model, tokens);
  }
}
