export { BoundArrayView, Dtype, frame, view } from "./arrays";
export {
  EvaluateResult,
  GenPriorInputs,
  GenPriorResult,
  ModelParams,
  VcuBundleInfo,
  WindViews,
  evaluate,
  exportVcuBundle,
  genPrior,
} from "./client";
export { PipelineError } from "./errors";
export {
  decodeField,
  decodeMaskPgm,
  encodeField,
  encodeMaskPgm,
  formatKv,
  parseKv,
  readMaskSequenceDir,
} from "./formats";

export const VERSION = "0.1.0";
