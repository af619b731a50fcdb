export type { NdArray } from "./nd.js";
export { bitIdentical, bytesOf, elementCount, fromRows, fromVector, ndarray } from "./nd.js";

export {
  FormatError,
  FrameDecoder,
  decodeFrame,
  encodeFrame,
  readArrayFile,
  tryDecodeFrame,
  writeArrayFile,
} from "./npy.js";

export type { CallbackPredictor, CliRunOptions, CliRunResult } from "./bridge.js";
export { cliCommand, runCli, stderrTail } from "./bridge.js";

export type {
  BoxRecord,
  CamResult,
  ExplainMethod,
  ExplainOptions,
  Explanation,
  MetricsOptions,
  MetricsResult,
  MilOptions,
  MilResult,
  ThresholdRecord,
} from "./api.js";
export { arrayRoundtrip, cam, explain, metrics, milScore } from "./api.js";
