/**
 * Thin client over the pipeline CLI: typed arrays in, typed arrays and
 * metric maps out. All numerics run in the pipeline process; this layer
 * only moves bytes through the wire formats, so results are bit-identical
 * to invoking the CLI by hand on the same inputs.
 *
 * The CLI command defaults to `python3 -m pyrospread` and can be
 * overridden with the PYROSPREAD_CLI environment variable
 * (whitespace-separated argv prefix).
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import {
  BoundArrayView,
  assertFieldView,
  assertMaskView,
  assertSameGrid,
  frame,
  view,
} from "./arrays";
import { PipelineError, errorFromStderr } from "./errors";
import {
  formatKv,
  parseKv,
  readMaskSequenceDir,
  writeEnvironmentDir,
  writeFieldSequenceDir,
  writeMaskSequenceDir,
} from "./formats";

/** Keys mirror the pipeline's PhysicalParams and SimConfig options. */
export type ModelParams = Record<string, number | boolean>;

export interface WindViews {
  u: BoundArrayView;
  v: BoundArrayView;
}

export interface GenPriorInputs {
  /** observed binary masks, shape (frames, height, width), uint8 */
  observed: BoundArrayView;
  /** terrain elevation, shape (1, height, width), float32 */
  terrain: BoundArrayView;
  /** wind components, each shape (frames, height, width), float32 */
  wind: WindViews;
  /** initial fuel concentration, shape (1, height, width), float32 */
  fuel: BoundArrayView;
  params?: ModelParams;
  /** seconds between observed frames (default 5) */
  dtFrame?: number;
  /** cell edge length in meters (default 1) */
  dx?: number;
  /** horizon override; otherwise params.horizon_frames or the CLI default */
  horizon?: number;
  /** keep the prior files in this directory instead of a temp dir */
  outDir?: string;
}

export interface GenPriorResult {
  /** prior masks, shape (horizon, height, width), uint8 */
  priors: BoundArrayView;
  /** fitted-source report (weights, residual, convergence), raw strings */
  fitReport: Record<string, string>;
}

export interface EvaluateResult {
  /** parsed metric values ("inf" becomes Infinity) */
  metrics: Record<string, number>;
  /** the report exactly as the pipeline wrote it */
  raw: Record<string, string>;
}

export interface VcuBundleInfo {
  a: number;
  b: number;
  control: string;
  dir: string;
}

function cliCommand(): string[] {
  const override = process.env.PYROSPREAD_CLI;
  if (override && override.trim()) {
    return override.trim().split(/\s+/);
  }
  return ["python3", "-m", "pyrospread"];
}

function runCli(args: string[]): void {
  const [head, ...rest] = cliCommand();
  const proc = spawnSync(head, [...rest, ...args], { encoding: "utf8" });
  if (proc.error) {
    throw new PipelineError("CliUnavailable", String(proc.error), 3);
  }
  if (proc.status !== 0) {
    throw errorFromStderr(proc.stderr ?? "", proc.status ?? 3);
  }
}

function withTempDir<T>(body: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "pyrospread-"));
  try {
    return body(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

function maskFrames(v: BoundArrayView): Uint8Array[] {
  const out: Uint8Array[] = [];
  for (let i = 0; i < v.shape[0]; i++) out.push(frame(v, i) as Uint8Array);
  return out;
}

function fieldFrames(v: BoundArrayView): Float32Array[] {
  const out: Float32Array[] = [];
  for (let i = 0; i < v.shape[0]; i++) out.push(frame(v, i) as Float32Array);
  return out;
}

function writeParams(file: string, params: ModelParams): void {
  fs.writeFileSync(file, formatKv(params));
}

/**
 * Run the two-stage prior pipeline: fit the combination source from the
 * observed masks, integrate forward, return the prior mask sequence.
 */
export function genPrior(inputs: GenPriorInputs): GenPriorResult {
  const { observed, terrain, fuel, wind } = inputs;
  assertMaskView(observed, "observed");
  assertFieldView(terrain, "terrain");
  assertFieldView(fuel, "fuel");
  assertFieldView(wind.u, "wind.u");
  assertFieldView(wind.v, "wind.v");
  assertSameGrid(observed, terrain, "observed vs terrain");
  assertSameGrid(observed, fuel, "observed vs fuel");
  assertSameGrid(observed, wind.u, "observed vs wind");
  assertSameGrid(observed, wind.v, "observed vs wind");
  if (terrain.shape[0] !== 1 || fuel.shape[0] !== 1) {
    throw new PipelineError("BadRange", "terrain and fuel must have a single frame", 2);
  }
  const frames = observed.shape[0];
  if (wind.u.shape[0] !== frames || wind.v.shape[0] !== frames) {
    throw new PipelineError(
      "WindFrameCountMismatch",
      `wind has ${wind.u.shape[0]}/${wind.v.shape[0]} frames, observed has ${frames}`,
      2,
    );
  }

  const [, height, width] = observed.shape;
  const dx = inputs.dx ?? 1.0;
  const dtFrame = inputs.dtFrame ?? 5.0;

  const run = (work: string): GenPriorResult => {
    const obsDir = path.join(work, "obs");
    const envDir = path.join(work, "env");
    const outDir = inputs.outDir ?? path.join(work, "priors");
    writeMaskSequenceDir(obsDir, maskFrames(observed), height, width, dx, dtFrame);
    writeEnvironmentDir(
      envDir,
      frame(terrain, 0) as Float32Array,
      frame(fuel, 0) as Float32Array,
      fieldFrames(wind.u),
      fieldFrames(wind.v),
      height,
      width,
      dx,
    );
    const args = ["gen-prior", "--obs", obsDir, "--env", envDir, "--out", outDir, "--quiet"];
    if (inputs.params && Object.keys(inputs.params).length > 0) {
      const cfg = path.join(work, "params.cfg");
      writeParams(cfg, inputs.params);
      args.push("--config", cfg);
    }
    if (inputs.horizon !== undefined) {
      args.push("--horizon", String(inputs.horizon));
    }
    runCli(args);

    const priors = readMaskSequenceDir(outDir);
    const flat = new Uint8Array(priors.frames.length * height * width);
    priors.frames.forEach((bits, i) => flat.set(bits, i * height * width));
    const fitReport = parseKv(fs.readFileSync(path.join(outDir, "fit_report.txt"), "ascii"));
    return { priors: view([priors.frames.length, height, width], flat), fitReport };
  };

  return withTempDir(run);
}

/** Score predicted masks against truth masks, frame-paired. */
export function evaluate(
  pred: BoundArrayView,
  truth: BoundArrayView,
  opts: { dtFrame?: number; dx?: number } = {},
): EvaluateResult {
  assertMaskView(pred, "pred");
  assertMaskView(truth, "truth");
  assertSameGrid(pred, truth, "pred vs truth");
  if (pred.shape[0] !== truth.shape[0]) {
    throw new PipelineError(
      "SpecMismatch",
      `${pred.shape[0]} predicted vs ${truth.shape[0]} truth frames`,
      2,
    );
  }
  const [, height, width] = pred.shape;
  const dx = opts.dx ?? 1.0;
  const dtFrame = opts.dtFrame ?? 5.0;
  return withTempDir((work) => {
    const predDir = path.join(work, "pred");
    const truthDir = path.join(work, "truth");
    const report = path.join(work, "report.txt");
    writeMaskSequenceDir(predDir, maskFrames(pred), height, width, dx, dtFrame);
    writeMaskSequenceDir(truthDir, maskFrames(truth), height, width, dx, dtFrame);
    runCli(["evaluate", "--pred", predDir, "--truth", truthDir, "--out", report, "--quiet"]);
    const raw = parseKv(fs.readFileSync(report, "ascii"), report);
    const metrics: Record<string, number> = {};
    for (const [key, value] of Object.entries(raw)) {
      metrics[key] = value === "inf" ? Infinity : Number.parseFloat(value);
    }
    return { metrics, raw };
  });
}

/**
 * Write the conditioning bundle: observed field frames (8-bit grayscale)
 * concatenated with prior masks, and the 0/1 control schedule.
 */
export function exportVcuBundle(
  observedFields: BoundArrayView,
  priors: BoundArrayView,
  outDir: string,
  opts: { dtFrame?: number; dx?: number } = {},
): VcuBundleInfo {
  assertFieldView(observedFields, "observedFields");
  assertMaskView(priors, "priors");
  assertSameGrid(observedFields, priors, "observedFields vs priors");
  const [, height, width] = observedFields.shape;
  const dx = opts.dx ?? 1.0;
  const dtFrame = opts.dtFrame ?? 5.0;
  return withTempDir((work) => {
    const framesDir = path.join(work, "fields");
    const priorsDir = path.join(work, "priors");
    writeFieldSequenceDir(framesDir, fieldFrames(observedFields), height, width, dx, dtFrame);
    writeMaskSequenceDir(priorsDir, maskFrames(priors), height, width, dx, dtFrame);
    runCli(["export-vcu", "--frames", framesDir, "--priors", priorsDir, "--out", outDir, "--quiet"]);
    const kv = parseKv(fs.readFileSync(path.join(outDir, "manifest.txt"), "ascii"));
    return {
      a: Number.parseInt(kv.a, 10),
      b: Number.parseInt(kv.b, 10),
      control: kv.control,
      dir: outDir,
    };
  });
}
