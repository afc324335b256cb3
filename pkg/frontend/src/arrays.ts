/**
 * Contiguous row-major array views exchanged with the pipeline.
 *
 * A view is (frames, height, width) over one flat typed buffer:
 * float32 for fields (temperature, terrain, wind components, fuel),
 * uint8 for binary masks (cells are exactly 0 or 1).
 */

import { PipelineError } from "./errors";

export type Dtype = "float32" | "uint8";

export interface BoundArrayView {
  readonly shape: readonly [number, number, number];
  readonly dtype: Dtype;
  readonly data: Float32Array | Uint8Array;
}

export function view(
  shape: readonly [number, number, number],
  data: Float32Array | Uint8Array,
): BoundArrayView {
  const [frames, height, width] = shape;
  for (const n of shape) {
    if (!Number.isInteger(n) || n <= 0) {
      throw new PipelineError("BadRange", `shape entries must be positive integers, got ${shape}`, 2);
    }
  }
  if (frames * height * width !== data.length) {
    throw new PipelineError(
      "SpecMismatch",
      `shape ${frames}x${height}x${width} implies ${frames * height * width} cells, buffer has ${data.length}`,
      2,
    );
  }
  const dtype: Dtype = data instanceof Float32Array ? "float32" : "uint8";
  return { shape: [frames, height, width], dtype, data };
}

export function frame(v: BoundArrayView, index: number): Float32Array | Uint8Array {
  const [frames, height, width] = v.shape;
  if (index < 0 || index >= frames) {
    throw new PipelineError("BadRange", `frame ${index} outside 0..${frames - 1}`, 2);
  }
  const cells = height * width;
  return v.data.subarray(index * cells, (index + 1) * cells);
}

export function assertMaskView(v: BoundArrayView, what: string): void {
  if (v.dtype !== "uint8") {
    throw new PipelineError("BadRange", `${what} must be a uint8 mask view`, 2);
  }
  for (const b of v.data as Uint8Array) {
    if (b !== 0 && b !== 1) {
      throw new PipelineError("BadRange", `${what} cells must be exactly 0 or 1`, 2);
    }
  }
}

export function assertFieldView(v: BoundArrayView, what: string): void {
  if (v.dtype !== "float32") {
    throw new PipelineError("BadRange", `${what} must be a float32 field view`, 2);
  }
  for (const x of v.data as Float32Array) {
    if (!Number.isFinite(x)) {
      throw new PipelineError("NonFinite", `${what} contains a non-finite value`, 3);
    }
  }
}

export function assertSameGrid(a: BoundArrayView, b: BoundArrayView, what: string): void {
  if (a.shape[1] !== b.shape[1] || a.shape[2] !== b.shape[2]) {
    throw new PipelineError(
      "SpecMismatch",
      `${what}: grids ${a.shape[1]}x${a.shape[2]} and ${b.shape[1]}x${b.shape[2]} differ`,
      2,
    );
  }
}
