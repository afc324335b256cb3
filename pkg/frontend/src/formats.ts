/**
 * Byte-exact codecs for the pipeline's wire formats.
 *
 * Masks: binary PGM, magic "P5", maxval 255, pixels 0 or 255.
 * Fields: 16-byte header (magic "PFW1", u32le height, u32le width,
 * f32le dx) followed by row-major little-endian float32 values.
 * Manifests/configs/reports: flat `key = value` text, `#` comments.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { PipelineError } from "./errors";

export interface DecodedMask {
  height: number;
  width: number;
  /** cell bits, 0 or 1, row-major */
  bits: Uint8Array;
}

export interface DecodedField {
  height: number;
  width: number;
  dx: number;
  values: Float32Array;
}

export function encodeMaskPgm(bits: Uint8Array, height: number, width: number): Buffer {
  if (bits.length !== height * width) {
    throw new PipelineError("SpecMismatch", `mask buffer length ${bits.length} != ${height * width}`, 2);
  }
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, "ascii");
  const payload = Buffer.alloc(bits.length);
  for (let i = 0; i < bits.length; i++) {
    const b = bits[i];
    if (b !== 0 && b !== 1) {
      throw new PipelineError("BadRange", `mask cells must be 0 or 1, got ${b}`, 2);
    }
    payload[i] = b === 1 ? 255 : 0;
  }
  return Buffer.concat([header, payload]);
}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

export function decodeMaskPgm(data: Buffer, where = "<buffer>"): DecodedMask {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x35) {
    throw new PipelineError("BadMagic", `${where}: not a binary PGM (magic != 'P5')`, 3);
  }
  let pos = 2;
  const tokens: string[] = [];
  while (tokens.length < 3) {
    while (pos < data.length && WHITESPACE.has(data[pos])) pos++;
    if (pos < data.length && data[pos] === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    const start = pos;
    while (pos < data.length && !WHITESPACE.has(data[pos])) pos++;
    if (start === pos) {
      throw new PipelineError("BadHeader", `${where}: truncated PGM header`, 3);
    }
    tokens.push(data.subarray(start, pos).toString("ascii"));
  }
  pos += 1; // one whitespace byte separates maxval from payload
  const [width, height, maxval] = tokens.map((t) => Number.parseInt(t, 10));
  if (!Number.isInteger(width) || !Number.isInteger(height) || !Number.isInteger(maxval)) {
    throw new PipelineError("BadHeader", `${where}: non-numeric PGM header token`, 3);
  }
  if (maxval !== 255) {
    throw new PipelineError("BadHeader", `${where}: maxval must be 255, got ${maxval}`, 3);
  }
  const payload = data.subarray(pos);
  if (payload.length !== height * width) {
    throw new PipelineError(
      "TruncatedPayload",
      `${where}: payload is ${payload.length} bytes, expected ${height * width}`,
      3,
    );
  }
  const bits = new Uint8Array(height * width);
  for (let i = 0; i < payload.length; i++) {
    const b = payload[i];
    if (b !== 0 && b !== 255) {
      throw new PipelineError("NonBinaryPixel", `${where}: pixel value ${b} at index ${i}`, 3);
    }
    bits[i] = b === 255 ? 1 : 0;
  }
  return { height, width, bits };
}

export function encodeField(values: Float32Array, height: number, width: number, dx: number): Buffer {
  if (values.length !== height * width) {
    throw new PipelineError("SpecMismatch", `field buffer length ${values.length} != ${height * width}`, 2);
  }
  const out = Buffer.alloc(16 + 4 * values.length);
  out.write("PFW1", 0, "ascii");
  out.writeUInt32LE(height, 4);
  out.writeUInt32LE(width, 8);
  out.writeFloatLE(dx, 12);
  for (let i = 0; i < values.length; i++) {
    out.writeFloatLE(values[i], 16 + 4 * i);
  }
  return out;
}

export function decodeField(data: Buffer, where = "<buffer>"): DecodedField {
  if (data.length < 4 || data.toString("ascii", 0, 4) !== "PFW1") {
    throw new PipelineError("BadMagic", `${where}: magic != 'PFW1'`, 3);
  }
  if (data.length < 16) {
    throw new PipelineError("TruncatedPayload", `${where}: file shorter than the 16-byte header`, 3);
  }
  const height = data.readUInt32LE(4);
  const width = data.readUInt32LE(8);
  const dx = data.readFloatLE(12);
  if (!Number.isFinite(dx) || dx <= 0) {
    throw new PipelineError("BadHeader", `${where}: dx must be finite and > 0, got ${dx}`, 3);
  }
  if (data.length !== 16 + 4 * height * width) {
    throw new PipelineError(
      "TruncatedPayload",
      `${where}: ${data.length} bytes, expected ${16 + 4 * height * width}`,
      3,
    );
  }
  const values = new Float32Array(height * width);
  for (let i = 0; i < values.length; i++) {
    values[i] = data.readFloatLE(16 + 4 * i);
  }
  return { height, width, dx, values };
}

export function formatKv(entries: Record<string, string | number | boolean>): string {
  const lines = Object.entries(entries).map(([key, value]) => {
    const text = typeof value === "boolean" ? (value ? "true" : "false") : String(value);
    return `${key} = ${text}`;
  });
  return lines.join("\n") + "\n";
}

export function parseKv(text: string, where = "<text>"): Record<string, string> {
  const out: Record<string, string> = {};
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line || line.startsWith("#")) continue;
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new PipelineError("BadHeader", `${where} line ${i + 1}: expected 'key = value'`, 3);
    }
    out[line.slice(0, eq).trim()] = line.slice(eq + 1).trim();
  }
  return out;
}

function frameName(i: number): string {
  return `frame_${String(i).padStart(4, "0")}.pgm`;
}

function fieldName(i: number): string {
  return `field_${String(i).padStart(4, "0")}.pfw`;
}

/** Write a mask sequence directory the CLI can consume. */
export function writeMaskSequenceDir(
  dir: string,
  frames: Uint8Array[],
  height: number,
  width: number,
  dx: number,
  dtFrame: number,
): void {
  fs.mkdirSync(dir, { recursive: true });
  frames.forEach((bits, i) => {
    fs.writeFileSync(path.join(dir, frameName(i)), encodeMaskPgm(bits, height, width));
  });
  fs.writeFileSync(
    path.join(dir, "manifest.txt"),
    formatKv({
      format: "mask-sequence-v1",
      frames: frames.length,
      height,
      width,
      dx,
      dt_frame: dtFrame,
    }),
  );
}

/** Read a mask sequence directory written by the CLI. */
export function readMaskSequenceDir(dir: string): { frames: Uint8Array[]; height: number; width: number; dtFrame: number } {
  const manifestPath = path.join(dir, "manifest.txt");
  if (!fs.existsSync(manifestPath)) {
    throw new PipelineError("MissingManifest", `no manifest at ${manifestPath}`, 3);
  }
  const kv = parseKv(fs.readFileSync(manifestPath, "ascii"), manifestPath);
  const count = Number.parseInt(kv.frames, 10);
  const frames: Uint8Array[] = [];
  let height = 0;
  let width = 0;
  for (let i = 0; i < count; i++) {
    const file = path.join(dir, frameName(i));
    if (!fs.existsSync(file)) {
      throw new PipelineError("MissingComponent", `missing ${file}`, 3);
    }
    const decoded = decodeMaskPgm(fs.readFileSync(file), file);
    if (i === 0) {
      height = decoded.height;
      width = decoded.width;
    } else if (decoded.height !== height || decoded.width !== width) {
      throw new PipelineError("SpecMismatchAcrossFrames", `${file}: grid differs from frame 0`, 3);
    }
    frames.push(decoded.bits);
  }
  return { frames, height, width, dtFrame: Number.parseFloat(kv.dt_frame) };
}

/** Write a field sequence directory (observed frames for export-vcu). */
export function writeFieldSequenceDir(
  dir: string,
  frames: Float32Array[],
  height: number,
  width: number,
  dx: number,
  dtFrame: number,
): void {
  fs.mkdirSync(dir, { recursive: true });
  frames.forEach((values, i) => {
    fs.writeFileSync(path.join(dir, fieldName(i)), encodeField(values, height, width, dx));
  });
  fs.writeFileSync(
    path.join(dir, "manifest.txt"),
    formatKv({
      format: "field-sequence-v1",
      frames: frames.length,
      height,
      width,
      dx,
      dt_frame: dtFrame,
    }),
  );
}

/** Write an environment directory (terrain, fuel, per-frame wind). */
export function writeEnvironmentDir(
  dir: string,
  terrain: Float32Array,
  fuel: Float32Array,
  windU: Float32Array[],
  windV: Float32Array[],
  height: number,
  width: number,
  dx: number,
): void {
  fs.mkdirSync(dir, { recursive: true });
  fs.writeFileSync(path.join(dir, "terrain.pfw"), encodeField(terrain, height, width, dx));
  fs.writeFileSync(path.join(dir, "fuel.pfw"), encodeField(fuel, height, width, dx));
  windU.forEach((u, i) => {
    const tag = String(i).padStart(4, "0");
    fs.writeFileSync(path.join(dir, `wind_u_${tag}.pfw`), encodeField(u, height, width, dx));
    fs.writeFileSync(path.join(dir, `wind_v_${tag}.pfw`), encodeField(windV[i], height, width, dx));
  });
  fs.writeFileSync(
    path.join(dir, "manifest.txt"),
    formatKv({ format: "environment-v1", frames: windU.length, height, width, dx }),
  );
}
