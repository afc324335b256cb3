"""Bit-exact file formats for masks, fields, environments and bundles.

Masks are binary PGM ("P5", maxval 255, pixels 0 or 255). Fields are raw
little-endian IEEE-754 float32, row-major, behind a 16-byte header:
magic "PFW1", u32 height, u32 width, f32 dx. Manifests and reports are
flat structured text, one `key = value` per line with `#` comments.
Writers stage to a temporary name and rename into place, so readers never
see partial files.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    BadRange,
    EmptyInput,
    ManifestMismatch,
    MissingComponent,
    MissingManifest,
    NonBinaryPixel,
    SpecMismatch,
    SpecMismatchAcrossFrames,
    TruncatedPayload,
    WindFrameCountMismatch,
)
from .fields import GridSpec, MaskFrame, MaskSequence, ScalarField, VectorField
from .simulator import Environment

MANIFEST_NAME = "manifest.txt"
FIELD_MAGIC = b"PFW1"
FIELD_HEADER = struct.Struct("<4sIIf")


# ---------------------------------------------------------------- flat text


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_kv(path, items):
    """Write `key = value` lines atomically (tmp file + rename)."""
    path = Path(path)
    if hasattr(items, "items"):
        items = list(items.items())
    lines = [f"{k} = {format_value(v)}" for k, v in items]
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BadHeader(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def read_kv(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise MissingManifest(f"no manifest at {path}")
    try:
        text = path.read_bytes().decode("ascii")
    except UnicodeDecodeError as e:
        raise BadHeader(f"{path}: not ASCII text: {e}") from None
    return parse_kv(text)


def _kv_get(kv: dict[str, str], key: str, conv, where: str):
    if key not in kv:
        raise BadHeader(f"{where}: missing key {key!r}")
    try:
        return conv(kv[key])
    except ValueError:
        raise BadHeader(f"{where}: bad value for {key!r}: {kv[key]!r}") from None


def _kv_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ValueError(s)


def _atomic_write_bytes(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


# --------------------------------------------------------------------- PGM


def encode_pgm(payload: np.ndarray) -> bytes:
    h, w = payload.shape
    return b"P5\n%d %d\n255\n" % (w, h) + payload.astype(np.uint8).tobytes()


def _parse_pgm(data: bytes, path) -> tuple[int, int, bytes]:
    """Header tokens then raw payload; comments (#) allowed in the header."""
    if len(data) < 2 or data[:2] != b"P5":
        raise BadMagic(f"{path}: not a binary PGM (magic != 'P5')")
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise BadHeader(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte separates maxval from the payload
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise BadHeader(f"{path}: non-numeric PGM header token") from None
    if maxval != 255:
        raise BadHeader(f"{path}: maxval must be 255, got {maxval}")
    if h < 3 or w < 3:
        raise BadHeader(f"{path}: grid must be at least 3x3, got {h}x{w}")
    payload = data[pos:]
    if len(payload) != h * w:
        raise TruncatedPayload(f"{path}: payload is {len(payload)} bytes, expected {h * w}")
    return h, w, payload


def write_mask_pgm(mask: MaskFrame, path):
    _atomic_write_bytes(Path(path), encode_pgm(mask.bits * np.uint8(255)))


def read_mask_pgm(path, dx: float = 1.0) -> MaskFrame:
    path = Path(path)
    if not path.is_file():
        raise MissingComponent(f"no mask file at {path}")
    h, w, payload = _parse_pgm(path.read_bytes(), path)
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
    bad = (arr != 0) & (arr != 255)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonBinaryPixel(f"{path}: pixel value {arr[r, c]} at ({r}, {c})")
    return MaskFrame(GridSpec(h, w, dx), (arr // 255).astype(np.uint8))


def write_gray_pgm(values01: np.ndarray, path):
    """8-bit grayscale PGM from values already scaled into [0, 1]."""
    q = np.clip(np.rint(values01 * 255.0), 0, 255).astype(np.uint8)
    _atomic_write_bytes(Path(path), encode_pgm(q))


def read_gray_pgm(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingComponent(f"no frame file at {path}")
    h, w, payload = _parse_pgm(path.read_bytes(), path)
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w).copy()


def _frame_name(i: int) -> str:
    return f"frame_{i:04d}.pgm"


def write_mask_sequence(seq: MaskSequence, dir_path):
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        write_mask_pgm(frame, dir_path / _frame_name(i))
    spec = seq.spec
    write_kv(
        dir_path / MANIFEST_NAME,
        {
            "format": "mask-sequence-v1",
            "frames": len(seq.frames),
            "height": spec.height,
            "width": spec.width,
            "dx": spec.dx,
            "dt_frame": seq.dt_frame,
        },
    )


def read_mask_sequence(dir_path) -> MaskSequence:
    dir_path = Path(dir_path)
    kv = read_kv(dir_path / MANIFEST_NAME)
    n = _kv_get(kv, "frames", int, str(dir_path))
    height = _kv_get(kv, "height", int, str(dir_path))
    width = _kv_get(kv, "width", int, str(dir_path))
    dx = _kv_get(kv, "dx", float, str(dir_path))
    dt_frame = _kv_get(kv, "dt_frame", float, str(dir_path))
    on_disk = sorted(dir_path.glob("frame_*.pgm"))
    if len(on_disk) != n:
        raise ManifestMismatch(
            f"{dir_path}: manifest says {n} frames, found {len(on_disk)} files"
        )
    frames = []
    for i in range(n):
        frame = read_mask_pgm(dir_path / _frame_name(i), dx)
        if frame.spec.shape != (height, width):
            raise SpecMismatchAcrossFrames(
                f"{dir_path}: frame {i} is {frame.spec.shape}, manifest says {(height, width)}"
            )
        frames.append(frame)
    return MaskSequence(frames, dt_frame)


# ------------------------------------------------------------- field files


def encode_field(field: ScalarField) -> bytes:
    spec = field.spec
    header = FIELD_HEADER.pack(FIELD_MAGIC, spec.height, spec.width, spec.dx)
    return header + field.values.astype("<f4").tobytes()


def write_field(field: ScalarField, path):
    _atomic_write_bytes(Path(path), encode_field(field))


def read_field(path) -> ScalarField:
    path = Path(path)
    if not path.is_file():
        raise MissingComponent(f"no field file at {path}")
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != FIELD_MAGIC:
        raise BadMagic(f"{path}: magic != 'PFW1'")
    if len(data) < FIELD_HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the 16-byte header")
    _, h, w, dx = FIELD_HEADER.unpack_from(data)
    if not (math.isfinite(dx) and dx > 0):
        raise BadHeader(f"{path}: dx must be finite and > 0, got {dx}")
    if h < 3 or w < 3:
        raise BadHeader(f"{path}: grid must be at least 3x3, got {h}x{w}")
    expected = FIELD_HEADER.size + 4 * h * w
    if len(data) != expected:
        raise TruncatedPayload(f"{path}: {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=FIELD_HEADER.size).reshape(h, w)
    # mutated payloads can hold signaling NaNs; the cast must not warn,
    # the ScalarField constructor rejects them as NonFinite
    with np.errstate(invalid="ignore"):
        values64 = values.astype(np.float64)
    return ScalarField(GridSpec(int(h), int(w), float(dx)), values64)


def _field_name(i: int) -> str:
    return f"field_{i:04d}.pfw"


def write_field_sequence(fields: list[ScalarField], dt_frame: float, dir_path):
    if not fields:
        raise EmptyInput("need at least one field frame")
    spec = fields[0].spec
    for i, f in enumerate(fields):
        if f.spec != spec:
            raise SpecMismatch(f"field frame {i} grid differs from frame 0")
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(fields):
        write_field(f, dir_path / _field_name(i))
    write_kv(
        dir_path / MANIFEST_NAME,
        {
            "format": "field-sequence-v1",
            "frames": len(fields),
            "height": spec.height,
            "width": spec.width,
            "dx": spec.dx,
            "dt_frame": dt_frame,
        },
    )


def read_field_sequence(dir_path) -> tuple[list[ScalarField], float]:
    dir_path = Path(dir_path)
    kv = read_kv(dir_path / MANIFEST_NAME)
    n = _kv_get(kv, "frames", int, str(dir_path))
    dt_frame = _kv_get(kv, "dt_frame", float, str(dir_path))
    on_disk = sorted(dir_path.glob("field_*.pfw"))
    if len(on_disk) != n:
        raise ManifestMismatch(
            f"{dir_path}: manifest says {n} frames, found {len(on_disk)} files"
        )
    fields = []
    for i in range(n):
        f = read_field(dir_path / _field_name(i))
        if fields and f.spec != fields[0].spec:
            raise SpecMismatchAcrossFrames(f"{dir_path}: frame {i} grid differs from frame 0")
        fields.append(f)
    return fields, dt_frame


# ------------------------------------------------------------- environment


def write_environment(env: Environment, dir_path):
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    write_field(env.terrain, dir_path / "terrain.pfw")
    write_field(env.fuel0, dir_path / "fuel.pfw")
    spec = env.spec
    for i, w in enumerate(env.wind):
        write_field(ScalarField(spec, w.u), dir_path / f"wind_u_{i:04d}.pfw")
        write_field(ScalarField(spec, w.v), dir_path / f"wind_v_{i:04d}.pfw")
    write_kv(
        dir_path / MANIFEST_NAME,
        {
            "format": "environment-v1",
            "frames": len(env.wind),
            "height": spec.height,
            "width": spec.width,
            "dx": spec.dx,
        },
    )


def read_environment(dir_path) -> Environment:
    dir_path = Path(dir_path)
    kv = read_kv(dir_path / MANIFEST_NAME)
    n = _kv_get(kv, "frames", int, str(dir_path))
    for name in ("terrain.pfw", "fuel.pfw"):
        if not (dir_path / name).is_file():
            raise MissingComponent(f"{dir_path}: missing {name}")
    terrain = read_field(dir_path / "terrain.pfw")
    fuel = read_field(dir_path / "fuel.pfw")
    u_files = sorted(dir_path.glob("wind_u_*.pfw"))
    v_files = sorted(dir_path.glob("wind_v_*.pfw"))
    if len(u_files) != n or len(v_files) != n:
        raise WindFrameCountMismatch(
            f"{dir_path}: manifest says {n} wind frames, found "
            f"{len(u_files)} u / {len(v_files)} v files"
        )
    wind = []
    for i in range(n):
        u = read_field(dir_path / f"wind_u_{i:04d}.pfw")
        v = read_field(dir_path / f"wind_v_{i:04d}.pfw")
        if u.spec != terrain.spec or v.spec != terrain.spec:
            raise SpecMismatch(f"{dir_path}: wind frame {i} grid differs from terrain")
        wind.append(VectorField(terrain.spec, u.values, v.values))
    return Environment(terrain, wind, fuel)


# -------------------------------------------------------------- VCU bundle


@dataclass(frozen=True)
class VcuBundle:
    """Conditioning bundle: a kept frames then b reconstructed frames.

    The control bit is 0 for the first a frames (preserve the observed
    content) and 1 for the last b frames (reconstruct from the priors).
    """

    a: int
    b: int
    spec: GridSpec
    frame_files: tuple
    control_bits: tuple
    scale_min: float
    scale_max: float

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise BadRange(f"bundle needs a >= 1 and b >= 1, got a={self.a} b={self.b}")
        expected = (0,) * self.a + (1,) * self.b
        if tuple(self.control_bits) != expected:
            raise BadRange("control bits must be a zeros then b ones")
        if len(self.frame_files) != self.a + self.b:
            raise BadRange("frame file count must equal a + b")


def export_vcu_bundle(
    observed_frames: list[ScalarField],
    priors: MaskSequence,
    out_dir,
    provenance: dict | None = None,
) -> VcuBundle:
    """Write observed frames (scaled 8-bit grayscale) then prior masks.

    The grayscale scaling window is the min/max over all observed frames
    and is recorded in the manifest. Inputs are validated before anything
    is written.
    """
    if not observed_frames:
        raise EmptyInput("need at least one observed frame")
    if len(priors.frames) < 1:
        raise EmptyInput("need at least one prior mask")
    spec = observed_frames[0].spec
    for i, f in enumerate(observed_frames):
        if f.spec != spec:
            raise SpecMismatch(f"observed frame {i} grid differs from frame 0")
    if priors.spec != spec:
        raise SpecMismatch("prior mask grid differs from observed frames")

    a = len(observed_frames)
    b = len(priors.frames)
    lo = min(float(f.values.min()) for f in observed_frames)
    hi = max(float(f.values.max()) for f in observed_frames)
    span = hi - lo
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, f in enumerate(observed_frames):
        scaled = (f.values - lo) / span if span > 0 else np.zeros(spec.shape)
        name = _frame_name(i)
        write_gray_pgm(scaled, out_dir / name)
        names.append(name)
    for j, m in enumerate(priors.frames):
        name = _frame_name(a + j)
        write_mask_pgm(m, out_dir / name)
        names.append(name)

    control = "0" * a + "1" * b
    manifest = {
        "format": "vcu-bundle-v1",
        "a": a,
        "b": b,
        "height": spec.height,
        "width": spec.width,
        "dx": spec.dx,
        "dt_frame": priors.dt_frame,
        "scale_min": lo,
        "scale_max": hi,
        "control": control,
    }
    for key, value in (provenance or {}).items():
        manifest[f"provenance_{key}"] = value
    write_kv(out_dir / MANIFEST_NAME, manifest)
    return VcuBundle(
        a=a,
        b=b,
        spec=spec,
        frame_files=tuple(names),
        control_bits=tuple(int(c) for c in control),
        scale_min=lo,
        scale_max=hi,
    )


def read_vcu_bundle(dir_path) -> VcuBundle:
    dir_path = Path(dir_path)
    kv = read_kv(dir_path / MANIFEST_NAME)
    where = str(dir_path)
    a = _kv_get(kv, "a", int, where)
    b = _kv_get(kv, "b", int, where)
    height = _kv_get(kv, "height", int, where)
    width = _kv_get(kv, "width", int, where)
    dx = _kv_get(kv, "dx", float, where)
    control = _kv_get(kv, "control", str, where)
    if control != "0" * a + "1" * b:
        raise BadHeader(f"{where}: control string does not match a={a}, b={b}")
    names = []
    for i in range(a + b):
        name = _frame_name(i)
        if not (dir_path / name).is_file():
            raise MissingComponent(f"{where}: missing {name}")
        names.append(name)
    on_disk = sorted(dir_path.glob("frame_*.pgm"))
    if len(on_disk) != a + b:
        raise ManifestMismatch(f"{where}: manifest says {a + b} frames, found {len(on_disk)}")
    return VcuBundle(
        a=a,
        b=b,
        spec=GridSpec(height, width, dx),
        frame_files=tuple(names),
        control_bits=tuple(int(c) for c in control),
        scale_min=_kv_get(kv, "scale_min", float, where),
        scale_max=_kv_get(kv, "scale_max", float, where),
    )


# ----------------------------------------------------------------- reports


def fit_report_kv(fit) -> dict:
    out = {
        "weights": len(fit.weights),
        "residual_norm": fit.residual_norm,
        "iterations": fit.iterations,
        "converged": fit.converged,
    }
    if fit.objective_trace:
        out["objective_initial"] = fit.objective_trace[0]
        out["objective_final"] = fit.objective_trace[-1]
    for i, w in enumerate(fit.weights.w):
        out[f"weight_{i:04d}"] = float(w)
    return out


def metric_report_kv(report) -> dict:
    out = {}
    for name in ("auprc", "f1", "iou", "mse", "psnr", "ssim"):
        value = getattr(report, name)
        if value is not None:
            out[name] = value
    out["frames"] = len(report.per_frame)
    for fm in report.per_frame:
        for name in ("iou", "f1", "mse", "psnr", "ssim"):
            value = getattr(fm, name)
            if value is not None:
                out[f"{name}_{fm.index:04d}"] = value
    return out
