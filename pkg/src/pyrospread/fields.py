"""Raster data types shared by the numerical modules.

Grids are row-major with (row, col) indexing; row 0 is the north edge,
column 0 the west edge. All types are immutable after construction (the
backing numpy arrays are marked read-only) so they can be shared freely
across workers. NaN/Inf are rejected at construction instead of being
propagated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadRange, EmptyInput, NonFinite, SpecMismatch


@dataclass(frozen=True)
class GridSpec:
    """Grid geometry: cell counts and the cell edge length in meters."""

    height: int
    width: int
    dx: float = 1.0

    def __post_init__(self):
        if self.height < 3 or self.width < 3:
            raise BadRange(f"grid must be at least 3x3, got {self.height}x{self.width}")
        if not (math.isfinite(self.dx) and self.dx > 0):
            raise BadRange(f"dx must be finite and > 0, got {self.dx}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def n_cells(self) -> int:
        return self.height * self.width


def _as_grid_array(spec: GridSpec, values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.shape != spec.shape:
        raise SpecMismatch(f"array shape {arr.shape} does not match grid {spec.shape}")
    arr.setflags(write=False)
    return arr


class ScalarField:
    """One real value per cell (temperature-like field, terrain, fuel)."""

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values):
        arr = _as_grid_array(spec, values, np.float64)
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFinite(f"non-finite value at cell ({bad[0]}, {bad[1]})")
        self.spec = spec
        self.values = arr

    @classmethod
    def const(cls, spec: GridSpec, value: float) -> "ScalarField":
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ScalarField":
        return cls.const(spec, 0.0)

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"ScalarField({self.spec.height}x{self.spec.width}, dx={self.spec.dx})"


class VectorField:
    """One 2-component vector per cell: u eastward, v northward (m/s)."""

    __slots__ = ("spec", "u", "v")

    def __init__(self, spec: GridSpec, u, v):
        self.spec = spec
        self.u = _as_grid_array(spec, u, np.float64)
        self.v = _as_grid_array(spec, v, np.float64)
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise NonFinite("non-finite wind component")

    @classmethod
    def const(cls, spec: GridSpec, u: float, v: float) -> "VectorField":
        return cls(spec, np.full(spec.shape, float(u)), np.full(spec.shape, float(v)))

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return (
            self.spec == other.spec
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )

    __hash__ = None


class MaskFrame:
    """Binary raster frame; every cell is exactly 0 or 1."""

    __slots__ = ("spec", "bits")

    def __init__(self, spec: GridSpec, bits):
        arr = np.array(bits, copy=True)
        if arr.shape != spec.shape:
            raise SpecMismatch(f"mask shape {arr.shape} does not match grid {spec.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise BadRange("mask cells must be exactly 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        self.spec = spec
        self.bits = arr

    @classmethod
    def zeros(cls, spec: GridSpec) -> "MaskFrame":
        return cls(spec, np.zeros(spec.shape, dtype=np.uint8))

    @classmethod
    def ones(cls, spec: GridSpec) -> "MaskFrame":
        return cls(spec, np.ones(spec.shape, dtype=np.uint8))

    def area(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, MaskFrame):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.bits, other.bits)

    __hash__ = None

    def __repr__(self):
        return f"MaskFrame({self.spec.height}x{self.spec.width}, area={self.area()})"


class MaskSequence:
    """Ordered mask frames on one grid, dt_frame seconds apart."""

    __slots__ = ("frames", "dt_frame")

    def __init__(self, frames, dt_frame: float):
        frames = list(frames)
        if not frames:
            raise EmptyInput("mask sequence needs at least one frame")
        spec = frames[0].spec
        for i, f in enumerate(frames):
            if f.spec != spec:
                raise SpecMismatch(f"frame {i} grid differs from frame 0")
        if not (math.isfinite(dt_frame) and dt_frame > 0):
            raise BadRange(f"dt_frame must be finite and > 0, got {dt_frame}")
        self.frames = frames
        self.dt_frame = float(dt_frame)

    @property
    def spec(self) -> GridSpec:
        return self.frames[0].spec

    def __len__(self):
        return len(self.frames)

    def __eq__(self, other):
        if not isinstance(other, MaskSequence):
            return NotImplemented
        return (
            self.dt_frame == other.dt_frame
            and len(self.frames) == len(other.frames)
            and all(a == b for a, b in zip(self.frames, other.frames))
        )

    __hash__ = None


def field_map2(a: ScalarField, b: ScalarField, op) -> ScalarField:
    """Apply a cellwise binary operation to two fields on the same grid.

    `op` must accept two equally shaped arrays (e.g. np.add, np.multiply,
    or any vectorized callable). The result must be finite everywhere.
    """
    if a.spec != b.spec:
        raise SpecMismatch("operand grids differ")
    out = np.asarray(op(a.values, b.values), dtype=np.float64)
    if out.shape != a.spec.shape:
        raise SpecMismatch(f"op produced shape {out.shape}, expected {a.spec.shape}")
    return ScalarField(a.spec, out)


def mask_from_field(field: ScalarField, threshold: float) -> MaskFrame:
    """Superlevel-set mask: bit = 1 where the field value >= threshold."""
    return MaskFrame(field.spec, (field.values >= threshold).astype(np.uint8))


def gaussian_kernel_1d(smooth_radius: float) -> np.ndarray:
    """Unit-sum 1-D Gaussian with sigma = radius/2, truncated at 3 sigma."""
    sigma = smooth_radius / 2.0
    half = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-0.5 * (offsets / sigma) ** 2)
    return k / k.sum()


def field_from_mask(
    mask: MaskFrame, t_ambient: float, t_burn: float, smooth_radius: float = 0.0
) -> ScalarField:
    """Lift a binary mask to a temperature-like field.

    value = t_ambient + (t_burn - t_ambient) * g, where g is the mask
    indicator convolved with a unit-sum Gaussian kernel (symmetric/reflect
    padding, so constant masks stay constant). With smooth_radius = 0 the
    indicator is used as-is, making the lift exactly invertible by
    thresholding at the midpoint.
    """
    if not (t_burn > t_ambient):
        raise BadRange(f"t_burn ({t_burn}) must exceed t_ambient ({t_ambient})")
    if smooth_radius < 0:
        raise BadRange("smooth_radius must be >= 0")
    ind = mask.bits.astype(np.float64)
    if smooth_radius == 0:
        g = ind
    else:
        k1 = gaussian_kernel_1d(smooth_radius)
        half = (len(k1) - 1) // 2
        h, w = mask.spec.shape
        pad = np.pad(ind, half, mode="symmetric")
        g = np.zeros((h, w))
        # separable kernel applied as an explicit sum of shifted slices
        for dr, wr in zip(range(-half, half + 1), k1):
            row = pad[half + dr : half + dr + h, :]
            for dc, wc in zip(range(-half, half + 1), k1):
                g += (wr * wc) * row[:, half + dc : half + dc + w]
        g = np.clip(g, 0.0, 1.0)  # guard float round-off at plateaus
    return ScalarField(mask.spec, t_ambient + (t_burn - t_ambient) * g)
