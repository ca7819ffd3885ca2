"""Shared domain types, origin-grid geometry and on-disk formats.

Coordinate convention used everywhere: ``x`` is the column, ``y`` the row,
the origin is the top-left corner and pixel ``(row, col)`` has its centre at
``(x=col, y=row)``. Positions are real-valued (sub-pixel).
"""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

IMAGE_MAGIC = b"PPNIMG1\0"


class FormatError(ValueError):
    """A file does not follow the expected on-disk layout."""


@dataclass(frozen=True, eq=False)
class Image:
    """A 2-D grid of finite flux values, stored as float32 ``(height, width)``."""

    values: np.ndarray
    rms_sigma: float | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image values must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("image values must be finite (found NaN or Inf)")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def normalized(self) -> "Image":
        """Linearly rescale to [0, 1]; a constant image maps to all zeros."""
        return Image(normalize(self.values), self.rms_sigma)


def normalize(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros(v.shape, dtype=np.float32)
    return ((v - lo) / (hi - lo)).astype(np.float32)


class PointRecord(NamedTuple):
    x: float
    y: float
    score: float


@dataclass(frozen=True, eq=False)
class Catalog:
    """An ordered set of points; ``kind`` is ``"truth"`` (score = peak flux)
    or ``"detection"`` (score = confidence)."""

    xy: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    score: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kind: str = "detection"

    def __post_init__(self):
        if self.kind not in ("truth", "detection"):
            raise ValueError(f"catalog kind must be 'truth' or 'detection', got {self.kind!r}")
        xy = np.asarray(self.xy, dtype=np.float64).reshape(-1, 2)
        score = np.asarray(self.score, dtype=np.float64).reshape(-1)
        if len(xy) != len(score):
            raise ValueError(f"{len(xy)} positions but {len(score)} scores")
        xy.setflags(write=False)
        score.setflags(write=False)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "score", score)

    @classmethod
    def from_records(cls, records: Sequence[PointRecord], kind: str = "detection") -> "Catalog":
        if not records:
            return cls(kind=kind)
        arr = np.asarray([(r.x, r.y, r.score) for r in records], dtype=np.float64)
        return cls(arr[:, :2], arr[:, 2], kind)

    def __len__(self) -> int:
        return len(self.score)

    def __iter__(self) -> Iterator[PointRecord]:
        for (x, y), s in zip(self.xy.tolist(), self.score.tolist()):
            yield PointRecord(x, y, s)

    def __getitem__(self, i: int) -> PointRecord:
        x, y = self.xy[i]
        return PointRecord(float(x), float(y), float(self.score[i]))

    @property
    def x(self) -> np.ndarray:
        return self.xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xy[:, 1]

    def subset(self, mask) -> "Catalog":
        return Catalog(self.xy[mask], self.score[mask], self.kind)

    def shifted(self, dx: float, dy: float) -> "Catalog":
        return Catalog(self.xy + np.array([dx, dy]), self.score, self.kind)

    def validate_within(self, width: int, height: int) -> None:
        """Check every point lies in ``[0, width) x [0, height)`` and scores are in range."""
        if len(self) == 0:
            return
        if (self.x < 0).any() or (self.x >= width).any() or (self.y < 0).any() or (self.y >= height).any():
            raise ValueError(f"catalog positions fall outside the {width}x{height} image")
        if self.kind == "truth" and (self.score <= 0).any():
            raise ValueError("truth fluxes must be positive")
        if self.kind == "detection" and ((self.score <= 0).any() or (self.score >= 1).any()):
            raise ValueError("detection confidences must lie in (0, 1)")


@dataclass(frozen=True)
class GridSpec:
    """Origin lattice of a square patch: ``grid_m`` x ``grid_n`` origins at cell centres."""

    patch_size: int = 224
    grid_m: int = 7
    grid_n: int = 7

    def __post_init__(self):
        if self.patch_size <= 0 or self.grid_m <= 0 or self.grid_n <= 0:
            raise ValueError("patch_size, grid_m and grid_n must be positive")
        if self.patch_size % self.grid_m or self.patch_size % self.grid_n:
            raise ValueError(
                f"patch_size {self.patch_size} is not divisible by the {self.grid_m}x{self.grid_n} grid"
            )
        if self.grid_m != self.grid_n:
            raise ValueError("only square origin grids are supported (grid_m must equal grid_n)")

    @property
    def spacing(self) -> float:
        """Pixels per origin step; one grid unit."""
        return self.patch_size / self.grid_m

    @property
    def shape(self) -> tuple[int, int]:
        return (self.grid_m, self.grid_n)

    def origin_centers(self) -> np.ndarray:
        """Array ``(grid_m, grid_n, 2)`` of origin ``(x, y)`` pixel positions."""
        cols = (np.arange(self.grid_n) + 0.5) * self.spacing
        rows = (np.arange(self.grid_m) + 0.5) * self.spacing
        xx, yy = np.meshgrid(cols, rows)
        return np.stack([xx, yy], axis=-1)


def origin_position(grid: GridSpec, i: int, j: int) -> tuple[float, float]:
    """Pixel-frame ``(x, y)`` centre of origin row ``i``, column ``j``."""
    if not (0 <= i < grid.grid_m and 0 <= j < grid.grid_n):
        raise IndexError(f"origin ({i}, {j}) outside the {grid.grid_m}x{grid.grid_n} grid")
    return ((j + 0.5) * grid.spacing, (i + 0.5) * grid.spacing)


def grid_to_pixel(grid: GridSpec, origin: tuple[int, int], offset: tuple[float, float]) -> tuple[float, float]:
    """Denormalize a grid-unit ``(dx, dy)`` offset from ``origin`` into pixel coordinates."""
    dx, dy = offset
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise ValueError(f"offset must be finite, got {offset}")
    ox, oy = origin_position(grid, *origin)
    return (ox + dx * grid.spacing, oy + dy * grid.spacing)


# ---------------------------------------------------------------------------
# file formats


def write_image(path, image: Image, meta: dict | None = None) -> None:
    """Write the binary image format, plus ``<stem>.meta.json`` when ``meta`` is given."""
    path = Path(path)
    h, w = image.values.shape
    with open(path, "wb") as fh:
        fh.write(IMAGE_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(image.values.astype("<f4", copy=False).tobytes(order="C"))
    if meta is not None:
        write_meta(meta_path(path), meta)


def read_image(path) -> Image:
    path = Path(path)
    data = path.read_bytes()
    if data[:8] != IMAGE_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:8]!r}, expected {IMAGE_MAGIC!r}")
    if len(data) < 16:
        raise FormatError(f"{path}: truncated header")
    w, h = struct.unpack("<II", data[8:16])
    expected = 16 + 4 * w * h
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {w}x{h} image, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=16).reshape(h, w)
    rms = None
    mp = meta_path(path)
    if mp.exists():
        rms = read_meta(mp).get("rms_sigma")
    return Image(values.astype(np.float32), rms)


def meta_path(image_path) -> Path:
    p = Path(image_path)
    return p.with_name(p.stem + ".meta.json")


def write_meta(path, meta: dict) -> None:
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_meta(path) -> dict:
    return json.loads(Path(path).read_text())


def write_catalog(path, catalog: Catalog) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x,y,score\n")
        for x, y, s in catalog:
            fh.write(f"{x:.6f},{y:.6f},{s:.9g}\n")


def read_catalog(path, kind: str = "detection") -> Catalog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "score"]:
            raise FormatError(f"{path}: expected header 'x,y,score', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                rows.append(tuple(float(v) for v in row))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        return Catalog(kind=kind)
    arr = np.asarray(rows)
    return Catalog(arr[:, :2], arr[:, 2], kind)
