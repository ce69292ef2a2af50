"""
Scalar samples of a function on a uniform box grid.

Nodes sit at lo + i h along every axis (the same spacing on all axes).
``mask`` marks the nodes that belong to the declared smooth locus; masked
out nodes may hold any value, including NaN.

Two on-disk formats:

- CSV, x-major, with a ``#`` header line carrying box, spacing, shape and
  the sup bound, followed by ``x1,...,xd,value,mask`` rows;
- GF01 binary: magic ``GF01``, uint32 ndim, int64 shape, float64 lo, hi,
  h, sup bound (NaN when absent), float64 values, uint8 mask, all
  little-endian and C-ordered.
"""

import csv
import io
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from logmodcert.errors import DimensionMismatchError, ParameterError
from logmodcert.report import atomic_write_bytes, atomic_write_text

log = logging.getLogger(__name__)

GF_MAGIC = b"GF01"
SPACING_RTOL = 1e-9


class GridField:
    def __init__(
        self,
        lo: Sequence[float],
        hi: Sequence[float],
        values: np.ndarray,
        mask: Optional[np.ndarray] = None,
        sup_bound: Optional[float] = None,
    ):
        values = np.asarray(values, dtype=float)
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.shape[0] != values.ndim:
            raise DimensionMismatchError(f"❌ Box of dimension {lo.shape[0]} does not match a {values.ndim}-d array")
        if np.any(np.asarray(values.shape) < 2):
            raise ParameterError("❌ A grid field needs at least 2 nodes per axis")
        steps = (hi - lo) / (np.asarray(values.shape) - 1)
        if np.any(steps <= 0):
            raise ParameterError("❌ Grid spacing must be positive")
        if np.max(np.abs(steps - steps[0])) > SPACING_RTOL * steps[0]:
            raise ParameterError(f"❌ Grid spacing differs across axes: {steps.tolist()}")
        mask = np.ones(values.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != values.shape:
            raise DimensionMismatchError("❌ Mask shape does not match values")
        if not np.all(np.isfinite(values[mask])):
            raise ParameterError("❌ Non-finite values on unmasked nodes")
        self.lo = lo
        self.hi = hi
        self.h = float(steps[0])
        self.values = values
        self.mask = mask
        self.sup_bound = sup_bound

    def __repr__(self) -> str:
        return f"GridField(shape={self.shape}, h={self.h:.4g})"

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    def axes(self) -> List[np.ndarray]:
        return [self.lo[i] + self.h * np.arange(n) for i, n in enumerate(self.shape)]

    def points(self) -> np.ndarray:
        """Node coordinates, shape (*shape, ndim)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def nearest_index(self, x: Sequence[float]) -> Tuple[int, ...]:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.ndim:
            raise DimensionMismatchError(f"❌ Expected a point in R^{self.ndim}")
        idx = np.rint((x - self.lo) / self.h).astype(int)
        return tuple(int(i) for i in np.clip(idx, 0, np.asarray(self.shape) - 1))

    def with_values(self, values: np.ndarray, mask: Optional[np.ndarray] = None) -> "GridField":
        return GridField(self.lo, self.hi, values, self.mask if mask is None else mask, self.sup_bound)

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        lo: Sequence[float],
        hi: Sequence[float],
        n: int,
        mask_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> "GridField":
        """Sample fn (vectorized over a (..., d) point array) on n nodes per axis."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        axes = [np.linspace(l, u, n) for l, u in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        mask = None if mask_fn is None else np.asarray(mask_fn(pts), dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.asarray(fn(pts), dtype=float)
        finite = np.isfinite(values)
        sup_bound = float(np.max(np.abs(values[finite if mask is None else finite & mask])))
        return cls(lo, hi, values, mask, sup_bound)


# ==========================================
# CSV
# ==========================================
def _header(field: GridField) -> str:
    sup = "nan" if field.sup_bound is None else repr(float(field.sup_bound))
    return (
        f"# lo={','.join(repr(float(v)) for v in field.lo)};"
        f"hi={','.join(repr(float(v)) for v in field.hi)};"
        f"h={field.h!r};shape={','.join(str(n) for n in field.shape)};sup_bound={sup}"
    )


def save_csv(field: GridField, path: str) -> str:
    buf = io.StringIO()
    buf.write(_header(field) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(field.ndim)] + ["value", "mask"])
    pts = field.points().reshape(-1, field.ndim)
    for p, v, m in zip(pts, field.values.reshape(-1), field.mask.reshape(-1)):
        writer.writerow([repr(float(c)) for c in p] + [repr(float(v)), int(m)])
    return atomic_write_text(path, buf.getvalue())


def load_csv(path: str) -> GridField:
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().strip()
        if not first.startswith("#"):
            raise ParameterError(f"❌ {path}: missing grid header line")
        meta = dict(item.split("=", 1) for item in first.lstrip("# ").split(";"))
        lo = [float(v) for v in meta["lo"].split(",")]
        hi = [float(v) for v in meta["hi"].split(",")]
        shape = tuple(int(v) for v in meta["shape"].split(","))
        sup = float(meta.get("sup_bound", "nan"))
        reader = csv.reader(f)
        next(reader)
        rows = [row for row in reader if row]
    if len(rows) != int(np.prod(shape)):
        raise ParameterError(f"❌ {path}: expected {int(np.prod(shape))} rows, found {len(rows)}")
    values = np.array([float(row[len(shape)]) for row in rows]).reshape(shape)
    mask = np.array([int(row[len(shape) + 1]) for row in rows], dtype=bool).reshape(shape)
    return GridField(lo, hi, values, mask, None if np.isnan(sup) else sup)


# ==========================================
# GF01 BINARY
# ==========================================
def to_bytes(field: GridField) -> bytes:
    sup = np.nan if field.sup_bound is None else float(field.sup_bound)
    parts = [
        GF_MAGIC,
        np.array([field.ndim], dtype="<u4").tobytes(),
        np.array(field.shape, dtype="<i8").tobytes(),
        field.lo.astype("<f8").tobytes(),
        field.hi.astype("<f8").tobytes(),
        np.array([field.h, sup], dtype="<f8").tobytes(),
        np.ascontiguousarray(field.values, dtype="<f8").tobytes(),
        np.ascontiguousarray(field.mask, dtype="u1").tobytes(),
    ]
    return b"".join(parts)


def from_bytes(payload: bytes) -> GridField:
    if payload[:4] != GF_MAGIC:
        raise ParameterError("❌ Not a GF01 grid file (bad magic)")
    offset = 4
    ndim = int(np.frombuffer(payload, dtype="<u4", count=1, offset=offset)[0])
    offset += 4
    shape = tuple(int(v) for v in np.frombuffer(payload, dtype="<i8", count=ndim, offset=offset))
    offset += 8 * ndim
    lo = np.frombuffer(payload, dtype="<f8", count=ndim, offset=offset).copy()
    offset += 8 * ndim
    hi = np.frombuffer(payload, dtype="<f8", count=ndim, offset=offset).copy()
    offset += 8 * ndim
    _, sup = np.frombuffer(payload, dtype="<f8", count=2, offset=offset)
    offset += 16
    size = int(np.prod(shape))
    if len(payload) != offset + 9 * size:
        raise ParameterError(f"❌ GF01 payload has {len(payload)} bytes, expected {offset + 9 * size}")
    values = np.frombuffer(payload, dtype="<f8", count=size, offset=offset).reshape(shape).copy()
    offset += 8 * size
    mask = np.frombuffer(payload, dtype="u1", count=size, offset=offset).reshape(shape).astype(bool)
    return GridField(lo, hi, values, mask, None if np.isnan(sup) else float(sup))


def save_binary(field: GridField, path: str) -> str:
    return atomic_write_bytes(path, to_bytes(field))


def load_binary(path: str) -> GridField:
    with open(path, "rb") as f:
        return from_bytes(f.read())


def load_field(path: str) -> GridField:
    """Load by content: GF01 magic, else CSV."""
    with open(path, "rb") as f:
        head = f.read(4)
    return load_binary(path) if head == GF_MAGIC else load_csv(path)


def save_field(field: GridField, path: str) -> str:
    if path.endswith(".csv"):
        return save_csv(field, path)
    return save_binary(field, path)
