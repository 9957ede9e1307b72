"""Boundary traces, ItI operator containers and their on-disk formats."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import BoundaryLayout, Panel, Rect, Side

MAGIC = b"ITI1"


@dataclass(frozen=True)
class BoundaryTrace:
    """Complex samples on the Gauss nodes of ``layout``."""

    layout: BoundaryLayout
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.layout.size,):
            raise ValueError(f"trace of length {vals.shape} does not fit layout of size {self.layout.size}")
        object.__setattr__(self, "values", vals)

    def on(self, side: Side) -> np.ndarray:
        return self.values[self.layout.indices(side)]

    @classmethod
    def from_function(cls, layout: BoundaryLayout, rect: Rect, fn) -> "BoundaryTrace":
        pts = layout.points(rect)
        return cls(layout, fn(pts[:, 0], pts[:, 1]))


@dataclass(frozen=True)
class ItIOperator:
    """Dense impedance-to-impedance matrix with its boundary layouts.

    ``matrix[i, j]`` is outgoing data at target sample ``i`` produced by unit
    incoming data at source sample ``j``.
    """

    matrix: np.ndarray
    k: float
    source_layout: BoundaryLayout
    target_layout: BoundaryLayout
    rect: Rect | None = field(default=None, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.target_layout.size, self.source_layout.size):
            raise ValueError(f"matrix shape {m.shape} inconsistent with layouts "
                             f"({self.target_layout.size}, {self.source_layout.size})")
        if not np.all(np.isfinite(m)):
            raise ValueError("ItI matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def block(self, target: Side | tuple[Side, ...], source: Side | tuple[Side, ...]) -> np.ndarray:
        ti = self.target_layout.indices(target)
        si = self.source_layout.indices(source)
        return self.matrix[np.ix_(ti, si)]

    def __matmul__(self, other):
        return self.matrix @ other


# ---------------------------------------------------------------------------
# serialization


def write_binary(path: str | Path, matrix: np.ndarray) -> None:
    """``ITI1`` container: magic, u32 rows, u32 cols, row-major complex128 LE."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype="<c16"))
    if m.ndim != 2:
        raise ValueError("only 2-D matrices can be written")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", *m.shape))
        fh.write(m.tobytes(order="C"))


def read_binary(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) != 12 or head[:4] != MAGIC:
            raise ValueError(f"{path}: not an ITI1 container")
        rows, cols = struct.unpack("<II", head[4:])
        data = fh.read()
    if len(data) != 16 * rows * cols:
        raise ValueError(f"{path}: expected {rows}x{cols} complex128 payload, got {len(data)} bytes")
    return np.frombuffer(data, dtype="<c16").reshape(rows, cols).astype(complex)


def write_csv(path: str | Path, matrix: np.ndarray) -> None:
    """One row per matrix entry: ``row,col,re,im`` with 17 significant digits."""
    m = np.asarray(matrix, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for (i, j), z in np.ndenumerate(m):
            w.writerow([i, j, f"{z.real:.17g}", f"{z.imag:.17g}"])


def read_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    nr = 1 + max(int(r["row"]) for r in rows)
    nc = 1 + max(int(r["col"]) for r in rows)
    m = np.zeros((nr, nc), dtype=complex)
    for r in rows:
        m[int(r["row"]), int(r["col"])] = complex(float(r["re"]), float(r["im"]))
    return m


def mirror_x(op: ItIOperator, axis: float) -> ItIOperator:
    """ItI of the box reflected in the line ``x = axis``.

    East and West swap, horizontal panels are reflected, and samples are
    reordered so every panel stays in descending node order.  The result
    lists panels by side, then by position along the side.
    """
    if op.rect is None:
        raise ValueError("mirroring needs the operator's rectangle")
    if op.source_layout != op.target_layout:
        raise ValueError("mirroring is defined for full-boundary operators")
    lay = op.source_layout
    r = op.rect
    swap = {Side.EAST: Side.WEST, Side.WEST: Side.EAST}
    moved = []
    for i, p in enumerate(lay.panels):
        idx = lay.panel_indices(i)
        if p.side.horizontal:
            q = Panel(p.side, 2 * axis - p.hi, 2 * axis - p.lo, p.n)
            idx = idx[::-1]
        else:
            q = Panel(swap[p.side], p.lo, p.hi, p.n)
        moved.append((q, idx))
    moved.sort(key=lambda t: (t[0].side, t[0].lo))
    perm = np.concatenate([idx for _, idx in moved])
    layout = BoundaryLayout(tuple(q for q, _ in moved))
    rect = Rect(2 * axis - r.x1, 2 * axis - r.x0, r.y0, r.y1)
    return ItIOperator(op.matrix[np.ix_(perm, perm)], op.k, layout, layout, rect)
