"""Rectangles, boundary layouts and potentials.

Boundary conventions
--------------------
A rectangle has four sides, always enumerated South, East, North, West.  The
tangent on South/North points in +x, on East/West in +y; outward normals are
(0,-1), (1,0), (0,1), (-1,0).  Boundary data live on *panels*: a side segment
carrying a Gauss (first-kind) Chebyshev grid.  A leaf box has one panel per
side; merged boxes inherit the panels of their children, so a side may be
split into several panels.  Samples on a panel are stored in the grid's
(descending) node order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .spectral import ChebGrid, NodeKind, cheb_nodes, diff_matrix, quad_weights


class Side(enum.IntEnum):
    SOUTH = 0
    EAST = 1
    NORTH = 2
    WEST = 3

    @property
    def normal(self) -> tuple[int, int]:
        return ((0, -1), (1, 0), (0, 1), (-1, 0))[self]

    @property
    def tangent(self) -> tuple[int, int]:
        return (1, 0) if self in (Side.SOUTH, Side.NORTH) else (0, 1)

    @property
    def horizontal(self) -> bool:
        return self in (Side.SOUTH, Side.NORTH)

    @property
    def opposite(self) -> "Side":
        return Side((self + 2) % 4)


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def corners(self) -> tuple[tuple[float, float], ...]:
        return ((self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1))

    def side_span(self, side: Side) -> tuple[float, float]:
        """Parameter interval of ``side`` (x-range for South/North, y-range otherwise)."""
        return (self.x0, self.x1) if side.horizontal else (self.y0, self.y1)

    def side_coordinate(self, side: Side) -> float:
        """The fixed coordinate of ``side`` (y for South/North, x otherwise)."""
        return {Side.SOUTH: self.y0, Side.EAST: self.x1, Side.NORTH: self.y1, Side.WEST: self.x0}[side]

    def split(self, axis: str, at: float | None = None) -> tuple["Rect", "Rect"]:
        """Cut into (left, right) for ``axis='x'`` or (bottom, top) for ``axis='y'``."""
        if axis == "x":
            m = 0.5 * (self.x0 + self.x1) if at is None else at
            return Rect(self.x0, m, self.y0, self.y1), Rect(m, self.x1, self.y0, self.y1)
        if axis == "y":
            m = 0.5 * (self.y0 + self.y1) if at is None else at
            return Rect(self.x0, self.x1, self.y0, m), Rect(self.x0, self.x1, m, self.y1)
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")

    def union(self, other: "Rect") -> "Rect":
        return Rect(min(self.x0, other.x0), max(self.x1, other.x1),
                    min(self.y0, other.y0), max(self.y1, other.y1))


# ---------------------------------------------------------------------------
# boundary layouts


@dataclass(frozen=True)
class Panel:
    """A segment ``[lo, hi]`` of one side carrying a Gauss grid of degree ``n``."""

    side: Side
    lo: float
    hi: float
    n: int

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def grid(self) -> ChebGrid:
        return _gauss(self.n)

    def params(self) -> np.ndarray:
        """Physical side parameter (x or y) of the panel's nodes."""
        return self.grid.physical(self.lo, self.hi)

    def points(self, rect: Rect) -> np.ndarray:
        """(m, 2) array of physical node coordinates on ``rect``."""
        s = self.params()
        c = np.full_like(s, rect.side_coordinate(self.side))
        return np.column_stack([s, c] if self.side.horizontal else [c, s])

    def weights(self) -> np.ndarray:
        return quad_weights(self.grid) * (0.5 * self.length)

    def tangential_diff(self) -> np.ndarray:
        return diff_matrix(self.grid).scaled(self.lo, self.hi)

    def matches(self, other: "Panel", tol: float = 1e-12) -> bool:
        return (self.n == other.n and abs(self.lo - other.lo) <= tol
                and abs(self.hi - other.hi) <= tol)


_GAUSS_CACHE: dict[int, ChebGrid] = {}


def _gauss(n: int) -> ChebGrid:
    g = _GAUSS_CACHE.get(n)
    if g is None:
        g = _GAUSS_CACHE[n] = cheb_nodes(n, NodeKind.GAUSS)
    return g


@dataclass(frozen=True)
class BoundaryLayout:
    """Ordered list of panels; the global index runs through them in order."""

    panels: tuple[Panel, ...]

    @classmethod
    def for_rect(cls, rect: Rect, n_b: int) -> "BoundaryLayout":
        return cls(tuple(Panel(s, *rect.side_span(s), n_b) for s in Side))

    @property
    def size(self) -> int:
        return sum(p.size for p in self.panels)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([p.size for p in self.panels])])

    def panel_indices(self, i: int) -> np.ndarray:
        off = self.offsets
        return np.arange(off[i], off[i + 1])

    def side_panels(self, side: Side) -> list[int]:
        return [i for i, p in enumerate(self.panels) if p.side is side]

    def indices(self, sides: Side | Sequence[Side]) -> np.ndarray:
        """Global indices of all samples on the given side(s), in layout order."""
        if isinstance(sides, Side):
            sides = (sides,)
        wanted = set(sides)
        idx = [self.panel_indices(i) for i, p in enumerate(self.panels) if p.side in wanted]
        return np.concatenate(idx) if idx else np.zeros(0, dtype=int)

    def global_index(self, panel: int, local: int) -> int:
        if not 0 <= local < self.panels[panel].size:
            raise IndexError(local)
        return int(self.offsets[panel] + local)

    def subset(self, sides: Side | Sequence[Side]) -> "BoundaryLayout":
        if isinstance(sides, Side):
            sides = (sides,)
        wanted = set(sides)
        return BoundaryLayout(tuple(p for p in self.panels if p.side in wanted))

    def weights(self) -> np.ndarray:
        return np.concatenate([p.weights() for p in self.panels])

    def points(self, rect: Rect) -> np.ndarray:
        return np.vstack([p.points(rect) for p in self.panels])


# ---------------------------------------------------------------------------
# potentials


class Potential:
    """A real potential ``V(x, y)`` with its gradient.

    ``value`` and ``gradient`` accept broadcastable arrays.  Use the
    classmethod constructors; ``descriptor`` records how the potential was
    built (it round-trips through :func:`parse_potential`).
    """

    def __init__(self, value: Callable, gradient: Callable, descriptor: str):
        self._value = value
        self._gradient = gradient
        self.descriptor = descriptor

    def __repr__(self):
        return f"Potential({self.descriptor})"

    def __call__(self, x, y):
        return self.value(x, y)

    def value(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.asarray(self._value(x, y), dtype=float) + np.zeros_like(x)

    def gradient(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        gx, gy = self._gradient(x, y)
        return np.asarray(gx, float) + np.zeros_like(x), np.asarray(gy, float) + np.zeros_like(x)

    @property
    def is_constant(self) -> bool:
        return self.descriptor.startswith("constant(")

    @classmethod
    def constant(cls, c: float) -> "Potential":
        c = float(c)
        return cls(lambda x, y: np.full_like(x, c), lambda x, y: (np.zeros_like(x), np.zeros_like(x)),
                   f"constant({c!r})")

    @classmethod
    def affine(cls, c0: float, cx: float, cy: float = 0.0) -> "Potential":
        """``V = c0 + cx * x + cy * y``."""
        c0, cx, cy = float(c0), float(cx), float(cy)
        return cls(lambda x, y: c0 + cx * x + cy * y,
                   lambda x, y: (np.full_like(x, cx), np.full_like(x, cy)),
                   f"affine({c0!r}, {cx!r}, {cy!r})")

    @classmethod
    def gaussian_bump(cls, base: float, amplitude: float, x0: float, y0: float,
                      width: float) -> "Potential":
        """``V = base + amplitude * exp(-|p - p0|^2 / (2 width^2))``."""
        base, amplitude, x0, y0, width = map(float, (base, amplitude, x0, y0, width))
        s2 = 2.0 * width * width

        def bump(x, y):
            return amplitude * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / s2)

        def grad(x, y):
            b = bump(x, y)
            return -2.0 * (x - x0) / s2 * b, -2.0 * (y - y0) / s2 * b

        return cls(lambda x, y: base + bump(x, y), grad,
                   f"gaussian({base!r}, {amplitude!r}, {x0!r}, {y0!r}, {width!r})")

    @classmethod
    def table(cls, xs, ys, values, source: str = "<array>") -> "Potential":
        """Bicubic spline through tabulated values ``values[i, j] = V(xs[i], ys[j])``."""
        spl = RectBivariateSpline(np.asarray(xs, float), np.asarray(ys, float),
                                  np.asarray(values, float), kx=3, ky=3)
        return cls(lambda x, y: spl.ev(x, y),
                   lambda x, y: (spl.ev(x, y, dx=1), spl.ev(x, y, dy=1)),
                   f"table({source})")

    @classmethod
    def from_table_file(cls, path: str) -> "Potential":
        """Read a whitespace table: first row ``nan y_0 .. y_m``, then ``x_i V_i0 .. V_im``."""
        data = np.loadtxt(path)
        return cls.table(data[1:, 0], data[0, 1:], data[1:, 1:], source=str(path))


def reflect_potential(V: Potential, axis: float = 1.0) -> Potential:
    """Mirror ``V`` in the vertical line ``x = axis``: ``V2(x, y) = V(2 axis - x, y)``."""
    two_a = 2.0 * axis

    def grad(x, y):
        gx, gy = V.gradient(two_a - x, y)
        return -gx, gy

    return Potential(lambda x, y: V.value(two_a - x, y), grad, f"reflect({V.descriptor}, {axis!r})")


def check_nontrapping(V: Potential, rect: Rect, vertex: tuple[float, float],
                      samples: int = 201) -> float:
    """Sampled minimum of ``2 V + (p - vertex) . grad V`` over ``rect``.

    A non-positive return value means the non-trapping condition fails with
    respect to ``vertex``.
    """
    a0, b0 = map(float, vertex)
    if not any(math.isclose(a0, cx, abs_tol=1e-12) and math.isclose(b0, cy, abs_tol=1e-12)
               for cx, cy in rect.corners):
        raise ValueError(f"vertex {vertex} is not a corner of {rect}")
    if samples < 2:
        raise ValueError("need at least 2 samples per axis")
    xs = np.linspace(rect.x0, rect.x1, samples)
    ys = np.linspace(rect.y0, rect.y1, samples)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    gx, gy = V.gradient(X, Y)
    return float(np.min(2.0 * V.value(X, Y) + (X - a0) * gx + (Y - b0) * gy))


_POTENTIAL_KINDS = {
    "constant": (Potential.constant, 1),
    "affine": (Potential.affine, (2, 3)),
    "gaussian": (Potential.gaussian_bump, 5),
}


def parse_potential(text: str) -> Potential:
    """Parse descriptors such as ``constant(1)``, ``affine(1, 0.05)``,
    ``gaussian(1, 0.3, 0.5, 0.5, 0.1)`` or ``table(path/to/file.txt)``."""
    s = text.strip()
    if "(" not in s or not s.endswith(")"):
        raise ValueError(f"bad potential descriptor {text!r}")
    name, args = s[:-1].split("(", 1)
    name = name.strip().lower()
    if name == "table":
        return Potential.from_table_file(args.strip())
    if name == "reflect":
        inner, _, axis = args.rpartition(",")
        return reflect_potential(parse_potential(inner), float(axis))
    if name not in _POTENTIAL_KINDS:
        raise ValueError(f"unknown potential kind {name!r}")
    ctor, nargs = _POTENTIAL_KINDS[name]
    vals = [float(a) for a in args.split(",") if a.strip()]
    allowed = nargs if isinstance(nargs, tuple) else (nargs,)
    if len(vals) not in allowed:
        raise ValueError(f"{name} potential takes {nargs} arguments, got {len(vals)}")
    return ctor(*vals)
