"""Chebyshev spectral primitives on the reference interval [-1, 1].

Two node families are used throughout the package:

* ``Lobatto`` (second kind, ``cos(j pi / n)``) for the interior collocation
  solve, since the endpoints are needed to impose boundary conditions;
* ``Gauss`` (first kind, ``cos((2j+1) pi / (2n+2))``) for boundary data, which
  keeps impedance samples away from the corners of a box.

Nodes are always stored in descending order (``x_0`` closest to +1), so every
matrix produced here composes with every other one without permutation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class NodeKind(str, enum.Enum):
    LOBATTO = "lobatto"
    GAUSS = "gauss"


@dataclass(frozen=True)
class ChebGrid:
    """Chebyshev grid of polynomial degree ``n`` (``n + 1`` nodes)."""

    n: int
    kind: NodeKind
    nodes: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)

    @property
    def size(self) -> int:
        return self.n + 1

    def physical(self, a: float, b: float) -> np.ndarray:
        """Nodes mapped affinely onto ``[a, b]`` (still descending: +1 -> b)."""
        return a + (self.nodes + 1.0) * (0.5 * (b - a))


@dataclass(frozen=True)
class DiffMatrix:
    matrix: np.ndarray
    grid: ChebGrid

    def __post_init__(self):
        self.matrix.setflags(write=False)

    def scaled(self, a: float, b: float) -> np.ndarray:
        """Derivative matrix with respect to the physical coordinate on ``[a, b]``."""
        return self.matrix * (2.0 / (b - a))


def cheb_nodes(n: int, kind: NodeKind | str = NodeKind.LOBATTO) -> ChebGrid:
    """Return the Chebyshev grid of degree ``n``.

    >>> cheb_nodes(2, "lobatto").nodes
    array([ 1.,  0., -1.])
    """
    kind = NodeKind(kind)
    if int(n) != n or n < 1:
        raise ValueError(f"Chebyshev grid needs integer degree n >= 1, got {n!r}")
    n = int(n)
    j = np.arange(n + 1)
    if kind is NodeKind.LOBATTO:
        x = np.cos(np.pi * j / n)
        # exact symmetry about the midpoint (cos leaves ~1e-17 residue)
        x = 0.5 * (x - x[::-1])
    else:
        x = np.cos(np.pi * (2 * j + 1) / (2 * n + 2))
        x = 0.5 * (x - x[::-1])
    return ChebGrid(n, kind, x)


def bary_weights(grid: ChebGrid) -> np.ndarray:
    """Barycentric weights (up to a common factor) for the grid's nodes."""
    n = grid.n
    j = np.arange(n + 1)
    if grid.kind is NodeKind.LOBATTO:
        w = (-1.0) ** j
        w[0] *= 0.5
        w[-1] *= 0.5
    else:
        w = (-1.0) ** j * np.sin(np.pi * (2 * j + 1) / (2 * n + 2))
    return w


def diff_matrix(grid: ChebGrid) -> DiffMatrix:
    """First-derivative collocation matrix on ``grid`` (reference interval).

    Built from the barycentric weights; the diagonal is fixed by the
    negative-sum trick so the rows annihilate constants to rounding.
    """
    x = grid.nodes
    w = bary_weights(grid)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    D[np.diag_indices_from(D)] = -D.sum(axis=1)
    return DiffMatrix(D, grid)


def quad_weights(grid: ChebGrid) -> np.ndarray:
    """Interpolatory quadrature weights on [-1, 1].

    Clenshaw-Curtis for Lobatto nodes, Fejer's first rule for Gauss nodes.
    Both integrate polynomials of degree <= n exactly.
    """
    n = grid.n
    if grid.kind is NodeKind.LOBATTO:
        theta = np.pi * np.arange(n + 1) / n
        w = np.zeros(n + 1)
        inner = theta[1:-1]
        v = np.ones(n - 1)
        if n % 2 == 0:
            w[0] = w[-1] = 1.0 / (n * n - 1)
            for k in range(1, n // 2):
                v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
            v -= np.cos(n * inner) / (n * n - 1)
        else:
            w[0] = w[-1] = 1.0 / (n * n)
            for k in range(1, (n - 1) // 2 + 1):
                v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
        w[1:-1] = 2.0 * v / n
        return w
    m = n + 1
    theta = np.pi * (2 * np.arange(m) + 1) / (2 * m)
    s = np.zeros(m)
    for k in range(1, m // 2 + 1):
        s += np.cos(2 * k * theta) / (4 * k * k - 1)
    return (2.0 / m) * (1.0 - 2.0 * s)


def interp_matrix(src: ChebGrid, dst: ChebGrid | np.ndarray) -> np.ndarray:
    """Barycentric interpolation from ``src`` nodes to ``dst`` points.

    ``dst`` may be another grid or an arbitrary array of reference
    coordinates (extrapolation outside [-1, 1] is allowed but unwise).
    Exact on polynomials of degree <= ``src.n``.
    """
    t = dst.nodes if isinstance(dst, ChebGrid) else np.asarray(dst, dtype=float)
    x = src.nodes
    w = bary_weights(src)
    diff = t[:, None] - x[None, :]
    exact = np.abs(diff) < 1e-15
    diff[exact] = 1.0
    P = w[None, :] / diff
    P /= P.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if hit.any():
        P[hit] = exact[hit].astype(float)
    return P


def cheb_vandermonde(grid: ChebGrid | np.ndarray, degree: int) -> np.ndarray:
    """Values of T_0..T_degree at the grid nodes (columns)."""
    t = grid.nodes if isinstance(grid, ChebGrid) else np.asarray(grid, dtype=float)
    return np.polynomial.chebyshev.chebvander(t, degree)
