"""Chebyshev collocation solver for the impedance problem on one rectangle.

The leaf problem is

    (Delta + k^2 V) u = G        in the box,
    d_nu u + i k u    = g        on the boundary,

discretized on a tensor Lobatto grid.  PDE rows are collocated at interior
nodes; impedance rows at boundary nodes, where each corner node belongs to
the horizontal side through it (South owns its two corners, North the other
two).  Incoming data ``g`` is given on the Gauss layout and interpolated to
the Lobatto boundary nodes; outgoing data ``d_nu u - i k u`` is formed by
spectral differentiation of the interior solution and interpolated back to
the Gauss nodes.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .domain import BoundaryLayout, Potential, Rect, Side, check_nontrapping
from .operators import BoundaryTrace, ItIOperator
from .spectral import NodeKind, cheb_nodes, diff_matrix, interp_matrix, quad_weights

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-14


class SingularLeafError(RuntimeError):
    """The collocation matrix is singular to working precision."""


class NonTrappingError(ValueError):
    """The potential fails the non-trapping condition."""


@dataclass(frozen=True)
class FieldSolution:
    """Solution on the Lobatto tensor grid plus its traces on the Gauss layout.

    ``values[i, j] = u(x[i], y[j])`` with ``x``, ``y`` descending.
    """

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    u: BoundaryTrace
    dn: BoundaryTrace
    dt: BoundaryTrace
    estimate_constant: float


class LeafBox:
    """One rectangle with its potential, wavenumber and discretization.

    Parameters
    ----------
    rect, V, k
        Geometry, potential and wavenumber (``k > 0``).
    n_int
        Lobatto degree per axis, either one int or ``(nx, ny)``.
    n_b
        Gauss degree per side for boundary data.  Must satisfy
        ``n_b <= min(nx, ny) - 2`` so that the data on every side is seen by
        the impedance rows that side owns.
    adjoint
        Flip the impedance sign, i.e. solve with ``d_nu u - i k u`` as the
        incoming trace.  Used for conjugation checks.
    nontrapping_vertex
        If given, check the non-trapping condition for this corner before
        assembling; ``strict=False`` downgrades a failure to a warning.
    """

    def __init__(self, rect: Rect, V: Potential, k: float, n_int, n_b: int, *,
                 layout: BoundaryLayout | None = None, adjoint: bool = False,
                 nontrapping_vertex=None, strict: bool = True):
        if not k > 0:
            raise ValueError(f"wavenumber must be positive, got {k}")
        nx, ny = (n_int, n_int) if np.isscalar(n_int) else tuple(n_int)
        nx, ny = int(nx), int(ny)
        if layout is None and (n_b < 1 or n_b > min(nx, ny) - 2):
            raise ValueError(f"need 1 <= n_b <= min(n_int) - 2, got n_b={n_b}, n_int=({nx}, {ny})")
        self.rect = rect
        self.V = V
        self.k = float(k)
        self.nx, self.ny = nx, ny
        self.n_b = int(n_b)
        self.sign = -1.0 if adjoint else 1.0
        self.layout = BoundaryLayout.for_rect(rect, self.n_b) if layout is None else layout
        _check_tiling(self.layout, rect, min(nx, ny) - 2)
        if nontrapping_vertex is not None:
            c = check_nontrapping(V, rect, nontrapping_vertex)
            if c <= 0:
                msg = f"{V} is trapping w.r.t. {nontrapping_vertex} on {rect} (min = {c:.3g})"
                if strict:
                    raise NonTrappingError(msg)
                warnings.warn(msg, stacklevel=2)

        gx, gy = cheb_nodes(nx, NodeKind.LOBATTO), cheb_nodes(ny, NodeKind.LOBATTO)
        self.x = gx.physical(rect.x0, rect.x1)
        self.y = gy.physical(rect.y0, rect.y1)
        self.Dx = diff_matrix(gx).scaled(rect.x0, rect.x1)
        self.Dy = diff_matrix(gy).scaled(rect.y0, rect.y1)
        self.wx = quad_weights(gx) * (0.5 * rect.width)
        self.wy = quad_weights(gy) * (0.5 * rect.height)
        self._gx, self._gy = gx, gy

    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.nx + 1, self.ny + 1

    @property
    def size(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    def _flat(self, i, j):
        return i * (self.ny + 1) + j

    @cached_property
    def potential_values(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return self.V.value(X, Y)

    def system_matrix(self) -> np.ndarray:
        """The square collocation matrix (not factorized)."""
        nx, ny, N = self.nx, self.ny, self.size
        ik = self.sign * 1j * self.k
        A = np.zeros((N, N), dtype=complex)
        A4 = A.reshape(nx + 1, ny + 1, nx + 1, ny + 1)
        Dxx, Dyy = self.Dx @ self.Dx, self.Dy @ self.Dy
        for j in range(ny + 1):
            A4[:, j, :, j] += Dxx
        for i in range(nx + 1):
            A4[i, :, i, :] += Dyy
        A[np.diag_indices(N)] += self.k ** 2 * self.potential_values.ravel()

        A4[:, 0, :, :] = 0.0
        A4[:, ny, :, :] = 0.0
        A4[0, :, :, :] = 0.0
        A4[nx, :, :, :] = 0.0
        for i in range(nx + 1):
            A4[i, ny, i, :] = -self.Dy[ny]          # South, owns both its corners
            A4[i, ny, i, ny] += ik
            A4[i, 0, i, :] = self.Dy[0]             # North
            A4[i, 0, i, 0] += ik
        for j in range(1, ny):
            A4[0, j, :, j] = self.Dx[0]             # East
            A4[0, j, 0, j] += ik
            A4[nx, j, :, j] = -self.Dx[nx]          # West
            A4[nx, j, nx, j] += ik
        return A

    @cached_property
    def factorization(self):
        """LU factors of the collocation matrix (computed once)."""
        A = self.system_matrix()
        scale = np.abs(A).max()
        with warnings.catch_warnings():
            # singularity is reported below with context
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(A, overwrite_a=True, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.min() <= PIVOT_TOL * scale:
            raise SingularLeafError(
                f"collocation matrix singular on {self.rect} (k={self.k}): "
                f"min pivot {pivots.min():.3e} vs scale {scale:.3e}")
        return lu, piv

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        lu, piv = self.factorization
        return sla.lu_solve((lu, piv), rhs, check_finite=False)

    # ------------------------------------------------------------------
    # boundary maps

    def _side_nodes(self, side: Side) -> tuple[np.ndarray, object]:
        """Physical parameters of the Lobatto nodes along ``side`` and their grid."""
        return (self.x, self._gx) if side.horizontal else (self.y, self._gy)

    @cached_property
    def incoming_map(self) -> np.ndarray:
        """(N, M) matrix placing Gauss-layout impedance data into the RHS."""
        nx, ny = self.nx, self.ny
        B = np.zeros((nx + 1, ny + 1, self.layout.size))
        rows = {Side.SOUTH: (slice(None), ny), Side.NORTH: (slice(None), 0),
                Side.EAST: (0, slice(1, ny)), Side.WEST: (nx, slice(1, ny))}
        for s in Side:
            t, _ = self._side_nodes(s)
            if not s.horizontal:
                t = t[1:ny]
            B[rows[s]] = _panel_sampling(self.layout, s, t)
        return B.reshape(self.size, -1)

    def _trace_op(self, which: str) -> np.ndarray:
        """(M, N) matrix evaluating a boundary quantity at the Gauss nodes.

        ``which`` is one of ``"u"``, ``"dn"`` (outward normal derivative) or
        ``"dt"`` (derivative along the side's +x / +y tangent).
        """
        nx, ny = self.nx, self.ny
        C = np.zeros((self.layout.size, nx + 1, ny + 1))
        off = self.layout.offsets
        for ip, panel in enumerate(self.layout.panels):
            s = panel.side
            r = slice(off[ip], off[ip + 1])
            lo, hi = self.rect.side_span(s)
            _, grid = self._side_nodes(s)
            P = interp_matrix(grid, 2.0 * (panel.params() - lo) / (hi - lo) - 1.0)
            if s.horizontal:
                jb = ny if s is Side.SOUTH else 0
                if which == "u":
                    C[r, :, jb] = P
                elif which == "dn":
                    sgn = -1.0 if s is Side.SOUTH else 1.0
                    C[r] = sgn * P[:, :, None] * self.Dy[jb][None, None, :]
                else:
                    C[r, :, jb] = P @ self.Dx
            else:
                ib = 0 if s is Side.EAST else nx
                if which == "u":
                    C[r, ib, :] = P
                elif which == "dn":
                    sgn = 1.0 if s is Side.EAST else -1.0
                    C[r] = sgn * self.Dx[ib][None, :, None] * P[:, None, :]
                else:
                    C[r, ib, :] = P @ self.Dy
        return C.reshape(self.layout.size, -1)

    @cached_property
    def dirichlet_trace(self) -> np.ndarray:
        return self._trace_op("u")

    @cached_property
    def neumann_trace(self) -> np.ndarray:
        return self._trace_op("dn")

    @cached_property
    def tangential_trace(self) -> np.ndarray:
        return self._trace_op("dt")

    @cached_property
    def response(self) -> np.ndarray:
        """(N, M) grid values of the solution for each unit incoming datum."""
        return self.solve(self.incoming_map.astype(complex))

    # ------------------------------------------------------------------

    def outgoing(self, U: np.ndarray) -> np.ndarray:
        """Outgoing impedance trace ``d_nu u - i k u`` on the Gauss layout."""
        return self.neumann_trace @ U - self.sign * 1j * self.k * (self.dirichlet_trace @ U)

    def side_samples(self, U: np.ndarray, side: Side, which: str = "u") -> tuple[np.ndarray, np.ndarray]:
        """Lobatto samples of ``u`` or ``d_nu u`` along ``side`` (corners included).

        Returns ``(values, weights)`` with Clenshaw-Curtis weights in the side
        parameter, so ``sum(weights * |values|**2)`` is an L2 norm squared.
        """
        U = np.asarray(U).reshape(self.shape)
        nx, ny = self.nx, self.ny
        if side.horizontal:
            jb = ny if side is Side.SOUTH else 0
            if which == "u":
                vals = U[:, jb]
            else:
                sgn = -1.0 if side is Side.SOUTH else 1.0
                vals = sgn * (U @ self.Dy[jb])
            return vals, self.wx
        ib = 0 if side is Side.EAST else nx
        if which == "u":
            vals = U[ib, :]
        else:
            sgn = 1.0 if side is Side.EAST else -1.0
            vals = sgn * (self.Dx[ib] @ U)
        return vals, self.wy

    def grid_norm(self, values: np.ndarray) -> float:
        """L2 norm over the box by tensor Clenshaw-Curtis quadrature."""
        v = np.asarray(values).reshape(self.shape)
        return float(np.sqrt(np.einsum("i,j,ij->", self.wx, self.wy, np.abs(v) ** 2)))


def _panel_sampling(layout: BoundaryLayout, side: Side, t: np.ndarray) -> np.ndarray:
    """Rows evaluating the panel polynomials of ``side`` at parameters ``t``.

    A node sitting exactly on a junction between two panels takes the mean of
    both one-sided values.
    """
    S = np.zeros((len(t), layout.size))
    off = layout.offsets
    hits = np.zeros(len(t))
    for ip in layout.side_panels(side):
        p = layout.panels[ip]
        eps = 1e-12 * max(1.0, abs(p.length))
        inside = (t >= p.lo - eps) & (t <= p.hi + eps)
        if inside.any():
            ref = 2.0 * (t[inside] - p.lo) / p.length - 1.0
            S[inside, off[ip]:off[ip + 1]] = interp_matrix(p.grid, ref)
            hits[inside] += 1
    if np.any(hits == 0):
        raise ValueError(f"{side.name} side not covered by the layout")
    return S / hits[:, None]


def _check_tiling(layout: BoundaryLayout, rect: Rect, max_degree: int) -> None:
    for s in Side:
        panels = sorted((layout.panels[i] for i in layout.side_panels(s)), key=lambda p: p.lo)
        lo, hi = rect.side_span(s)
        if not panels:
            raise ValueError(f"layout has no panel on the {s.name} side")
        tol = 1e-12 * max(1.0, hi - lo)
        edge = lo
        for p in panels:
            if abs(p.lo - edge) > tol:
                raise ValueError(f"{s.name} panels do not tile [{lo}, {hi}]")
            edge = p.hi
        if abs(edge - hi) > tol:
            raise ValueError(f"{s.name} panels do not tile [{lo}, {hi}]")
        if len(panels) == 1 and panels[0].n > max_degree:
            raise ValueError(f"boundary degree {panels[0].n} exceeds {max_degree} on {s.name}")


def assemble(leaf: LeafBox):
    """Factorize the leaf's collocation system; returns the cached LU pair."""
    return leaf.factorization


def solve_impedance(leaf: LeafBox, g, G=None) -> FieldSolution:
    """Solve the leaf problem for impedance data ``g`` and interior source ``G``.

    ``g`` is a :class:`BoundaryTrace` or an array on the leaf's Gauss layout;
    ``G`` is ``None``, a callable ``G(x, y)`` or an array on the Lobatto grid.
    """
    gv = g.values if isinstance(g, BoundaryTrace) else np.asarray(g, dtype=complex)
    if gv.shape != (leaf.layout.size,):
        raise ValueError(f"boundary data must have length {leaf.layout.size}")
    rhs = leaf.incoming_map @ gv
    G_grid = np.zeros(leaf.shape, dtype=complex)
    if G is not None:
        if callable(G):
            X, Y = np.meshgrid(leaf.x, leaf.y, indexing="ij")
            G_grid = np.asarray(G(X, Y), dtype=complex)
        else:
            G_grid = np.asarray(G, dtype=complex).reshape(leaf.shape)
        src = G_grid.copy()
        src[0, :] = src[-1, :] = 0.0
        src[:, 0] = src[:, -1] = 0.0
        rhs = rhs + src.ravel()
    u = leaf.solve(rhs)
    layout = leaf.layout
    ut = leaf.dirichlet_trace @ u
    dn = leaf.neumann_trace @ u
    dt = leaf.tangential_trace @ u
    sol = FieldSolution(leaf.x, leaf.y, u.reshape(leaf.shape), BoundaryTrace(layout, ut),
                        BoundaryTrace(layout, dn), BoundaryTrace(layout, dt),
                        _elliptic_constant(leaf, u, ut, dn, dt, G_grid, gv))
    log.debug("leaf %s k=%g: elliptic estimate constant %.4g", leaf.rect, leaf.k, sol.estimate_constant)
    return sol


def _elliptic_constant(leaf, u, ut, dn, dt, G_grid, g) -> float:
    k = leaf.k
    U = u.reshape(leaf.shape)
    ux = leaf.Dx @ U
    uy = U @ leaf.Dy.T
    wb = leaf.layout.weights()

    def bnorm(v):
        return np.sqrt(np.sum(wb * np.abs(v) ** 2))

    grad = np.sqrt(leaf.grid_norm(ux) ** 2 + leaf.grid_norm(uy) ** 2)
    lhs = k * leaf.grid_norm(U) + grad + k * bnorm(ut) + bnorm(dn) + bnorm(dt)
    G_int = G_grid[1:-1, 1:-1]
    rhs = np.sqrt(np.einsum("i,j,ij->", leaf.wx[1:-1], leaf.wy[1:-1], np.abs(G_int) ** 2)) + bnorm(g)
    return float(lhs / rhs) if rhs > 0 else 0.0


def control_identity(leaf: LeafBox, U: np.ndarray, side: Side) -> tuple[float, float]:
    """Both sides of ``||k u||^2_{rest} = k Im int_side d_nu u conj(u)``.

    Valid for fields with zero incoming data off ``side``; integrals use the
    Lobatto boundary samples and Clenshaw-Curtis weights.
    """
    k = leaf.k
    lhs = sum(float(np.sum(w * np.abs(k * v) ** 2))
              for v, w in (leaf.side_samples(U, s) for s in Side if s is not side))
    u, w = leaf.side_samples(U, side)
    dn, _ = leaf.side_samples(U, side, "dn")
    return lhs, float(k * np.imag(np.sum(w * dn * np.conj(u))))


def iti_full(leaf: LeafBox) -> ItIOperator:
    """Full-boundary ItI matrix: column j is the outgoing trace for unit datum j."""
    T = leaf.outgoing(leaf.response)
    return ItIOperator(T, leaf.k, leaf.layout, leaf.layout, leaf.rect)


def iti_partial(leaf_or_op, side: Side) -> tuple[ItIOperator, ItIOperator]:
    """Split the full ItI into ``R`` (side -> side) and ``Q`` (rest -> side)."""
    op = iti_full(leaf_or_op) if isinstance(leaf_or_op, LeafBox) else leaf_or_op
    return partial_blocks(op, side)


def partial_blocks(op: ItIOperator, side: Side) -> tuple[ItIOperator, ItIOperator]:
    lay = op.source_layout
    others = tuple(s for s in Side if s is not side)
    a, e = lay.indices(side), lay.indices(others)
    la, le = lay.subset(side), lay.subset(others)
    R = ItIOperator(op.matrix[np.ix_(a, a)], op.k, la, la, op.rect)
    Q = ItIOperator(op.matrix[np.ix_(a, e)], op.k, le, la, op.rect)
    return R, Q
