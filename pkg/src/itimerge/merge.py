"""Gluing two boxes along a shared edge and recovering DtN maps.

For children with full ItI matrices ``T_j`` split on the shared edge ``A`` as
``R_j`` (A -> A) and ``Q_j`` (exterior -> A), continuity of ``u`` and
``d_x u`` across ``A`` gives ``f_1 = -g_2`` and ``f_2 = -g_1``.  Eliminating
the outgoing traces,

    f_2 = W (-Q_1 h_1 + R_1 Q_2 h_2),   W = (I - R_1 R_2)^{-1},
    f_1 = -Q_2 h_2 - R_2 f_2,

and the parent ItI collects each child's outgoing data on the exterior.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .domain import BoundaryLayout, Rect, Side
from .leaf import LeafBox, iti_full
from .operators import ItIOperator

log = logging.getLogger(__name__)


class MergeSingularError(ArithmeticError):
    def __init__(self, msg, sigma_min):
        super().__init__(msg)
        self.sigma_min = sigma_min


class DtnResonanceError(ArithmeticError):
    def __init__(self, msg, sigma_min):
        super().__init__(msg)
        self.sigma_min = sigma_min


class LayoutMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class WDiagnostics:
    sigma_min: float
    sigma_max: float

    @property
    def cond(self) -> float:
        return self.sigma_max / self.sigma_min if self.sigma_min > 0 else np.inf


def build_W(R1, R2, tol: float | None = None) -> tuple[np.ndarray, WDiagnostics]:
    """``W = (I - R1 R2)^{-1}`` with singular-value diagnostics.

    ``tol`` defaults to ``1e-12 * ||I - R1 R2||_2``; a smallest singular value
    at or below it raises :class:`MergeSingularError`.
    """
    R1 = np.asarray(getattr(R1, "matrix", R1), dtype=complex)
    R2 = np.asarray(getattr(R2, "matrix", R2), dtype=complex)
    if R1.ndim != 2 or R1.shape[0] != R1.shape[1] or R1.shape != R2.shape:
        raise LayoutMismatchError(f"R1 {R1.shape} and R2 {R2.shape} must be equal square matrices")
    M = np.eye(R1.shape[0]) - R1 @ R2
    s = sla.svdvals(M)
    diag = WDiagnostics(float(s[-1]), float(s[0]))
    thresh = 1e-12 * diag.sigma_max if tol is None else tol
    if diag.sigma_min <= thresh:
        raise MergeSingularError(f"merge singular: sigma_min(I - R1 R2) = {diag.sigma_min:.3e}", diag.sigma_min)
    W = sla.lu_solve(sla.lu_factor(M), np.eye(M.shape[0], dtype=complex))
    return W, diag


@dataclass(frozen=True)
class MergeResult:
    """Outcome of one merge.

    ``F1`` and ``F2`` map the parent's incoming data (ordered as the parent
    layout) to the incoming data ``f_1``, ``f_2`` on the shared edge.
    """

    W: np.ndarray
    parent: ItIOperator
    F1: np.ndarray
    F2: np.ndarray
    diagnostics: WDiagnostics
    shared: tuple[Side, Side]
    # index maps of the children's layouts, kept for re-inserting f_j
    child_index: tuple[dict, dict] = field(repr=False, default=({}, {}))

    @property
    def sigma_min(self) -> float:
        return self.diagnostics.sigma_min

    @property
    def cond(self) -> float:
        return self.diagnostics.cond

    def child_incoming(self, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Full incoming vectors of both children for parent incoming data ``h``."""
        h = np.asarray(h, dtype=complex)
        f1, f2 = self.F1 @ h, self.F2 @ h
        out = []
        for idx, f, n_ext in zip(self.child_index, (f1, f2), (0, len(self.child_index[0]["ext"]))):
            g = np.zeros(idx["size"], dtype=complex)
            g[idx["ext"]] = h[n_ext:n_ext + len(idx["ext"])]
            g[idx["A"]] = f
            out.append(g)
        return out[0], out[1]


def _shared_sides(r1: Rect, r2: Rect, tol: float = 1e-12) -> tuple[Side, Side]:
    if abs(r1.x1 - r2.x0) <= tol and abs(r1.y0 - r2.y0) <= tol and abs(r1.y1 - r2.y1) <= tol:
        return Side.EAST, Side.WEST
    if abs(r1.y1 - r2.y0) <= tol and abs(r1.x0 - r2.x0) <= tol and abs(r1.x1 - r2.x1) <= tol:
        return Side.NORTH, Side.SOUTH
    raise LayoutMismatchError(f"{r1} and {r2} do not share a full edge (first box must be West or South)")


def _edge_indices(layout: BoundaryLayout, side: Side) -> tuple[np.ndarray, list]:
    """Indices of ``side`` samples with panels sorted by increasing parameter."""
    order = sorted(layout.side_panels(side), key=lambda i: layout.panels[i].lo)
    idx = np.concatenate([layout.panel_indices(i) for i in order])
    return idx, [layout.panels[i] for i in order]


def _exterior(layout: BoundaryLayout, skip: Side):
    keep = [i for i in sorted(range(len(layout.panels)), key=lambda i: layout.panels[i].side)
            if layout.panels[i].side is not skip]
    idx = np.concatenate([layout.panel_indices(i) for i in keep])
    return idx, [layout.panels[i] for i in keep]


def merge_boxes(op1: ItIOperator | LeafBox, op2: ItIOperator | LeafBox, *,
                tol: float | None = None) -> MergeResult:
    """Glue two boxes sharing a full edge.

    ``op1`` must lie West of (or South of) ``op2``.  The parent layout lists
    the first child's exterior panels, then the second child's, each grouped
    South, East, North, West with the shared edge omitted.
    """
    T1 = iti_full(op1) if isinstance(op1, LeafBox) else op1
    T2 = iti_full(op2) if isinstance(op2, LeafBox) else op2
    if T1.rect is None or T2.rect is None:
        raise LayoutMismatchError("merging needs operators that know their rectangle")
    if not np.isclose(T1.k, T2.k, rtol=0, atol=1e-14 * max(1.0, T1.k)):
        raise LayoutMismatchError(f"children have different wavenumbers {T1.k} and {T2.k}")
    s1, s2 = _shared_sides(T1.rect, T2.rect)
    a1, p1 = _edge_indices(T1.source_layout, s1)
    a2, p2 = _edge_indices(T2.source_layout, s2)
    if len(p1) != len(p2) or not all(x.matches(y) for x, y in zip(p1, p2)):
        raise LayoutMismatchError("children discretize the shared edge differently")
    e1, q1 = _exterior(T1.source_layout, s1)
    e2, q2 = _exterior(T2.source_layout, s2)

    M1, M2 = T1.matrix, T2.matrix
    R1, Q1 = M1[np.ix_(a1, a1)], M1[np.ix_(a1, e1)]
    R2, Q2 = M2[np.ix_(a2, a2)], M2[np.ix_(a2, e2)]
    W, diag = build_W(R1, R2, tol)
    n1, n2 = len(e1), len(e2)
    F2 = np.hstack([-W @ Q1, W @ (R1 @ Q2)])
    F1 = -R2 @ F2
    F1[:, n1:] -= Q2

    T = sla.block_diag(M1[np.ix_(e1, e1)], M2[np.ix_(e2, e2)]).astype(complex)
    T[:n1] += M1[np.ix_(e1, a1)] @ F1
    T[n1:] += M2[np.ix_(e2, a2)] @ F2
    layout = BoundaryLayout(tuple(q1) + tuple(q2))
    parent = ItIOperator(T, T1.k, layout, layout, T1.rect.union(T2.rect))
    log.debug("merged %s + %s: sigma_min=%.3e cond=%.3e", T1.rect, T2.rect, diag.sigma_min, diag.cond)
    idx = ({"size": T1.source_layout.size, "ext": e1, "A": a1},
           {"size": T2.source_layout.size, "ext": e2, "A": a2})
    return MergeResult(W, parent, F1, F2, diag, (s1, s2), idx)


class MergeTreeError(RuntimeError):
    def __init__(self, msg, position):
        super().__init__(msg)
        self.position = position


def default_plan(rows: int, cols: int):
    """Balanced schedule over a ``rows x cols`` grid of leaf keys ``(row, col)``.

    Splits the longer index range first, so merges alternate between
    vertical and horizontal edges on square tilings.
    """
    def build(r0, r1, c0, c1):
        if r1 - r0 == 1 and c1 - c0 == 1:
            return (r0, c0)
        if c1 - c0 >= r1 - r0:
            cm = (c0 + c1) // 2
            return (build(r0, r1, c0, cm), build(r0, r1, cm, c1))
        rm = (r0 + r1) // 2
        return (build(r0, rm, c0, c1), build(rm, r1, c0, c1))
    return build(0, rows, 0, cols)


def _is_leaf(node) -> bool:
    return isinstance(node, tuple) and len(node) == 2 and all(isinstance(v, (int, np.integer)) for v in node)


@dataclass
class TreeResult:
    operator: ItIOperator
    diagnostics: dict[tuple, WDiagnostics]


def merge_tree(boxes, plan=None, *, threads: int = 1, tol: float | None = None) -> TreeResult:
    """Merge a grid of leaves following a binary schedule.

    ``boxes[row][col]`` holds :class:`LeafBox` or :class:`ItIOperator`
    objects, with ``row`` increasing in ``y`` and ``col`` in ``x``.  ``plan``
    is a nested pair of ``(row, col)`` keys, e.g. ``(((0, 0), (0, 1)), ((1, 0), (1, 1)))``.
    Diagnostics are keyed by tree position (a tuple of 0/1 branch choices).
    """
    grid = [list(r) for r in boxes]
    if plan is None:
        plan = default_plan(len(grid), len(grid[0]))
    diags: dict[tuple, WDiagnostics] = {}
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def leaf_op(key):
        b = grid[key[0]][key[1]]
        return iti_full(b) if isinstance(b, LeafBox) else b

    def visit(node, pos):
        if _is_leaf(node):
            return leaf_op(node)
        left, right = node
        if pool is not None and pos == ():
            fl = pool.submit(visit, left, pos + (0,))
            r = visit(right, pos + (1,))
            lft = fl.result()
        else:
            lft, r = visit(left, pos + (0,)), visit(right, pos + (1,))
        try:
            res = merge_boxes(lft, r, tol=tol)
        except (MergeSingularError, LayoutMismatchError) as exc:
            raise MergeTreeError(f"merge at tree position {pos} failed: {exc}", pos) from exc
        diags[pos] = res.diagnostics
        return res.parent

    try:
        top = visit(plan, ())
    finally:
        if pool is not None:
            pool.shutdown()
    return TreeResult(top, diags)


def iti_to_dtn(R, k: float, tol: float = 1e-10) -> np.ndarray:
    """Dirichlet-to-Neumann matrix ``ik (I + R)(I - R)^{-1}``.

    Raises :class:`DtnResonanceError` if ``sigma_min(I - R) <= tol``.
    """
    R = np.asarray(getattr(R, "matrix", R), dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("DtN conversion needs a square full-boundary operator")
    I = np.eye(R.shape[0])
    M = I - R
    smin = sla.svdvals(M)[-1]
    if smin <= tol:
        raise DtnResonanceError(f"DtN near-resonant: sigma_min(I - R) = {smin:.3e}", smin)
    # X (I - R) = ik (I + R)  <=>  (I - R)^T X^T = ik (I + R)^T
    return sla.solve(M.T, (1j * k * (I + R)).T).T


def glued_iti(leaf1: LeafBox, leaf2: LeafBox) -> ItIOperator:
    """Parent ItI from one monolithic solve of both collocation systems.

    The unknowns are both grids plus the incoming data on the shared edge,
    coupled by ``f_1 = -g_2``, ``f_2 = -g_1``.  No Schur complement in the
    interface variables is formed, so this is an independent route to the
    result of :func:`merge_boxes` for the same leaves.
    """
    s1, s2 = _shared_sides(leaf1.rect, leaf2.rect)
    L1, L2 = leaf1.layout, leaf2.layout
    a1, p1 = _edge_indices(L1, s1)
    a2, p2 = _edge_indices(L2, s2)
    if len(p1) != len(p2) or not all(x.matches(y) for x, y in zip(p1, p2)):
        raise LayoutMismatchError("children discretize the shared edge differently")
    e1, q1 = _exterior(L1, s1)
    e2, q2 = _exterior(L2, s2)
    N1, N2, m = leaf1.size, leaf2.size, len(a1)
    n = N1 + N2 + 2 * m
    K = np.zeros((n, n), dtype=complex)
    B1, B2 = leaf1.incoming_map, leaf2.incoming_map
    K[:N1, :N1] = leaf1.system_matrix()
    K[N1:N1 + N2, N1:N1 + N2] = leaf2.system_matrix()
    f1, f2 = slice(N1 + N2, N1 + N2 + m), slice(N1 + N2 + m, n)
    K[:N1, f1] = -B1[:, a1]
    K[N1:N1 + N2, f2] = -B2[:, a2]
    O1 = leaf1.neumann_trace - 1j * leaf1.k * leaf1.dirichlet_trace
    O2 = leaf2.neumann_trace - 1j * leaf2.k * leaf2.dirichlet_trace
    # f1 + g2 = 0, f2 + g1 = 0
    K[f1, f1] = np.eye(m)
    K[f1, N1:N1 + N2] = O2[a2]
    K[f2, f2] = np.eye(m)
    K[f2, :N1] = O1[a1]
    ne1, ne2 = len(e1), len(e2)
    rhs = np.zeros((n, ne1 + ne2), dtype=complex)
    rhs[:N1, :ne1] = B1[:, e1]
    rhs[N1:N1 + N2, ne1:] = B2[:, e2]
    X = sla.solve(K, rhs)
    T = np.vstack([O1[e1] @ X[:N1], O2[e2] @ X[N1:N1 + N2]])
    layout = BoundaryLayout(tuple(q1) + tuple(q2))
    return ItIOperator(T, leaf1.k, layout, layout, leaf1.rect.union(leaf2.rect))
