"""Discrete L2 and H1_k boundary norms and extremal gains between them.

The frequency-weighted norm ``||k h|| + ||d_tau h||`` is Hilbertized as
``sqrt(||k h||^2 + ||d_tau h||^2)``; the two differ by at most a factor
``sqrt(2)``.  Extremal gains are then singular values of a Cholesky-weighted
matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .domain import BoundaryLayout
from .spectral import NodeKind, cheb_nodes, interp_matrix, quad_weights


class NormKind(str, enum.Enum):
    L2 = "L2"
    H1K = "H1k"


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian positive-definite matrix ``M`` with ``||h||^2 = h^H M h``."""

    matrix: np.ndarray
    kind: NormKind
    layout: BoundaryLayout
    k: float | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower factor ``L`` with ``M = L L^H``."""
        try:
            return np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"{self.kind.value} Gram matrix is not positive definite") from exc

    def norm(self, h: np.ndarray) -> float:
        h = np.asarray(h)
        return float(np.sqrt(max(np.real(np.vdot(h, self.matrix @ h)), 0.0)))

    def scaled(self, factor: float) -> "GramMatrix":
        """Gram of ``factor * ||.||`` (e.g. ``k * L2``)."""
        return GramMatrix(self.matrix * factor ** 2, self.kind, self.layout, self.k)


def gram(layout: BoundaryLayout, kind: NormKind | str = NormKind.L2, k: float | None = None,
         *, exact: bool = False) -> GramMatrix:
    """Gram matrix of the L2 or H1_k norm on the samples of ``layout``.

    Panels are treated independently (block diagonal).  By default the
    quadrature is Fejer's rule on the panel's own nodes, which is diagonal
    but aliases products of high-degree data.  ``exact=True`` instead
    integrates the panel interpolant exactly on a grid of twice the degree.
    """
    kind = NormKind(kind)
    blocks = []
    for p in layout.panels:
        if exact:
            fine = cheb_nodes(2 * p.n + 1, NodeKind.GAUSS)
            P = interp_matrix(p.grid, fine)
            W = P.T @ np.diag(quad_weights(fine) * (0.5 * p.length)) @ P
        else:
            W = np.diag(p.weights())
        if kind is NormKind.L2:
            blocks.append(W)
            continue
        if k is None or not k > 0:
            raise ValueError("the H1_k norm needs k > 0")
        D = p.tangential_diff()
        blocks.append(k ** 2 * W + D.T @ W @ D)
    M = sla.block_diag(*blocks).astype(complex)
    M = 0.5 * (M + M.conj().T)
    if np.linalg.eigvalsh(M).min() <= 0:
        raise np.linalg.LinAlgError("Gram matrix is not positive definite")
    return GramMatrix(M, kind, layout, k)


def weighted(T: np.ndarray, G_src: GramMatrix, G_tgt: GramMatrix) -> np.ndarray:
    """``L_t^H T L_s^{-H}``: its singular values are the gains of ``T``."""
    T = np.asarray(T)
    if T.shape != (G_tgt.size, G_src.size):
        raise ValueError(f"operator shape {T.shape} incompatible with Grams ({G_tgt.size}, {G_src.size})")
    Ls, Lt = G_src.cholesky, G_tgt.cholesky
    # B = Lt^H T Ls^{-H}  <=>  B Ls^H = Lt^H T
    rhs = Lt.conj().T @ T
    return sla.solve_triangular(Ls.conj(), rhs.T, lower=True).T


def gains(T, G_src: GramMatrix, G_tgt: GramMatrix) -> np.ndarray:
    return sla.svdvals(weighted(T, G_src, G_tgt))


def op_norm(T, G_src: GramMatrix, G_tgt: GramMatrix) -> float:
    """``sup ||T f||_tgt / ||f||_src`` over the discrete space."""
    return float(gains(T, G_src, G_tgt)[0])


def min_gain(T, G_src: GramMatrix, G_tgt: GramMatrix) -> float:
    """``inf ||T f||_tgt / ||f||_src`` (zero for rank-deficient ``T``)."""
    s = gains(T, G_src, G_tgt)
    return float(s[-1]) if s.size == min(np.shape(T)) and np.shape(T)[0] >= np.shape(T)[1] else 0.0
