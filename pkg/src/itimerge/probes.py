"""Random smooth boundary data for inequality and identity spot checks."""

from __future__ import annotations

import numpy as np

from .domain import BoundaryLayout
from .spectral import NodeKind, cheb_nodes, interp_matrix


def smooth_probes(layout: BoundaryLayout, count: int, rng: np.random.Generator,
                  *, taper: int = 3) -> np.ndarray:
    """``(count, layout.size)`` array of random resolvable boundary data.

    Each panel gets complex Gaussian samples, smoothed by one round trip
    through a coarser Gauss grid, then multiplied by ``(1 - t^2)^taper`` in
    the panel's reference coordinate (``taper=0`` disables this).  The
    coarse degree is at most half the panel degree and small enough that
    the tapered product is still a polynomial of the panel degree, so its
    interpolant vanishes exactly at the panel ends.
    """
    out = np.empty((count, layout.size), dtype=complex)
    off = layout.offsets
    for ip, p in enumerate(layout.panels):
        coarse = cheb_nodes(max(1, min(p.n // 2, p.n - 2 * taper)), NodeKind.GAUSS)
        S = interp_matrix(p.grid, coarse.nodes)
        smooth = interp_matrix(coarse, p.grid) @ S
        z = (rng.standard_normal((count, p.size)) + 1j * rng.standard_normal((count, p.size))) / np.sqrt(2)
        out[:, off[ip]:off[ip + 1]] = (z @ smooth.T) * (1.0 - p.grid.nodes ** 2) ** taper
    return out
