"""Spectral-collocation impedance-to-impedance (ItI) operators and their merge."""

from .domain import BoundaryLayout, Panel, Potential, Rect, Side, check_nontrapping, parse_potential
from .leaf import LeafBox, NonTrappingError, SingularLeafError, iti_full, iti_partial, solve_impedance
from .merge import (DtnResonanceError, LayoutMismatchError, MergeSingularError, MergeTreeError,
                    build_W, glued_iti, iti_to_dtn, merge_boxes, merge_tree)
from .norms import GramMatrix, NormKind, gram, min_gain, op_norm
from .operators import ItIOperator, read_binary, write_binary
from .oracle import ImpedanceMode, find_lambda, r_n, u_n, v_n, w_n

__version__ = "0.1.0"

__all__ = [
    "BoundaryLayout", "DtnResonanceError", "GramMatrix", "ImpedanceMode", "ItIOperator",
    "LayoutMismatchError", "LeafBox", "MergeSingularError", "MergeTreeError", "NonTrappingError",
    "NormKind", "Panel", "Potential", "Rect", "Side", "SingularLeafError", "build_W",
    "check_nontrapping", "find_lambda", "glued_iti", "gram", "iti_full", "iti_partial",
    "iti_to_dtn", "merge_boxes", "merge_tree", "min_gain", "op_norm", "parse_potential",
    "r_n", "read_binary", "solve_impedance", "u_n", "v_n", "w_n", "write_binary",
]
