import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from itimerge.domain import BoundaryLayout, Panel, Side
from itimerge.norms import NormKind, gains, gram, min_gain, op_norm, weighted


def _layout(n=6, lo=0.0, hi=2.0):
    return BoundaryLayout((Panel(Side.EAST, lo, hi, n),))


def test_l2_norm_of_polynomial():
    lay = _layout()
    y = lay.panels[0].params()
    G = gram(lay)
    assert math.isclose(G.norm(y ** 2) ** 2, 32 / 5, rel_tol=1e-13)


def test_exact_gram_integrates_interpolant():
    lay = _layout(n=6)
    y = lay.panels[0].params()
    h = y ** 5  # |h|^2 has degree 10, beyond the diagonal rule
    assert math.isclose(gram(lay, exact=True).norm(h) ** 2, 2 ** 11 / 11, rel_tol=1e-12)
    assert not math.isclose(gram(lay).norm(h) ** 2, 2 ** 11 / 11, rel_tol=1e-6)


def test_h1k_norm():
    lay = _layout()
    y = lay.panels[0].params()
    G = gram(lay, NormKind.H1K, k=2.0)
    # int_0^2 4 y^4 + (2y)^2 dy
    assert math.isclose(G.norm(y ** 2) ** 2, 4 * 32 / 5 + 4 * 8 / 3, rel_tol=1e-12)
    with pytest.raises(ValueError):
        gram(lay, "H1k")


def test_scaled_gram():
    lay = _layout()
    h = np.ones(lay.size)
    assert math.isclose(gram(lay).scaled(3.0).norm(h), 3 * math.sqrt(2), rel_tol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.floats(0.1, 20))
def test_gains_match_generalized_eigenproblem(seed, k):
    rng = np.random.default_rng(seed)
    src = BoundaryLayout((Panel(Side.EAST, 0, 1, 5), Panel(Side.EAST, 1, 1.5, 3)))
    tgt = _layout(n=11)
    T = rng.standard_normal((tgt.size, src.size)) + 1j * rng.standard_normal((tgt.size, src.size))
    Gs, Gt = gram(src, "H1k", k), gram(tgt)
    # extremes of (T f)^H Mt (T f) / f^H Ms f; T is tall, so the infimum is positive
    A = T.conj().T @ Gt.matrix @ T
    ev = sla.eigh(A, Gs.matrix, eigvals_only=True)
    assert math.isclose(op_norm(T, Gs, Gt), math.sqrt(ev[-1]), rel_tol=1e-9)
    assert math.isclose(min_gain(T, Gs, Gt), math.sqrt(max(ev[0], 0)), rel_tol=1e-7, abs_tol=1e-9)


def test_power_iteration_agrees(rng):
    lay = _layout(n=9)
    T = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    G, H = gram(lay), gram(lay, "H1k", 3.0)
    f = rng.standard_normal(10) + 0j
    for _ in range(500):
        # gradient of the Rayleigh quotient: M_s^{-1} T^H M_t T f
        f = np.linalg.solve(H.matrix, T.conj().T @ G.matrix @ T @ f)
        f /= H.norm(f)
    assert math.isclose(G.norm(T @ f), op_norm(T, H, G), rel_tol=1e-8)


def test_min_gain_of_wide_operator_is_zero():
    a, b = _layout(n=3), _layout(n=5)
    assert min_gain(np.ones((4, 6)), gram(b), gram(a)) == 0.0


def test_weighted_shape_check():
    lay = _layout(n=3)
    with pytest.raises(ValueError):
        weighted(np.eye(3), gram(lay), gram(lay))


def test_identity_gains_are_one():
    lay = _layout(n=8)
    G = gram(lay)
    np.testing.assert_allclose(gains(np.eye(lay.size), G, G), 1.0, rtol=1e-13)
