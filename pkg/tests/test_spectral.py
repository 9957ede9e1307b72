import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import chebyshev as C

from itimerge.spectral import (NodeKind, bary_weights, cheb_nodes, cheb_vandermonde, diff_matrix,
                               interp_matrix, quad_weights)

KINDS = [NodeKind.LOBATTO, NodeKind.GAUSS]


def test_lobatto_nodes_descending_and_symmetric():
    g = cheb_nodes(6, "lobatto")
    assert g.size == 7
    assert g.nodes[0] == 1.0 and g.nodes[-1] == -1.0
    assert np.all(np.diff(g.nodes) < 0)
    np.testing.assert_array_equal(g.nodes, -g.nodes[::-1])


def test_gauss_nodes_exclude_endpoints():
    g = cheb_nodes(5, NodeKind.GAUSS)
    np.testing.assert_allclose(g.nodes, np.cos(np.pi * (2 * np.arange(6) + 1) / 12), atol=1e-15)
    assert np.abs(g.nodes).max() < 1


@pytest.mark.parametrize("n", [0, -1, 2.5])
def test_bad_degree(n):
    with pytest.raises(ValueError):
        cheb_nodes(n)


def test_physical_mapping_keeps_order():
    g = cheb_nodes(4)
    x = g.physical(2.0, 3.0)
    assert x[0] == 3.0 and x[-1] == 2.0


def test_clenshaw_curtis_small_cases():
    np.testing.assert_allclose(quad_weights(cheb_nodes(2)), [1 / 3, 4 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(quad_weights(cheb_nodes(4)), [1 / 15, 8 / 15, 12 / 15, 8 / 15, 1 / 15],
                               atol=1e-15)
    np.testing.assert_allclose(quad_weights(cheb_nodes(1, "gauss")), [1.0, 1.0], atol=1e-15)


def _poly(coeffs):
    return C.Chebyshev(coeffs)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 40), kind=st.sampled_from(KINDS), seed=st.integers(0, 2**32 - 1))
def test_exact_on_polynomials(n, kind, seed):
    g = cheb_nodes(n, kind)
    coeffs = np.random.default_rng(seed).uniform(-1, 1, n + 1)
    p = _poly(coeffs)
    x = g.nodes
    D = diff_matrix(g).matrix
    scale = np.abs(coeffs).sum() * n * n
    assert np.abs(D @ p(x) - p.deriv()(x)).max() <= 1e-12 * scale
    exact = p.integ(lbnd=-1)(1.0)
    assert abs(quad_weights(g) @ p(x) - exact) <= 1e-12 * np.abs(coeffs).sum()
    t = np.linspace(-1, 1, 37)
    assert np.abs(interp_matrix(g, t) @ p(x) - p(t)).max() <= 1e-12 * np.abs(coeffs).sum()


@pytest.mark.parametrize("kind", KINDS)
def test_diff_rows_annihilate_constants(kind):
    D = diff_matrix(cheb_nodes(48, kind)).matrix
    assert np.abs(D.sum(axis=1)).max() < 1e-11


def test_scaled_derivative():
    g = cheb_nodes(12)
    x = g.physical(1.0, 3.0)
    D = diff_matrix(g).scaled(1.0, 3.0)
    np.testing.assert_allclose(D @ np.sin(x), np.cos(x), atol=1e-10)


def test_interp_reproduces_nodes():
    g = cheb_nodes(7, "gauss")
    np.testing.assert_array_equal(interp_matrix(g, g), np.eye(8))


def test_interp_between_grids():
    src, dst = cheb_nodes(10, "lobatto"), cheb_nodes(9, "gauss")
    f = np.exp(src.nodes)
    np.testing.assert_allclose(interp_matrix(src, dst) @ f, np.exp(dst.nodes), atol=1e-9)


def test_vandermonde_matches_numpy():
    g = cheb_nodes(5)
    np.testing.assert_allclose(cheb_vandermonde(g, 3)[:, 3], 4 * g.nodes ** 3 - 3 * g.nodes, atol=1e-14)


def test_bary_weights_lobatto_halved_ends():
    w = bary_weights(cheb_nodes(4))
    np.testing.assert_array_equal(w, [0.5, -1, 1, -1, 0.5])
