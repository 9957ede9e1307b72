import struct

import numpy as np
import pytest

from itimerge.domain import BoundaryLayout, Potential, Rect, Side
from itimerge.leaf import LeafBox, iti_full
from itimerge.operators import (MAGIC, BoundaryTrace, ItIOperator, mirror_x, read_binary, read_csv,
                                write_binary, write_csv)


def test_binary_layout(tmp_path):
    m = np.array([[1 + 2j, 3.5], [-1j, 0], [7, 8 - 1j]])
    path = tmp_path / "a.iti"
    write_binary(path, m)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC == b"ITI1"
    assert struct.unpack("<II", raw[4:12]) == (3, 2)
    assert len(raw) == 12 + 16 * 6
    # row-major: second stored value is m[0, 1]
    assert struct.unpack("<dd", raw[28:44]) == (3.5, 0.0)
    np.testing.assert_array_equal(read_binary(path), m)


def test_binary_rejects_garbage(tmp_path):
    p = tmp_path / "bad.iti"
    p.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(ValueError):
        read_binary(p)
    write_binary(p, np.eye(2))
    p.write_bytes(p.read_bytes()[:-1])
    with pytest.raises(ValueError):
        read_binary(p)


def test_csv_round_trip(tmp_path, rng):
    m = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    write_csv(tmp_path / "m.csv", m)
    np.testing.assert_array_equal(read_csv(tmp_path / "m.csv"), m)


def test_operator_validation():
    lay = BoundaryLayout.for_rect(Rect(0, 1, 0, 1), 2)
    with pytest.raises(ValueError):
        ItIOperator(np.zeros((3, 3)), 1.0, lay, lay)
    bad = np.eye(lay.size, dtype=complex)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ItIOperator(bad, 1.0, lay, lay)
    op = ItIOperator(np.eye(lay.size), 1.0, lay, lay)
    assert op.block(Side.EAST, Side.EAST).shape == (3, 3)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 2


def test_trace_from_function():
    r = Rect(0, 1, 0, 1)
    lay = BoundaryLayout.for_rect(r, 3)
    tr = BoundaryTrace.from_function(lay, r, lambda x, y: x + 10 * y)
    np.testing.assert_allclose(tr.on(Side.EAST), 1 + 10 * lay.subset(Side.EAST).points(r)[:, 1])
    with pytest.raises(ValueError):
        BoundaryTrace(lay, np.zeros(3))


def test_mirror_matches_direct_solve():
    V = Potential.constant(1.0)
    left = iti_full(LeafBox(Rect(0, 1, 0, 1), V, 3.0, 20, 12))
    right = iti_full(LeafBox(Rect(1, 2, 0, 1), V, 3.0, 20, 12))
    mirrored = mirror_x(left, 1.0)
    assert mirrored.rect == right.rect
    assert mirrored.source_layout == right.source_layout
    np.testing.assert_allclose(mirrored.matrix, right.matrix, atol=1e-10)
