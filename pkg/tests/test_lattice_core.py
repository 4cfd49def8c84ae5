import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions import DimensionMismatchError
from app.lattice_core import (
    as_lattice_matrix,
    generates_full_lattice,
    hermite_form,
    identity,
    integer_det,
    integer_kernel,
    lattice_rank,
    rational_solve,
    saturation,
)

small_matrices = st.integers(1, 4).flatmap(
    lambda rows: st.integers(1, 4).flatmap(
        lambda cols: st.lists(
            st.lists(st.integers(-5, 5), min_size=cols, max_size=cols),
            min_size=rows, max_size=rows,
        )
    )
)


def _rows(m):
    return [[int(x) for x in row] for row in m]


def _is_hermite(h) -> bool:
    """Pivots move right, are positive, have zeros below and reduced entries above."""
    last = -1
    seen_zero = False
    for i, row in enumerate(_rows(h)):
        nz = [j for j, x in enumerate(row) if x]
        if not nz:
            seen_zero = True
            continue
        if seen_zero:
            return False
        col = nz[0]
        if col <= last or row[col] <= 0:
            return False
        if any(_rows(h)[k][col] for k in range(i + 1, len(h))):
            return False
        if any(not 0 <= _rows(h)[k][col] < row[col] for k in range(i)):
            return False
        last = col
    return True


def _in_row_lattice(v, basis) -> bool:
    coeffs = rational_solve(basis, v)
    return coeffs is not None and all(c.denominator == 1 for c in coeffs)


# ---------------------------------------------------------------------------
# hermite_form
# ---------------------------------------------------------------------------

def test_hermite_identity():
    h, u = hermite_form(identity(2))
    assert _rows(h) == [[1, 0], [0, 1]]
    assert _rows(u) == [[1, 0], [0, 1]]


def test_hermite_already_reduced():
    h, u = hermite_form([[2, 0], [0, 2]])
    assert _rows(h) == [[2, 0], [0, 2]]
    assert _rows(u) == [[1, 0], [0, 1]]


def test_hermite_zero_matrix():
    h, u = hermite_form([[0, 0], [0, 0]])
    assert _rows(h) == [[0, 0], [0, 0]]
    assert _rows(u) == [[1, 0], [0, 1]]


def test_hermite_known_form():
    h, _ = hermite_form([[2, 4], [1, 3]])
    assert _rows(h) == [[1, 1], [0, 2]]


@settings(max_examples=200, deadline=None)
@given(small_matrices)
def test_hermite_against_row_operation_oracle(m):
    h, u = hermite_form(m)
    assert _is_hermite(h)
    assert abs(integer_det(u)) == 1
    assert _rows(u.dot(as_lattice_matrix(m))) == _rows(h)

    basis = [row for row in _rows(h) if any(row)]
    for row in m:
        assert _in_row_lattice(row, basis) if basis else not any(row)


@settings(max_examples=100, deadline=None)
@given(small_matrices)
def test_hermite_is_idempotent(m):
    h, _ = hermite_form(m)
    h2, _ = hermite_form(h)
    assert _rows(h2) == _rows(h)


# ---------------------------------------------------------------------------
# integer_kernel
# ---------------------------------------------------------------------------

def test_kernel_rank_one():
    k = _rows(integer_kernel([[1, 1]]))
    assert k in ([[1, -1]], [[-1, 1]])


def test_kernel_of_identity_is_empty():
    assert integer_kernel(identity(3)).shape == (0, 3)


def test_kernel_brute_force_annihilators():
    m = [[2, 4], [1, 2]]
    kernel = _rows(integer_kernel(m))
    assert len(kernel) == 1
    for v in itertools.product(range(-4, 5), repeat=2):
        if all(sum(a * b for a, b in zip(row, v)) == 0 for row in m):
            assert _in_row_lattice(v, kernel)
    assert generates_full_lattice(kernel, saturation(kernel, 2))


@settings(max_examples=200, deadline=None)
@given(small_matrices)
def test_kernel_against_brute_force(m):
    ncols = len(m[0])
    kernel = _rows(integer_kernel(m, ncols))
    assert len(kernel) == ncols - lattice_rank(m, ncols)
    for v in kernel:
        assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in m)
    if ncols <= 3:
        for v in itertools.product(range(-2, 3), repeat=ncols):
            if any(v) and all(sum(a * b for a, b in zip(row, v)) == 0 for row in m):
                assert _in_row_lattice(v, kernel)
    if kernel:
        assert generates_full_lattice(kernel, saturation(kernel, ncols))


# ---------------------------------------------------------------------------
# generates_full_lattice and helpers
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("vectors, ambient, expected", [
    ([(1, 0), (0, 1)], 2, True),
    ([(2, 0), (0, 1)], 2, False),
    ([(-1, 1), (0, 1), (1, 1), (0, 0), (1, 0), (-1, 0)], 2, True),
    ([(1, 1)], [[1, 1]], True),
    ([(2, 2)], [[1, 1]], False),
])
def test_generates_full_lattice(vectors, ambient, expected):
    assert generates_full_lattice(vectors, ambient) is expected


def test_bn51_row_differences_generate():
    points = [(-1, 1), (0, 1), (1, 1), (0, 0)]
    diffs = [tuple(a - b for a, b in zip(p, q)) for p in points for q in points]
    assert generates_full_lattice(diffs, 2)


def test_wrong_rank_rejected():
    with pytest.raises(DimensionMismatchError):
        generates_full_lattice([(1, 0, 0)], 2)


def test_ragged_matrix_rejected():
    with pytest.raises(DimensionMismatchError):
        as_lattice_matrix([[1, 2], [3]])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=n, max_size=n)
))
def test_integer_det_matches_float(m):
    assert integer_det(m) == int(round(np.linalg.det(np.array(m, dtype=float))))


def test_large_entries_do_not_overflow():
    big = 10 ** 30
    h, u = hermite_form([[big, 1], [big + 1, 1]])
    assert abs(integer_det(u)) == 1
    assert _is_hermite(h)
