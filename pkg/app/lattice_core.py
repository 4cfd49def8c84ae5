"""
Lattice Core Module
Exact integer and rational linear algebra over free abelian groups.

Matrices are numpy arrays of dtype=object holding Python ints, so nothing
overflows. Lattices are always described by their rows.

Hermite convention (row style): h = u @ m with u unimodular. Pivots move
strictly right going down, every pivot is positive, entries below a pivot are
zero, entries above a pivot lie in [0, pivot), and zero rows come last.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

LatticeVector = Tuple[int, ...]
LatticeMatrix = np.ndarray


def as_lattice_matrix(rows, ncols: Optional[int] = None) -> LatticeMatrix:
    """
    Coerce nested integer sequences into an exact object-dtype matrix

    Args:
        rows: sequence of integer sequences (or an integer ndarray)
        ncols: expected row length; required to shape an empty input

    Returns:
        Fresh (rows x ncols) object array of Python ints
    """
    data = [[int(x) for x in row] for row in rows]
    if not data:
        return np.zeros((0, ncols or 0), dtype=object)

    widths = {len(row) for row in data}
    if len(widths) != 1:
        raise DimensionMismatchError(f"Ragged matrix with row lengths {sorted(widths)}.")
    width = widths.pop()
    if ncols is not None and width != ncols:
        raise DimensionMismatchError(f"Expected vectors of rank {ncols}, got rank {width}.")

    mat = np.empty((len(data), width), dtype=object)
    for i, row in enumerate(data):
        mat[i, :] = row
    return mat


def identity(n: int) -> LatticeMatrix:
    mat = np.zeros((n, n), dtype=object)
    for i in range(n):
        mat[i, i] = 1
    return mat


def _exgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return (g, x, y) with x*a + y*b == g == gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def hermite_form(m) -> Tuple[LatticeMatrix, LatticeMatrix]:
    """
    Row-style Hermite normal form

    Args:
        m: integer matrix (rows are lattice generators)

    Returns:
        (h, u) with u unimodular and u @ m == h
    """
    h = as_lattice_matrix(m)
    nrows, ncols = h.shape
    u = identity(nrows)

    pivot = 0
    for col in range(ncols):
        if pivot == nrows:
            break

        # Fold every entry below the pivot position into it with 2x2
        # determinant-one row operations.
        for i in range(pivot + 1, nrows):
            b = h[i, col]
            if b == 0:
                continue
            a = h[pivot, col]
            g, x, y = _exgcd(a, b)
            p, q = -b // g, a // g
            h[pivot], h[i] = x * h[pivot] + y * h[i], p * h[pivot] + q * h[i]
            u[pivot], u[i] = x * u[pivot] + y * u[i], p * u[pivot] + q * u[i]

        if h[pivot, col] == 0:
            continue
        if h[pivot, col] < 0:
            h[pivot] = -h[pivot]
            u[pivot] = -u[pivot]

        for i in range(pivot):
            q = h[i, col] // h[pivot, col]
            if q:
                h[i] = h[i] - q * h[pivot]
                u[i] = u[i] - q * u[pivot]
        pivot += 1

    return h, u


def _nonzero_rows(h: LatticeMatrix) -> LatticeMatrix:
    keep = [i for i in range(h.shape[0]) if any(x != 0 for x in h[i])]
    return h[keep] if keep else np.zeros((0, h.shape[1]), dtype=object)


def lattice_rank(m, ncols: Optional[int] = None) -> int:
    mat = as_lattice_matrix(m, ncols)
    if mat.shape[0] == 0:
        return 0
    h, _ = hermite_form(mat)
    return _nonzero_rows(h).shape[0]


def row_lattice(m, ncols: Optional[int] = None) -> Tuple[LatticeVector, ...]:
    """Canonical description of the lattice spanned by the rows of m."""
    mat = as_lattice_matrix(m, ncols)
    if mat.shape[0] == 0:
        return ()
    h, _ = hermite_form(mat)
    return tuple(tuple(int(x) for x in row) for row in _nonzero_rows(h))


def integer_kernel(m, ncols: Optional[int] = None) -> LatticeMatrix:
    """
    Basis of the saturated lattice {v : m @ v == 0}

    Args:
        m: integer matrix with ncols columns
        ncols: column count, needed when m has no rows

    Returns:
        Rows forming a basis of the kernel, in Hermite form
    """
    mat = as_lattice_matrix(m, ncols)
    width = mat.shape[1]
    if mat.shape[0] == 0:
        return identity(width)

    h, u = hermite_form(mat.T)
    rank = _nonzero_rows(h).shape[0]
    basis = u[rank:]
    if basis.shape[0] == 0:
        return np.zeros((0, width), dtype=object)
    reduced, _ = hermite_form(basis)
    return reduced


def saturation(m, ncols: Optional[int] = None) -> LatticeMatrix:
    """Basis of (Q-span of the rows) intersected with Z^ncols."""
    mat = as_lattice_matrix(m, ncols)
    width = mat.shape[1]
    return integer_kernel(integer_kernel(mat, width), width)


def generates_full_lattice(
    vectors: Sequence[Sequence[int]],
    ambient: Union[int, Sequence[Sequence[int]], LatticeMatrix],
) -> bool:
    """
    Whether the vectors generate the ambient lattice

    Args:
        vectors: generators, each of the ambient rank
        ambient: an integer k for Z^k, or the rows of a lattice basis

    Returns:
        True iff the subgroup generated by the vectors equals the ambient lattice
    """
    if isinstance(ambient, (int, np.integer)):
        basis = identity(int(ambient))
    else:
        basis = as_lattice_matrix(ambient)
    width = basis.shape[1]
    gens = as_lattice_matrix(vectors, width)
    return row_lattice(gens, width) == row_lattice(basis, width)


def integer_det(m) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [[int(x) for x in row] for row in m]
    n = len(a)
    if any(len(row) != n for row in a):
        raise DimensionMismatchError("Determinant of a non-square matrix.")
    if n == 0:
        return 1

    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def rational_solve(basis, target) -> Optional[Tuple[Fraction, ...]]:
    """
    Solve sum_i c_i * basis[i] == target over the rationals

    Args:
        basis: k row vectors of rank n
        target: vector of rank n

    Returns:
        Coefficients c (Fractions), or None when target is outside the span
    """
    basis = [[Fraction(x) for x in row] for row in basis]
    target = [Fraction(x) for x in target]
    k = len(basis)
    if k == 0:
        return () if all(t == 0 for t in target) else None
    if any(len(row) != len(target) for row in basis):
        raise DimensionMismatchError("Basis and target have different ranks.")

    # One equation per ambient coordinate, augmented with the target.
    rows = [[basis[i][j] for i in range(k)] + [target[j]] for j in range(len(target))]

    pivots = []
    r = 0
    for col in range(k):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1

    if any(row[k] != 0 for row in rows[r:]):
        return None
    coeffs = [Fraction(0)] * k
    for i, col in enumerate(pivots):
        coeffs[col] = rows[i][k]
    return tuple(coeffs)


def primitive(v: Sequence[int]) -> LatticeVector:
    """Divide an integer vector by the gcd of its entries."""
    g = 0
    for x in v:
        g = gcd(g, int(x))
    if g == 0:
        return tuple(int(x) for x in v)
    return tuple(int(x) // g for x in v)


def dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))
