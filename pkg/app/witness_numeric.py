"""
Witness Numeric Module
Handles floating-point evaluation of the cell matrix (W), its factorizations,
numerical rank, Perron-Frobenius data and the witness point construction.

A TorusPoint stores rank + r complex coordinates: the M-coordinates z first,
then the fiber coordinates x indexed by the original part labels. A character
(m, e_a) evaluates to prod(z ** m) * x_a.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from app.config import NULL_ENTRY_TOL, PERRON_MAX_ITER, PERRON_TOL, RANK_TOL, RESIDUAL_TOL
from app.exceptions import (
    DegenerateBlockError,
    DimensionMismatchError,
    InputError,
    MissingValueError,
    PerronConvergenceError,
)
from app.schemas import MembershipReport, complex_pair
from app.w_graph import WStructure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TorusPoint:
    coords: np.ndarray
    coeffs: Dict[int, complex] = field(hash=False)
    notes: Tuple[str, ...] = ()
    attempts: int = 1

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=complex)
        if coords.ndim != 1:
            raise DimensionMismatchError("Torus coordinates must be a flat vector.")
        if np.any(coords == 0):
            raise InputError("Torus coordinates must all be nonzero.")
        object.__setattr__(self, "coords", coords)

    def z(self, rank: int) -> np.ndarray:
        return self.coords[:rank]

    def x(self, rank: int) -> np.ndarray:
        return self.coords[rank:]

    def with_coords(self, coords: np.ndarray) -> "TorusPoint":
        return TorusPoint(coords=coords, coeffs=dict(self.coeffs), notes=self.notes, attempts=self.attempts)


class RankResult(NamedTuple):
    rank: int
    left_null: np.ndarray
    right_null: np.ndarray


class PerronResult(NamedTuple):
    value: float
    right: np.ndarray
    left: np.ndarray
    iterations: int


@dataclass(frozen=True)
class NumericW:
    """(W) evaluated at one point, indexed by the structure's vertex order."""

    matrix: np.ndarray
    term_scale: np.ndarray
    vertices: Tuple[int, ...]

    @cached_property
    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @cached_property
    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def norm(self) -> float:
        return float(np.abs(self.matrix).max()) if self.matrix.size else 0.0

    @property
    def scale(self) -> float:
        return float(self.term_scale.max()) if self.term_scale.size else 0.0

    def rank(self, tol: float = RANK_TOL) -> RankResult:
        return numeric_rank(self.matrix, tol=tol, scale=self.scale)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def character_values(w: WStructure, t: TorusPoint) -> np.ndarray:
    """Values of every character of the table at t (coefficients excluded)."""
    exponents = w.table.exponents
    if t.coords.shape[0] != exponents.shape[1]:
        raise MissingValueError(
            f"Point has {t.coords.shape[0]} coordinates, the table needs {exponents.shape[1]}."
        )
    return np.prod(np.power(t.coords[None, :], exponents), axis=1)


def _coefficient(t: TorusPoint, i: int) -> complex:
    try:
        return t.coeffs[i]
    except KeyError:
        raise MissingValueError(f"No coefficient for character {i}.") from None


def evaluate_W(w: WStructure, t: TorusPoint) -> NumericW:
    """
    Evaluate (W) at a torus point

    Args:
        w: cell structure
        t: point carrying a coefficient for every character of w

    Returns:
        NumericW with entry (a, b) = sum of c * chi(t) over cell (a, b)
    """
    values = character_values(w, t)
    r = w.r
    matrix = np.zeros((r, r), dtype=complex)
    scale = np.zeros((r, r))
    for (a, b), ids in w.cells.items():
        i, j = w.position[a], w.position[b]
        terms = np.array([_coefficient(t, k) * values[k] for k in ids])
        matrix[i, j] = terms.sum()
        scale[i, j] = np.abs(terms).sum()
    return NumericW(matrix=matrix, term_scale=scale, vertices=w.vertices)


def evaluate_factors(w: WStructure, t: TorusPoint) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Factor (W) = diag(x) F1 = F2 diag(x)

    Returns:
        (diagx, F1, F2) with diagx_k the value of the k-th diagonal character
    """
    values = character_values(w, t)
    diagx = np.array([values[w.diagonal_character(k)] for k in w.vertices])
    if np.any(diagx == 0):
        raise InputError("A diagonal character vanishes at this point.")
    matrix = evaluate_W(w, t).matrix
    f1 = matrix / diagx[:, None]
    f2 = matrix / diagx[None, :]
    return diagx, f1, f2


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

def _phase_normalize(basis: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest entry is real positive."""
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] != 0:
            out[:, j] = col * (abs(col[k]) / col[k])
    return out


def _null_basis(m: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis (as columns) of {v : m v = 0}, given the rank."""
    ncols = m.shape[1]
    if rank >= ncols:
        return np.zeros((ncols, 0), dtype=complex)
    if m.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, _, vh = np.linalg.svd(m)
    basis = vh[rank:].conj().T
    q, _ = np.linalg.qr(basis)
    return _phase_normalize(q)


def numeric_rank(m, tol: float = RANK_TOL, scale: Optional[float] = None) -> RankResult:
    """
    Numerical rank with orthonormal null bases

    Args:
        m: complex matrix
        tol: relative pivot threshold
        scale: magnitude the threshold is relative to; max |m| when omitted

    Returns:
        RankResult(rank, left null basis as rows (h m = 0), right null basis as
        columns (m v = 0))
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatchError("numeric_rank expects a matrix.")
    nrows, ncols = m.shape
    ref = scale if scale is not None else (float(np.abs(m).max()) if m.size else 0.0)
    threshold = tol * ref

    # Step 1: complete-pivot elimination
    a = m.copy()
    rank = 0
    while rank < min(nrows, ncols):
        sub = np.abs(a[rank:, rank:])
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[i, j] <= threshold or sub[i, j] == 0:
            break
        i, j = i + rank, j + rank
        a[[rank, i]] = a[[i, rank]]
        a[:, [rank, j]] = a[:, [j, rank]]
        pivot = a[rank, rank]
        factors = a[rank + 1:, rank] / pivot
        a[rank + 1:, rank:] -= np.outer(factors, a[rank, rank:])
        rank += 1

    # Step 2: null spaces; the left one comes from the plain transpose
    right = _null_basis(m, rank)
    left = _null_basis(m.T, rank).T
    return RankResult(rank=rank, left_null=left, right_null=right)


def perron(a, tol: float = PERRON_TOL, max_iter: int = PERRON_MAX_ITER) -> PerronResult:
    """
    Perron root and positive eigenvectors of an irreducible nonnegative matrix

    Power iteration runs on a + I, which is primitive whenever a is
    irreducible. Vectors are normalized to max entry 1.

    Args:
        a: nonnegative square matrix
        tol: sup-norm step size at which the iteration stops
        max_iter: iteration cap

    Returns:
        PerronResult(value, right vector v, left vector h, iterations)
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatchError("perron expects a nonempty square matrix.")
    if np.any(a < 0):
        raise InputError("perron expects a nonnegative matrix.")
    if a.shape[0] == 1:
        one = np.ones(1)
        return PerronResult(value=float(a[0, 0]), right=one, left=one, iterations=0)

    def iterate(mat: np.ndarray) -> Tuple[float, np.ndarray, int]:
        shifted = mat + np.eye(mat.shape[0])
        v = np.ones(mat.shape[0])
        for it in range(1, max_iter + 1):
            nxt = shifted @ v
            lam = float(nxt.max())
            nxt = nxt / lam
            if np.abs(nxt - v).max() < tol:
                return lam - 1.0, nxt, it
            v = nxt
        raise PerronConvergenceError(f"Power iteration did not converge in {max_iter} steps.")

    value, right, it_right = iterate(a)
    _, left, it_left = iterate(a.T)
    if np.any(right <= 0) or np.any(left <= 0):
        raise PerronConvergenceError("Perron vectors are not strictly positive; is the matrix irreducible?")
    logger.debug("perron: value %.15g after %d/%d iterations", value, it_right, it_left)
    return PerronResult(value=value, right=right, left=left, iterations=max(it_right, it_left))


# ---------------------------------------------------------------------------
# Witness
# ---------------------------------------------------------------------------

class BlockPerron(NamedTuple):
    adjacency: np.ndarray
    perron: PerronResult


def block_perron_data(w: WStructure) -> List[BlockPerron]:
    """Off-diagonal adjacency of each block with its Perron data."""
    out = []
    for block in w.blocks:
        adjacency = np.array(
            [[1.0 if a != b and w.cell(a, b) else 0.0 for b in block] for a in block]
        )
        out.append(BlockPerron(adjacency=adjacency, perron=perron(adjacency)))
    return out


def build_witness(w: WStructure) -> TorusPoint:
    """
    Witness point of the open set

    Off-diagonal cells get c = 1/|cell| and diagonal cells c = -r_j/|cell|,
    so that after specializing the M-characters (W) becomes A - r_j I per
    block. The M-coordinates come from the right Perron vectors v and the
    fiber coordinates are x = h * v, which makes every row and column sum
    vanish.

    Raises:
        DegenerateBlockError: a singleton block whose diagonal cell holds one
            character
    """
    rank, r_all = w.rank, w.table.r
    coeffs: Dict[int, complex] = {}
    notes: List[str] = []
    v_all = np.ones(r_all)
    x_all = np.ones(r_all)

    for j, (block, data) in enumerate(zip(w.blocks, block_perron_data(w))):
        if len(block) == 1:
            k = block[0]
            ids = w.cell(k, k)
            if len(ids) == 1:
                raise DegenerateBlockError(
                    f"Block {j + 1} is a single vertex whose only term never vanishes on the torus.",
                    block=j,
                )
            q = len(ids)
            for pos, i in enumerate(ids):
                coeffs[i] = complex(-(q - 1) if pos == q - 1 else 1)
            notes.append(f"block {j + 1}: singleton, diagonal coefficients (1, ..., 1, {-(q - 1)}) sum to zero")
            logger.warning("build_witness: block %d is a singleton; using sum-zero coefficients", j + 1)
            continue

        value = data.perron.value
        for a in block:
            for b in block:
                ids = w.cell(a, b)
                for i in ids:
                    coeffs[i] = complex((-value if a == b else 1.0) / len(ids))
        for pos, k in enumerate(block):
            v_all[k] = data.perron.right[pos]
            x_all[k] = data.perron.left[pos] * data.perron.right[pos]

    active = w.vertices
    z = np.array([
        np.prod([v_all[k] ** (-w.translations[k][i]) for k in active]) for i in range(rank)
    ])
    coords = np.concatenate([z, x_all]).astype(complex)
    logger.info("build_witness: %d coefficients, %d block(s)", len(coeffs), w.beta)
    return TorusPoint(coords=coords, coeffs=coeffs, notes=tuple(notes))


# ---------------------------------------------------------------------------
# Membership
# ---------------------------------------------------------------------------

def _membership(w: WStructure, t: TorusPoint, side: int, rank_tol: float,
                residual_tol: float, null_entry_tol: float) -> MembershipReport:
    nw = evaluate_W(w, t)
    sums = nw.row_sums if side == 1 else nw.column_sums
    norm = nw.norm
    max_residual = float(np.abs(sums).max()) if sums.size else 0.0
    residual_ok = max_residual <= residual_tol * norm if norm > 0 else max_residual == 0.0

    rank = nw.rank(rank_tol).rank
    expected = w.r - w.beta

    vectors, ratios = [], []
    for sl in w.block_slices():
        sub = nw.matrix[sl, sl]
        scale = float(nw.term_scale[sl, sl].max())
        res = numeric_rank(sub, tol=rank_tol, scale=scale)
        null = res.left_null if side == 1 else res.right_null.T
        if null.shape[0] != 1:
            vectors.append([])
            ratios.append(0.0)
            continue
        vec = null[0]
        mags = np.abs(vec)
        vectors.append([complex_pair(z) for z in vec])
        ratios.append(float(mags.min() / mags.max()))

    null_ok = all(ratio > null_entry_tol for ratio in ratios)
    return MembershipReport(
        side=side,
        w_norm=norm,
        max_residual=max_residual,
        residual_tol=residual_tol,
        residual_ok=bool(residual_ok),
        rank=rank,
        expected_rank=expected,
        rank_tol=rank_tol,
        rank_ok=rank == expected,
        null_vectors=vectors,
        min_entry_ratios=ratios,
        null_entry_tol=null_entry_tol,
        null_ok=null_ok,
    )


def verify_in_O1(w: WStructure, t: TorusPoint, rank_tol: float = RANK_TOL,
                 residual_tol: float = RESIDUAL_TOL, null_entry_tol: float = NULL_ENTRY_TOL) -> MembershipReport:
    """Row sums vanish, per-block left null vectors have nonzero entries, rank is r - beta."""
    return _membership(w, t, 1, rank_tol, residual_tol, null_entry_tol)


def verify_in_O2(w: WStructure, t: TorusPoint, rank_tol: float = RANK_TOL,
                 residual_tol: float = RESIDUAL_TOL, null_entry_tol: float = NULL_ENTRY_TOL) -> MembershipReport:
    """Column sums vanish, per-block right null vectors have nonzero entries, rank is r - beta."""
    return _membership(w, t, 2, rank_tol, residual_tol, null_entry_tol)
