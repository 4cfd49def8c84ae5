"""
Character Table Module
Builds the extended character set of a mirror pair, classifies every
character into its (structure-1, structure-2) cell, and checks the
matching and generation assumptions.

A character lives in M x Z^r as (m, u) with u = e_a. Its structure-2 class is
read off the degree map deg_j(m, u) = u_j - <m, n_j>, which is a standard unit
vector e_b for every character of a mirror pair.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.exceptions import (
    Assumption1Failure,
    ClassificationConflictError,
    PairingInconsistencyError,
    StructuralInconsistencyError,
)
from app.lattice_core import LatticeMatrix, LatticeVector, as_lattice_matrix, dot, generates_full_lattice
from app.nef import MirrorPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtendedCharacter:
    index: int
    m: LatticeVector
    u: LatticeVector
    a: int
    b: int

    @property
    def exponent(self) -> LatticeVector:
        return self.m + self.u

    @property
    def is_origin(self) -> bool:
        return not any(self.m)


@dataclass(frozen=True)
class CharacterTable:
    rank: int
    r: int
    translations: Tuple[LatticeVector, ...]
    characters: Tuple[ExtendedCharacter, ...]

    @cached_property
    def cells(self) -> Dict[Tuple[int, int], Tuple[int, ...]]:
        """Character ids per nonempty cell (a, b)."""
        out: Dict[Tuple[int, int], List[int]] = {}
        for ch in self.characters:
            out.setdefault((ch.a, ch.b), []).append(ch.index)
        return {key: tuple(ids) for key, ids in sorted(out.items())}

    def cell(self, a: int, b: int) -> Tuple[int, ...]:
        return self.cells.get((a, b), ())

    def row(self, a: int) -> Tuple[int, ...]:
        return tuple(ch.index for ch in self.characters if ch.a == a)

    def column(self, b: int) -> Tuple[int, ...]:
        return tuple(ch.index for ch in self.characters if ch.b == b)

    def cell_sizes(self) -> List[List[int]]:
        return [[len(self.cell(a, b)) for b in range(self.r)] for a in range(self.r)]

    def origin_character(self, k: int) -> ExtendedCharacter:
        return next(ch for ch in self.characters if ch.a == k and ch.is_origin)

    @cached_property
    def exponents(self) -> np.ndarray:
        """(characters x (rank + r)) integer exponent matrix."""
        if not self.characters:
            return np.zeros((0, self.rank + self.r), dtype=np.int64)
        return np.array([ch.exponent for ch in self.characters], dtype=np.int64)

    @cached_property
    def m_exponents(self) -> np.ndarray:
        return self.exponents[:, : self.rank]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"id": ch.index, "m": list(ch.m), "u": list(ch.u), "a": ch.a + 1, "b": ch.b + 1}
                for ch in self.characters
            ],
            columns=["id", "m", "u", "a", "b"],
        )

    def to_records(self) -> List[dict]:
        return self.to_frame().to_dict("records")

    def cell_counts(self) -> pd.DataFrame:
        """r x r cell-size table (rows a, columns b), zero-filled."""
        df = self.to_frame()
        counts = df.groupby(["a", "b"]).size().unstack(fill_value=0)
        labels = range(1, self.r + 1)
        return counts.reindex(index=labels, columns=labels, fill_value=0)


def _unit(k: int, r: int) -> LatticeVector:
    return tuple(1 if j == k else 0 for j in range(r))


def structure2_degree(m: Sequence[int], u: Sequence[int], translations: Sequence[LatticeVector]) -> LatticeVector:
    return tuple(u[j] - dot(m, n) for j, n in enumerate(translations))


def classify_by_pairing(m: Sequence[int], a: int, translations: Sequence[LatticeVector]) -> Tuple[int, int]:
    """
    Structure-2 cell of (m, e_a) read from the pairings with the translations

    Args:
        m: lattice point of the a-th structure-1 part
        a: 0-based structure-1 index
        translations: n_1, ..., n_r

    Returns:
        (a, b) with <m, n_a> = 1 and <m, n_b> = -1, or (a, a) when every
        pairing vanishes
    """
    pairings = [dot(m, n) for n in translations]
    if not any(pairings):
        return a, a
    minus = [j for j, v in enumerate(pairings) if v == -1]
    rest = [v for j, v in enumerate(pairings) if j != a and v != -1]
    if pairings[a] != 1 or len(minus) != 1 or any(rest):
        raise PairingInconsistencyError(f"Pairings {pairings} of {tuple(m)} in part {a + 1} have no (+1, -1) form.")
    return a, minus[0]


def build_xi(mp: MirrorPair) -> CharacterTable:
    """
    Extended characters of a mirror pair with their cell classification

    Structure-2 classes come from the degree map and are cross-checked against
    the lattice points of the independently computed delta2 parts.
    """
    r = mp.r
    characters = []
    for a, part in enumerate(mp.delta1.parts):
        u = _unit(a, r)
        for m in part.lattice_points:
            deg = structure2_degree(m, u, mp.translations)
            if sorted(deg) != [0] * (r - 1) + [1]:
                raise StructuralInconsistencyError(
                    f"Degree {deg} of character {(m, u)} is not a unit vector."
                )
            characters.append(ExtendedCharacter(index=len(characters), m=tuple(m), u=u, a=a, b=deg.index(1)))

    table = CharacterTable(rank=mp.rank, r=r, translations=mp.translations, characters=tuple(characters))

    for b, part in enumerate(mp.delta2.parts):
        column = sorted(table.characters[i].m for i in table.column(b))
        if column != sorted(part.lattice_points):
            raise ClassificationConflictError(
                f"Column {b + 1} holds {len(column)} characters, delta2 part {b + 1} has "
                f"{len(part.lattice_points)} lattice points."
            )

    logger.info("build_xi: %d characters, cell sizes %s", len(characters), table.cell_sizes())
    return table


# ---------------------------------------------------------------------------
# Assumptions
# ---------------------------------------------------------------------------

def check_assumption1(ct: CharacterTable) -> Tuple[int, ...]:
    """
    Matching of structure-1 labels to nonempty structure-2 cells

    Returns:
        pi with cell (k, pi[k]) nonempty for every k; the identity when it works

    Raises:
        Assumption1Failure when no perfect matching exists
    """
    r = ct.r
    if all(ct.cell(k, k) for k in range(r)):
        return tuple(range(r))

    # Kuhn's augmenting paths on the bipartite cell-occupancy graph.
    match_col: Dict[int, int] = {}

    def augment(a: int, seen: set) -> bool:
        for b in range(r):
            if b in seen or not ct.cell(a, b):
                continue
            seen.add(b)
            if b not in match_col or augment(match_col[b], seen):
                match_col[b] = a
                return True
        return False

    for a in range(r):
        if not augment(a, set()):
            raise Assumption1Failure(f"No perfect matching: row {a + 1} cannot be matched.")
    pi = [0] * r
    for b, a in match_col.items():
        pi[a] = b
    return tuple(pi)


def _differences(vectors: Sequence[LatticeVector]) -> List[LatticeVector]:
    if not vectors:
        return []
    base = vectors[0]
    return [tuple(x - y for x, y in zip(v, base)) for v in vectors[1:]]


def check_assumption2(ct: CharacterTable, side: int) -> bool:
    """
    Whether differences within each Lambda-set generate the relevant lattice

    Args:
        ct: character table
        side: 1 for M (differences within rows), 2 for the Y2 lattice
              (differences within columns)
    """
    diffs: List[LatticeVector] = []
    if side == 1:
        for a in range(ct.r):
            diffs.extend(_differences([ct.characters[i].m for i in ct.row(a)]))
        return generates_full_lattice(diffs, ct.rank) if diffs else ct.rank == 0

    basis = y2_basis(ct.rank, ct.translations)
    for b in range(ct.r):
        diffs.extend(_differences([ct.characters[i].exponent for i in ct.column(b)]))
    if not diffs:
        return ct.rank == 0
    return generates_full_lattice(diffs, basis)


def y2_basis(rank: int, translations: Sequence[LatticeVector], active: Optional[Sequence[int]] = None) -> LatticeMatrix:
    """
    Graph basis (e_i, (<e_i, n_j>)_j) of the structure-2 character lattice

    Args:
        rank: rank of M
        translations: n_1, ..., n_r
        active: vertices whose u-coordinates are kept; the rest are zeroed

    Returns:
        rank x (rank + r) exact matrix
    """
    r = len(translations)
    keep = set(range(r)) if active is None else set(active)
    rows = []
    for i in range(rank):
        u = [translations[j][i] if j in keep else 0 for j in range(r)]
        rows.append([1 if c == i else 0 for c in range(rank)] + u)
    return as_lattice_matrix(rows, rank + r)


def y2_lattice_basis(mp: MirrorPair) -> LatticeMatrix:
    """Basis of {(m, u) : u_j = <m, n_j>}, the kernel of the structure-2 degree."""
    return y2_basis(mp.rank, mp.translations)


def degree_matrix(rank: int, translations: Sequence[LatticeVector]) -> LatticeMatrix:
    """r x (rank + r) matrix of the structure-2 degree map."""
    r = len(translations)
    rows = [[-x for x in translations[j]] + [1 if c == j else 0 for c in range(r)] for j in range(r)]
    return as_lattice_matrix(rows, rank + r)


def brute_force_permutations(ct: CharacterTable) -> List[Tuple[int, ...]]:
    """Every permutation pi with all cells (k, pi[k]) nonempty."""
    return [
        pi for pi in itertools.permutations(range(ct.r))
        if all(ct.cell(k, pi[k]) for k in range(ct.r))
    ]
