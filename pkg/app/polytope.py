"""
Lattice Polytope Module
Exact polytope calculus at desk scale: hulls, facets, lattice points,
Minkowski sums, polar duals and reflexivity.

A polytope keeps its V-representation (sorted vertices) and an irredundant
H-representation. Facets are stored as (normal, offset) meaning
<normal, x> >= -offset, with primitive integer normals. Lower-dimensional
polytopes are handled in local coordinates on their affine span:
x = origin + sum_i c_i * span[i], where span is a lattice basis of the
saturated direction lattice, so lattice points correspond to integer c.

Facet candidates come from qhull and are re-derived in integer arithmetic
before they are kept; nothing floating point reaches a LatticePolytope.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from app.config import HULL_PLANE_TOL
from app.exceptions import (
    DimensionMismatchError,
    EmptyPolytopeError,
    NotIntegralError,
    UnboundedDualError,
    UnboundedPolytopeError,
)
from app.lattice_core import (
    LatticeVector,
    dot,
    integer_det,
    integer_kernel,
    lattice_rank,
    primitive,
    rational_solve,
    saturation,
)

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]
Point = Tuple[Number, ...]


class Facet(NamedTuple):
    normal: LatticeVector
    offset: Number

    def value(self, x: Sequence[Number]) -> Number:
        """Slack of x: nonnegative iff x satisfies the inequality."""
        return dot(self.normal, x) + self.offset


def _normalize(x: Number) -> Number:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


@dataclass(frozen=True, eq=False)
class LatticePolytope:
    rank: int
    vertices: Tuple[Point, ...]
    dim: int
    facets: Tuple[Facet, ...]
    origin: Point = ()
    span: Tuple[LatticeVector, ...] = ()
    equations: Tuple[LatticeVector, ...] = ()

    # -------------------------------------------------------------------
    # Identity
    # -------------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatticePolytope):
            return NotImplemented
        return self.rank == other.rank and frozenset(self.vertices) == frozenset(other.vertices)

    def __hash__(self) -> int:
        return hash((self.rank, frozenset(self.vertices)))

    def __repr__(self) -> str:
        return f"LatticePolytope(rank={self.rank}, dim={self.dim}, vertices={list(self.vertices)})"

    # -------------------------------------------------------------------
    # Derived data
    # -------------------------------------------------------------------

    @property
    def is_full_dimensional(self) -> bool:
        return self.dim == self.rank

    @property
    def is_integral(self) -> bool:
        return all(isinstance(x, int) for v in self.vertices for x in v)

    @property
    def is_zero(self) -> bool:
        return self.vertices == (tuple([0] * self.rank),)

    @cached_property
    def lattice_points(self) -> Tuple[LatticeVector, ...]:
        return tuple(lattice_points(self))

    def local_coordinates(self, x: Sequence[Number]) -> Optional[Tuple[Number, ...]]:
        """Coordinates of x on the affine span, or None if x is off the span."""
        if self.is_full_dimensional:
            return tuple(x)
        for eq in self.equations:
            if dot(eq, x) != dot(eq, self.origin):
                return None
        diff = [a - b for a, b in zip(x, self.origin)]
        coeffs = rational_solve(self.span, diff)
        if coeffs is None:
            return None
        return tuple(_normalize(c) for c in coeffs)

    def contains(self, x: Sequence[Number]) -> bool:
        if len(x) != self.rank:
            raise DimensionMismatchError(f"Point of rank {len(x)} tested against rank {self.rank}.")
        local = self.local_coordinates(x)
        if local is None:
            return False
        return all(f.value(local) >= 0 for f in self.facets)

    def translate(self, v: Sequence[int]) -> "LatticePolytope":
        if len(v) != self.rank:
            raise DimensionMismatchError(f"Translation of rank {len(v)} applied to rank {self.rank}.")
        return hull([tuple(a + b for a, b in zip(p, v)) for p in self.vertices])

    def negate(self) -> "LatticePolytope":
        return hull([tuple(-a for a in p) for p in self.vertices])

    def to_json(self) -> List[List[int]]:
        """V-representation as nested integer lists."""
        if not self.is_integral:
            raise NotIntegralError("Only integral polytopes serialize as integer arrays.")
        return [list(v) for v in self.vertices]


# ---------------------------------------------------------------------------
# Hull
# ---------------------------------------------------------------------------

def _hyperplane_normal(points: Sequence[LatticeVector]) -> Optional[LatticeVector]:
    """Primitive normal of the hyperplane through d points in Z^d, or None."""
    base = points[0]
    rows = [[a - b for a, b in zip(p, base)] for p in points[1:]]
    d = len(base)
    normal = []
    for j in range(d):
        minor = [row[:j] + row[j + 1:] for row in rows]
        normal.append((-1) ** j * integer_det(minor))
    if not any(normal):
        return None
    return primitive(normal)


def _supporting_facet(normal: LatticeVector, base: LatticeVector,
                      points: Sequence[LatticeVector]) -> Optional[Facet]:
    """Orient the hyperplane <normal, x> = <normal, base> so all points satisfy it, or None."""
    ref = dot(normal, base)
    above = below = False
    for p in points:
        s = dot(normal, p) - ref
        if s > 0:
            above = True
        elif s < 0:
            below = True
        if above and below:
            return None
    if below:
        return Facet(tuple(-a for a in normal), ref)
    return Facet(normal, -ref)


def _vertex_mask(points: Sequence[LatticeVector], facets: Sequence[Facet], d: int) -> List[bool]:
    mask = []
    for p in points:
        tight = [f.normal for f in facets if f.value(p) == 0]
        mask.append(len(tight) >= d and lattice_rank(tight, d) == d)
    return mask


def _enumerated_facets(points: Sequence[LatticeVector], d: int) -> set:
    """Every supporting hyperplane through d of the points."""
    found = set()
    for combo in itertools.combinations(points, d):
        normal = _hyperplane_normal(combo)
        if normal is None:
            continue
        ref = dot(normal, combo[0])
        neg = tuple(-a for a in normal)
        if Facet(normal, -ref) in found or Facet(neg, ref) in found:
            continue
        facet = _supporting_facet(normal, combo[0], points)
        if facet is not None:
            found.add(facet)
    return found


def _qhull_facets(points: Sequence[LatticeVector], d: int) -> Optional[set]:
    """
    Facets proposed by qhull, each re-derived in exact arithmetic

    Every qhull facet is replaced by the primitive integer normal of the
    points lying on it, and kept only if all points are on one side. Returns
    None when qhull fails or an exact check rejects its output.
    """
    coords = np.array(points, dtype=float)
    try:
        qh = ConvexHull(coords)
    except QhullError as exc:
        logger.warning("hull: qhull rejected %d points in dim %d: %s", len(points), d, exc)
        return None

    tol = HULL_PLANE_TOL * max(1.0, float(np.abs(coords).max()))
    found = set()
    _, first = np.unique(np.round(qh.equations, 9), axis=0, return_index=True)
    for eq in qh.equations[np.sort(first)]:
        on = [p for p, s in zip(points, coords @ eq[:-1] + eq[-1]) if abs(s) <= tol]
        if len(on) < d:
            return None
        diffs = [tuple(a - b for a, b in zip(p, on[0])) for p in on[1:]]
        kernel = integer_kernel(diffs, d)
        if len(kernel) != 1:
            return None
        facet = _supporting_facet(primitive(kernel[0]), on[0], points)
        if facet is None:
            return None
        found.add(facet)

    mask = _vertex_mask(points, tuple(found), d)
    if not all(mask[i] for i in qh.vertices):
        return None
    return found


def _facets_and_vertices(points: Sequence[LatticeVector], d: int) -> Tuple[Tuple[Facet, ...], List[bool]]:
    """Facets of the full-dimensional hull of integer points in Z^d."""
    if d == 1:
        values = [p[0] for p in points]
        lo, hi = min(values), max(values)
        facets = (Facet((1,), -lo), Facet((-1,), hi))
        return facets, [v in (lo, hi) for v in values]

    found = _qhull_facets(points, d)
    if found is None:
        logger.warning("hull: falling back to exact enumeration over %d points in dim %d", len(points), d)
        found = _enumerated_facets(points, d)

    facets = tuple(sorted(found))
    return facets, _vertex_mask(points, facets, d)


@lru_cache(maxsize=4096)
def _hull_cached(points: Tuple[LatticeVector, ...]) -> LatticePolytope:
    n = len(points[0])
    base = points[0]
    diffs = [tuple(a - b for a, b in zip(p, base)) for p in points[1:]]
    d = lattice_rank(diffs, n) if diffs else 0

    if d == 0:
        eqs = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
        return LatticePolytope(rank=n, vertices=(base,), dim=0, facets=(), origin=base, span=(), equations=eqs)

    if d == n:
        origin = tuple([0] * n)
        span = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
        equations: Tuple[LatticeVector, ...] = ()
        local = list(points)
    else:
        origin = base
        equations = tuple(tuple(int(x) for x in row) for row in integer_kernel(diffs, n))
        span = tuple(tuple(int(x) for x in row) for row in saturation(diffs, n))
        local = []
        for p in points:
            coeffs = rational_solve(span, [a - b for a, b in zip(p, base)])
            local.append(tuple(int(c) for c in coeffs))

    facets, mask = _facets_and_vertices(local, d)
    vertices = tuple(sorted(p for p, keep in zip(points, mask) if keep))
    logger.debug("hull: %d points -> %d vertices, %d facets (dim %d)", len(points), len(vertices), len(facets), d)
    return LatticePolytope(
        rank=n, vertices=vertices, dim=d, facets=facets,
        origin=origin, span=span, equations=equations,
    )


def hull(points: Iterable[Sequence[int]]) -> LatticePolytope:
    """
    Convex hull of a finite set of lattice points

    Args:
        points: integer vectors of a common rank

    Returns:
        LatticePolytope with minimal V- and irredundant H-representation
    """
    pts = sorted({tuple(int(x) for x in p) for p in points})
    if not pts:
        raise EmptyPolytopeError("Convex hull of an empty point set.")
    ranks = {len(p) for p in pts}
    if len(ranks) != 1:
        raise DimensionMismatchError(f"Points of mixed rank {sorted(ranks)}.")
    return _hull_cached(tuple(pts))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def lattice_points(p: LatticePolytope) -> List[LatticeVector]:
    """
    Integer points of a polytope, by bounding-box scan

    Args:
        p: a bounded polytope

    Returns:
        Lexicographically sorted lattice points
    """
    if p.dim > 0 and len(p.facets) < p.dim + 1:
        raise UnboundedPolytopeError(f"{len(p.facets)} facets cannot bound a {p.dim}-dimensional polytope.")

    ranges = []
    for i in range(p.rank):
        lo = math.ceil(min(v[i] for v in p.vertices))
        hi = math.floor(max(v[i] for v in p.vertices))
        ranges.append(range(lo, hi + 1))

    return [x for x in itertools.product(*ranges) if p.contains(x)]


def minkowski_sum(p: LatticePolytope, q: LatticePolytope) -> LatticePolytope:
    if p.rank != q.rank:
        raise DimensionMismatchError(f"Minkowski sum of rank {p.rank} and rank {q.rank} polytopes.")
    if not (p.is_integral and q.is_integral):
        raise NotIntegralError("Minkowski sums are taken of lattice polytopes only.")
    return hull(tuple(a + b for a, b in zip(v, w)) for v in p.vertices for w in q.vertices)


def polar_dual(p: LatticePolytope) -> LatticePolytope:
    """
    Polar dual {y : <y, x> >= -1 for all x in p}

    The dual has possibly rational vertices; check `is_integral` on the result.
    """
    if not p.is_full_dimensional or any(f.offset <= 0 for f in p.facets):
        raise UnboundedDualError("The origin is not interior, so the polar dual is unbounded.")

    vertices = tuple(sorted(
        tuple(_normalize(Fraction(a) / Fraction(f.offset)) for a in f.normal)
        for f in p.facets
    ))

    facets = []
    for v in p.vertices:
        denom = 1
        for x in v:
            denom = math.lcm(denom, Fraction(x).denominator)
        scaled = [int(Fraction(x) * denom) for x in v]
        g = 0
        for x in scaled:
            g = math.gcd(g, x)
        normal = tuple(x // g for x in scaled)
        facets.append(Facet(normal, _normalize(Fraction(denom, g))))

    n = p.rank
    return LatticePolytope(
        rank=n,
        vertices=vertices,
        dim=n,
        facets=tuple(sorted(facets)),
        origin=tuple([0] * n),
        span=tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)),
    )


def is_reflexive(p: LatticePolytope) -> bool:
    """Full-dimensional, integral, every facet at lattice distance one from 0."""
    if not p.is_full_dimensional or not p.is_integral:
        return False
    return all(f.offset == 1 for f in p.facets)


def sum_polytopes(parts: Sequence[LatticePolytope]) -> LatticePolytope:
    if not parts:
        raise EmptyPolytopeError("Minkowski sum of no polytopes.")
    total = parts[0]
    for part in parts[1:]:
        total = minkowski_sum(total, part)
    return total


def direct_sum(p: LatticePolytope, q: LatticePolytope) -> Tuple[LatticePolytope, LatticePolytope]:
    """Embed p and q into the rank p.rank + q.rank lattice as p x 0 and 0 x q."""
    zp, zq = (0,) * p.rank, (0,) * q.rank
    return (
        hull(tuple(v) + zq for v in p.vertices),
        hull(zp + tuple(w) for w in q.vertices),
    )
