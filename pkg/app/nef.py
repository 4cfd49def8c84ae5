"""
Nef-Partition Module
Validation, Borisov duality, multiple-mirror translation search and coarsening.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

from app.exceptions import (
    DimensionMismatchError,
    EmptyPolytopeError,
    InputError,
    InvalidClassesError,
    InvalidTranslationError,
    MissingOriginError,
    NefPartitionError,
    NotReflexiveError,
    ZeroPartError,
)
from app.lattice_core import LatticeVector, dot
from app.polytope import LatticePolytope, hull, is_reflexive, polar_dual, sum_polytopes

logger = logging.getLogger(__name__)

NABLA = "nabla"
DELTA = "delta"

Translations = Tuple[LatticeVector, ...]


@dataclass(frozen=True)
class NefPartition:
    rank: int
    parts: Tuple[LatticePolytope, ...]
    side: str = NABLA

    @property
    def r(self) -> int:
        return len(self.parts)

    @cached_property
    def total(self) -> LatticePolytope:
        """Minkowski sum of the parts."""
        return sum_polytopes(self.parts)

    def to_json(self) -> dict:
        return {"rank": self.rank, "parts": [p.to_json() for p in self.parts]}


def _other_side(side: str) -> str:
    return DELTA if side == NABLA else NABLA


def validate(parts: Sequence[LatticePolytope], side: str = NABLA) -> NefPartition:
    """
    Check the nef-partition clauses

    Args:
        parts: ordered polytopes of a common ambient rank
        side: NABLA or DELTA; zero parts are only rejected on the nabla side

    Returns:
        The validated NefPartition

    Raises:
        MissingOriginError, ZeroPartError, NotReflexiveError
    """
    parts = tuple(parts)
    if not parts:
        raise EmptyPolytopeError("A nef-partition needs at least one part.")
    ranks = {p.rank for p in parts}
    if len(ranks) != 1:
        raise DimensionMismatchError(f"Parts of mixed rank {sorted(ranks)}.")
    rank = ranks.pop()
    zero = (0,) * rank

    for k, part in enumerate(parts):
        if not part.contains(zero):
            raise MissingOriginError(f"Part {k + 1} does not contain the origin.", part=k)
    if side == NABLA:
        for k, part in enumerate(parts):
            if part.is_zero:
                raise ZeroPartError(f"Part {k + 1} is the zero polytope.", part=k)

    partition = NefPartition(rank=rank, parts=parts, side=side)
    if not is_reflexive(partition.total):
        raise NotReflexiveError("The Minkowski sum of the parts is not reflexive.")
    return partition


def borisov_dual(p: NefPartition) -> NefPartition:
    """
    Dual nef-partition

    The k-th dual part is {m : <m, y> >= -delta(k', k) for y in part k'}. Its
    lattice points are filtered from the polar dual of the total, then hulled.
    """
    candidates = polar_dual(p.total).lattice_points
    parts = []
    for k in range(p.r):
        points = [
            m for m in candidates
            if all(
                dot(m, y) >= (-1 if kk == k else 0)
                for kk, part in enumerate(p.parts)
                for y in part.vertices
            )
        ]
        parts.append(hull(points))
    logger.debug("borisov_dual: %d candidates -> parts with %s points", len(candidates),
                 [len(part.lattice_points) for part in parts])
    return NefPartition(rank=p.rank, parts=tuple(parts), side=_other_side(p.side))


def find_translations(p: NefPartition) -> List[Translations]:
    """
    All multiple-mirror translation tuples of a nef-partition

    Args:
        p: validated partition

    Returns:
        Tuples (n_1, ..., n_r), not all zero, with -n_k in part k, summing to
        zero, whose translated family validates. Empty when no mirror exists.
    """
    zero = (0,) * p.rank
    candidates = [sorted(tuple(-x for x in y) for y in part.lattice_points) for part in p.parts]

    found = []
    for combo in itertools.product(*candidates):
        if all(n == zero for n in combo):
            continue
        if any(sum(n[i] for n in combo) != 0 for i in range(p.rank)):
            continue
        translated = [part.translate(n) for part, n in zip(p.parts, combo)]
        try:
            validate(translated, side=p.side)
        except NefPartitionError as exc:
            logger.warning("Translation %s meets the membership and sum conditions but fails validation: %s",
                           combo, exc)
            continue
        found.append(tuple(combo))

    logger.info("find_translations: %d tuple(s) from %d candidate combinations",
                len(found), _product_size(candidates))
    return found


def _product_size(candidates: Sequence[Sequence]) -> int:
    size = 1
    for c in candidates:
        size *= len(c)
    return size


def _translation_between(p: LatticePolytope, q: LatticePolytope) -> LatticeVector:
    v = tuple(a - b for a, b in zip(min(q.vertices), min(p.vertices)))
    if p.translate(v) != q:
        raise InvalidTranslationError(f"{q!r} is not a translate of {p!r}.")
    return v


# ---------------------------------------------------------------------------
# Mirror pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MirrorPair:
    """
    Multiple-mirror data: nabla-side partition, translations and both duals.

    Pairs built from a Delta-side entry whose sum is not reflexive carry no
    nabla data and have verified=False.
    """

    rank: int
    translations: Translations
    delta1: NefPartition
    delta2: NefPartition
    nabla1: Optional[NefPartition] = None
    nabla2: Optional[NefPartition] = None
    verified: bool = True

    @property
    def r(self) -> int:
        return len(self.translations)

    @property
    def is_trivial(self) -> bool:
        return all(not any(n) for n in self.translations)

    @classmethod
    def from_nabla(
        cls,
        nabla1: NefPartition,
        translations: Sequence[Sequence[int]],
        allow_trivial: bool = False,
    ) -> "MirrorPair":
        """
        Build and check a mirror pair from the nabla side

        Args:
            nabla1: validated nabla-side partition
            translations: one vector n_k per part
            allow_trivial: accept all-zero translations (coarsening reports)

        Returns:
            MirrorPair with nabla2 = nabla1 + n and both Borisov duals
        """
        translations = tuple(tuple(int(x) for x in n) for n in translations)
        if len(translations) != nabla1.r:
            raise InvalidTranslationError(f"{len(translations)} translations for {nabla1.r} parts.")
        if any(len(n) != nabla1.rank for n in translations):
            raise DimensionMismatchError(f"Translations must have rank {nabla1.rank}.")
        if any(sum(n[i] for n in translations) != 0 for i in range(nabla1.rank)):
            raise InvalidTranslationError("Translations do not sum to zero.")
        for k, (part, n) in enumerate(zip(nabla1.parts, translations)):
            if not part.contains(tuple(-x for x in n)):
                raise InvalidTranslationError(f"-n_{k + 1} = {tuple(-x for x in n)} is not in part {k + 1}.")
        if not allow_trivial and all(not any(n) for n in translations):
            raise InvalidTranslationError("All translations are zero.")

        try:
            nabla2 = validate([part.translate(n) for part, n in zip(nabla1.parts, translations)])
        except NefPartitionError as exc:
            raise InvalidTranslationError(f"Translated family is not a nef-partition: {exc}") from exc
        if nabla2.total != nabla1.total:
            raise InvalidTranslationError("Translated family changes the Minkowski sum.")

        return cls(
            rank=nabla1.rank,
            translations=translations,
            delta1=borisov_dual(nabla1),
            delta2=borisov_dual(nabla2),
            nabla1=nabla1,
            nabla2=nabla2,
        )

    @classmethod
    def from_delta(
        cls,
        delta1_parts: Sequence[LatticePolytope],
        translations: Optional[Sequence[Sequence[int]]] = None,
        delta2_parts: Optional[Sequence[LatticePolytope]] = None,
    ) -> "MirrorPair":
        """
        Build a mirror pair from Delta-side data

        When the Delta sum is reflexive the nabla side is recovered by duality
        and both Delta families are checked against it. Otherwise an unverified
        pair is returned; it then needs explicit translations.
        """
        delta1_parts = tuple(delta1_parts)
        try:
            delta1 = validate(delta1_parts, side=DELTA)
        except NotReflexiveError as exc:
            logger.warning("Delta-side entry is not a nef-partition (%s); building an unverified pair.", exc)
            return cls._unverified(delta1_parts, translations, delta2_parts)

        nabla1 = borisov_dual(delta1)
        delta2_given = validate(delta2_parts, side=DELTA) if delta2_parts is not None else None
        if translations is None:
            if delta2_given is None:
                raise InputError("A Delta-side entry needs translations or delta2.")
            nabla2 = borisov_dual(delta2_given)
            translations = tuple(_translation_between(a, b) for a, b in zip(nabla1.parts, nabla2.parts))

        pair = cls.from_nabla(nabla1, translations)
        if pair.delta1.parts != delta1.parts:
            raise InvalidTranslationError("delta1 is not reproduced by double Borisov duality.")
        if delta2_given is not None and pair.delta2.parts != delta2_given.parts:
            raise InvalidTranslationError("delta2 does not match the dual of the translated nabla side.")
        return pair

    @classmethod
    def _unverified(cls, delta1_parts, translations, delta2_parts) -> "MirrorPair":
        if translations is None:
            raise InputError("An unverified Delta-side entry must list its translations.")
        rank = delta1_parts[0].rank
        translations = tuple(tuple(int(x) for x in n) for n in translations)
        if len(translations) != len(delta1_parts) or any(len(n) != rank for n in translations):
            raise DimensionMismatchError("Translations do not match the Delta-side parts.")
        if any(sum(n[i] for n in translations) != 0 for i in range(rank)):
            raise InvalidTranslationError("Translations do not sum to zero.")

        if delta2_parts is None:
            if any(any(n) for n in translations):
                raise InputError("An unverified entry with nonzero translations must list delta2.")
            delta2_parts = delta1_parts
        return cls(
            rank=rank,
            translations=translations,
            delta1=NefPartition(rank=rank, parts=delta1_parts, side=DELTA),
            delta2=NefPartition(rank=rank, parts=tuple(delta2_parts), side=DELTA),
            verified=False,
        )

    def to_json(self) -> dict:
        if self.nabla1 is not None:
            return {
                "rank": self.rank,
                "nabla": [p.to_json() for p in self.nabla1.parts],
                "translations": [list(n) for n in self.translations],
            }
        return {
            "rank": self.rank,
            "delta1": [p.to_json() for p in self.delta1.parts],
            "delta2": [p.to_json() for p in self.delta2.parts],
            "translations": [list(n) for n in self.translations],
        }


# ---------------------------------------------------------------------------
# Coarsening
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Coarsening:
    classes: Tuple[Tuple[int, ...], ...]
    pair: MirrorPair

    @property
    def trivial(self) -> bool:
        """All coarse translations vanish; the pair is a plain nef-partition."""
        return self.pair.is_trivial

    @property
    def partition(self) -> NefPartition:
        return self.pair.nabla1

    def class_of(self, k: int) -> int:
        return next(i for i, cls in enumerate(self.classes) if k in cls)


def _check_classes(classes: Sequence[Sequence[int]], r: int) -> Tuple[Tuple[int, ...], ...]:
    normalized = [tuple(sorted(int(k) for k in cls)) for cls in classes]
    if any(not cls for cls in normalized):
        raise InvalidClassesError("Empty class in coarsening.")
    flat = [k for cls in normalized for k in cls]
    if sorted(flat) != list(range(r)):
        raise InvalidClassesError(f"Classes {normalized} are not a set partition of {r} indices.")
    return tuple(sorted(normalized, key=lambda cls: cls[0]))


def coarsen(mp: MirrorPair, classes: Sequence[Sequence[int]]) -> Coarsening:
    """
    Merge parts along a set partition of the indices

    Args:
        mp: verified mirror pair
        classes: set partition of range(mp.r)

    Returns:
        Coarsening whose pair has parts sum(nabla_k) and translations sum(n_k)
        per class; flagged trivial when every coarse translation is zero
    """
    if mp.nabla1 is None:
        raise InputError("Coarsening needs nabla-side data.")
    normalized = _check_classes(classes, mp.r)

    parts = [sum_polytopes([mp.nabla1.parts[k] for k in cls]) for cls in normalized]
    translations = [
        tuple(sum(mp.translations[k][i] for k in cls) for i in range(mp.rank))
        for cls in normalized
    ]
    nabla = validate(parts)
    pair = MirrorPair.from_nabla(nabla, translations, allow_trivial=True)
    if pair.is_trivial:
        logger.info("coarsen: classes %s give all-zero translations", normalized)
    return Coarsening(classes=normalized, pair=pair)
