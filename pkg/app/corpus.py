"""
Corpus Module
Small generated collection of nef-partitions and known mirror pairs, used
by the `mirrors` command, the fixture script and the property tests.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterator, List, NamedTuple, Sequence, Tuple

from app.exceptions import NefPartitionError, NotReflexiveError
from app.lattice_core import LatticeVector
from app.nef import MirrorPair, NefPartition, Translations, find_translations, validate
from app.polytope import LatticePolytope, hull, is_reflexive, polar_dual

logger = logging.getLogger(__name__)


class CorpusEntry(NamedTuple):
    name: str
    partition: NefPartition


# Polygons whose duals are added by reflexive_polygons().
_BASE_POLYGONS: Dict[str, List[LatticeVector]] = {
    "p2": [(1, 0), (0, 1), (-1, -1)],
    "diamond": [(1, 0), (0, 1), (-1, 0), (0, -1)],
    "hexagon": [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)],
    "pentagon": [(0, -1), (1, 0), (1, 1), (-1, 1), (-1, 0)],
    "triangle": [(0, -1), (-1, 1), (1, 1)],
}

KNOWN_PAIRS: Dict[str, Tuple[int, List[List[LatticeVector]], List[LatticeVector]]] = {
    "bn51": (
        2,
        [[(0, 0), (0, -1)], [(0, 0), (-1, 1), (1, 1)]],
        [(0, 1), (0, -1)],
    ),
    "hexagon-3": (
        2,
        [[(0, 0), (-1, 0)], [(0, 0), (0, -1)], [(0, 0), (1, 1)]],
        [(1, 0), (0, 1), (-1, -1)],
    ),
    "pyramid-r3": (
        3,
        [[(0, 0, 0), (0, 0, -1)], [(0, 0, 0), (1, 0, 1), (-1, 0, 1), (0, 1, 1), (0, -1, 1)]],
        [(0, 0, 1), (0, 0, -1)],
    ),
    "simplex-r3": (
        3,
        [[(0, 0, 0), (0, 0, -1)], [(0, 0, 0), (-1, -1, 1), (1, 0, 1), (0, 1, 1)]],
        [(0, 0, 1), (0, 0, -1)],
    ),
    "hexprism-r3": (
        3,
        [
            [(0, 0, 0), (-1, 0, 0)],
            [(0, 0, 0), (0, -1, 0)],
            [(0, 0, 1), (0, 0, -1), (1, 1, 1), (1, 1, -1)],
        ],
        [(1, 0, 0), (0, 1, 0), (-1, -1, 0)],
    ),
}


def reflexive_polygons() -> Dict[str, LatticePolytope]:
    out: Dict[str, LatticePolytope] = {}
    for name, vertices in _BASE_POLYGONS.items():
        p = hull(vertices)
        out[name] = p
        out[f"{name}-dual"] = polar_dual(p)
    for name, p in out.items():
        if not is_reflexive(p):
            raise NotReflexiveError(f"Corpus polygon {name} is not reflexive.")
    return out


def _set_partitions(items: Sequence, r: int) -> Iterator[List[List]]:
    """Partitions of items into exactly r nonempty blocks, blocks ordered by first item."""
    if r == 0:
        if not items:
            yield []
        return
    if len(items) < r:
        return
    first, rest = items[0], items[1:]
    for smaller in _set_partitions(rest, r - 1):
        yield [[first]] + smaller
    for smaller in _set_partitions(rest, r):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]


def vertex_splits(p: LatticePolytope, r: int) -> List[NefPartition]:
    """
    Nef-partitions conv(0, V_1), ..., conv(0, V_r) from splits of the vertices of p

    Args:
        p: reflexive polytope
        r: number of parts

    Returns:
        Splits passing validate, parts ordered by smallest vertex
    """
    zero = (0,) * p.rank
    found = []
    for classes in _set_partitions(list(p.vertices), r):
        classes = sorted((sorted(cls) for cls in classes), key=lambda cls: cls[0])
        parts = [hull([zero, *cls]) for cls in classes]
        try:
            found.append(validate(parts))
        except NefPartitionError:
            continue
    logger.debug("vertex_splits: %d valid split(s) into %d parts", len(found), r)
    return found


def embed_partition(p: NefPartition, q: NefPartition) -> NefPartition:
    """Parts of p as P x 0 followed by parts of q as 0 x Q."""
    zp, zq = (0,) * p.rank, (0,) * q.rank
    parts = [hull(tuple(v) + zq for v in part.vertices) for part in p.parts]
    parts += [hull(zp + tuple(v) for v in part.vertices) for part in q.parts]
    return validate(parts)


def direct_sum_pair(a: MirrorPair, b: MirrorPair) -> MirrorPair:
    """Mirror pair on the direct sum; translations are padded with zeros."""
    nabla = embed_partition(a.nabla1, b.nabla1)
    za, zb = (0,) * a.rank, (0,) * b.rank
    translations = [tuple(n) + zb for n in a.translations] + [za + tuple(n) for n in b.translations]
    return MirrorPair.from_nabla(nabla, translations)


def known_pair(name: str) -> MirrorPair:
    _, nabla, translations = KNOWN_PAIRS[name]
    return MirrorPair.from_nabla(validate([hull(part) for part in nabla]), translations)


def stacked_pair() -> MirrorPair:
    bn51 = known_pair("bn51")
    return direct_sum_pair(bn51, bn51)


def search_mirrors(p: LatticePolytope, r: int) -> List[Tuple[NefPartition, Translations]]:
    """Every (vertex split, translation tuple) of p with r parts."""
    out = []
    for partition in vertex_splits(p, r):
        out.extend((partition, n) for n in find_translations(partition))
    return out


def generate_corpus() -> List[CorpusEntry]:
    """
    Rank-2 and rank-3 nef-partitions: reflexive polygons, their two-part
    vertex splits, the nabla sides of the known pairs, and products of each
    polygon with the segment [-1, 1]
    """
    entries: List[CorpusEntry] = []
    seen = set()

    def add(name: str, partition: NefPartition):
        key = partition.parts
        if key not in seen:
            seen.add(key)
            entries.append(CorpusEntry(name, partition))

    segment = validate([hull([(-1,), (1,)])])
    for name, polygon in reflexive_polygons().items():
        single = validate([polygon])
        add(name, single)
        for k, split in enumerate(vertex_splits(polygon, 2)):
            add(f"{name}/split{k + 1}", split)
        add(f"{name}x[-1,1]", embed_partition(single, segment))

    for name in KNOWN_PAIRS:
        add(name, known_pair(name).nabla1)

    logger.info("generate_corpus: %d nef-partitions", len(entries))
    return entries
