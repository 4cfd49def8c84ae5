"""
W Graph Module
Handles the r x r cell structure of the superpotential, the directed graph D
(arrow a -> b iff cell (a, b) is nonempty), its blocks and condensation, and
restriction to a subset of blocks.

Vertex labels are the 0-based part indices of the character table. A
WStructure keeps its active vertices in block-contiguous order; every numeric
matrix built from it is indexed in that order.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from app.character_table import CharacterTable, check_assumption1
from app.exceptions import InvalidBlockSelectionError
from app.schemas import ConnectivityReport

logger = logging.getLogger(__name__)

Arrow = Tuple[int, int]


@dataclass(frozen=True)
class DGraph:
    vertices: Tuple[int, ...]
    arrows: frozenset

    def neighbours(self, v: int) -> List[int]:
        return sorted(b for a, b in self.arrows if a == v)

    def has_loop(self, v: int) -> bool:
        return (v, v) in self.arrows

    def sccs(self) -> Iterator[Set[int]]:
        """Strongly connected components, in Tarjan's reverse topological order."""

        def strongconnect(v):
            index[v] = lowlink[v] = next(indices)
            stack.append(v)
            on_stack.add(v)

            for w in self.neighbours(v):
                if w not in index:
                    yield from strongconnect(w)
                    lowlink[v] = min(lowlink[v], lowlink[w])
                elif w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])

            if lowlink[v] == index[v]:
                scc = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.add(w)
                    if w == v:
                        break
                yield scc

        indices = itertools.count()
        stack: List[int] = []
        on_stack: Set[int] = set()
        index: Dict[int, int] = {}
        lowlink: Dict[int, int] = {}
        for v in self.vertices:
            if v not in index:
                yield from strongconnect(v)

    def weak_components(self) -> List[Tuple[int, ...]]:
        """Weakly connected components, each sorted, ordered by smallest vertex."""
        undirected: Dict[int, Set[int]] = {v: set() for v in self.vertices}
        for a, b in self.arrows:
            undirected[a].add(b)
            undirected[b].add(a)

        seen: Set[int] = set()
        components = []
        for v in self.vertices:
            if v in seen:
                continue
            todo, comp = [v], set()
            while todo:
                x = todo.pop()
                if x in comp:
                    continue
                comp.add(x)
                todo.extend(undirected[x] - comp)
            seen |= comp
            components.append(tuple(sorted(comp)))
        return sorted(components)

    def condensation(self) -> Tuple[List[Tuple[int, ...]], List[Arrow]]:
        """
        Quotient of the graph by its strongly connected components

        Returns:
            (components sorted by smallest vertex, arrows between component
            indices; an arrow inside a component becomes a loop)
        """
        comps = sorted(tuple(sorted(c)) for c in self.sccs())
        where = {v: i for i, comp in enumerate(comps) for v in comp}
        arrows = sorted({(where[a], where[b]) for a, b in self.arrows})
        return comps, arrows


@dataclass(frozen=True)
class WStructure:
    """
    Cell structure of one character table

    Attributes:
        table: the character table the cells index into
        cells: nonempty cells (a, b) -> character ids, with structure-2 labels
               relabelled by the assumption-1 permutation
        blocks: weak components of D, each sorted, ordered by smallest vertex
        permutation: structure-2 relabelling found by check_assumption1
        restricted: True for structures produced by fano_restrict
    """

    table: CharacterTable
    cells: Dict[Arrow, Tuple[int, ...]] = field(hash=False)
    blocks: Tuple[Tuple[int, ...], ...]
    permutation: Tuple[int, ...]
    restricted: bool = False

    @property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(v for block in self.blocks for v in block)

    @property
    def r(self) -> int:
        return len(self.vertices)

    @property
    def beta(self) -> int:
        return len(self.blocks)

    @property
    def d(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    @cached_property
    def position(self) -> Dict[int, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def graph(self) -> DGraph:
        return DGraph(vertices=tuple(sorted(self.vertices)), arrows=frozenset(self.cells))

    def cell(self, a: int, b: int) -> Tuple[int, ...]:
        return self.cells.get((a, b), ())

    def block_of(self, v: int) -> int:
        return next(j for j, block in enumerate(self.blocks) if v in block)

    def block_slices(self) -> List[slice]:
        """Positions of each block inside the block-contiguous vertex order."""
        out, start = [], 0
        for size in self.d:
            out.append(slice(start, start + size))
            start += size
        return out

    def row_characters(self, a: int) -> Tuple[int, ...]:
        return tuple(i for b in self.vertices for i in self.cell(a, b))

    def column_characters(self, b: int) -> Tuple[int, ...]:
        return tuple(i for a in self.vertices for i in self.cell(a, b))

    @cached_property
    def character_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(i for ids in self.cells.values() for i in ids))

    def cell_sizes(self) -> List[List[int]]:
        """Cell sizes in block-contiguous order."""
        return [[len(self.cell(a, b)) for b in self.vertices] for a in self.vertices]

    def diagonal_character(self, k: int) -> int:
        """Id of the character used as the k-th factor variable: the origin term when present."""
        ids = self.cell(k, k)
        for i in ids:
            if self.table.characters[i].is_origin and self.table.characters[i].a == k:
                return i
        return ids[0]

    @property
    def translations(self):
        return self.table.translations

    @property
    def rank(self) -> int:
        return self.table.rank


def build_w(ct: CharacterTable) -> WStructure:
    """
    Arrange a character table into cells and blocks

    Args:
        ct: character table

    Returns:
        WStructure over all r vertices
    """
    # Step 1: relabel structure-2 classes so the diagonal is populated
    pi = check_assumption1(ct)
    relabel = {b: a for a, b in enumerate(pi)}

    # Step 2: fill cells
    cells: Dict[Arrow, List[int]] = {}
    for ch in ct.characters:
        cells.setdefault((ch.a, relabel[ch.b]), []).append(ch.index)
    frozen = {key: tuple(ids) for key, ids in sorted(cells.items())}

    # Step 3: blocks from weak components
    graph = DGraph(vertices=tuple(range(ct.r)), arrows=frozenset(frozen))
    blocks = tuple(graph.weak_components())

    w = WStructure(table=ct, cells=frozen, blocks=blocks, permutation=pi)
    logger.info("build_w: r=%d, beta=%d, d=%s", w.r, w.beta, w.d)
    return w


def verify_connectivity(w: WStructure) -> ConnectivityReport:
    """
    Check that every weak component is one strongly connected component
    and that every vertex carries a loop. Violations are reported, not raised.
    """
    graph = w.graph
    sccs = sorted(tuple(sorted(c)) for c in graph.sccs())
    _, condensation = graph.condensation()
    missing = [v for v in graph.vertices if not graph.has_loop(v)]
    split = [j for j, block in enumerate(w.blocks) if not any(set(block) == set(c) for c in sccs)]

    if missing or split:
        logger.warning("verify_connectivity: missing loops %s, split blocks %s", missing, split)

    return ConnectivityReport(
        vertices=[v + 1 for v in graph.vertices],
        arrows=[(a + 1, b + 1) for a, b in sorted(graph.arrows)],
        components=[[v + 1 for v in block] for block in w.blocks],
        sccs=[[v + 1 for v in c] for c in sccs],
        condensation=[(a + 1, b + 1) for a, b in condensation],
        missing_loops=[v + 1 for v in missing],
        split_components=[j + 1 for j in split],
        strongly_connected=not split,
        all_looped=not missing,
    )


def fano_restrict(w: WStructure, blocks: Iterable[int]) -> WStructure:
    """
    Keep only the cells of the selected blocks

    Args:
        w: structure to restrict
        blocks: 0-based block indices forming a nonempty proper subset

    Returns:
        WStructure over the selected blocks; the character table is shared
    """
    chosen = sorted(set(int(j) for j in blocks))
    if not chosen:
        raise InvalidBlockSelectionError("Select at least one block.")
    if any(j < 0 or j >= w.beta for j in chosen):
        raise InvalidBlockSelectionError(f"Block indices must lie in 1..{w.beta}.")
    if len(chosen) == w.beta:
        raise InvalidBlockSelectionError("The selection must be a proper subset of the blocks.")

    kept = tuple(w.blocks[j] for j in chosen)
    active = {v for block in kept for v in block}
    cells = {key: ids for key, ids in w.cells.items() if key[0] in active}
    return WStructure(table=w.table, cells=cells, blocks=kept, permutation=w.permutation, restricted=True)


def quotient_arrows(w: WStructure, classes: Sequence[Sequence[int]]) -> List[Arrow]:
    """Arrows of D pushed to class indices (loops included)."""
    where = {k: i for i, cls in enumerate(classes) for k in cls}
    return sorted({(where[a], where[b]) for a, b in w.cells})


def to_dot(w: WStructure, name: str = "D") -> str:
    """Graphviz text for D; arrows are labelled with cell sizes."""
    lines = [f"digraph {name} {{"]
    for j, block in enumerate(w.blocks):
        lines.append(f"  subgraph cluster_{j + 1} {{")
        lines.append(f'    label="block {j + 1}";')
        for v in block:
            lines.append(f"    {v + 1};")
        lines.append("  }")
    for (a, b), ids in sorted(w.cells.items()):
        lines.append(f'  {a + 1} -> {b + 1} [label="{len(ids)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def block_translation_sums(w: WStructure) -> List[Tuple[int, ...]]:
    """Sum of n_k over each block."""
    return [
        tuple(sum(w.translations[k][i] for k in block) for i in range(w.rank))
        for block in w.blocks
    ]


def restriction_from_flag(w: WStructure, flag: Optional[str]) -> WStructure:
    """Apply a 1-based comma-separated block flag such as "1,3"; None keeps w."""
    if not flag:
        return w
    try:
        picked = [int(x) - 1 for x in flag.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidBlockSelectionError(f"Cannot parse block list {flag!r}.") from exc
    return fano_restrict(w, picked)
