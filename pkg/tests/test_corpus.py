import pytest

from app.character_table import build_xi, check_assumption1, classify_by_pairing
from app.corpus import (
    KNOWN_PAIRS,
    direct_sum_pair,
    known_pair,
    reflexive_polygons,
    search_mirrors,
    vertex_splits,
)
from app.nef import MirrorPair, borisov_dual, coarsen, find_translations
from app.polytope import hull, is_reflexive
from app.w_graph import block_translation_sums, build_w, quotient_arrows, verify_connectivity
from tests.conftest import PAIR_FIXTURES


@pytest.fixture(scope="module")
def corpus_mirrors(corpus):
    """Every mirror pair found over the multi-part corpus entries."""
    pairs = []
    for entry in corpus:
        if entry.partition.r < 2:
            continue
        for n in find_translations(entry.partition):
            pairs.append((entry.name, MirrorPair.from_nabla(entry.partition, n)))
    return pairs


def test_corpus_size(corpus):
    assert len(corpus) >= 20
    assert len({entry.partition.parts for entry in corpus}) == len(corpus)
    assert {entry.partition.rank for entry in corpus} == {2, 3}
    assert all(is_reflexive(entry.partition.total) for entry in corpus)


def test_reflexive_polygons_contain_duals():
    polygons = reflexive_polygons()
    assert polygons["diamond-dual"] == hull([(1, 1), (1, -1), (-1, 1), (-1, -1)])
    assert polygons["pentagon-dual"] == polygons["pentagon"]
    assert len(polygons) == 10


def test_corpus_has_mirrors(corpus_mirrors):
    names = {name for name, _ in corpus_mirrors}
    assert set(KNOWN_PAIRS) <= names
    assert len(corpus_mirrors) >= len(KNOWN_PAIRS)


def test_pairing_classification_over_corpus(corpus_mirrors):
    for name, mp in corpus_mirrors:
        table = build_xi(mp)
        for ch in table.characters:
            assert classify_by_pairing(ch.m, ch.a, mp.translations) == (ch.a, ch.b), name


def test_components_strongly_connected_over_corpus(corpus_mirrors):
    for name, mp in corpus_mirrors:
        w = build_w(build_xi(mp))
        report = verify_connectivity(w)
        assert report.ok, (name, report.missing_loops, report.split_components)
        _, condensed = w.graph.condensation()
        assert condensed == [(j, j) for j in range(w.beta)], name


def test_block_translation_sums_vanish_over_corpus(corpus_mirrors):
    for name, mp in corpus_mirrors:
        w = build_w(build_xi(mp))
        assert all(not any(s) for s in block_translation_sums(w)), name


def test_triangle_split_reproduces_bn51(bn51):
    triangle = reflexive_polygons()["triangle"]
    assert len(vertex_splits(triangle, 2)) == 1
    (found,) = search_mirrors(triangle, 2)
    partition, translations = found
    # splits order their parts by smallest vertex, so the two parts come swapped
    assert partition.parts == bn51.nabla1.parts[::-1]
    assert translations == bn51.translations[::-1]


def test_vertex_splits_hull_back_to_the_polygon():
    for name, polygon in reflexive_polygons().items():
        for split in vertex_splits(polygon, 2):
            assert hull(v for part in split.parts for v in part.vertices) == polygon, name
            assert is_reflexive(split.total), name
    assert vertex_splits(reflexive_polygons()["diamond-dual"], 5) == []


def test_direct_sum_pair(bn51, stacked):
    assert stacked == direct_sum_pair(bn51, bn51)
    assert stacked.rank == 4 and stacked.r == 4
    assert stacked.translations[2] == (0, 0, 0, 1)


def test_rank_six_direct_sum(bn51, stacked):
    mp = direct_sum_pair(stacked, bn51)
    assert mp.rank == 6 and mp.r == 6
    assert len(mp.nabla1.total.vertices) == len(bn51.nabla1.total.vertices) ** 3
    assert len(mp.nabla1.total.facets) == 3 * len(bn51.nabla1.total.facets)

    za, zb = (0, 0), (0, 0, 0, 0)
    expected = [hull(tuple(v) + za for v in part.vertices) for part in stacked.delta1.parts]
    expected += [hull(zb + tuple(v) for v in part.vertices) for part in bn51.delta1.parts]
    assert list(mp.delta1.parts) == expected
    assert borisov_dual(mp.delta1).parts == mp.nabla1.parts

    w = build_w(build_xi(mp))
    assert w.beta == 3 and w.d == (2, 2, 2)
    assert verify_connectivity(w).ok


@pytest.mark.parametrize("name", PAIR_FIXTURES)
def test_coarsen_by_components_and_singletons(fixture_pairs, name):
    mp = fixture_pairs[name]
    w = build_w(build_xi(mp))
    assert check_assumption1(w.table) == tuple(range(mp.r))

    by_blocks = coarsen(mp, [list(block) for block in w.blocks])
    assert by_blocks.trivial
    coarse = build_w(build_xi(by_blocks.pair))
    assert sorted(coarse.cells) == [(j, j) for j in range(w.beta)]
    assert quotient_arrows(w, by_blocks.classes) == sorted(coarse.cells)

    singletons = coarsen(mp, [[k] for k in range(mp.r)])
    assert singletons.pair.translations == mp.translations
    assert build_w(build_xi(singletons.pair)).cells == w.cells


def test_known_pair_names():
    for name in KNOWN_PAIRS:
        assert known_pair(name).verified
