import pytest
from hypothesis import given, settings, strategies as st

from app.analysis import load_mirror_input, mirror_pair_from_input
from app.character_table import (
    CharacterTable,
    ExtendedCharacter,
    brute_force_permutations,
    build_xi,
    check_assumption1,
    check_assumption2,
    classify_by_pairing,
    degree_matrix,
    structure2_degree,
    y2_basis,
    y2_lattice_basis,
)
from app.exceptions import (
    Assumption1Failure,
    ClassificationConflictError,
    PairingInconsistencyError,
    StructuralInconsistencyError,
)
from app.nef import MirrorPair
from app.polytope import hull
from tests.conftest import PAIR_FIXTURES, fixture_path


def _table_from_cells(r, occupied):
    """Table with one dummy character per occupied cell (a, b)."""
    chars = tuple(
        ExtendedCharacter(index=i, m=(i + 1,), u=tuple(1 if j == a else 0 for j in range(r)), a=a, b=b)
        for i, (a, b) in enumerate(sorted(occupied))
    )
    return CharacterTable(rank=1, r=r, translations=((0,),) * r, characters=chars)


# ---------------------------------------------------------------------------
# build_xi
# ---------------------------------------------------------------------------

def test_bn51_table(bn51_table):
    assert len(bn51_table.characters) == 8
    assert bn51_table.cell_sizes() == [[1, 3], [1, 3]]
    assert (len(bn51_table.row(0)), len(bn51_table.row(1))) == (4, 4)
    assert (len(bn51_table.column(0)), len(bn51_table.column(1))) == (2, 6)


def test_bn51_cell_contents(bn51_table):
    ms = lambda ids: {bn51_table.characters[i].m for i in ids}  # noqa: E731
    assert ms(bn51_table.cell(0, 0)) == {(0, 0)}
    assert ms(bn51_table.cell(0, 1)) == {(-1, 1), (0, 1), (1, 1)}
    assert ms(bn51_table.cell(1, 0)) == {(0, -1)}
    assert ms(bn51_table.cell(1, 1)) == {(0, 0), (-1, 0), (1, 0)}


def test_origin_character(bn51_table):
    ch = bn51_table.origin_character(1)
    assert ch.m == (0, 0) and ch.u == (0, 1)
    assert (ch.a, ch.b) == (1, 1)
    assert ch.exponent == (0, 0, 0, 1)


def test_frame_and_counts(bn51_table):
    records = bn51_table.to_records()
    assert records[0] == {"id": 0, "m": [-1, 1], "u": [1, 0], "a": 1, "b": 2}
    counts = bn51_table.cell_counts()
    assert counts.values.tolist() == [[1, 3], [1, 3]]
    assert list(counts.index) == [1, 2]


def test_exponent_matrix(bn51_table):
    assert bn51_table.exponents.shape == (8, 4)
    assert bn51_table.m_exponents.shape == (8, 2)
    assert bn51_table.exponents[:, 2:].sum() == 8


@pytest.mark.parametrize("name", PAIR_FIXTURES)
def test_classification_agrees_with_pairings(fixture_pairs, name):
    mp = fixture_pairs[name]
    table = build_xi(mp)
    sizes = table.cell_sizes()
    assert sum(map(sum, sizes)) == len(table.characters)
    for ch in table.characters:
        assert classify_by_pairing(ch.m, ch.a, mp.translations) == (ch.a, ch.b)
        deg = structure2_degree(ch.m, ch.u, mp.translations)
        assert deg == tuple(1 if j == ch.b else 0 for j in range(mp.r))


@pytest.mark.parametrize("m, a, expected", [
    ((0, 0), 0, (0, 0)),
    ((1, 1), 0, (0, 1)),
    ((0, -1), 1, (1, 0)),
    ((1, 0), 1, (1, 1)),
])
def test_classify_by_pairing(bn51, m, a, expected):
    assert classify_by_pairing(m, a, bn51.translations) == expected


@pytest.mark.parametrize("m, a", [((0, 2), 0), ((0, 1), 1)])
def test_classify_by_pairing_rejects(bn51, m, a):
    with pytest.raises(PairingInconsistencyError):
        classify_by_pairing(m, a, bn51.translations)


def test_structural_inconsistency():
    parts = [hull([(0, 0), (0, 1)]), hull([(0, 0), (0, -1)])]
    mp = MirrorPair.from_delta(parts, translations=[(0, 2), (0, -2)], delta2_parts=parts)
    with pytest.raises(StructuralInconsistencyError):
        build_xi(mp)


def test_column_conflict_with_delta2():
    parts = [hull([(0, 0), (0, 1)]), hull([(0, 0), (0, -1)])]
    other = [hull([(0, 0), (1, 0)]), hull([(0, 0), (0, -1)])]
    mp = MirrorPair.from_delta(parts, translations=[(0, 0), (0, 0)], delta2_parts=other)
    with pytest.raises(ClassificationConflictError):
        build_xi(mp)


def test_degree_matrix_maps_exponents_to_columns(bn51, bn51_table):
    deg = degree_matrix(bn51.rank, bn51.translations)
    assert [list(map(int, row)) for row in deg] == [[0, -1, 1, 0], [0, 1, 0, 1]]
    for ch in bn51_table.characters:
        image = [int(sum(x * y for x, y in zip(row, ch.exponent))) for row in deg]
        assert image == [1 if j == ch.b else 0 for j in range(2)]


# ---------------------------------------------------------------------------
# Assumptions
# ---------------------------------------------------------------------------

def test_assumption1_identity(bn51_table):
    assert check_assumption1(bn51_table) == (0, 1)


def test_assumption1_needs_a_matching():
    table = _table_from_cells(2, [(0, 1), (1, 0)])
    assert check_assumption1(table) == (1, 0)
    assert brute_force_permutations(table) == [(1, 0)]


def test_assumption1_failure():
    with pytest.raises(Assumption1Failure):
        check_assumption1(_table_from_cells(2, [(0, 0), (1, 0)]))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4).flatmap(
    lambda r: st.tuples(
        st.just(r),
        st.sets(st.tuples(st.integers(0, r - 1), st.integers(0, r - 1)), max_size=r * r),
    )
))
def test_assumption1_against_permutation_scan(case):
    r, occupied = case
    table = _table_from_cells(r, occupied)
    options = brute_force_permutations(table)
    if not options:
        with pytest.raises(Assumption1Failure):
            check_assumption1(table)
    else:
        assert check_assumption1(table) in options


def test_assumption2_bn51(bn51_table):
    assert check_assumption2(bn51_table, 1)
    assert check_assumption2(bn51_table, 2)


def test_assumption2_fails_for_segment():
    mp = mirror_pair_from_input(load_mirror_input(fixture_path("segment-r2")))
    table = build_xi(mp)
    assert not check_assumption2(table, 1)
    assert not check_assumption2(table, 2)


def test_y2_basis(bn51):
    rows = [list(map(int, row)) for row in y2_lattice_basis(bn51)]
    assert rows == [[1, 0, 0, 0], [0, 1, 1, -1]]
    restricted = [list(map(int, row)) for row in y2_basis(2, bn51.translations, active=[0])]
    assert restricted == [[1, 0, 0, 0], [0, 1, 1, 0]]
