import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions import DegenerateBlockError, DimensionMismatchError, InputError, MissingValueError
from app.nef import MirrorPair, validate
from app.polytope import hull
from app.character_table import build_xi
from app.birat import block_rescale
from app.w_graph import DGraph, build_w
from app.witness_numeric import (
    TorusPoint,
    block_perron_data,
    build_witness,
    character_values,
    evaluate_factors,
    evaluate_W,
    numeric_rank,
    perron,
    verify_in_O1,
    verify_in_O2,
)


def _ones(w, coeff=1.0):
    size = w.rank + w.table.r
    return TorusPoint(coords=np.ones(size), coeffs={i: coeff for i in w.character_ids})


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def test_all_ones_gives_cell_sizes(bn51_w):
    nw = evaluate_W(bn51_w, _ones(bn51_w))
    np.testing.assert_allclose(nw.matrix, [[1, 3], [1, 3]])
    assert nw.norm == 3.0
    assert nw.scale == 3.0


def test_character_values(bn51_w):
    t = TorusPoint(coords=[2.0, 3.0, 5.0, 7.0], coeffs={})
    values = character_values(bn51_w, t)
    for ch, value in zip(bn51_w.table.characters, values):
        expected = 2.0 ** ch.m[0] * 3.0 ** ch.m[1] * (5.0 if ch.a == 0 else 7.0)
        assert value == pytest.approx(expected)


def test_missing_coordinates_and_coefficients(bn51_w):
    with pytest.raises(MissingValueError):
        character_values(bn51_w, TorusPoint(coords=[1.0, 1.0, 1.0], coeffs={}))
    with pytest.raises(MissingValueError):
        evaluate_W(bn51_w, TorusPoint(coords=np.ones(4), coeffs={0: 1.0}))


def test_torus_point_rejects_zero():
    with pytest.raises(InputError):
        TorusPoint(coords=[1.0, 0.0], coeffs={})
    with pytest.raises(DimensionMismatchError):
        TorusPoint(coords=[[1.0]], coeffs={})


def test_factors_at_random_point(bn51_w):
    rng = np.random.default_rng(7)
    coords = rng.uniform(0.5, 2.0, 4) * np.exp(1j * rng.uniform(0, 6.28, 4))
    t = TorusPoint(coords=coords, coeffs={i: complex(rng.normal(), rng.normal()) for i in bn51_w.character_ids})
    diagx, f1, f2 = evaluate_factors(bn51_w, t)
    matrix = evaluate_W(bn51_w, t).matrix
    np.testing.assert_allclose(diagx, t.x(2))
    np.testing.assert_allclose(np.diag(diagx) @ f1, matrix)
    np.testing.assert_allclose(f2 @ np.diag(diagx), matrix)


def _random_point(w, rng):
    size = w.rank + w.table.r
    coords = rng.uniform(0.5, 2.0, size) * np.exp(1j * rng.uniform(0, 2 * np.pi, size))
    coeffs = {i: complex(rng.normal(), rng.normal()) for i in w.character_ids}
    return TorusPoint(coords=coords, coeffs=coeffs)


def _block_factors(w, lambdas):
    factors = np.ones(w.r, dtype=complex)
    for lam, sl in zip(lambdas, w.block_slices()):
        factors[sl] = lam
    return factors


def test_block_rescaling_scales_block_entries(stacked_w):
    rng = np.random.default_rng(11)
    t = _random_point(stacked_w, rng)
    lambdas = [2.0, 0.5 - 1.5j]
    matrix = evaluate_W(stacked_w, t).matrix
    scaled = evaluate_W(stacked_w, block_rescale(stacked_w, t, lambdas)).matrix
    np.testing.assert_allclose(scaled, _block_factors(stacked_w, lambdas)[:, None] * matrix, rtol=1e-12, atol=1e-14)


def test_f1_ignores_fiber_coordinates(stacked_w):
    rng = np.random.default_rng(12)
    t = _random_point(stacked_w, rng)
    coords = t.coords.copy()
    coords[stacked_w.rank:] *= rng.uniform(0.5, 2.0, stacked_w.table.r)
    _, f1, _ = evaluate_factors(stacked_w, t)
    _, moved, _ = evaluate_factors(stacked_w, t.with_coords(coords))
    np.testing.assert_allclose(moved, f1, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("pair_w", ["bn51_w", "stacked_w", "hexagon3_w"])
def test_factor_conjugation_at_random_points(request, pair_w):
    w = request.getfixturevalue(pair_w)
    rng = np.random.default_rng(13)
    for _ in range(20):
        diagx, f1, f2 = evaluate_factors(w, _random_point(w, rng))
        np.testing.assert_allclose(f2, np.diag(diagx) @ f1 @ np.diag(1 / diagx), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("pair_w", ["bn51_w", "stacked_w", "hexagon3_w"])
def test_marginals_are_the_section_components(request, pair_w):
    w = request.getfixturevalue(pair_w)
    rng = np.random.default_rng(14)
    for _ in range(20):
        t = _random_point(w, rng)
        values = character_values(w, t)
        nw = evaluate_W(w, t)
        for k in w.vertices:
            row = sum(t.coeffs[ch.index] * values[ch.index] for ch in w.table.characters if ch.a == k)
            column = sum(
                t.coeffs[ch.index] * values[ch.index] for ch in w.table.characters if ch.b == w.permutation[k]
            )
            assert abs(nw.row_sums[w.position[k]] - row) <= 1e-12 * nw.scale
            assert abs(nw.column_sums[w.position[k]] - column) <= 1e-12 * nw.scale


# ---------------------------------------------------------------------------
# numeric_rank
# ---------------------------------------------------------------------------

def test_rank_of_rank_one_matrix():
    res = numeric_rank([[1, 2], [2, 4]])
    assert res.rank == 1
    np.testing.assert_allclose(res.left_null, [[2 / np.sqrt(5), -1 / np.sqrt(5)]], atol=1e-12)
    np.testing.assert_allclose(res.right_null[:, 0], [2 / np.sqrt(5), -1 / np.sqrt(5)], atol=1e-12)


def test_rank_of_identity_and_zero():
    res = numeric_rank(np.eye(3))
    assert res.rank == 3
    assert res.left_null.shape == (0, 3)
    assert res.right_null.shape == (3, 0)
    assert numeric_rank(np.zeros((2, 2))).rank == 0


def test_rank_tolerance_is_relative():
    m = np.array([[1.0, 0.0], [0.0, 1e-12]])
    assert numeric_rank(m).rank == 1
    assert numeric_rank(m, tol=1e-14).rank == 2
    assert numeric_rank(m * 1e6).rank == 1


def test_rank_of_rectangular_complex_matrix():
    m = np.array([[1, 1j, 0], [1j, -1, 0]])
    res = numeric_rank(m)
    assert res.rank == 1
    np.testing.assert_allclose(res.left_null @ m, 0, atol=1e-12)
    np.testing.assert_allclose(m @ res.right_null, 0, atol=1e-12)
    assert res.right_null.shape == (3, 2)


# ---------------------------------------------------------------------------
# perron
# ---------------------------------------------------------------------------

def test_perron_swap():
    res = perron([[0, 1], [1, 0]])
    assert res.value == pytest.approx(1.0)
    np.testing.assert_allclose(res.right, [1, 1])


def test_perron_sqrt6():
    res = perron([[0, 2], [3, 0]])
    assert res.value == pytest.approx(np.sqrt(6), abs=1e-10)
    np.testing.assert_allclose(res.right, [2 / np.sqrt(6), 1], atol=1e-10)
    np.testing.assert_allclose(res.left, [1, np.sqrt(6) / 3], atol=1e-10)


def test_perron_one_by_one():
    res = perron([[4.0]])
    assert res.value == 4.0 and res.iterations == 0


@pytest.mark.parametrize("a, exc", [([[0, -1], [1, 0]], InputError), ([[1, 2, 3]], DimensionMismatchError)])
def test_perron_rejects(a, exc):
    with pytest.raises(exc):
        perron(a)


def _irreducible(a) -> bool:
    n = len(a)
    arrows = frozenset((i, j) for i in range(n) for j in range(n) if a[i][j])
    return len(list(DGraph(vertices=tuple(range(n)), arrows=arrows).sccs())) == 1


def _perron_root_from_char_poly(a) -> float:
    n = len(a)
    trace = sum(a[i][i] for i in range(n))
    minors = sum(a[i][i] * a[j][j] - a[i][j] * a[j][i] for i, j in itertools.combinations(range(n), 2))
    if n == 2:
        roots = np.roots([1, -trace, minors])
    else:
        det = int(round(np.linalg.det(np.array(a, dtype=float))))
        roots = np.roots([1, -trace, minors, -det])
    return float(roots.real.max())


def _check_perron(a):
    res = perron(a)
    mat = np.array(a, dtype=float)
    assert abs(res.value - _perron_root_from_char_poly(a)) < 1e-9
    assert np.all(res.right > 0) and np.all(res.left > 0)
    bound = 1e-9 * np.linalg.norm(mat)
    assert np.linalg.norm(mat @ res.right - res.value * res.right) <= bound * np.linalg.norm(res.right)
    assert np.linalg.norm(res.left @ mat - res.value * res.left) <= bound * np.linalg.norm(res.left)
    assert res.right.max() == pytest.approx(1.0)


IRREDUCIBLE_2X2 = [
    [list(entries[:2]), list(entries[2:])]
    for entries in itertools.product(range(4), repeat=4)
    if _irreducible([entries[:2], entries[2:]])
]

IRREDUCIBLE_3X3_SUPPORTS = [
    support for support in itertools.product((0, 1), repeat=9)
    if _irreducible([support[0:3], support[3:6], support[6:9]])
]


def test_perron_cyclic_permutation():
    res = perron([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert res.value == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(res.right, [1, 1, 1], atol=1e-10)
    np.testing.assert_allclose(res.left, [1, 1, 1], atol=1e-10)


def test_perron_on_every_irreducible_two_by_two():
    assert len(IRREDUCIBLE_2X2) == 144
    for a in IRREDUCIBLE_2X2:
        _check_perron(a)


@pytest.mark.parametrize("support", IRREDUCIBLE_3X3_SUPPORTS)
@settings(max_examples=10, deadline=None)
@given(weights=st.lists(st.integers(1, 3), min_size=9, max_size=9))
def test_perron_on_every_irreducible_three_by_three_pattern(support, weights):
    flat = [s * wt for s, wt in zip(support, weights)]
    _check_perron([flat[0:3], flat[3:6], flat[6:9]])


def test_irreducible_supports_are_counted():
    # 18 strongly connected loopless digraphs on three labelled vertices, times 2^3 loop choices
    assert len(IRREDUCIBLE_3X3_SUPPORTS) == 144


# ---------------------------------------------------------------------------
# Witness
# ---------------------------------------------------------------------------

def test_bn51_witness(bn51_w):
    t = build_witness(bn51_w)
    np.testing.assert_allclose(evaluate_W(bn51_w, t).matrix, [[-1, 1], [1, -1]], atol=1e-12)
    np.testing.assert_allclose(t.coords, np.ones(4))
    for (a, b), ids in bn51_w.cells.items():
        expected = (-1.0 if a == b else 1.0) / len(ids)
        assert all(t.coeffs[i] == pytest.approx(expected) for i in ids)
    assert t.notes == ()


def test_stacked_witness_is_block_diagonal(stacked_w):
    matrix = evaluate_W(stacked_w, build_witness(stacked_w)).matrix
    block = np.array([[-1, 1], [1, -1]])
    np.testing.assert_allclose(matrix, np.block([[block, np.zeros((2, 2))], [np.zeros((2, 2)), block]]), atol=1e-12)


def test_hexagon_witness(hexagon3_w):
    (data,) = block_perron_data(hexagon3_w)
    assert data.perron.value == pytest.approx(2.0)
    t = build_witness(hexagon3_w)
    assert verify_in_O1(hexagon3_w, t).ok
    assert verify_in_O2(hexagon3_w, t).ok
    assert evaluate_W(hexagon3_w, t).rank().rank == 2


def test_witness_membership(fixture_pairs):
    for name, mp in fixture_pairs.items():
        w = build_w(build_xi(mp))
        t = build_witness(w)
        o1, o2 = verify_in_O1(w, t), verify_in_O2(w, t)
        assert o1.ok, name
        assert o2.ok, name
        assert o1.rank == w.r - w.beta
        assert all(ratio > 0 for ratio in o1.min_entry_ratios)


@pytest.mark.parametrize("pair_w, lambdas", [("bn51_w", [2.0]), ("stacked_w", [2.0, -0.5 + 1j])])
def test_rescaled_witness_stays_in_both_sets(request, pair_w, lambdas):
    w = request.getfixturevalue(pair_w)
    t = build_witness(w)
    rescaled = block_rescale(w, t, lambdas)
    for verify in (verify_in_O1, verify_in_O2):
        before, after = verify(w, t), verify(w, rescaled)
        assert after.ok
        assert after.rank == before.rank == w.r - w.beta


def test_degenerate_block(degenerate_w):
    with pytest.raises(DegenerateBlockError) as exc:
        build_witness(degenerate_w)
    assert exc.value.block == 0


def test_singleton_block_with_several_terms():
    square = hull([(1, 1), (1, -1), (-1, 1), (-1, -1)])
    w = build_w(build_xi(MirrorPair.from_nabla(validate([square]), [(0, 0)], allow_trivial=True)))
    t = build_witness(w)
    assert sorted(t.coeffs.values(), key=lambda c: c.real) == [-4, 1, 1, 1, 1]
    assert len(t.notes) == 1
    assert verify_in_O1(w, t).ok and verify_in_O2(w, t).ok


def test_membership_fails_off_the_locus(bn51_w):
    report = verify_in_O1(bn51_w, _ones(bn51_w))
    assert not report.residual_ok
    assert not report.ok
    assert report.max_residual == pytest.approx(4.0)
