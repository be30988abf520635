import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from Resources.Bruhat import (
    CellCoordinates,
    RecursionEntries,
    b_product,
    bruhat_factorize,
    bruhat_phase_residue,
    left_correction_exponent,
    path_formula_entries,
    random_cell,
    recursion_entries,
)
from Resources.Errors import CellMembershipError, CompositionError, PreconditionError
from Resources.PadicArith import RationalMatrix
from Resources.WeylElement import factorization_expression, make_admissible

TWO_BLOCKS = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2), (1, 4), (4, 1)]
THREE_BLOCKS = [(1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 2)]


def test_cell_coordinates_inverse_conventions(w0):
    exact = CellCoordinates.from_sequences(w0, 3, [1, 0, 2, 0, 1, 0], [2, 5, 4, 7, 1, 3])
    assert exact.d[(2, 2)] == Fraction(1, 2)
    assert exact.d[(2, 3)] == 0
    modular = CellCoordinates.from_sequences(w0, 3, [1, 0, 2, 0, 1, 0], [2, 5, 4, 7, 1, 3], inverse_exponent=2)
    assert modular.d[(2, 2)] == 5


def test_cell_coordinates_require_units():
    with pytest.raises(PreconditionError):
        CellCoordinates.from_sequences(make_admissible((1, 1)), 3, [1], [3])


def test_gl2_factorization():
    w = make_admissible((1, 1))
    cell = CellCoordinates.from_sequences(w, 3, [2], [2])
    triple = bruhat_factorize(b_product(w, cell), w)
    assert triple.product() == b_product(w, cell)
    assert triple.L.is_upper_unipotent() and triple.R.is_upper_unipotent()
    assert triple.L[1, 2] == Fraction(1, 18)
    assert triple.R[1, 2] == Fraction(2, 9)
    assert triple.C[1, 2] == Fraction(-1, 9)
    assert triple.C[2, 1] == 9


def test_factorization_rejects_other_cells():
    w = make_admissible((1, 1))
    with pytest.raises(CellMembershipError):
        bruhat_factorize(RationalMatrix.identity(2), w)


@pytest.mark.parametrize("blocks", TWO_BLOCKS)
@pytest.mark.parametrize("p", [2, 3])
def test_path_formulas_match_direct_factorization(blocks, p):
    w = make_admissible(blocks)
    rng = random.Random(hash((blocks, p)) & 0xFFFF)
    for _ in range(10):
        cell = random_cell(w, p, 3, rng)
        assert path_formula_entries(w, cell) == bruhat_factorize(b_product(w, cell), w)


@pytest.mark.parametrize("blocks", THREE_BLOCKS)
@pytest.mark.parametrize("p", [2, 3])
def test_recursion_matches_direct_factorization(blocks, p):
    w = make_admissible(blocks)
    rng = random.Random(sum(blocks) * p)
    for _ in range(10):
        cell = random_cell(w, p, 3, rng)
        direct = RecursionEntries.from_triple(bruhat_factorize(b_product(w, cell), w))
        assert recursion_entries(w, cell).mismatches(direct) == []


def test_recursion_needs_three_blocks(w0):
    with pytest.raises(CompositionError):
        recursion_entries(w0, random_cell(w0, 2, 1, random.Random(0)))


@pytest.mark.parametrize("blocks", [(2, 2, 2), (1, 2, 1, 1)])
def test_factorization_word_stays_in_the_cell(blocks):
    w = make_admissible(blocks)
    cell = random_cell(w, 2, 2, random.Random(3))
    M = b_product(w, cell, factorization_expression(w))
    assert bruhat_factorize(M, w).product() == M


def test_left_correction_exponent():
    m = {(1, 3): 2, (2, 3): 1, (1, 4): 0, (2, 4): 3}
    assert left_correction_exponent(m, 1, 3, 4) == (1 - 2) + (3 - 0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(TWO_BLOCKS[:6]), st.sampled_from([2, 3]), st.integers(min_value=0, max_value=2 ** 16))
def test_random_cells_factor_back(blocks, p, seed):
    w = make_admissible(blocks)
    cell = random_cell(w, p, 2, random.Random(seed))
    M = b_product(w, cell)
    triple = bruhat_factorize(M, w)
    assert triple.product() == M
    assert path_formula_entries(w, cell) == triple


def test_phase_residue_gl2():
    # Kl phase of GL_2 at a = c / p^m: psi d / p^m + psi' c / p^m
    w = make_admissible((1, 1))
    cell = CellCoordinates.from_sequences(w, 3, [1], [2])
    assert bruhat_phase_residue(w, cell, [1], [0], 1) == 2
    assert bruhat_phase_residue(w, cell, [0], [1], 1) == 2
    assert bruhat_phase_residue(w, cell, [1], [1], 1) == 1


@pytest.mark.slow
@pytest.mark.parametrize("dimension", [2, 3, 4, 5])
def test_path_formulas_exhaustive_seeds(dimension):
    rng = random.Random(dimension)
    for k in range(1, dimension):
        w = make_admissible((k, dimension - k))
        for p in (2, 3):
            for _ in range(200):
                cell = random_cell(w, p, 3, rng)
                assert path_formula_entries(w, cell) == bruhat_factorize(b_product(w, cell), w)


@pytest.mark.slow
@pytest.mark.parametrize("blocks", [(1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 2), (3, 1, 1), (1, 3, 1),
                                    (1, 1, 3), (2, 2, 1), (2, 1, 2), (1, 2, 2)])
def test_recursion_exhaustive_seeds(blocks):
    w = make_admissible(blocks)
    rng = random.Random(len(blocks) * 31 + sum(blocks))
    for p in (2, 3):
        for _ in range(100):
            cell = random_cell(w, p, 3, rng)
            direct = RecursionEntries.from_triple(bruhat_factorize(b_product(w, cell), w))
            assert recursion_entries(w, cell).mismatches(direct) == []
