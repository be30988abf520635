import itertools

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from Resources.Bruhat import CellCoordinates, bruhat_phase_residue
from Resources.Diagram import build_diagram, phase_terms
from Resources.Errors import BudgetExceededError, CompositionError, PreconditionError
from Resources.KloostermanSum import (
    CharacterPair,
    ModuliAssignment,
    Modulus,
    cell_moduli,
    classical_kloosterman,
    evaluate_cell_sum,
    evaluate_sum,
    evaluate_sum_gamma0,
    gamma0_transform,
    hyper_identity_check,
    hyper_kloosterman,
    moduli_assignments,
    representative_count,
    representative_space,
    scaling_identity_check,
    sign_correction,
)
from Resources.PadicArith import CyclotomicValue
from Resources.VerifySuites import character_choices
from Resources.WeylElement import make_admissible


def test_modulus_matrix():
    fc = Modulus(2, (1, 3)).fc()
    assert fc[1, 1] * 2 == 1
    assert fc[2, 2] * 4 == 1
    assert fc[3, 3] == 8
    with pytest.raises(PreconditionError):
        Modulus(4, (1,))


def test_moduli_assignments_gl3_long(gl3_long):
    found = {m.as_tuple() for m in moduli_assignments(gl3_long, (1, 1))}
    # gamma order is (2,2), (1,2), (1,1)
    assert found == {(0, 1, 0), (1, 0, 1)}


def test_moduli_assignments_zero(w0):
    assignments = moduli_assignments(w0, (0, 0, 0, 0))
    assert [m.as_tuple() for m in assignments] == [(0,) * 6]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(1, 1), (1, 2), (2, 1), (1, 1, 1), (2, 2), (1, 1, 2)]), st.data())
def test_moduli_assignments_satisfy_the_level_sums(blocks, data):
    w = make_admissible(blocks)
    r = tuple(data.draw(st.lists(st.integers(0, 3), min_size=w.N, max_size=w.N)))
    assignments = moduli_assignments(w, r)
    assert len({m.as_tuple() for m in assignments}) == len(assignments)
    for m in assignments:
        assert m.r == r
        assert all(x >= 0 for x in m.as_tuple())
    brute = [
        values for values in itertools.product(range(max(r, default=0) + 1), repeat=len(w.index_set))
        if ModuliAssignment.from_values(w, values).r == r
    ]
    assert sorted(m.as_tuple() for m in assignments) == sorted(brute)


@pytest.mark.parametrize("blocks", [(1, 1), (1, 2), (2, 1), (1, 1, 1), (2, 2), (1, 3)])
@pytest.mark.parametrize("p", [2, 3])
def test_streamed_counts_match_the_formula(blocks, p):
    w = make_admissible(blocks)
    for r in itertools.product(range(3), repeat=w.N):
        for m in moduli_assignments(w, r):
            kappa = m.positive_count()
            expected = p ** (m.height - kappa) * (p - 1) ** kappa
            assert representative_count(w, m, p) == expected
            if expected <= 2000:
                assert sum(1 for _ in representative_space(w, m, p)) == expected


def test_cell_moduli_gl2(gl2):
    m = ModuliAssignment.from_values(gl2, [3])
    moduli = cell_moduli(gl2, m)
    assert moduli.modulus((1, 1), 2) == 8
    assert list(moduli.values((1, 1), 2)) == [1, 3, 5, 7]


def test_classical_kloosterman():
    assert classical_kloosterman(1, 1, 3).value == -1
    assert classical_kloosterman(0, 0, 7).value == 6
    assert classical_kloosterman(5, 5, 1).value == 1
    assert classical_kloosterman(1, 1, 3).cell_count == 2
    with pytest.raises(PreconditionError):
        classical_kloosterman(1, 1, 0)


def test_s_1_1_3(gl2):
    result = evaluate_sum(gl2, (1,), CharacterPair([1], [1]), 3)
    assert result.value == -1
    assert result.cell_count == 2
    assert abs(result.magnitude - 1.0) <= result.magnitude_error + 1e-12


def test_zero_exponents_give_one(gl3_long):
    result = evaluate_sum(gl3_long, (0, 0), CharacterPair.trivial(2), 2)
    assert result.value == 1
    assert result.cell_count == 1


@pytest.mark.parametrize("p", [2, 3, 5, 7])
@pytest.mark.parametrize("r", range(5))
def test_gl2_recovers_classical_sums(gl2, p, r):
    for a, b in itertools.product((0, 1, 2, p, 2 * p), repeat=2):
        ours = evaluate_sum(gl2, (r,), CharacterPair([a], [b]), p)
        theirs = classical_kloosterman(a, b, p ** r)
        assert ours.value.equals(theirs.value)
        assert ours.value.close_to(theirs.value)
        assert ours.magnitude <= ours.cell_count + ours.magnitude_error


def test_trivial_characters_count_the_cells(w0):
    result = evaluate_sum(w0, (1, 1, 1, 1), CharacterPair.trivial(4), 2)
    assert result.value == result.cell_count
    assert sum(piece.cell_count for piece in result.breakdown) == result.cell_count


def test_results_do_not_depend_on_threads(w0, unit_chars):
    single = evaluate_sum(w0, (1, 1, 1, 1), unit_chars(4), 2, threads=1)
    many = evaluate_sum(w0, (1, 1, 1, 1), unit_chars(4), 2, threads=4)
    assert (single.value.coefficients == many.value.coefficients).all()


def test_identity_element_has_no_sum():
    w = make_admissible((3,))
    m = ModuliAssignment(w, {})
    with pytest.raises(CompositionError):
        evaluate_cell_sum(w, m, CharacterPair.trivial(2), 2)


def test_budget_is_enforced(w0, unit_chars):
    with pytest.raises(BudgetExceededError):
        evaluate_sum(w0, (2, 2, 2, 2), unit_chars(4), 3, budget=10)


def test_phase_terms_agree_with_the_factorization(w0):
    # Sum of the compiled phase terms against the phase read off L and R.
    p = 3
    m = ModuliAssignment.from_values(w0, [1, 0, 1, 0, 1, 1])
    K = m.height
    chars = CharacterPair([1, 2, 1, 1], [2, 1, 1, 1])
    terms = phase_terms(build_diagram(w0), m.m)
    for c_values in [(1, 4, 2, 0, 5, 7), (2, 1, 1, 2, 1, 1), (8, 0, 4, 5, 2, 4)]:
        cell = CellCoordinates.from_sequences(w0, p, list(m.as_tuple()), list(c_values), inverse_exponent=K)
        total = 0
        for term in terms:
            x = chars.value(term.character, term.index)
            if term.c_vertex:
                x *= cell.c[term.c_vertex]
            if term.d_vertex:
                x *= int(cell.d[term.d_vertex])
            if term.exponent < 0:
                total += x * p ** (K + term.exponent)
        exact = CellCoordinates.from_sequences(w0, p, list(m.as_tuple()), list(c_values))
        assert total % p ** K == bruhat_phase_residue(w0, exact, chars.psi, chars.psi_prime, K)


def test_hyper_kloosterman_in_two_variables_is_classical():
    for a in (1, 2):
        assert hyper_kloosterman(a, 2, 3, 1).value.equals(classical_kloosterman(1, a, 3).value)
    assert hyper_kloosterman(1, 1, 5, 1).value.equals(CyclotomicValue.from_residues(5, [1]))


@pytest.mark.parametrize("N, p", [(1, 2), (1, 3), (2, 2), (2, 3)])
def test_hyper_identity(N, p):
    assert hyper_identity_check(N, 1, CharacterPair([1] * N, [1] * N), p)


def test_hyper_identity_needs_units():
    with pytest.raises(PreconditionError):
        hyper_identity_check(2, 1, CharacterPair([2, 1], [1, 1]), 2)


@pytest.mark.parametrize("p", [2, 3])
def test_scaling_identity_gl2(gl2, p):
    chars = CharacterPair([1], [1])
    for value in (1, 2, 3):
        assert scaling_identity_check(gl2, ModuliAssignment.from_values(gl2, [value]), chars, p, 1)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("k", [1, 2])
def test_scaling_identity_gl3(gl3_long, p, k):
    for chars, values in itertools.product(character_choices(2, p), [(1, 1, 1), (1, 2, 1), (2, 1, 1)]):
        m = ModuliAssignment.from_values(gl3_long, values)
        assert scaling_identity_check(gl3_long, m, chars, p, k)


@pytest.mark.parametrize("p", [2, 3])
def test_scaling_identity_gl2_divisible_characters(gl2, p):
    for chars in character_choices(1, p):
        for value in (1, 2):
            assert scaling_identity_check(gl2, ModuliAssignment.from_values(gl2, [value]), chars, p, 1)


@pytest.mark.parametrize("k", [1, 2])
def test_scaling_identity_with_asymmetric_characters(gl3_long, k):
    p = 3
    chars = CharacterPair([1, 3], [2, 1])
    for values in [(1, 1, 1), (1, 2, 1), (2, 1, 1)]:
        m = ModuliAssignment.from_values(gl3_long, values)
        assert scaling_identity_check(gl3_long, m, chars, p, k)


def test_scaling_identity_preconditions(gl3_long, unit_chars):
    with pytest.raises(PreconditionError):
        scaling_identity_check(gl3_long, ModuliAssignment.from_values(gl3_long, [0, 1, 1]), unit_chars(2), 2, 1)
    with pytest.raises(PreconditionError):
        scaling_identity_check(make_admissible((1, 2)), ModuliAssignment.from_values(make_admissible((1, 2)), [1, 1]),
                               unit_chars(2), 2, 1)


@pytest.mark.parametrize("blocks", [(1, 1), (1, 1, 1), (1, 2), (2, 1), (2, 3), (2, 2, 2)])
def test_sign_correction_is_diagonal(blocks):
    D = sign_correction(make_admissible(blocks))
    assert all(x in (1, -1) for x in D)


def test_gamma0_transform_shape(gl3_long):
    w_inv, r_inv, chars = gamma0_transform(gl3_long, (1, 2), CharacterPair([1, 2], [3, 4]))
    assert w_inv.blocks == (1, 1, 1)
    assert r_inv == (2, 1)
    assert chars.psi_prime == (-4, -3)
    assert [abs(x) for x in chars.psi] == [2, 1]


@pytest.mark.parametrize("blocks", [(1, 1), (1, 1, 1), (1, 2)])
def test_gamma0_of_zero_exponents_vanishes(blocks, unit_chars):
    w = make_admissible(blocks)
    result = evaluate_sum_gamma0(w, (0,) * w.N, unit_chars(w.N), 2, 1)
    assert result.value == 0


def test_gamma0_level_zero_is_the_full_sum(gl2):
    chars = CharacterPair([1], [2])
    assert evaluate_sum_gamma0(gl2, (2,), chars, 3, 0).equals(evaluate_sum(gl2, (2,), chars, 3))


def test_record_is_stable(gl2):
    result = evaluate_sum(gl2, (1,), CharacterPair([1], [1]), 3)
    record = result.record(gl2, 3, (1,), CharacterPair([1], [1]))
    dumped = record.model_dump(by_alias=True)
    assert dumped["schema"] == 1
    assert dumped["value_integer"] == -1
    assert dumped["elapsed_ms"] is None
    assert record.model_dump_json(by_alias=True) == result.record(gl2, 3, (1,), CharacterPair([1], [1])).model_dump_json(by_alias=True)
