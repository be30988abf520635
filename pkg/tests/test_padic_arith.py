from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from Resources.Errors import KloostermanError, PrecisionError, PreconditionError
from Resources.PadicArith import (
    AdditiveCharacterArg,
    CyclotomicValue,
    PadicScalar,
    RationalMatrix,
    character_residue,
    int_valuation,
    is_prime,
    mod_inverse,
    mu,
    prime_power,
    valuation,
)

primes = st.sampled_from([2, 3, 5, 7])


def test_mod_inverse_example():
    assert mod_inverse(2, 3, 2) == 5


def test_mod_inverse_rejects_non_unit():
    with pytest.raises(PreconditionError):
        mod_inverse(6, 3, 2)


def test_mod_inverse_trivial_modulus():
    assert mod_inverse(4, 3, 0) == 0


@given(primes, st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=10 ** 6))
def test_mod_inverse_is_an_involution(p, e, c):
    if c % p == 0:
        c += 1
    inverse = mod_inverse(c, p, e)
    assert (c * inverse) % p ** e == 1
    assert mod_inverse(inverse, p, e) == c % p ** e


def test_padic_scalar_is_canonical():
    a = PadicScalar(6, 2, 3)
    assert (a.numerator, a.exponent) == (2, 1)
    assert a.value == Fraction(2, 3)
    assert mu(a) == 1
    assert PadicScalar(9, 2, 3).is_integral()
    assert mu(PadicScalar(5, 0, 3)) == 0


def test_padic_scalar_from_fraction():
    assert PadicScalar.from_fraction(Fraction(5, 8), 2) == PadicScalar(5, 3, 2)
    with pytest.raises(PreconditionError):
        PadicScalar.from_fraction(Fraction(1, 6), 2)


def test_valuation_and_primality():
    assert valuation(Fraction(7, 4), 2) == -2
    assert valuation(18, 3) == 2
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert prime_power(27) == (3, 3)
    assert prime_power(12) is None
    assert prime_power(1) == (1, 0)
    assert prime_power(64) == (2, 6)
    assert prime_power(36) is None
    assert prime_power(13) == (13, 1)
    assert prime_power(0) is None


def test_int_valuation():
    assert int_valuation(48, 2) == 4
    assert int_valuation(-18, 3) == 2
    assert int_valuation(7, 5) == 0
    with pytest.raises(PreconditionError):
        int_valuation(0, 3)


def test_character_residue():
    assert character_residue(Fraction(1, 3), 3, 2) == 3
    assert character_residue(Fraction(5, 1), 3, 2) == 0
    # 1/6 = 2^-1 / 3 with 2^-1 = 5 mod 9
    assert character_residue(Fraction(1, 6), 3, 2) == 15 % 9
    with pytest.raises(PrecisionError):
        character_residue(Fraction(1, 27), 3, 2)


def test_additive_character_lift():
    arg = AdditiveCharacterArg.of(Fraction(1, 3), 3, 1)
    assert (arg.residue, arg.modulus) == (1, 3)
    lifted = arg.lift(9)
    assert (lifted.residue, lifted.modulus) == (3, 9)
    assert AdditiveCharacterArg(9, 9).is_trivial()


def test_sum_of_all_roots_of_unity_is_zero():
    value = CyclotomicValue.from_residues(9, range(9))
    assert value.is_zero()
    assert value == 0


def test_primitive_roots_sum_to_mobius():
    # Ramanujan sums c_q(1) = mu(q)
    assert CyclotomicValue.from_residues(3, [1, 2]) == -1
    assert CyclotomicValue.from_residues(9, [t for t in range(9) if t % 3]) == 0
    assert CyclotomicValue.from_residues(2, [1]) == -1


@given(st.lists(st.integers(min_value=0, max_value=26), max_size=40))
def test_accumulation_is_commutative(residues):
    forward = CyclotomicValue(27)
    backward = CyclotomicValue(27)
    for t in residues:
        forward.accumulate(AdditiveCharacterArg(t, 27))
    for t in reversed(residues):
        backward.accumulate(AdditiveCharacterArg(t, 27))
    assert forward.equals(backward)
    assert np.array_equal(forward.coefficients, CyclotomicValue.from_residues(27, residues).coefficients)


def test_lift_and_compress():
    value = CyclotomicValue.from_residues(3, [1])
    lifted = value.lift(27)
    assert lifted.sparse() == {9: 1}
    assert lifted.equals(value)
    compressed = lifted.compress()
    assert compressed.modulus == 3
    assert compressed.sparse() == {1: 1}


def test_integer_value_and_complex_embedding():
    value = CyclotomicValue.from_residues(5, [0, 1, 2, 3, 4, 0, 0])
    assert value.integer_value() == 2
    z, error = value.complex_value()
    assert abs(z - 2) <= error + 1e-12
    assert CyclotomicValue.from_residues(5, [1]).integer_value() is None


def test_addition_over_different_moduli():
    a = CyclotomicValue.from_residues(3, [1])
    b = CyclotomicValue.from_residues(9, [6])
    total = a + b
    assert total.modulus == 9
    assert total.equals(CyclotomicValue.from_residues(9, [3, 6]))
    assert total == -1
    assert (a - a).is_zero()
    assert (-a).scaled(-1).equals(a)
    assert a.conjugate().equals(CyclotomicValue.from_residues(3, [2]))


def test_close_to():
    a = CyclotomicValue.from_residues(9, [1, 8])
    b = CyclotomicValue.from_residues(9, [1, 8, 0, 3, 6])
    assert a.close_to(b)
    assert not a.close_to(CyclotomicValue.integer(1))


def test_rational_matrix_inverse_and_determinant():
    M = RationalMatrix([[2, 1], [Fraction(1, 3), 1]])
    assert M.determinant() == Fraction(5, 3)
    assert M @ M.inverse() == RationalMatrix.identity(2)
    assert not M.is_p_integral(3)
    assert M.is_p_integral(2)


def test_rational_matrix_singular_inverse():
    M = RationalMatrix([[1, 2], [Fraction(1, 2), 1]])
    assert M.determinant() == 0
    with pytest.raises(KloostermanError):
        M.inverse()


@given(st.lists(st.integers(-5, 5), min_size=9, max_size=9), st.sampled_from([1, 2, 3]))
def test_rational_matrix_inverse_is_exact(values, d):
    M = RationalMatrix([[Fraction(x, d) for x in values[i:i + 3]] for i in (0, 3, 6)])
    if M.determinant() == 0:
        return
    assert M @ M.inverse() == RationalMatrix.identity(3)
    assert M.inverse().determinant() == 1 / M.determinant()


def test_rational_matrix_anti_transpose():
    M = RationalMatrix([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    A = M.anti_transpose()
    assert A[1, 1] == 9
    assert A[1, 2] == 6
    assert A[3, 1] == 7
    assert A[1, 3] == 3
    assert A.anti_transpose() == M


def test_rational_matrix_direct_sum():
    block = RationalMatrix([[0, -1], [1, 0]])
    M = RationalMatrix.direct_sum(RationalMatrix.identity(1), block)
    assert M.support() == [(1, 1), (2, 3), (3, 2)]
    assert M[2, 3] == -1
    assert RationalMatrix.identity(3).is_upper_unipotent()
    assert not M.is_upper_unipotent()
