"""
Exact p-adic and cyclotomic arithmetic.

Rationals with p-power denominators are handled with ``fractions.Fraction``;
character sums are accumulated as integer coefficient vectors over the
p^K-th roots of unity, so no floating point enters until the final complex
embedding.
"""
import math
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
import sympy
from sympy import QQ, factorint, multiplicity
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .Errors import KloostermanError, PrecisionError, PreconditionError

Rational = Union[int, Fraction]

_EMBED_ULP = 4 * float(np.finfo(float).eps)


def is_prime(n: int) -> bool:
    return bool(sympy.isprime(n))


def prime_power(n: int) -> Optional[Tuple[int, int]]:
    """Returns (p, K) with n = p^K, or None. 1 is reported as (1, 0)."""
    if n == 1:
        return 1, 0
    if n < 1:
        return None
    factors = factorint(n)
    if len(factors) != 1:
        return None
    p, k = factors.popitem()
    return int(p), int(k)


def int_valuation(n: int, p: int) -> int:
    if n == 0:
        raise PreconditionError("The valuation of 0 is infinite.")
    return int(multiplicity(p, abs(n)))


def valuation(x: Rational, p: int) -> int:
    """
    The p-adic valuation of a nonzero rational.

    >>> valuation(Fraction(7, 4), 2)
    -2
    >>> valuation(18, 3)
    2
    """
    x = Fraction(x)
    return int_valuation(x.numerator, p) - int_valuation(x.denominator, p)


class PadicScalar:
    """A rational numerator / p^exponent, kept in canonical form (p does not divide the numerator unless exponent is 0)."""

    __slots__ = ("numerator", "exponent", "p")

    def __init__(self, numerator: int, exponent: int, p: int):
        if exponent < 0:
            raise PreconditionError(f"Denominator exponent must be nonnegative, got {exponent}.")
        while exponent > 0 and numerator % p == 0:
            numerator //= p
            exponent -= 1
        self.numerator = int(numerator)
        self.exponent = int(exponent)
        self.p = p

    @classmethod
    def from_parts(cls, c: int, m: int, p: int) -> "PadicScalar":
        return cls(c, m, p)

    @classmethod
    def from_fraction(cls, x: Rational, p: int) -> "PadicScalar":
        x = Fraction(x)
        den = x.denominator
        e = 0
        while den % p == 0:
            den //= p
            e += 1
        if den != 1:
            raise PreconditionError(f"{x} does not have a {p}-power denominator.")
        return cls(x.numerator, e, p)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.p ** self.exponent)

    def is_integral(self) -> bool:
        return self.exponent == 0

    def __eq__(self, other) -> bool:
        if isinstance(other, PadicScalar):
            return self.p == other.p and self.value == other.value
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.p, self.numerator, self.exponent))

    def __repr__(self) -> str:
        return f"PadicScalar({self.numerator}/{self.p}^{self.exponent})"


def mu(a: PadicScalar) -> int:
    """0 for integral a, otherwise minus its valuation."""
    return a.exponent


def mod_inverse(c: int, p: int, exponent: int) -> int:
    """
    The inverse of the unit c modulo p^exponent, in [0, p^exponent).

    >>> mod_inverse(2, 3, 2)
    5
    """
    if c % p == 0:
        raise PreconditionError(f"{c} is not a unit modulo {p}.")
    modulus = p ** exponent
    if modulus == 1:
        return 0
    return pow(c, -1, modulus)


def character_residue(x: Rational, p: int, K: int) -> int:
    """
    The residue t mod p^K with Psi(x) = e(t / p^K).

    Psi is trivial on Z_p, so only the p-power part of the denominator
    matters; the prime-to-p part is inverted modulo p^K.
    """
    x = Fraction(x)
    den = x.denominator
    e = 0
    while den % p == 0:
        den //= p
        e += 1
    if e > K:
        raise PrecisionError(f"Argument {x} needs modulus {p}^{e}, working modulus is {p}^{K}.")
    modulus = p ** K
    if e == 0:
        return 0
    unit_inverse = pow(den, -1, modulus) if modulus > 1 else 0
    return (x.numerator * unit_inverse * p ** (K - e)) % modulus


class AdditiveCharacterArg:
    """Psi(residue / modulus)."""

    __slots__ = ("residue", "modulus")

    def __init__(self, residue: int, modulus: int):
        self.residue = residue % modulus
        self.modulus = modulus

    @classmethod
    def of(cls, x: Rational, p: int, K: int) -> "AdditiveCharacterArg":
        return cls(character_residue(x, p, K), p ** K)

    def is_trivial(self) -> bool:
        return self.residue == 0

    def lift(self, modulus: int) -> "AdditiveCharacterArg":
        if modulus % self.modulus:
            raise KloostermanError(f"Cannot lift modulus {self.modulus} to {modulus}.")
        return AdditiveCharacterArg(self.residue * (modulus // self.modulus), modulus)

    def __repr__(self) -> str:
        return f"Psi({self.residue}/{self.modulus})"


class CyclotomicValue:
    """
    An element sum_t n_t e(t/q) of Z[zeta_q] stored as an int64 coefficient vector.

    Coefficients are kept unreduced. Exact comparison reduces to the power basis
    {zeta^t : t < (p-1)p^(K-1)} when q = p^K; other moduli compare through the
    complex embedding.
    """

    def __init__(self, modulus: int, coefficients: Optional[np.ndarray] = None):
        if modulus < 1:
            raise PreconditionError(f"Modulus must be positive, got {modulus}.")
        self.modulus = modulus
        if coefficients is None:
            coefficients = np.zeros(modulus, dtype=np.int64)
        elif len(coefficients) != modulus:
            raise KloostermanError(f"Expected {modulus} coefficients, got {len(coefficients)}.")
        self.coefficients = np.asarray(coefficients, dtype=np.int64)

    @classmethod
    def zero(cls, p: int, K: int) -> "CyclotomicValue":
        return cls(p ** K)

    @classmethod
    def from_residues(cls, modulus: int, residues: Iterable[int]) -> "CyclotomicValue":
        value = cls(modulus)
        value.add_residues(np.fromiter(residues, dtype=np.int64))
        return value

    @classmethod
    def integer(cls, n: int, modulus: int = 1) -> "CyclotomicValue":
        value = cls(modulus)
        value.coefficients[0] = n
        return value

    def copy(self) -> "CyclotomicValue":
        return CyclotomicValue(self.modulus, self.coefficients.copy())

    # Accumulation

    def accumulate(self, arg: AdditiveCharacterArg) -> "CyclotomicValue":
        """Adds Psi(arg) in place and returns self."""
        if self.modulus % arg.modulus:
            raise KloostermanError(f"Character modulus {arg.modulus} does not divide {self.modulus}.")
        self.coefficients[arg.residue * (self.modulus // arg.modulus)] += 1
        return self

    def add_residues(self, residues: np.ndarray) -> "CyclotomicValue":
        if residues.size:
            self.coefficients += np.bincount(residues.ravel(), minlength=self.modulus).astype(np.int64)
        return self

    def merge(self, other: "CyclotomicValue") -> "CyclotomicValue":
        return self + other

    # Ring operations

    def lift(self, modulus: int) -> "CyclotomicValue":
        if modulus % self.modulus:
            raise KloostermanError(f"Cannot lift modulus {self.modulus} to {modulus}.")
        lifted = np.zeros(modulus, dtype=np.int64)
        lifted[:: modulus // self.modulus] = self.coefficients
        return CyclotomicValue(modulus, lifted)

    def _common(self, other: "CyclotomicValue") -> Tuple["CyclotomicValue", "CyclotomicValue"]:
        modulus = math.lcm(self.modulus, other.modulus)
        return self.lift(modulus), other.lift(modulus)

    def __add__(self, other: "CyclotomicValue") -> "CyclotomicValue":
        a, b = self._common(other)
        return CyclotomicValue(a.modulus, a.coefficients + b.coefficients)

    def __sub__(self, other: "CyclotomicValue") -> "CyclotomicValue":
        a, b = self._common(other)
        return CyclotomicValue(a.modulus, a.coefficients - b.coefficients)

    def __neg__(self) -> "CyclotomicValue":
        return CyclotomicValue(self.modulus, -self.coefficients)

    def scaled(self, factor: int) -> "CyclotomicValue":
        return CyclotomicValue(self.modulus, self.coefficients * factor)

    def conjugate(self) -> "CyclotomicValue":
        flipped = np.zeros_like(self.coefficients)
        flipped[(-np.arange(self.modulus)) % self.modulus] = self.coefficients
        return CyclotomicValue(self.modulus, flipped)

    # Exact comparison

    def reduced(self) -> np.ndarray:
        """Coordinates in the power basis of Z[zeta_q]; requires q to be a prime power."""
        pk = prime_power(self.modulus)
        if pk is None:
            raise KloostermanError(f"Exact reduction needs a prime-power modulus, got {self.modulus}.")
        p, K = pk
        if K == 0:
            return self.coefficients.copy()
        block = p ** (K - 1)
        head = self.coefficients[: (p - 1) * block].copy()
        tail = self.coefficients[(p - 1) * block:]
        # zeta^(t + (p-1)q') = -sum_{j<p-1} zeta^(t + j q')
        head -= np.tile(tail, p - 1)
        return head

    def is_zero(self) -> bool:
        if prime_power(self.modulus) is None:
            value, error = self.magnitude()
            return value <= error + 1e-6
        return not self.reduced().any()

    def equals(self, other: "CyclotomicValue") -> bool:
        return (self - other).is_zero()

    def close_to(self, other: "CyclotomicValue", tolerance: float = 1e-6) -> bool:
        value, error = (self - other).magnitude()
        return value < tolerance + error

    def __eq__(self, other) -> bool:
        if isinstance(other, CyclotomicValue):
            return self.equals(other)
        if isinstance(other, int):
            return self.equals(CyclotomicValue.integer(other))
        return NotImplemented

    __hash__ = None

    def compress(self) -> "CyclotomicValue":
        """Drops to the smallest modulus p^k carrying the support."""
        pk = prime_power(self.modulus)
        if pk is None or pk[1] == 0:
            return self.copy()
        p = pk[0]
        modulus = self.modulus
        coefficients = self.coefficients
        while modulus > 1:
            off = coefficients.reshape(-1, p)[:, 1:]
            if off.any():
                break
            coefficients = coefficients[::p]
            modulus //= p
        return CyclotomicValue(modulus, coefficients.copy())

    # Embedding

    def complex_value(self) -> Tuple[complex, float]:
        """The complex embedding zeta -> e(1/q) and a bound on its absolute error."""
        support = np.nonzero(self.coefficients)[0]
        if support.size == 0:
            return 0j, 0.0
        counts = self.coefficients[support].astype(float)
        angles = 2.0 * math.pi * support / self.modulus
        real = math.fsum(counts * np.cos(angles))
        imag = math.fsum(counts * np.sin(angles))
        error = 2.0 * float(np.abs(self.coefficients[support]).sum()) * _EMBED_ULP
        return complex(real, imag), error

    def magnitude(self) -> Tuple[float, float]:
        value, error = self.complex_value()
        return abs(value), error

    def integer_value(self) -> Optional[int]:
        """The value as an integer when it is rational, else None."""
        if prime_power(self.modulus) is None:
            return None
        reduced = self.reduced()
        if reduced[1:].any():
            return None
        return int(reduced[0])

    def total(self) -> int:
        return int(self.coefficients.sum())

    def sparse(self) -> Dict[int, int]:
        support = np.nonzero(self.coefficients)[0]
        return {int(t): int(self.coefficients[t]) for t in support}

    def __repr__(self) -> str:
        value, _ = self.complex_value()
        return f"CyclotomicValue(mod {self.modulus}, ~{value.real:.6g}{value.imag:+.6g}j)"


def _to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class RationalMatrix:
    """
    A square matrix of exact rationals backed by a numpy object array.

    Indexing is 1-based, ``M[i, j]``, to match matrix notation.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        array = np.empty((len(entries), len(entries)), dtype=object)
        for i, row in enumerate(entries):
            if len(row) != len(entries):
                raise KloostermanError("RationalMatrix must be square.")
            for j, x in enumerate(row):
                array[i, j] = Fraction(x)
        self.entries = array

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "RationalMatrix":
        matrix = cls.__new__(cls)
        matrix.entries = array
        return matrix

    @classmethod
    def zeros(cls, n: int) -> "RationalMatrix":
        array = np.empty((n, n), dtype=object)
        array.fill(Fraction(0))
        return cls._wrap(array)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        matrix = cls.zeros(n)
        for i in range(n):
            matrix.entries[i, i] = Fraction(1)
        return matrix

    @classmethod
    def diagonal(cls, values: Iterable[Rational]) -> "RationalMatrix":
        values = list(values)
        matrix = cls.zeros(len(values))
        for i, x in enumerate(values):
            matrix.entries[i, i] = Fraction(x)
        return matrix

    @classmethod
    def embedded(cls, n: int, i: int, block) -> "RationalMatrix":
        """Identity of size n with the 2x2 block at rows/cols i, i+1."""
        matrix = cls.identity(n)
        for a in range(2):
            for b in range(2):
                matrix.entries[i - 1 + a, i - 1 + b] = Fraction(block[a][b])
        return matrix

    @classmethod
    def direct_sum(cls, upper: "RationalMatrix", lower: "RationalMatrix") -> "RationalMatrix":
        n, m = upper.size, lower.size
        matrix = cls.zeros(n + m)
        matrix.entries[:n, :n] = upper.entries
        matrix.entries[n:, n:] = lower.entries
        return matrix

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, index: Tuple[int, int]) -> Fraction:
        i, j = index
        return self.entries[i - 1, j - 1]

    def __setitem__(self, index: Tuple[int, int], value: Rational) -> None:
        i, j = index
        self.entries[i - 1, j - 1] = Fraction(value)

    def row(self, i: int) -> list:
        return list(self.entries[i - 1])

    def copy(self) -> "RationalMatrix":
        return RationalMatrix._wrap(self.entries.copy())

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix._wrap(self.entries @ other.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.size == other.size and bool((self.entries == other.entries).all())

    __hash__ = None

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix._wrap(self.entries.T.copy())

    def anti_transpose(self) -> "RationalMatrix":
        """J A^T J with J the antidiagonal identity."""
        return RationalMatrix._wrap(self.entries.T[::-1, ::-1].copy())

    def _domain_matrix(self) -> DomainMatrix:
        rows = [[QQ(x.numerator, x.denominator) for x in row] for row in self.entries]
        return DomainMatrix(rows, (self.size, self.size), QQ)

    def determinant(self) -> Fraction:
        return _to_fraction(self._domain_matrix().det())

    def inverse(self) -> "RationalMatrix":
        try:
            inverse = self._domain_matrix().inv()
        except DMNonInvertibleMatrixError as exc:
            raise KloostermanError("Matrix is singular.") from exc
        return RationalMatrix([[_to_fraction(x) for x in row] for row in inverse.to_list()])

    def is_p_integral(self, p: int) -> bool:
        return all(x.denominator % p != 0 for x in self.entries.flat)

    def is_upper_unipotent(self) -> bool:
        n = self.size
        return all(
            self.entries[i, j] == (1 if i == j else 0)
            for i in range(n) for j in range(i + 1)
        )

    def support(self) -> list:
        """1-based positions of the nonzero entries."""
        return [(i + 1, j + 1) for (i, j), x in np.ndenumerate(self.entries) if x != 0]

    def to_strings(self) -> list:
        return [[str(x) for x in row] for row in self.entries]

    def __repr__(self) -> str:
        rows = "; ".join(", ".join(str(x) for x in row) for row in self.entries)
        return f"RationalMatrix([{rows}])"
