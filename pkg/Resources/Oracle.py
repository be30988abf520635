"""
Definition-level Kloosterman sums.

The Kloosterman set is enumerated straight from its definition: right
factors u' run over canonical coset representatives of U_w(Q_p)/U_w(Z_p)
(entries a/p^B in [0, 1) on the U_w positions), and for each one the
matrix fc * w * u' is tested for membership in U(Q_p) GL(Z_p) by clearing
denominators row by row from the bottom. Nothing here depends on the
parametrization in KloostermanSum.
"""
import itertools
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import Console
from .Errors import BudgetExceededError, PreconditionError
from .KloostermanSum import DEFAULT_BUDGET, CharacterPair, Modulus, SumResult
from .PadicArith import CyclotomicValue, RationalMatrix, character_residue, valuation
from .WeylElement import WeylElement, inverse_element


class CosetPair:
    def __init__(self, u: RationalMatrix, u_prime: RationalMatrix, integral: RationalMatrix):
        self.u = u
        self.u_prime = u_prime
        self.integral = integral

    def key(self) -> Tuple[Fraction, ...]:
        n = self.u_prime.size
        return tuple(self.u_prime[i, j] for i in range(1, n + 1) for j in range(i + 1, n + 1))

    def __repr__(self) -> str:
        return f"CosetPair(u={self.u}, u'={self.u_prime})"


def support(w: WeylElement) -> List[Tuple[int, int]]:
    """Positions (a, b), a < b, of U_w = U intersected with w^-1 U^- w."""
    sigma = w.permutation
    n = w.dimension
    return [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if sigma[a - 1] > sigma[b - 1]]


def _residue_mod_p(x: Fraction, p: int) -> int:
    return (x.numerator * pow(x.denominator, -1, p)) % p


def _unit_pivots(rows: List[List[Fraction]], p: int) -> Optional[List[int]]:
    """Columns of a minor that is a unit mod p, or None when the rows are not saturated."""
    work = [[_residue_mod_p(x, p) for x in row] for row in rows]
    pivots = []
    for r in range(len(work)):
        column = next((c for c in range(len(work[r])) if work[r][c] and c not in pivots), None)
        if column is None:
            return None
        inverse = pow(work[r][column], -1, p)
        work[r] = [(x * inverse) % p for x in work[r]]
        for other in range(r + 1, len(work)):
            factor = work[other][column]
            if factor:
                work[other] = [(a - factor * b) % p for a, b in zip(work[other], work[r])]
        pivots.append(column)
    return pivots


def clear_rows(M: RationalMatrix, p: int) -> Optional[Tuple[RationalMatrix, RationalMatrix]]:
    """
    Finds u in U(Q_p) with u M in GL(Z_p), returning (u, u M), or None.

    Rows are processed from the bottom; row i is corrected by the unique
    combination of the cleared rows below it that vanishes on a unit minor.
    """
    n = M.size
    cleared: Dict[int, List[Fraction]] = {}
    operations: Dict[int, List[Fraction]] = {}
    for i in range(n, 0, -1):
        row = M.row(i)
        op = [Fraction(int(c == i)) for c in range(1, n + 1)]
        if cleared:
            below = list(range(i + 1, n + 1))
            lower = [cleared[j] for j in below]
            pivots = _unit_pivots(lower, p)
            if pivots is None:
                return None
            minor = RationalMatrix([[rw[c] for c in pivots] for rw in lower])
            target = [row[c] for c in pivots]
            inverse = minor.inverse()
            t = [-sum((target[a] * inverse[a + 1, b + 1] for a in range(len(pivots))), Fraction(0))
                 for b in range(len(below))]
            for coefficient, j in zip(t, below):
                if coefficient:
                    row = [x + coefficient * y for x, y in zip(row, cleared[j])]
                    op = [x + coefficient * y for x, y in zip(op, operations[j])]
        if any(x.denominator % p == 0 for x in row):
            return None
        cleared[i] = row
        operations[i] = op
    integral = RationalMatrix([cleared[i] for i in range(1, n + 1)])
    det = integral.determinant()
    if det == 0 or valuation(det, p) != 0:
        return None
    return RationalMatrix([operations[i] for i in range(1, n + 1)]), integral


def in_gamma0(g: RationalMatrix, p: int, level: int) -> bool:
    n = g.size
    return all(g[n, j] == 0 or valuation(g[n, j], p) >= level for j in range(1, n))


def _grid(positions: List[Tuple[int, int]], p: int, bound: int, budget: int):
    q = p ** bound
    count = q ** len(positions)
    if count > budget:
        raise BudgetExceededError(count, budget, "oracle candidates")
    return itertools.product(range(q), repeat=len(positions)), q


def _unipotent(n: int, positions: List[Tuple[int, int]], numerators: Sequence[int], q: int) -> RationalMatrix:
    matrix = RationalMatrix.identity(n)
    for (a, b), x in zip(positions, numerators):
        matrix[a, b] = Fraction(x, q)
    return matrix


def _parallel(candidates, test, threads: int) -> list:
    candidates = list(candidates)
    if threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(test, candidates, chunksize=max(1, len(candidates) // (4 * threads))))
    else:
        results = [test(c) for c in candidates]
    return [r for r in results if r is not None]


def enumerate_kloosterman_set(w: WeylElement, r: Sequence[int], p: int, bound: Optional[int] = None,
                              level: int = 0, budget: int = DEFAULT_BUDGET, threads: int = 1) -> List[CosetPair]:
    modulus = Modulus(p, r)
    if len(modulus.r) != w.N:
        raise PreconditionError(f"{w} needs an exponent vector of length {w.N}, got {modulus.r}.")
    bound = modulus.height if bound is None else bound
    if bound < modulus.height:
        raise PreconditionError(f"Denominator bound {bound} is below the height {modulus.height}.")
    n_matrix = modulus.fc() @ w.signed_matrix
    positions = support(w)
    candidates, q = _grid(positions, p, bound, budget)
    n = w.dimension

    def test(numerators) -> Optional[CosetPair]:
        u_prime = _unipotent(n, positions, numerators, q)
        found = clear_rows(n_matrix @ u_prime, p)
        if found is None:
            return None
        u, g = found
        if level and not in_gamma0(g, p, level):
            return None
        return CosetPair(u, u_prime, g)

    pairs = _parallel(candidates, test, threads)
    Console.debug("Oracle", f"{w.blocks} r={modulus.r} B={bound}: {len(pairs)} cosets")
    return pairs


def enumerate_kloosterman_set_prime(n_matrix: RationalMatrix, x: WeylElement, p: int, bound: int,
                                    budget: int = DEFAULT_BUDGET, threads: int = 1) -> List[CosetPair]:
    """
    U_{x^-1}(Z_p) \\ C(n) / U(Z_p): the left factor runs over the U_{x^-1}
    positions and the right factor is found by clearing columns.
    """
    positions = support(inverse_element(x))
    candidates, q = _grid(positions, p, bound, budget)
    n = n_matrix.size

    def test(numerators) -> Optional[CosetPair]:
        v = _unipotent(n, positions, numerators, q)
        found = clear_rows((v @ n_matrix).anti_transpose(), p)
        if found is None:
            return None
        u_tilde, g_tilde = found
        return CosetPair(v, u_tilde.anti_transpose(), g_tilde.anti_transpose())

    return _parallel(candidates, test, threads)


def coset_sum(pairs: List[CosetPair], chars: CharacterPair, p: int) -> SumResult:
    arguments = []
    for pair in pairs:
        n = pair.u.size
        arguments.append(sum(
            (chars.psi[i - 1] * pair.u[i, i + 1] + chars.psi_prime[i - 1] * pair.u_prime[i, i + 1]
             for i in range(1, n)),
            Fraction(0),
        ))
    K = max((max(0, -valuation(x, p)) for x in arguments if x != 0), default=0)
    value = CyclotomicValue.from_residues(p ** K, (character_residue(x, p, K) for x in arguments))
    return SumResult(value, len(pairs))


def oracle_sum(w: WeylElement, r: Sequence[int], p: int, chars: CharacterPair, level: int = 0,
               bound: Optional[int] = None, budget: int = DEFAULT_BUDGET, threads: int = 1) -> SumResult:
    pairs = enumerate_kloosterman_set(w, r, p, bound, level, budget, threads)
    return coset_sum(pairs, chars, p)


def oracle_sum_prime(n_matrix: RationalMatrix, x: WeylElement, p: int, chars: CharacterPair, bound: int,
                     budget: int = DEFAULT_BUDGET, threads: int = 1) -> SumResult:
    pairs = enumerate_kloosterman_set_prime(n_matrix, x, p, bound, budget, threads)
    return coset_sum(pairs, chars, p)


def stability_check(w: WeylElement, r: Sequence[int], p: int, level: int = 0, budget: int = DEFAULT_BUDGET) -> bool:
    """Raising the denominator bound by one must not change the Kloosterman set."""
    height = sum(r)
    base = {pair.key() for pair in enumerate_kloosterman_set(w, r, p, height, level, budget)}
    wider = {pair.key() for pair in enumerate_kloosterman_set(w, r, p, height + 1, level, budget)}
    return base == wider
