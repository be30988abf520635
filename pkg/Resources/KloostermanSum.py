"""
Generalized Kloosterman sums Kl_p(psi, psi', fc * w) for admissible w.

The sum is split over moduli assignments m; each piece is a finite sum over
representatives c of the additive character of a phase read off the
numbered vertex diagram. Everything is exact: phases are residues mod p^K and
sums are CyclotomicValue coefficient vectors.
"""
import itertools
import math
import time
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from . import Console
from .Diagram import PhaseTerm, build_diagram, phase_terms
from .Errors import BudgetExceededError, CompositionError, PrecisionError, PreconditionError
from .PadicArith import CyclotomicValue, RationalMatrix, is_prime
from .WeylElement import Vertex, WeylElement, inverse_element, length, make_admissible, simple_root_position

DEFAULT_BUDGET = 10 ** 8
CHUNK_ELEMENTS = 1 << 20
MAX_MODULUS = 1 << 31


class Modulus:
    def __init__(self, p: int, r: Sequence[int]):
        if not is_prime(p):
            raise PreconditionError(f"{p} is not prime.")
        r = tuple(int(x) for x in r)
        if any(x < 0 for x in r):
            raise PreconditionError(f"Exponent vector {r} has a negative entry.")
        self.p = p
        self.r = r

    @property
    def height(self) -> int:
        return sum(self.r)

    def fc(self) -> RationalMatrix:
        """diag(p^-r_1, p^(r_1 - r_2), ..., p^r_N)."""
        padded = (0,) + self.r + (0,)
        return RationalMatrix.diagonal(
            Fraction(self.p) ** (padded[k] - padded[k + 1]) for k in range(len(self.r) + 1)
        )

    def __repr__(self) -> str:
        return f"Modulus(p={self.p}, r={self.r})"


class CharacterPair:
    def __init__(self, psi: Sequence[int], psi_prime: Sequence[int]):
        if len(psi) != len(psi_prime):
            raise PreconditionError(f"psi and psi' differ in length: {len(psi)} vs {len(psi_prime)}.")
        self.psi = tuple(int(x) for x in psi)
        self.psi_prime = tuple(int(x) for x in psi_prime)

    @classmethod
    def trivial(cls, N: int) -> "CharacterPair":
        return cls((0,) * N, (0,) * N)

    def __len__(self) -> int:
        return len(self.psi)

    def value(self, character: str, index: int) -> int:
        return (self.psi if character == "psi" else self.psi_prime)[index - 1]

    def __repr__(self) -> str:
        return f"CharacterPair(psi={self.psi}, psi'={self.psi_prime})"


class ModuliAssignment:
    """Exponents m_v on the vertices of I_w; r is derived from the level sums."""

    def __init__(self, w: WeylElement, m: Mapping[Vertex, int]):
        if set(m) != set(w.index_set.ordered):
            raise PreconditionError(f"Assignment must cover exactly the vertices of {w}.")
        if any(x < 0 for x in m.values()):
            raise PreconditionError(f"Assignment {dict(m)} has a negative entry.")
        self.w = w
        self.m: Dict[Vertex, int] = dict(m)

    @classmethod
    def from_values(cls, w: WeylElement, values: Sequence[int]) -> "ModuliAssignment":
        order = w.index_set.ordered
        if len(values) != len(order):
            raise PreconditionError(f"{w} has {len(order)} vertices, got {len(values)} values.")
        return cls(w, dict(zip(order, values)))

    @property
    def r(self) -> Tuple[int, ...]:
        return tuple(
            sum(x for (i, j), x in self.m.items() if i <= l <= j) for l in range(1, self.w.dimension)
        )

    @property
    def height(self) -> int:
        return sum(self.r)

    def positive_count(self) -> int:
        return sum(1 for x in self.m.values() if x > 0)

    def as_tuple(self) -> Tuple[int, ...]:
        return tuple(self.m[v] for v in self.w.index_set.ordered)

    def __getitem__(self, vertex: Vertex) -> int:
        return self.m[vertex]

    def __eq__(self, other) -> bool:
        return isinstance(other, ModuliAssignment) and self.w == other.w and self.m == other.m

    def __hash__(self) -> int:
        return hash((self.w, self.as_tuple()))

    def __repr__(self) -> str:
        return f"ModuliAssignment({self.as_tuple()})"


class CellModuli:
    """C_v = p^exponent_v for each vertex."""

    def __init__(self, assignment: ModuliAssignment, exponents: Dict[Vertex, int]):
        self.assignment = assignment
        self.exponents = exponents

    def modulus(self, v: Vertex, p: int) -> int:
        return p ** self.exponents[v]

    def values(self, v: Vertex, p: int) -> np.ndarray:
        """Admissible c_v: all residues mod C_v, or the units when m_v > 0."""
        values = np.arange(self.modulus(v, p), dtype=np.int64)
        if self.assignment.m[v] > 0:
            values = values[values % p != 0]
        return values

    def count(self, p: int) -> int:
        total = 1
        for v, e in self.exponents.items():
            total *= p ** e - (p ** (e - 1) if self.assignment.m[v] > 0 else 0)
        return total


class AssignmentRecord(BaseModel):
    m: List[int] = Field(..., description="Moduli assignment in the gamma order of the vertices.")
    cell_count: int = Field(..., description="Number of representatives of this assignment.")
    magnitude: float = Field(..., description="Absolute value of this piece of the sum.")


class SumRecord(BaseModel):
    schema_version: int = Field(1, serialization_alias="schema", description="Output schema version.")
    p: int
    blocks: List[int]
    r: List[int]
    psi: List[int]
    psi_prime: List[int]
    level: int = Field(0, description="Gamma_0(p^level) congruence level; 0 is the full group.")
    assignment: Optional[List[int]] = Field(None, description="Set when the record is a single assignment.")
    modulus: int = Field(..., description="q with the value in Z[e(1/q)].")
    value_coefficients: Dict[int, int] = Field(..., description="Sparse coefficients n_t of sum n_t e(t/q).")
    value_integer: Optional[int] = Field(None, description="The value when it is a rational integer.")
    value_real: float
    value_imag: float
    magnitude: float
    magnitude_error: float
    cell_count: int
    elapsed_ms: Optional[float] = None
    breakdown: Optional[List[AssignmentRecord]] = None


class SumResult:
    def __init__(self, value: CyclotomicValue, cell_count: int, breakdown: Optional[List[AssignmentRecord]] = None,
                 elapsed_ms: float = 0.0):
        self.value = value
        self.cell_count = cell_count
        self.breakdown = breakdown or []
        self.elapsed_ms = elapsed_ms
        self.magnitude, self.magnitude_error = value.magnitude()

    def equals(self, other: "SumResult") -> bool:
        return self.value.equals(other.value)

    def record(self, w: WeylElement, p: int, r: Sequence[int], chars: CharacterPair, level: int = 0,
               assignment: Optional[ModuliAssignment] = None, timing: bool = False,
               breakdown: bool = False) -> SumRecord:
        value = self.value.compress()
        z, _ = value.complex_value()
        return SumRecord(
            p=p, blocks=list(w.blocks), r=list(r), psi=list(chars.psi), psi_prime=list(chars.psi_prime),
            level=level, assignment=list(assignment.as_tuple()) if assignment else None,
            modulus=value.modulus, value_coefficients=value.sparse(), value_integer=value.integer_value(),
            value_real=z.real, value_imag=z.imag, magnitude=self.magnitude, magnitude_error=self.magnitude_error,
            cell_count=self.cell_count, elapsed_ms=self.elapsed_ms if timing else None,
            breakdown=self.breakdown if breakdown else None,
        )

    def __repr__(self) -> str:
        return f"SumResult(|value|={self.magnitude:.6g}, cells={self.cell_count})"


def moduli_assignments(w: WeylElement, r: Sequence[int]) -> List[ModuliAssignment]:
    """All m >= 0 on I_w with sum over (i, j), i <= l <= j, of m_ij equal to r_l, in lexicographic order."""
    r = tuple(r)
    if len(r) != w.N:
        raise PreconditionError(f"{w} needs an exponent vector of length {w.N}, got {r}.")
    order = w.index_set.ordered
    # Levels still reachable from position k onwards.
    reachable = [set() for _ in range(len(order) + 1)]
    for k in range(len(order) - 1, -1, -1):
        i, j = order[k]
        reachable[k] = reachable[k + 1] | set(range(i, j + 1))
    results: List[ModuliAssignment] = []
    remaining = list(r)
    chosen: List[int] = []

    def extend(k: int) -> None:
        if any(remaining[l - 1] > 0 and l not in reachable[k] for l in range(1, len(r) + 1)):
            return
        if k == len(order):
            results.append(ModuliAssignment.from_values(w, chosen))
            return
        i, j = order[k]
        cap = min(remaining[l - 1] for l in range(i, j + 1))
        for x in range(cap + 1):
            for l in range(i, j + 1):
                remaining[l - 1] -= x
            chosen.append(x)
            extend(k + 1)
            chosen.pop()
            for l in range(i, j + 1):
                remaining[l - 1] += x

    if order:
        extend(0)
    elif not any(r):
        results.append(ModuliAssignment(w, {}))
    return results


def cell_moduli(w: WeylElement, m: ModuliAssignment) -> CellModuli:
    comp = w.composition
    exponents = {}
    for (i, j) in w.index_set.ordered:
        upper = comp.kappa(w.index_set.level_of((i, j)) + 1) - 1
        exponents[(i, j)] = (
            sum(m.m[(a, j)] for a in range(1, i + 1)) + sum(m.m[(i, a)] for a in range(j + 1, upper + 1))
        )
    return CellModuli(m, exponents)


def representative_space(w: WeylElement, m: ModuliAssignment, p: int) -> Iterator[Tuple[int, ...]]:
    moduli = cell_moduli(w, m)
    return itertools.product(*(moduli.values(v, p).tolist() for v in w.index_set.ordered))


def representative_count(w: WeylElement, m: ModuliAssignment, p: int) -> int:
    return cell_moduli(w, m).count(p)


def _inverses(values: np.ndarray, positive: bool, p: int, K: int) -> np.ndarray:
    if not positive:
        return np.zeros_like(values)
    modulus = p ** K
    return np.array([pow(int(x), -1, modulus) for x in values], dtype=np.int64)


def _compile(terms: List[PhaseTerm], chars: CharacterPair, p: int, K: int,
             axis: Mapping[Vertex, int]) -> List[Tuple[int, Optional[int], Optional[int]]]:
    """Terms as (coefficient mod p^K, c-axis, d-axis); integral terms are dropped."""
    q = p ** K
    compiled = []
    for term in terms:
        weight = chars.value(term.character, term.index)
        if weight == 0 or term.exponent >= 0:
            continue
        if -term.exponent > K:
            raise PrecisionError(f"Phase term {term} exceeds the working modulus {p}^{K}.")
        coefficient = (weight * p ** (K + term.exponent)) % q
        c_axis = axis[term.c_vertex] if term.c_vertex else None
        d_axis = axis[term.d_vertex] if term.d_vertex else None
        compiled.append((coefficient, c_axis, d_axis))
    return compiled


def _along(array: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = -1
    return array.reshape(shape)


def _chunk_coefficients(c_arrays: List[np.ndarray], d_arrays: List[np.ndarray], compiled, q: int) -> np.ndarray:
    ndim = len(c_arrays)
    shape = tuple(len(a) for a in c_arrays)
    phase = np.zeros(shape, dtype=np.int64)
    for coefficient, c_axis, d_axis in compiled:
        term = np.int64(coefficient)
        if c_axis is not None:
            term = (term * _along(c_arrays[c_axis], c_axis, ndim)) % q
        if d_axis is not None:
            term = (term * _along(d_arrays[d_axis], d_axis, ndim)) % q
        phase += term
        phase %= q
    return np.bincount(phase.ravel(), minlength=q).astype(np.int64)


def evaluate_cell_sum(w: WeylElement, m: ModuliAssignment, chars: CharacterPair, p: int,
                      budget: int = DEFAULT_BUDGET, threads: int = 1, K: Optional[int] = None) -> SumResult:
    """Kl_p(m, psi, psi', w): the sum over representatives of one moduli assignment."""
    if length(w) == 0:
        raise CompositionError(f"{w} is the identity; it has no Kloosterman sum.")
    if len(chars) != w.N:
        raise PreconditionError(f"{w} needs characters of length {w.N}, got {len(chars)}.")
    started = time.perf_counter()
    K = m.height if K is None else K
    q = p ** K
    if q > MAX_MODULUS:
        raise BudgetExceededError(q, MAX_MODULUS, "cyclotomic coefficients")
    order = w.index_set.ordered
    moduli = cell_moduli(w, m)
    c_arrays = [moduli.values(v, p) for v in order]
    count = math.prod(len(a) for a in c_arrays)
    if count > budget:
        raise BudgetExceededError(count, budget)
    d_arrays = [_inverses(a, m.m[v] > 0, p, K) for v, a in zip(order, c_arrays)]
    axis = {v: k for k, v in enumerate(order)}
    compiled = _compile(phase_terms(build_diagram(w), m.m), chars, p, K, axis)

    rest = count // len(c_arrays[0]) if count else 0
    step = max(1, CHUNK_ELEMENTS // max(rest, 1))
    lead_c, lead_d = c_arrays[0], d_arrays[0]
    chunks = [slice(start, start + step) for start in range(0, len(lead_c), step)]

    def run(chunk: slice) -> np.ndarray:
        return _chunk_coefficients([lead_c[chunk]] + c_arrays[1:], [lead_d[chunk]] + d_arrays[1:], compiled, q)

    value = CyclotomicValue(q)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run, chunks))
    else:
        partials = [run(chunk) for chunk in chunks]
    for partial in partials:
        value.coefficients += partial
    elapsed = (time.perf_counter() - started) * 1000.0
    Console.debug("Sum", f"{w.blocks} m={m.as_tuple()} cells={count} chunks={len(chunks)} {elapsed:.1f} ms")
    result = SumResult(value, count, elapsed_ms=elapsed)
    result.breakdown = [AssignmentRecord(m=list(m.as_tuple()), cell_count=count, magnitude=result.magnitude)]
    return result


def _combine(w: WeylElement, assignments: List[ModuliAssignment], chars: CharacterPair, p: int, K: int,
             budget: int, threads: int) -> SumResult:
    started = time.perf_counter()
    total = sum(representative_count(w, m, p) for m in assignments)
    if total > budget:
        raise BudgetExceededError(total, budget)
    value = CyclotomicValue(p ** K)
    breakdown = []
    for m in assignments:
        piece = evaluate_cell_sum(w, m, chars, p, budget, threads, K=K)
        value.coefficients += piece.value.coefficients
        breakdown.extend(piece.breakdown)
    return SumResult(value, total, breakdown, (time.perf_counter() - started) * 1000.0)


def evaluate_sum(w: WeylElement, r: Sequence[int], chars: CharacterPair, p: int,
                 budget: int = DEFAULT_BUDGET, threads: int = 1) -> SumResult:
    """Kl_p(psi, psi', fc * w) as the sum of its assignment pieces."""
    modulus = Modulus(p, r)
    assignments = moduli_assignments(w, modulus.r)
    Console.debug("Sum", f"{w.blocks} r={modulus.r}: {len(assignments)} assignments")
    return _combine(w, assignments, chars, p, modulus.height, budget, threads)


def sign_correction(w: WeylElement) -> Tuple[int, ...]:
    """D with J w_s J = D * (w^-1)_s for the signed representatives."""
    n = w.dimension
    flipped = w.signed_matrix.transpose().anti_transpose()
    D = flipped @ inverse_element(w).signed_matrix.transpose()
    signs = tuple(int(D[i, i]) for i in range(1, n + 1))
    if any(D[i, j] != 0 for i in range(1, n + 1) for j in range(1, n + 1) if i != j):
        raise CompositionError(f"Sign correction of {w} is not diagonal.")
    return signs


def gamma0_transform(w: WeylElement, r: Sequence[int], chars: CharacterPair
                     ) -> Tuple[WeylElement, Tuple[int, ...], CharacterPair]:
    """Data of the equivalent sum over w^-1 with the congruence moved to the first column."""
    D = sign_correction(w)
    N = w.N
    psi = tuple(-chars.psi[N - i] * D[i - 1] * D[i] for i in range(1, N + 1))
    psi_prime = tuple(-x for x in reversed(chars.psi_prime))
    return inverse_element(w), tuple(reversed(tuple(r))), CharacterPair(psi, psi_prime)


def evaluate_sum_gamma0(w: WeylElement, r: Sequence[int], chars: CharacterPair, p: int, level: int,
                        budget: int = DEFAULT_BUDGET, threads: int = 1) -> SumResult:
    """The sum restricted to Gamma_0(p^level)."""
    if level < 0:
        raise PreconditionError(f"Level exponent must be nonnegative, got {level}.")
    Modulus(p, r)
    w_inv, r_inv, transformed = gamma0_transform(w, r, chars)
    anchor = simple_root_position(w_inv)
    assignments = [m for m in moduli_assignments(w_inv, r_inv) if m.m[anchor] >= level]
    return _combine(w_inv, assignments, transformed, p, sum(r_inv), budget, threads)


def classical_kloosterman(mm: int, nn: int, c: int) -> SumResult:
    """S(m, n; c) by definition."""
    if c < 1:
        raise PreconditionError(f"Modulus must be positive, got {c}.")
    if c == 1:
        return SumResult(CyclotomicValue.integer(1), 1)
    residues = [(mm * x + nn * pow(x, -1, c)) % c for x in range(1, c) if math.gcd(x, c) == 1]
    return SumResult(CyclotomicValue.from_residues(c, residues), len(residues))


def hyper_kloosterman(a: int, k: int, p: int, r: int) -> SumResult:
    """Sum over unit x_1..x_k mod p^r with prod x_i = a of Psi((x_1 + ... + x_k) / p^r)."""
    if a % p == 0:
        raise PreconditionError(f"{a} is not a unit modulo {p}.")
    if k < 1:
        raise PreconditionError(f"Dimension must be positive, got {k}.")
    q = p ** r
    units = [x for x in range(q) if x % p] if q > 1 else [0]
    residues = []
    for head in itertools.product(units, repeat=k - 1):
        product = math.prod(head) % q if q > 1 else 0
        last = (a * pow(product, -1, q)) % q if q > 1 else 0
        residues.append((sum(head) + last) % q)
    return SumResult(CyclotomicValue.from_residues(q, residues), len(residues))


def hyper_identity_check(N: int, r0: int, chars: CharacterPair, p: int, budget: int = DEFAULT_BUDGET) -> bool:
    """
    For blocks (1, N) and r_j = (N + 1 - j) r0 the sum equals
    p^(r0 N (N-1) / 2) times the (N+1)-dimensional hyper-Kloosterman sum of
    psi_1 ... psi_N psi'_N modulo p^r0. All characters must be units.
    """
    if any(x % p == 0 for x in chars.psi + (chars.psi_prime[-1],)):
        raise PreconditionError("The hyper-Kloosterman identification needs unit characters.")
    w = make_admissible((1, N))
    r = tuple((N + 1 - j) * r0 for j in range(1, N + 1))
    total = evaluate_sum(w, r, chars, p, budget)
    a = math.prod(chars.psi) * chars.psi_prime[-1]
    hyper = hyper_kloosterman(a, N + 1, p, r0)
    return total.value.equals(hyper.value.scaled(p ** (r0 * N * (N - 1) // 2)))


def scaling_identity_check(w: WeylElement, m: ModuliAssignment, chars: CharacterPair, p: int, k: int,
                           budget: int = DEFAULT_BUDGET) -> bool:
    """
    Kl(m, psi, psi') = p^-((N+1-k)k) Kl(m~, psi~, psi'~) for the long element.

    m~ raises m_ij by one where j - i = k - 1, and both psi_{N+1-k} and
    psi'_{N+1-k} are multiplied by p.
    """
    N = w.N
    if any(b != 1 for b in w.blocks):
        raise PreconditionError(f"The scaling identity is stated for the long element, got {w.blocks}.")
    if any(x < 1 for x in m.m.values()):
        raise PreconditionError(f"Every m_ij must be positive, got {m.as_tuple()}.")
    if not 1 <= k <= N:
        raise PreconditionError(f"k must lie in 1..{N}, got {k}.")
    raised = ModuliAssignment(w, {(i, j): x + (1 if j - i == k - 1 else 0) for (i, j), x in m.m.items()})
    psi = list(chars.psi)
    psi_prime = list(chars.psi_prime)
    psi[N - k] *= p
    psi_prime[N - k] *= p
    lhs = evaluate_cell_sum(w, m, chars, p, budget)
    rhs = evaluate_cell_sum(w, raised, CharacterPair(psi, psi_prime), p, budget)
    return lhs.value.scaled(p ** ((N + 1 - k) * k)).equals(rhs.value)


def inversion_identity_check(w: WeylElement, r: Sequence[int], chars: CharacterPair, p: int,
                             budget: int = DEFAULT_BUDGET) -> bool:
    """Kl(psi, psi', n) against Kl'(-psi', -psi, n^-1), both by the definition-level oracle."""
    from .Oracle import oracle_sum, oracle_sum_prime

    modulus = Modulus(p, r)
    lhs = oracle_sum(w, modulus.r, p, chars, budget=budget)
    n_inverse = (modulus.fc() @ w.signed_matrix).inverse()
    swapped = CharacterPair([-x for x in chars.psi_prime], [-x for x in chars.psi])
    rhs = oracle_sum_prime(n_inverse, inverse_element(w), p, swapped, bound=modulus.height, budget=budget)
    return lhs.value.equals(rhs.value)
