"""
Bruhat factorization of the cell representatives b(a) = prod b_alpha(a_gamma).

Three ways to get the factors L, C, R are provided:

* ``bruhat_factorize`` eliminates directly over exact rationals;
* ``path_formula_entries`` builds them for two-block elements from sums over
  minimal paths in the vertex diagram;
* ``recursion_entries`` assembles the superdiagonals and central factor of a
  multi-block element from its top-block factorization.
"""
import random
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .Diagram import Diagram, EndpointRule, MinimalPath, build_diagram, minimal_paths
from .Errors import CellMembershipError, CompositionError, PreconditionError
from .PadicArith import PadicScalar, RationalMatrix, character_residue, mod_inverse
from .WeylElement import Vertex, WeylElement, factor_top_blocks, word_roots


class CellCoordinates:
    """
    Coordinates a_v = c_v p^(-m_v) on the vertices of I_w.

    d_v is the inverse of c_v when m_v > 0 and 0 otherwise. With
    ``inverse_exponent=None`` the inverse is the exact rational 1/c_v; with an
    exponent K it is the integer representative modulo p^K.
    """

    def __init__(self, p: int, m: Mapping[Vertex, int], c: Mapping[Vertex, int],
                 inverse_exponent: Optional[int] = None):
        if set(m) != set(c):
            raise PreconditionError("m and c must be given on the same vertices.")
        for v, exponent in m.items():
            if exponent < 0:
                raise PreconditionError(f"m{v} = {exponent} is negative.")
            if exponent > 0 and c[v] % p == 0:
                raise PreconditionError(f"c{v} = {c[v]} must be a unit when m{v} = {exponent}.")
        self.p = p
        self.m: Dict[Vertex, int] = dict(m)
        self.c: Dict[Vertex, int] = dict(c)
        self.inverse_exponent = inverse_exponent
        self.d: Dict[Vertex, Fraction] = {v: self._inverse(v) for v in m}

    def _inverse(self, v: Vertex):
        if self.m[v] == 0:
            return Fraction(0)
        if self.inverse_exponent is None:
            return Fraction(1, self.c[v])
        return Fraction(mod_inverse(self.c[v], self.p, self.inverse_exponent))

    @classmethod
    def from_sequences(cls, w: WeylElement, p: int, m: Sequence[int], c: Sequence[int],
                       inverse_exponent: Optional[int] = None) -> "CellCoordinates":
        order = w.index_set.ordered
        if len(m) != len(order) or len(c) != len(order):
            raise PreconditionError(f"{w} needs {len(order)} coordinates, got {len(m)} and {len(c)}.")
        return cls(p, dict(zip(order, m)), dict(zip(order, c)), inverse_exponent)

    def a(self, v: Vertex) -> PadicScalar:
        return PadicScalar(self.c[v], self.m[v], self.p)

    def restricted(self, vertices) -> "CellCoordinates":
        vertices = list(vertices)
        return CellCoordinates(self.p, {v: self.m[v] for v in vertices}, {v: self.c[v] for v in vertices},
                               self.inverse_exponent)

    def __repr__(self) -> str:
        return f"CellCoordinates(p={self.p}, m={self.m}, c={self.c})"


class BruhatTriple:
    def __init__(self, L: RationalMatrix, C: RationalMatrix, R: RationalMatrix):
        self.L = L
        self.C = C
        self.R = R

    def product(self) -> RationalMatrix:
        return self.L @ self.C @ self.R

    def __eq__(self, other) -> bool:
        if not isinstance(other, BruhatTriple):
            return NotImplemented
        return self.L == other.L and self.C == other.C and self.R == other.R

    __hash__ = None

    def __repr__(self) -> str:
        return f"BruhatTriple(L={self.L}, C={self.C}, R={self.R})"


class RecursionEntries:
    """The superdiagonal of L, selected entries of R and the full central factor."""

    def __init__(self, left: Dict[int, Fraction], right: Dict[Tuple[int, int], Fraction], central: RationalMatrix):
        self.left = left
        self.right = right
        self.central = central

    @classmethod
    def from_triple(cls, triple: BruhatTriple) -> "RecursionEntries":
        n = triple.L.size
        right = {(i, j): triple.R[i, j] for i in range(1, n + 1) for j in range(i + 1, n + 1)}
        return cls({i: triple.L[i, i + 1] for i in range(1, n)}, right, triple.C)

    def mismatches(self, reference: "RecursionEntries") -> List[str]:
        """Entries of self that differ from reference; only the keys present in self are compared."""
        found = [f"L[{i},{i + 1}]" for i, x in self.left.items() if reference.left.get(i) != x]
        found += [f"R[{i},{j}]" for (i, j), x in self.right.items() if reference.right.get((i, j)) != x]
        if not self.central == reference.central:
            found.append("C")
        return found


def b_alpha(root: Vertex, a: PadicScalar, dimension: int) -> RationalMatrix:
    """phi_alpha of ((0,-1),(1,a)) for integral a, else of ((1/c, 0), (p^m, c)) with a = c p^-m."""
    i, j = root
    if a.is_integral():
        block = ((0, -1), (1, a.value))
    else:
        c = a.numerator
        block = ((Fraction(1, c), 0), (a.p ** a.exponent, c))
    matrix = RationalMatrix.identity(dimension)
    for x, row in zip((i, j + 1), block):
        for y, value in zip((i, j + 1), row):
            matrix[x, y] = value
    return matrix


def b_product(w: WeylElement, cell: CellCoordinates, word: Optional[Sequence[int]] = None) -> RationalMatrix:
    word = w.expression if word is None else tuple(word)
    roots = w.index_set.ordered if word == w.expression else tuple(word_roots(word))
    if len(roots) != len(cell.m):
        raise PreconditionError(f"Cell has {len(cell.m)} coordinates, the word has length {len(roots)}.")
    matrix = RationalMatrix.identity(w.dimension)
    for i, gamma in zip(word, roots):
        if gamma not in cell.m:
            raise PreconditionError(f"Cell has no coordinate at {gamma}.")
        matrix = matrix @ b_alpha((i, i), cell.a(gamma), w.dimension)
    return matrix


def bruhat_factorize(M: RationalMatrix, w: WeylElement) -> BruhatTriple:
    """
    Splits M = L C R with L upper unipotent, C monomial on the permutation of w
    and R in U_w, by peeling rows from the bottom.
    """
    n = M.size
    if n != w.dimension:
        raise PreconditionError(f"Matrix of size {n} does not match {w}.")
    sigma = w.permutation
    column_of = {row: column for column, row in enumerate(sigma, start=1)}
    L = RationalMatrix.identity(n)
    C = RationalMatrix.zeros(n)
    R = RationalMatrix.identity(n)
    reduced: Dict[int, List[Fraction]] = {}
    for r in range(n, 0, -1):
        residual = M.row(r)
        for j in sorted(reduced, key=lambda row: column_of[row]):
            pivot = column_of[j]
            factor = residual[pivot - 1] / reduced[j][pivot - 1]
            if factor:
                L[r, j] = factor
                residual = [x - factor * y for x, y in zip(residual, reduced[j])]
        a = column_of[r]
        for column in range(1, a):
            if residual[column - 1] != 0:
                raise CellMembershipError(
                    f"Row {r} keeps a nonzero entry in column {column} left of its pivot column {a}.", (r, column))
        scale = residual[a - 1]
        if scale == 0:
            raise CellMembershipError(f"Pivot at row {r}, column {a} vanishes.", (r, a))
        C[r, a] = scale
        for column in range(a + 1, n + 1):
            R[a, column] = residual[column - 1] / scale
        reduced[r] = residual
    triple = BruhatTriple(L, C, R)
    if triple.product() != M:
        raise CellMembershipError(f"Factorization of {w} does not reproduce the matrix.")
    return triple


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def _upper_path_sum(paths: List[MinimalPath], cell: CellCoordinates, shift: int) -> Fraction:
    """Sum over paths of prod_rd c * prod_lu d * p^(shift - sum_path m)."""
    total = Fraction(0)
    p = Fraction(cell.p)
    for path in paths:
        term = Fraction(1)
        for v in path.members("rd"):
            term *= cell.c[v]
        for v in path.members("lu"):
            term *= cell.d[v]
        total += term * p ** (shift - sum(cell.m[v] for v in path.vertices))
    return total


def _lower_path_sum(paths: List[MinimalPath], cell: CellCoordinates, shift: int) -> Fraction:
    """Sum over paths of prod_ru c * prod_ld d * prod_lr (cd - 1) * p^(shift - sum_lr m + sum_du m)."""
    total = Fraction(0)
    p = Fraction(cell.p)
    for path in paths:
        term = Fraction(1)
        for v in path.members("ru"):
            term *= cell.c[v]
        for v in path.members("ld"):
            term *= cell.d[v]
        for v in path.members("lr"):
            term *= cell.c[v] * cell.d[v] - 1
        exponent = shift - sum(cell.m[v] for v in path.members("lr")) + sum(cell.m[v] for v in path.members("du"))
        total += term * p ** exponent
    return total


def path_formula_entries(w: WeylElement, cell: CellCoordinates, diagram: Optional[Diagram] = None) -> BruhatTriple:
    if len(w.blocks) != 2:
        raise CompositionError(f"Path formulas need a two-block element, got {w.blocks}.")
    d = diagram or build_diagram(w)
    k, size = w.blocks[0], w.dimension
    n = size - 1
    rest = size - k
    p = Fraction(cell.p)
    m = cell.m

    L = RationalMatrix.identity(size)
    C = RationalMatrix.zeros(size)
    R = RationalMatrix.identity(size)

    for i in range(1, rest + 1):
        for j in range(1, k + 1):
            paths = minimal_paths(d, (1, k + i - 1), (j, n), EndpointRule.X)
            R[i, rest + j] = _sign(i + rest) * _upper_path_sum(paths, cell, 0)

    for i in range(1, k + 1):
        for j in range(i, k + 1):
            paths = minimal_paths(d, (i, k), (j, n), EndpointRule.Y)
            L[i, j] = _upper_path_sum(paths, cell, sum(m[(j, l)] for l in range(k, n + 1)))

    for j in range(1, rest + 1):
        column_mass = sum(m[(l, j + k - 1)] for l in range(1, k + 1))
        for i in range(1, k + 1):
            paths = minimal_paths(d, (1, j + k - 1), (i, k), EndpointRule.Z)
            L[i, k + j] = _lower_path_sum(paths, cell, -column_mass)
        for i in range(1, j + 1):
            paths = minimal_paths(d, (1, j + k - 1), (k, i + k - 1), EndpointRule.W)
            L[k + i, k + j] = _lower_path_sum(paths, cell, -column_mass)

    for i in range(1, k + 1):
        C[i, rest + i] = _sign(rest) * p ** (-sum(m[(i, l)] for l in range(k, n + 1)))
    for i in range(1, rest + 1):
        C[k + i, i] = p ** sum(m[(l, i + k - 1)] for l in range(1, k + 1))
    return BruhatTriple(L, C, R)


def left_correction_exponent(m: Mapping[Vertex, int], i: int, n_plus_one: int, N: int) -> int:
    """Exponent of p scaling the inner superdiagonal entry L_{i,i+1} into the outer left factor."""
    return sum(m.get((i + 1, j), 0) - m.get((i, j), 0) for j in range(n_plus_one, N + 1))


def cross_entry(cell: CellCoordinates, k: int, last_column: int) -> Fraction:
    """R_{M, M+1} linking the outer factor to the inner two-block factor."""
    p = Fraction(cell.p)
    m, c, d = cell.m, cell.c, cell.d
    total = Fraction(0)
    running = 0
    for j in range(1, k + 2):
        inverse = d[(j, k)] if j <= k else Fraction(1)
        total += c[(j, last_column)] * inverse * p ** (running - m[(j, last_column)])
        if j <= k:
            running += m[(j, k)] - m[(j, last_column)]
    return total


def recursion_entries(w: WeylElement, cell: CellCoordinates) -> RecursionEntries:
    if len(w.blocks) < 3:
        raise CompositionError(f"Recursion needs at least three blocks, got {w.blocks}; use path_formula_entries.")
    split = factor_top_blocks(w)
    w_prime = split.w_prime
    outer_cell = cell.restricted(w_prime.index_set.ordered)
    if len(w_prime.blocks) >= 3:
        outer = recursion_entries(w_prime, outer_cell)
    else:
        outer = RecursionEntries.from_triple(path_formula_entries(w_prime, outer_cell))
    two_block = split.two_block()
    inner = path_formula_entries(two_block, cell.restricted(two_block.index_set.ordered))

    N, M, n_plus_one = w.N, split.offset, split.n_plus_one
    p = Fraction(cell.p)
    left = {}
    for i in range(1, N + 1):
        value = outer.left[i]
        if i <= n_plus_one - 1:
            value += inner.L[i, i + 1] * p ** left_correction_exponent(cell.m, i, n_plus_one, N)
        left[i] = value

    central = outer.central @ RationalMatrix.direct_sum(RationalMatrix.identity(M), inner.C)

    right = {(i, i + 1): outer.right[(i, i + 1)] for i in range(1, M)}
    right[(M, M + 1)] = cross_entry(cell, split.k, n_plus_one + split.f - 1)
    for a in range(1, n_plus_one + 1):
        for b in range(a + 1, n_plus_one + 1):
            right[(M + a, M + b)] = inner.R[a, b]
    return RecursionEntries(left, right, central)


def random_cell(w: WeylElement, p: int, max_m: int, rng: random.Random) -> CellCoordinates:
    m, c = {}, {}
    for v in w.index_set.ordered:
        m[v] = rng.randint(0, max_m)
        if m[v] == 0:
            c[v] = rng.randrange(0, p ** 2)
        else:
            c[v] = rng.choice([x for x in range(1, p ** (m[v] + 1)) if x % p])
    return CellCoordinates(p, m, c)


def bruhat_phase_residue(w: WeylElement, cell: CellCoordinates, psi: Sequence[int], psi_prime: Sequence[int],
                         K: int) -> int:
    """Psi(sum psi_i L_{i,i+1} + sum psi'_i R_{i,i+1}) read off the exact factorization, as a residue mod p^K."""
    triple = bruhat_factorize(b_product(w, cell), w)
    argument = sum(
        (psi[i - 1] * triple.L[i, i + 1] + psi_prime[i - 1] * triple.R[i, i + 1] for i in range(1, w.dimension)),
        Fraction(0),
    )
    return character_residue(argument, cell.p, K)
