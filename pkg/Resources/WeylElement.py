"""
Admissible Weyl elements of GL_{N+1}.

An admissible element is a block anti-diagonal matrix of identity blocks
I_{k_1}, ..., I_{k_n}, listed from the top-right corner down to the
bottom-left. Vertices (i, j) stand for the positive root e_i - e_{j+1}.
"""
from functools import cached_property
from typing import Dict, Iterator, List, Sequence, Tuple

from .Errors import CompositionError
from .PadicArith import RationalMatrix

Vertex = Tuple[int, int]

_S = ((0, -1), (1, 0))


class BlockComposition:
    def __init__(self, blocks: Sequence[int]):
        blocks = tuple(int(b) for b in blocks)
        if not blocks:
            raise CompositionError("A block composition needs at least one block.")
        if any(b < 1 for b in blocks):
            raise CompositionError(f"Block sizes must be positive, got {blocks}.")
        self.blocks: Tuple[int, ...] = blocks
        self.dimension: int = sum(blocks)

    @property
    def N(self) -> int:
        return self.dimension - 1

    def kappa(self, l: int) -> int:
        """Partial sum k_1 + ... + k_l, with kappa(0) = 0."""
        return sum(self.blocks[:l])

    def __len__(self) -> int:
        return len(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, BlockComposition) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __repr__(self) -> str:
        return f"BlockComposition{self.blocks}"


class IndexSet:
    """The vertices of I_w, kept in the order of the roots gamma_1, ..., gamma_l."""

    def __init__(self, ordered: Sequence[Vertex], levels: Dict[int, List[Vertex]]):
        self.ordered: Tuple[Vertex, ...] = tuple(ordered)
        self.levels: Dict[int, List[Vertex]] = levels
        self._level_of = {v: l for l, vs in levels.items() for v in vs}
        self._position = {v: k for k, v in enumerate(self.ordered)}

    def level_of(self, vertex: Vertex) -> int:
        return self._level_of[vertex]

    def position(self, vertex: Vertex) -> int:
        return self._position[vertex]

    def __iter__(self) -> Iterator[Vertex]:
        return iter(self.ordered)

    def __len__(self) -> int:
        return len(self.ordered)

    def __contains__(self, vertex) -> bool:
        return vertex in self._position

    def __repr__(self) -> str:
        return f"IndexSet({list(self.ordered)})"


class TwoBlockFactor:
    """One link of the top-block factorization: the two-block element (k, size - k) placed at offset."""

    def __init__(self, k: int, size: int, offset: int):
        self.k = k
        self.size = size
        self.offset = offset

    @property
    def n(self) -> int:
        return self.size - 1

    def vertices(self) -> List[Vertex]:
        return [(i, j) for i in range(1, self.k + 1) for j in range(self.k, self.size)]

    def __repr__(self) -> str:
        return f"TwoBlockFactor(k={self.k}, size={self.size}, offset={self.offset})"


class TopBlockSplit:
    def __init__(self, w_prime: "WeylElement", k: int, n_plus_one: int, f: int):
        self.w_prime = w_prime
        self.k = k
        self.n_plus_one = n_plus_one
        self.f = f

    @property
    def offset(self) -> int:
        return self.w_prime.dimension - self.n_plus_one

    def two_block(self) -> "WeylElement":
        return make_admissible((self.k, self.n_plus_one - self.k))

    def __repr__(self) -> str:
        return f"TopBlockSplit(w'={self.w_prime.blocks}, k={self.k}, n+1={self.n_plus_one}, f={self.f})"


class WeylElement:
    def __init__(self, composition: BlockComposition):
        self.composition = composition

    @property
    def blocks(self) -> Tuple[int, ...]:
        return self.composition.blocks

    @property
    def dimension(self) -> int:
        return self.composition.dimension

    @property
    def N(self) -> int:
        return self.composition.N

    @cached_property
    def permutation(self) -> Tuple[int, ...]:
        """sigma with w e_j = e_sigma(j); entry j-1 holds sigma(j)."""
        sigma = [0] * self.dimension
        for a in range(1, len(self.blocks) + 1):
            top = self.composition.kappa(a - 1)
            first_column = self.dimension - self.composition.kappa(a)
            for t in range(1, self.blocks[a - 1] + 1):
                sigma[first_column + t - 1] = top + t
        return tuple(sigma)

    def permutation_matrix(self) -> RationalMatrix:
        matrix = RationalMatrix.zeros(self.dimension)
        for column, row in enumerate(self.permutation, start=1):
            matrix[row, column] = 1
        return matrix

    @cached_property
    def expression(self) -> Tuple[int, ...]:
        return tuple(_inductive_expression(self.blocks))

    @cached_property
    def signed_matrix(self) -> RationalMatrix:
        return word_matrix(self.expression, self.dimension)

    @cached_property
    def index_set(self) -> IndexSet:
        return _index_set(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, WeylElement) and self.composition == other.composition

    def __hash__(self) -> int:
        return hash(self.composition)

    def __repr__(self) -> str:
        return f"WeylElement(blocks={self.blocks})"


def make_admissible(blocks: Sequence[int]) -> WeylElement:
    return WeylElement(BlockComposition(blocks))


def length(w: WeylElement) -> int:
    blocks = w.blocks
    return sum(blocks[a] * blocks[b] for a in range(len(blocks)) for b in range(a + 1, len(blocks)))


def reduced_expression(w: WeylElement) -> Tuple[int, ...]:
    return w.expression


def index_set(w: WeylElement) -> IndexSet:
    return w.index_set


def inverse_element(w: WeylElement) -> WeylElement:
    return make_admissible(tuple(reversed(w.blocks)))


def simple_reflection(i: int, dimension: int) -> RationalMatrix:
    return RationalMatrix.embedded(dimension, i, _S)


def word_matrix(word: Sequence[int], dimension: int) -> RationalMatrix:
    matrix = RationalMatrix.identity(dimension)
    for i in word:
        matrix = matrix @ simple_reflection(i, dimension)
    return matrix


def _inductive_expression(blocks: Sequence[int], offset: int = 0) -> List[int]:
    # The lower blocks first, then the top block moved across them row by row.
    if len(blocks) <= 1:
        return []
    N = sum(blocks) - 1
    k1 = blocks[0]
    inner = _inductive_expression(blocks[1:], offset + k1)
    tail = [offset + t + j for t in range(k1, 0, -1) for j in range(N - k1 + 1)]
    return inner + tail


def word_roots(word: Sequence[int]) -> List[Vertex]:
    """The roots gamma_j = s_{i_1} ... s_{i_{j-1}} (alpha_{i_j}) as vertices."""
    vertices = []
    for position, i in enumerate(word):
        a, b = i, i + 1
        for s in reversed(word[:position]):
            a = s + 1 if a == s else s if a == s + 1 else a
            b = s + 1 if b == s else s if b == s + 1 else b
        if a >= b:
            raise CompositionError(f"Word {tuple(word)} is not reduced at position {position + 1}.")
        vertices.append((a, b - 1))
    return vertices


def _index_set(w: WeylElement) -> IndexSet:
    comp = w.composition
    levels: Dict[int, List[Vertex]] = {l: [] for l in range(1, len(comp))}
    ordered = word_roots(w.expression)
    for i, j in ordered:
        level = next(
            (l for l in levels if i <= comp.kappa(l) <= j <= comp.kappa(l + 1) - 1),
            None,
        )
        if level is None:
            raise CompositionError(f"Vertex {(i, j)} lies in no level of {w}.")
        levels[level].append((i, j))
    return IndexSet(ordered, levels)


def factor_top_blocks(w: WeylElement) -> TopBlockSplit:
    blocks = w.blocks
    if len(blocks) < 3:
        raise CompositionError(f"Top-block factorization needs at least 3 blocks, got {blocks}.")
    n_plus_one = blocks[0] + blocks[1]
    return TopBlockSplit(make_admissible((n_plus_one,) + blocks[2:]), blocks[0], n_plus_one, blocks[2])


def factor_chain(w: WeylElement) -> List[TwoBlockFactor]:
    """The two-block factors for t = 1 .. n-1; factor t has top block kappa_t and size kappa_{t+1}."""
    comp = w.composition
    return [
        TwoBlockFactor(comp.kappa(t), comp.kappa(t + 1), comp.dimension - comp.kappa(t + 1))
        for t in range(1, len(comp))
    ]


def factorization_expression(w: WeylElement) -> Tuple[int, ...]:
    """expression(w') followed by the shifted two-block expression, applied recursively."""
    blocks = w.blocks
    if len(blocks) <= 2:
        return w.expression
    split = factor_top_blocks(w)
    inner = split.two_block().expression
    return factorization_expression(split.w_prime) + tuple(i + split.offset for i in inner)


def simple_root_position(w: WeylElement) -> Vertex:
    """The vertex carried by the single s_1 of the reduced expression."""
    positions = [k for k, i in enumerate(w.expression) if i == 1]
    if len(positions) != 1:
        raise CompositionError(f"{w} has {len(positions)} occurrences of s_1.")
    return w.index_set.ordered[positions[0]]
