"""
Vertex diagrams of an admissible Weyl element.

Each two-block factor of the element contributes a rectangular block of
vertices (i, j), 1 <= i <= k <= j <= size - 1. Rows grow upwards and columns
grow to the right. Blocks are laid out left to right with the outermost
factor first.

The plain diagram drives the path formulas of the Bruhat factors; the
numbered directed diagram (with dotted edges between blocks) drives the
phase of the Kloosterman sum.
"""
import itertools
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from .Errors import DiagramError
from .WeylElement import TwoBlockFactor, Vertex, WeylElement, factor_chain

_CLASS_NAMES = {
    frozenset("rd"): "rd",
    frozenset("lu"): "lu",
    frozenset("ld"): "ld",
    frozenset("ru"): "ru",
    frozenset("lr"): "lr",
    frozenset("du"): "du",
}


class EndpointRule(Enum):
    """Virtual neighbour directions assumed before the first and after the last path vertex."""

    X = ("d", "r")
    Y = ("l", "r")
    Z = ("d", "l")
    W = ("d", "u")

    def __init__(self, first: str, last: str):
        self.first = first
        self.last = last


class DiagramBlock:
    def __init__(self, t: int, factor: TwoBlockFactor, x_offset: int):
        self.t = t
        self.factor = factor
        self.x_offset = x_offset
        self.vertices: List[Vertex] = factor.vertices()

    @property
    def k(self) -> int:
        return self.factor.k

    @property
    def last_column(self) -> int:
        return self.factor.size - 1

    def x(self, column: float) -> float:
        return self.x_offset + column - self.k

    def __contains__(self, vertex) -> bool:
        i, j = vertex
        return 1 <= i <= self.k <= j <= self.last_column

    def __repr__(self) -> str:
        return f"DiagramBlock(t={self.t}, k={self.k}, columns {self.k}..{self.last_column})"


class DirectedEdge:
    """A numbered edge; source or target is None where the diagram leaves it open."""

    __slots__ = ("source", "target", "number", "kind", "block", "x", "y")

    def __init__(self, source: Optional[Vertex], target: Optional[Vertex], number: int, kind: str,
                 block: DiagramBlock, x: float, y: float):
        self.source = source
        self.target = target
        self.number = number
        self.kind = kind
        self.block = block
        self.x = x
        self.y = y

    @property
    def dotted(self) -> bool:
        return self.kind == "dotted"

    def __repr__(self) -> str:
        style = "..>" if self.dotted else "->"
        return f"{self.source} {style} {self.target} [{self.number}]"


class MinimalPath:
    def __init__(self, vertices: Tuple[Vertex, ...], classes: Dict[Vertex, str], rule: EndpointRule):
        self.vertices = vertices
        self.classes = classes
        self.rule = rule

    def members(self, kind: str) -> List[Vertex]:
        return [v for v in self.vertices if self.classes[v] == kind]

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return " -> ".join(f"{v}:{self.classes[v]}" for v in self.vertices)


class EdgeSets:
    def __init__(self, plain: Dict[int, List[DirectedEdge]], dotted: Dict[int, List[DirectedEdge]]):
        self.plain = plain
        self.dotted = dotted

    def E(self, i: int) -> List[DirectedEdge]:
        return self.plain.get(i, [])

    def E_prime(self, i: int) -> List[DirectedEdge]:
        return self.dotted.get(i, [])

    def all_edges(self) -> List[DirectedEdge]:
        return [e for edges in self.plain.values() for e in edges] + [e for edges in self.dotted.values() for e in edges]


class Diagram:
    def __init__(self, w: WeylElement, blocks: List[DiagramBlock]):
        self.w = w
        self.blocks = blocks
        self.vertices: List[Vertex] = [v for block in blocks for v in block.vertices]
        self.plain_edges: List[Tuple[Vertex, Vertex]] = []
        self.directed_edges: List[DirectedEdge] = []

    def block_of(self, vertex: Vertex) -> DiagramBlock:
        for block in self.blocks:
            if vertex in block:
                return block
        raise DiagramError(f"Vertex {vertex} is not in the diagram of {self.w}.")

    def position(self, vertex: Vertex) -> Tuple[float, float]:
        block = self.block_of(vertex)
        return block.x(vertex[1]), float(vertex[0])

    def __repr__(self) -> str:
        return f"Diagram({self.w.blocks}, {len(self.vertices)} vertices, {len(self.directed_edges)} edges)"


def build_diagram(w: WeylElement) -> Diagram:
    if len(w.blocks) < 2:
        raise DiagramError(f"{w} has a single block and no diagram.")
    N = w.N
    chain = factor_chain(w)
    blocks: List[DiagramBlock] = []
    x_offset = 0
    for t in range(len(chain), 0, -1):
        factor = chain[t - 1]
        blocks.append(DiagramBlock(t, factor, x_offset))
        x_offset += factor.size - factor.k + 1
    by_t = {block.t: block for block in blocks}
    d = Diagram(w, blocks)

    for block in blocks:
        k = block.k
        for i, j in block.vertices:
            if j + 1 <= block.last_column:
                d.plain_edges.append(((i, j), (i, j + 1)))
                d.directed_edges.append(
                    DirectedEdge((i, j), (i, j + 1), j + 1, "right", block, block.x(j + 0.5), float(i)))
            if i > 1:
                d.plain_edges.append(((i, j), (i - 1, j)))
                d.directed_edges.append(
                    DirectedEdge((i, j), (i - 1, j), i - 1, "down", block, block.x(j), i - 0.5))
        d.directed_edges.append(DirectedEdge(None, (k, k), k, "entry", block, block.x(k), k + 0.5))

    first = by_t[1]
    d.directed_edges.append(DirectedEdge(
        (1, first.last_column), None, N + 1 - first.k, "dotted", first, first.x(first.last_column + 0.5), 1.0))
    for t in range(2, len(chain) + 1):
        source_block, target_block = by_t[t], by_t[t - 1]
        number = N + 1 - source_block.k
        # Rows 1 .. k_{t-1} + 1 leave the last column; the top one has no target.
        lower = target_block.k
        for j in range(1, lower + 2):
            target = (j, target_block.k) if j <= lower else None
            d.directed_edges.append(DirectedEdge(
                (j, source_block.last_column), target, number, "dotted", source_block,
                source_block.x(source_block.last_column + 0.5), float(j)))
    return d


def minimal_paths(d: Diagram, start: Vertex, end: Vertex, rule: EndpointRule) -> List[MinimalPath]:
    block = d.block_of(start)
    if end not in block:
        raise DiagramError(f"Vertices {start} and {end} lie in different blocks.")
    di, dj = end[0] - start[0], end[1] - start[1]
    vertical = (1 if di > 0 else -1, 0)
    horizontal = (0, 1 if dj > 0 else -1)
    steps = abs(di) + abs(dj)
    paths = []
    for rows in itertools.combinations(range(steps), abs(di)):
        rows = set(rows)
        vertices = [start]
        for s in range(steps):
            step = vertical if s in rows else horizontal
            i, j = vertices[-1]
            vertices.append((i + step[0], j + step[1]))
        paths.append(_classify(tuple(vertices), rule))
    return paths


def _direction(source: Vertex, neighbour: Vertex) -> str:
    if neighbour[0] > source[0]:
        return "u"
    if neighbour[0] < source[0]:
        return "d"
    return "r" if neighbour[1] > source[1] else "l"


def _classify(vertices: Tuple[Vertex, ...], rule: EndpointRule) -> MinimalPath:
    classes = {}
    for idx, v in enumerate(vertices):
        before = rule.first if idx == 0 else _direction(v, vertices[idx - 1])
        after = rule.last if idx == len(vertices) - 1 else _direction(v, vertices[idx + 1])
        name = _CLASS_NAMES.get(frozenset((before, after)))
        if name is None or before == after:
            raise DiagramError(f"Path {vertices} doubles back at {v} under rule {rule.name}.")
        classes[v] = name
    return MinimalPath(vertices, classes, rule)


def edge_sets(d: Diagram) -> EdgeSets:
    layout = {block.t: position for position, block in enumerate(d.blocks)}
    plain: Dict[int, List[DirectedEdge]] = {}
    dotted: Dict[int, List[DirectedEdge]] = {}
    for e in d.directed_edges:
        (dotted if e.dotted else plain).setdefault(e.number, []).append(e)
    for edges in plain.values():
        edges.sort(key=lambda e: (layout[e.block.t], -e.y, e.x))
    for edges in dotted.values():
        edges.sort(key=lambda e: (e.y, e.x))
    return EdgeSets(dict(sorted(plain.items())), dict(sorted(dotted.items())))


class PhaseTerm:
    """One summand psi_index * c_source * d_target * p^exponent of the phase; None endpoints count as 1."""

    __slots__ = ("character", "index", "c_vertex", "d_vertex", "exponent")

    def __init__(self, character: str, index: int, c_vertex: Optional[Vertex], d_vertex: Optional[Vertex], exponent: int):
        self.character = character
        self.index = index
        self.c_vertex = c_vertex
        self.d_vertex = d_vertex
        self.exponent = exponent

    def key(self) -> tuple:
        return self.character, self.index, self.c_vertex or (0, 0), self.d_vertex or (0, 0), self.exponent

    def __repr__(self) -> str:
        return f"{self.character}_{self.index}*c{self.c_vertex}*d{self.d_vertex}*p^{self.exponent}"


def _m(m: Mapping[Vertex, int], v: Optional[Vertex]) -> int:
    return 0 if v is None else m.get(v, 0)


def phase_terms(d: Diagram, m: Mapping[Vertex, int]) -> List[PhaseTerm]:
    """The phase read off the numbered diagram, edge by edge."""
    sets = edge_sets(d)
    terms = []
    for i, edges in sets.plain.items():
        running = 0
        for e in edges:
            terms.append(PhaseTerm("psi", i, e.source, e.target, running - _m(m, e.target)))
            running += _m(m, e.source) - _m(m, e.target)
    for i, edges in sets.dotted.items():
        running = 0
        for e in edges:
            terms.append(PhaseTerm("psi_prime", i, e.source, e.target, running - _m(m, e.source)))
            running += _m(m, e.target) - _m(m, e.source)
    return terms


def closed_form_terms(w: WeylElement, m: Mapping[Vertex, int]) -> List[PhaseTerm]:
    """The same phase written block by block without the diagram."""
    comp = w.composition
    N = comp.N

    def get(i: int, j: int) -> int:
        return m.get((i, j), 0)

    terms = []
    for q in range(1, len(comp)):
        K, K_next, K_prev = comp.kappa(q), comp.kappa(q + 1), comp.kappa(q - 1)

        def left_shift(a: int) -> int:
            return sum(get(a + 1, l) - get(a, l) for l in range(K_next, N + 1))

        for i in range(1, K):
            for j in range(K, K_next):
                exponent = -get(i, j) + sum(get(i + 1, l) - get(i, l) for l in range(K, j)) + left_shift(i)
                terms.append(PhaseTerm("psi", i, (i + 1, j), (i, j), exponent))
        terms.append(PhaseTerm("psi", K, None, (K, K), -get(K, K) + left_shift(K)))
        for j in range(K + 1, K_next):
            for i in range(1, K + 1):
                exponent = -get(i, j) + sum(get(l, j - 1) - get(l, j) for l in range(i + 1, K + 1)) + left_shift(j)
                terms.append(PhaseTerm("psi", j, (i, j - 1), (i, j), exponent))
        for i in range(1, K_prev + 2):
            exponent = -get(i, K_next - 1) + sum(get(j, K_prev) - get(j, K_next - 1) for j in range(1, i))
            terms.append(PhaseTerm("psi_prime", N + 1 - K, (i, K_next - 1), (i, K_prev) if i <= K_prev else None, exponent))
    return terms


def to_dot(d: Diagram) -> str:
    name = "_".join(str(b) for b in d.w.blocks)
    lines = [f'digraph "w_{name}" {{', "  node [shape=circle];"]
    for block in d.blocks:
        lines.append(f"  subgraph cluster_{block.t} {{")
        lines.append(f'    label="factor {block.t} (k={block.k})";')
        for i, j in block.vertices:
            x, y = block.x(j), i
            lines.append(f'    "{i},{j}" [pos="{x},{y}!"];')
        lines.append("  }")
    anchors = 0
    for e in d.directed_edges:
        source = f'"{e.source[0]},{e.source[1]}"' if e.source else None
        target = f'"{e.target[0]},{e.target[1]}"' if e.target else None
        if source is None or target is None:
            anchors += 1
            anchor = f'"open_{anchors}"'
            lines.append(f"  {anchor} [shape=point, style=invis];")
            source, target = source or anchor, target or anchor
        style = ", style=dotted" if e.dotted else ""
        lines.append(f'  {source} -> {target} [label="{e.number}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"

