"""
Verification suites driven by ``main.py verify <suite>``.

Each suite is a method tagged with ``@suite``; it yields one CaseResult per
checked case and never stops at the first failure.
"""
import inspect
import itertools
import random
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from . import Console
from .Bounds import bound_table, trivial_bound, weil_bound
from .Bruhat import (
    RecursionEntries,
    b_product,
    bruhat_factorize,
    path_formula_entries,
    random_cell,
    recursion_entries,
)
from .Errors import KloostermanError, PreconditionError
from .KloostermanSum import (
    DEFAULT_BUDGET,
    CharacterPair,
    ModuliAssignment,
    classical_kloosterman,
    evaluate_sum,
    evaluate_sum_gamma0,
    hyper_identity_check,
    inversion_identity_check,
    moduli_assignments,
    representative_count,
    scaling_identity_check,
)
from .Oracle import coset_sum, enumerate_kloosterman_set, oracle_sum, stability_check
from .WeylElement import WeylElement, make_admissible


class CaseResult(BaseModel):
    suite: str
    case: str = Field(..., description="Human-readable description of the checked case.")
    passed: bool
    detail: str = ""


class VerifyOptions(BaseModel):
    primes: List[int] = Field(default_factory=lambda: [2, 3])
    max_dim: int = Field(5, ge=2, description="Largest N + 1 for the Bruhat suite.")
    cases: int = Field(200, ge=1, description="Random cells per composition and prime.")
    max_m: int = Field(3, ge=0, description="Largest m_ij drawn for random cells.")
    max_r: int = Field(3, ge=0, description="Largest total sum(r) for enumerated exponent vectors.")
    blocks: Optional[List[int]] = Field(None, description="Restrict a suite to this composition.")
    r: Optional[List[int]] = None
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    threads: int = 1


def suite(func: Callable) -> Callable:
    """Decorator to register a method as a verification suite."""
    func.is_suite = True
    return func


def compositions(total: int, parts: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """Compositions of total in lexicographic order, optionally with a fixed number of parts."""
    if total == 0:
        if parts in (None, 0):
            yield ()
        return
    if parts == 0:
        return
    for first in range(1, total + 1):
        for tail in compositions(total - first, None if parts is None else parts - 1):
            yield (first,) + tail


def exponent_vectors(N: int, max_total: int) -> Iterator[Tuple[int, ...]]:
    for r in itertools.product(range(max_total + 1), repeat=N):
        if sum(r) <= max_total:
            yield r


def character_choices(N: int, p: int) -> List[CharacterPair]:
    """A unit pair, a pair divisible by p and the trivial pair."""
    return [
        CharacterPair([1] * N, [1] * N),
        CharacterPair([p] + [1] * (N - 1), [1] * (N - 1) + [2 * p]),
        CharacterPair.trivial(N),
    ]


class VerifySuites:
    def __init__(self, options: VerifyOptions):
        self.options = options
        self.rng = random.Random(options.seed)
        self.suites: Dict[str, Callable[[], Iterator[CaseResult]]] = {}
        self.suite_descriptions: Dict[str, str] = {}
        self._discover_suites()

    def _discover_suites(self) -> None:
        """Finds all methods decorated with @suite and populates the suite tables."""
        for name, method in inspect.getmembers(self, predicate=inspect.ismethod):
            if hasattr(method, "is_suite"):
                self.suites[name] = method
                self.suite_descriptions[name] = inspect.getdoc(method) or "No description available."
        Console.debug("Verify", f"Suites available: {list(self.suites)}")

    def run(self, name: str) -> List[CaseResult]:
        if name not in self.suites:
            raise PreconditionError(f"Suite '{name}' not found.")
        results = []
        for result in self.suites[name]():
            Console.debug("Verify", f"{'ok  ' if result.passed else 'FAIL'} {result.case} {result.detail}".rstrip())
            results.append(result)
        failed = sum(1 for result in results if not result.passed)
        Console.log("Verify", f"{name}: {len(results) - failed}/{len(results)} cases passed")
        return results

    def _elements(self, dimensions: Sequence[int]) -> List[WeylElement]:
        if self.options.blocks:
            return [make_admissible(self.options.blocks)]
        return [make_admissible(c) for d in dimensions for c in compositions(d) if len(c) >= 2]

    def _check(self, name: str, case: str, check: Callable[[], Tuple[bool, str]]) -> CaseResult:
        try:
            passed, detail = check()
        except KloostermanError as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        return CaseResult(suite=name, case=case, passed=passed, detail=detail)

    @suite
    def bruhat(self) -> Iterator[CaseResult]:
        """Path formulas and the top-block recursion against direct factorization on random cells."""
        dimensions = range(2, self.options.max_dim + 1)
        for w in self._elements(dimensions):
            if len(w.blocks) > 3:
                continue
            for p in self.options.primes:
                for index in range(self.options.cases):
                    cell = random_cell(w, p, self.options.max_m, self.rng)

                    def check(w=w, cell=cell):
                        direct = bruhat_factorize(b_product(w, cell), w)
                        if len(w.blocks) == 2:
                            formula = path_formula_entries(w, cell)
                            return formula == direct, "" if formula == direct else f"path formula {formula}"
                        wrong = recursion_entries(w, cell).mismatches(RecursionEntries.from_triple(direct))
                        return not wrong, ", ".join(wrong)

                    yield self._check("bruhat", f"{w.blocks} p={p} cell #{index}", check)

    @suite
    def counts(self) -> Iterator[CaseResult]:
        """Per-assignment representative counts, the trivial bound and the oracle coset count."""
        dimensions = range(2, min(self.options.max_dim, 4) + 1)
        for w in self._elements(dimensions):
            for p in self.options.primes:
                for r in exponent_vectors(w.N, self.options.max_r):

                    def check(w=w, p=p, r=r):
                        total = 0
                        for m in moduli_assignments(w, r):
                            kappa = m.positive_count()
                            expected = p ** (m.height - kappa) * (p - 1) ** kappa
                            count = representative_count(w, m, p)
                            if count != expected:
                                return False, f"m={m.as_tuple()}: {count} != {expected}"
                            total += count
                        bound = trivial_bound(w, r, p)
                        if total != bound:
                            return False, f"total {total} != trivial bound {bound}"
                        if w.dimension <= 3 and sum(r) <= 4:
                            pairs = len(enumerate_kloosterman_set(w, r, p, budget=self.options.budget))
                            if pairs != bound:
                                return False, f"oracle found {pairs} cosets, trivial bound {bound}"
                        return True, f"{total} representatives"

                    yield self._check("counts", f"{w.blocks} p={p} r={r}", check)

    @suite
    def oracle(self) -> Iterator[CaseResult]:
        """evaluate_sum against the definition-level oracle, with the denominator bound stability check."""
        elements = self._elements([2, 3])
        for w in elements:
            for p in self.options.primes:
                vectors = [tuple(self.options.r)] if self.options.r else list(exponent_vectors(w.N, self.options.max_r))
                for r in vectors:
                    pairs = None
                    for chars in character_choices(w.N, p):

                        def check(w=w, p=p, r=r, chars=chars):
                            nonlocal pairs
                            if pairs is None:
                                pairs = enumerate_kloosterman_set(w, r, p, budget=self.options.budget,
                                                                  threads=self.options.threads)
                            fast = evaluate_sum(w, r, chars, p, self.options.budget, self.options.threads)
                            slow = coset_sum(pairs, chars, p)
                            if not fast.equals(slow):
                                return False, f"{fast.value} != {slow.value}"
                            return True, f"|Kl| = {fast.magnitude:.6g}"

                        yield self._check("oracle", f"{w.blocks} p={p} r={r} {chars}", check)
                    if sum(r) <= 2 and w.dimension <= 3:
                        yield self._check("oracle", f"{w.blocks} p={p} r={r} stability",
                                          lambda w=w, p=p, r=r: (stability_check(w, r, p, budget=self.options.budget), ""))

    @suite
    def identities(self) -> Iterator[CaseResult]:
        """Classical recovery, hyper-Kloosterman, scaling, Gamma_0 and inversion identities."""
        budget = self.options.budget
        for p in self.options.primes:
            w = make_admissible((1, 1))
            for r in range(0, self.options.max_r + 1):
                for a, b in itertools.product((0, 1, 2, p, 2 * p), repeat=2):
                    chars = CharacterPair([a], [b])

                    def classical(w=w, r=r, chars=chars, a=a, b=b, p=p):
                        lhs = evaluate_sum(w, (r,), chars, p, budget)
                        return lhs.value.equals(classical_kloosterman(a, b, p ** r).value), ""

                    yield self._check("identities", f"classical p={p} r={r} psi={a} psi'={b}", classical)

            for N in (1, 2):
                chars = CharacterPair([1] * N, [1] * N)
                yield self._check("identities", f"hyper N={N} p={p} r0=1",
                                  lambda N=N, chars=chars, p=p: (hyper_identity_check(N, 1, chars, p, budget), ""))

            for blocks in ((1, 1), (1, 1, 1)):
                w = make_admissible(blocks)
                for values in itertools.product(range(1, 3), repeat=len(w.index_set)):
                    m = ModuliAssignment.from_values(w, values)
                    if m.height > 5:
                        continue
                    for chars, k in itertools.product(character_choices(w.N, p), range(1, w.N + 1)):
                        yield self._check(
                            "identities", f"scaling {blocks} p={p} m={values} k={k} {chars}",
                            lambda w=w, m=m, chars=chars, p=p, k=k: (scaling_identity_check(w, m, chars, p, k, budget), ""),
                        )

            for blocks in ((1, 1), (1, 1, 1), (1, 2), (2, 1)):
                w = make_admissible(blocks)
                for r in exponent_vectors(w.N, 2):
                    chars = CharacterPair([1] * w.N, [1] * w.N)

                    def gamma0(w=w, r=r, chars=chars, p=p):
                        lhs = evaluate_sum_gamma0(w, r, chars, p, 1, budget)
                        rhs = oracle_sum(w, r, p, chars, level=1, budget=budget)
                        return lhs.equals(rhs), f"{lhs.value} vs {rhs.value}"

                    yield self._check("identities", f"gamma0 {blocks} p={p} r={r}", gamma0)

            if p == 2:
                for blocks in ((1, 1, 1), (1, 2), (2, 1)):
                    w = make_admissible(blocks)
                    for r in exponent_vectors(w.N, 3):
                        chars = CharacterPair([1] * w.N, [1, 2][: w.N])
                        yield self._check(
                            "identities", f"inversion {blocks} p={p} r={r}",
                            lambda w=w, r=r, chars=chars, p=p: (inversion_identity_check(w, r, chars, p, budget), ""),
                        )

    @suite
    def bounds(self) -> Iterator[CaseResult]:
        """Bound reports for the three-dimensional cases, full and Gamma_0(p), and the Weil bound for GL_2."""
        for p in self.options.primes:
            for r in range(0, self.options.max_r + 1):
                for a, b in itertools.product((0, 1, p), repeat=2):

                    def weil(r=r, a=a, b=b, p=p):
                        s = classical_kloosterman(a, b, p ** r)
                        bound = weil_bound(a, b, p ** r)
                        return s.magnitude <= bound + s.magnitude_error, f"|S| = {s.magnitude:.6g}, bound {bound:.6g}"

                    yield self._check("bounds", f"weil p={p} c={p}^{r} m={a} n={b}", weil)
            for w in self._elements([3]):
                for r in exponent_vectors(w.N, self.options.max_r):
                    for chars, level in itertools.product(character_choices(w.N, p), (0, 1)):

                        def report(w=w, r=r, chars=chars, p=p, level=level):
                            row = bound_table([(w, r, chars, p)], self.options.budget, self.options.threads, level)[0]
                            return True, f"trivial ratio {row.trivial_ratio:.4g}, thm5 ratio {row.thm5_ratio:.4g}"

                        yield self._check("bounds", f"{w.blocks} p={p} r={r} level={level} {chars}", report)
