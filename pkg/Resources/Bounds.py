"""
Bounds for the sums: the exact trivial bound, the Weil bound for GL_2 and the
power-saving bounds reported at epsilon = 0, both in their w-dependent form and
in the form uniform over all admissible w of GL_{N+1}.

The power-saving bounds hold up to an unspecified constant, so they are only
tabulated as ratios. The trivial bound and the Weil bound are enforced.
"""
import csv
import io
import json
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import sympy
from pydantic import BaseModel, Field

from . import Console
from .Errors import PreconditionError, VerificationError
from .KloostermanSum import (
    DEFAULT_BUDGET,
    CharacterPair,
    Modulus,
    evaluate_sum,
    evaluate_sum_gamma0,
    moduli_assignments,
)
from .PadicArith import int_valuation
from .WeylElement import WeylElement, length

CSV_COLUMNS = (
    "p", "blocks", "r", "psi", "psi_prime", "level", "magnitude", "trivial", "weil", "C",
    "thm5", "thm6", "thm5_uniform", "thm6_uniform", "trivial_ratio", "weil_ratio",
    "thm5_ratio", "thm6_ratio", "thm5_uniform_ratio", "thm6_uniform_ratio", "notes",
)


class BoundReport(BaseModel):
    p: int
    blocks: List[int]
    r: List[int]
    psi: List[int]
    psi_prime: List[int]
    level: int = Field(0, description="Gamma_0(p^level) congruence level; 0 is the full sum.")
    trivial_bound: int = Field(..., description="Exact number of cosets, sum over m of p^ht (1 - 1/p)^kappa(m).")
    weil_bound: Optional[float] = Field(None, description="tau(c) sqrt(c) sqrt(gcd(m, n, c)); GL_2 full sums only.")
    C_constant: float = Field(..., description="max_j min(|psi_j|_p^(-1/2), p^(r_j/2)).")
    thm5_exponent: float = Field(..., description="Exponent on p of the modulus factor, ht (1 - 1/(4 l(w))).")
    thm5_value: float = Field(..., description="C^(l(w)/2) p^thm5_exponent.")
    thm6_exponent: float = Field(..., description="ht (1 - 1/(2N l(w))), or ht (1 - 1/(2n l(w))) with n blocks at positive level.")
    thm6_value: float = Field(..., description="C p^thm6_exponent.")
    thm5_uniform_exponent: float = Field(..., description="ht (1 - 1/(2N(N+1))), independent of w.")
    thm5_uniform_value: float = Field(..., description="C^(N(N+1)/4) p^thm5_uniform_exponent.")
    thm6_uniform_exponent: float = Field(..., description="ht (1 - 1/(N^2(N+1))), independent of w.")
    thm6_uniform_value: float = Field(..., description="C p^thm6_uniform_exponent.")
    observed_magnitude: float
    magnitude_error: float
    trivial_ratio: float
    weil_ratio: Optional[float] = None
    thm5_ratio: float
    thm6_ratio: float
    thm5_uniform_ratio: float
    thm6_uniform_ratio: float
    notes: List[str] = Field(default_factory=list)


def trivial_bound(w: WeylElement, r: Sequence[int], p: int) -> int:
    total = 0
    for m in moduli_assignments(w, r):
        kappa = m.positive_count()
        total += p ** (m.height - kappa) * (p - 1) ** kappa
    return total


def divisor_count(n: int) -> int:
    if n < 1:
        raise PreconditionError(f"Divisor count needs a positive integer, got {n}.")
    return int(sympy.divisor_count(n))


def weil_bound(mm: int, nn: int, c: int) -> float:
    if c < 1:
        raise PreconditionError(f"Modulus must be positive, got {c}.")
    return divisor_count(c) * math.sqrt(c) * math.sqrt(math.gcd(math.gcd(mm, nn), c))


def c_constant(r: Sequence[int], psi: Sequence[int], p: int) -> float:
    """|0|_p^(-1/2) counts as infinite, so a zero character contributes p^(r_j/2)."""
    values = []
    for r_j, psi_j in zip(r, psi):
        cap = p ** (r_j / 2)
        values.append(cap if psi_j == 0 else min(p ** (int_valuation(psi_j, p) / 2), cap))
    return max(values, default=1.0)


def saving_exponents(w: WeylElement, r: Sequence[int], dimension_factor: Optional[int] = None) -> Tuple[float, float]:
    l_w = length(w)
    if l_w == 0:
        raise PreconditionError(f"{w} has length 0; the saving exponents are undefined.")
    height = sum(r)
    factor = w.N if dimension_factor is None else dimension_factor
    return height * (1 - 1 / (4 * l_w)), height * (1 - 1 / (2 * factor * l_w))


def uniform_exponents(N: int, r: Sequence[int]) -> Tuple[float, float]:
    """The saving exponents after bounding l(w) by N(N+1)/2."""
    if N < 1:
        raise PreconditionError(f"Uniform exponents need N >= 1, got {N}.")
    height = sum(r)
    return height * (1 - 1 / (2 * N * (N + 1))), height * (1 - 1 / (N * N * (N + 1)))


def _ratio(observed: float, bound: float) -> float:
    return observed / bound if bound else math.inf


def thm_bounds(w: WeylElement, r: Sequence[int], chars: CharacterPair, p: int,
               budget: int = DEFAULT_BUDGET, threads: int = 1, level: int = 0) -> BoundReport:
    """
    The bound report for Kl_p(psi, psi', fc * w), or for its Gamma_0(p^level)
    restriction when level > 0. The restricted sums obey the same bounds,
    except that the w-dependent exponent of the second bound is printed with
    the block count n in place of N.
    """
    modulus = Modulus(p, r)
    if len(chars) != w.N:
        raise PreconditionError(f"{w} needs characters of length {w.N}, got {len(chars)}.")
    if level < 0:
        raise PreconditionError(f"Level exponent must be nonnegative, got {level}.")
    N = w.N
    l_w = length(w)
    n_blocks = len(w.blocks)
    thm5_exponent, thm6_exponent = saving_exponents(w, modulus.r, n_blocks if level > 0 else None)
    thm5_uniform_exponent, thm6_uniform_exponent = uniform_exponents(N, modulus.r)
    C = c_constant(modulus.r, chars.psi, p)
    thm5_value = C ** (l_w / 2) * p ** thm5_exponent
    thm6_value = C * p ** thm6_exponent
    thm5_uniform_value = C ** (N * (N + 1) / 4) * p ** thm5_uniform_exponent
    thm6_uniform_value = C * p ** thm6_uniform_exponent

    if level > 0:
        result = evaluate_sum_gamma0(w, modulus.r, chars, p, level, budget, threads)
    else:
        result = evaluate_sum(w, modulus.r, chars, p, budget, threads)
    observed, error = result.magnitude, result.magnitude_error
    trivial = trivial_bound(w, modulus.r, p)
    if observed > trivial + error:
        raise VerificationError(f"|Kl| = {observed} exceeds the trivial bound {trivial} for {w.blocks}, r={modulus.r}.")

    notes = []
    weil = None
    if w.dimension == 2 and level == 0:
        weil = weil_bound(chars.psi[0], chars.psi_prime[0], p ** modulus.height)
        if observed > weil + error:
            raise VerificationError(f"|S| = {observed} exceeds the Weil bound {weil} for r={modulus.r}.")
    if n_blocks != N:
        if level > 0:
            alternative = saving_exponents(w, modulus.r)[1]
            notes.append(f"thm6 exponent uses 2n*l(w) with n={n_blocks}; 2N*l(w) with N={N} gives {alternative:.6g}")
        else:
            alternative = saving_exponents(w, modulus.r, n_blocks)[1]
            notes.append(f"thm6 exponent uses 2N*l(w) with N={N}; 2n*l(w) with n={n_blocks} gives {alternative:.6g}")
    Console.debug("Bounds", f"{w.blocks} r={modulus.r} level={level}: |Kl|={observed:.6g} trivial={trivial}")
    if observed > thm5_value or observed > thm6_value:
        Console.warn("Bounds", f"{w.blocks} r={modulus.r}: |Kl|={observed:.6g} is above a saving bound at unit constant")

    return BoundReport(
        p=p, blocks=list(w.blocks), r=list(modulus.r), psi=list(chars.psi), psi_prime=list(chars.psi_prime),
        level=level, trivial_bound=trivial, weil_bound=weil, C_constant=C,
        thm5_exponent=thm5_exponent, thm5_value=thm5_value, thm6_exponent=thm6_exponent, thm6_value=thm6_value,
        thm5_uniform_exponent=thm5_uniform_exponent, thm5_uniform_value=thm5_uniform_value,
        thm6_uniform_exponent=thm6_uniform_exponent, thm6_uniform_value=thm6_uniform_value,
        observed_magnitude=observed, magnitude_error=error,
        trivial_ratio=_ratio(observed, trivial), weil_ratio=_ratio(observed, weil) if weil is not None else None,
        thm5_ratio=_ratio(observed, thm5_value), thm6_ratio=_ratio(observed, thm6_value),
        thm5_uniform_ratio=_ratio(observed, thm5_uniform_value), thm6_uniform_ratio=_ratio(observed, thm6_uniform_value),
        notes=notes,
    )


def bound_table(cases: Iterable[Tuple[WeylElement, Sequence[int], CharacterPair, int]],
                budget: int = DEFAULT_BUDGET, threads: int = 1, level: int = 0) -> List[BoundReport]:
    return [thm_bounds(w, r, chars, p, budget, threads, level) for w, r, chars, p in cases]


def _joined(values: Sequence[int]) -> str:
    return ",".join(str(x) for x in values)


def _optional(value: Optional[float]) -> str:
    return "" if value is None else repr(value)


def table_to_csv(reports: Sequence[BoundReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerow([
            report.p, _joined(report.blocks), _joined(report.r), _joined(report.psi), _joined(report.psi_prime),
            report.level, repr(report.observed_magnitude), report.trivial_bound,
            _optional(report.weil_bound), repr(report.C_constant),
            repr(report.thm5_value), repr(report.thm6_value),
            repr(report.thm5_uniform_value), repr(report.thm6_uniform_value),
            repr(report.trivial_ratio), _optional(report.weil_ratio),
            repr(report.thm5_ratio), repr(report.thm6_ratio),
            repr(report.thm5_uniform_ratio), repr(report.thm6_uniform_ratio), "; ".join(report.notes),
        ])
    return buffer.getvalue()


def table_to_json(reports: Sequence[BoundReport]) -> str:
    return json.dumps({"schema": 1, "rows": [report.model_dump() for report in reports]}, indent=2)
