"""
core/density_lab.py — bfree-lab
=================================
Densities of sets of multiples. No classification, no UI.

Responsibilities:
- exact_density_of_multiples(): exact Fraction d(M_S) for finite S
- interval_density(): card(target ∩ [1, N]) / N with the raw count
- log_density_partial(): (1 / log N) · Σ_{n ∈ M_B ∩ [1, N]} 1/n
- davenport_erdos_trace(): exact d(M_{B ∩ [1, K]}) over increasing cutoffs
- light_tails_trace(): interval estimates of d(M_{b > K})

Exact densities split prim S into classes connected by common factors.
Classes with pairwise coprime lcms are independent (CRT), so the free
density is the product of per-class free densities. Each class uses
inclusion–exclusion over lcm values (at most IE_MAX_ELEMENTS elements),
falling back to counting one full period when that fits PERIOD_SIEVE_CAP.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

from core.arithmetic import FiniteSet, primitivize, primes_up_to
from core.bset_families import BSet
from core.interval_sieve import count_free, iter_free_chunks

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

IE_MAX_ELEMENTS: int = 24            # inclusion–exclusion cap per connected class
IE_MAX_TERMS: int = 2 ** 22          # distinct lcm terms before giving up on inclusion–exclusion
PERIOD_SIEVE_CAP: int = 10 ** 8      # largest period counted directly

KINDS = ("exact", "interval_count", "log_partial", "davenport_erdos_limit")


class DensityCapError(ValueError):
    """Neither inclusion–exclusion nor a one-period count fits the caps."""


@dataclass
class DensityEstimate:
    value: Union[Fraction, float]
    kind: str                                       # one of KINDS
    horizon: int                                    # N, or the largest cutoff K
    count: Optional[int] = None                     # raw count behind a float value
    monotone_trace: Optional[list[tuple[int, Fraction]]] = None
    method: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"Invalid kind '{self.kind}'. Must be one of: {', '.join(KINDS)}")

    def as_float(self) -> float:
        return float(self.value)


# ---------------------------------------------------------------------------
# Exact densities
# ---------------------------------------------------------------------------

def _connected_classes(elems: FiniteSet) -> list[list[int]]:
    """Group elements so that elements in different groups are coprime."""
    parent = list(range(len(elems)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, a in enumerate(elems):
        for j in range(i + 1, len(elems)):
            if math.gcd(a, elems[j]) > 1:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i, a in enumerate(elems):
        groups.setdefault(find(i), []).append(a)
    return list(groups.values())


def _inclusion_exclusion_free(elems: list[int]) -> Optional[Fraction]:
    terms: dict[int, int] = {1: 1}
    for a in elems:
        update = dict(terms)
        for l, c in terms.items():
            l2 = math.lcm(l, a)
            update[l2] = update.get(l2, 0) - c
        terms = {l: c for l, c in update.items() if c}
        if len(terms) > IE_MAX_TERMS:
            return None
    return sum((Fraction(c, l) for l, c in terms.items()), Fraction(0))


def _period_free(elems: list[int]) -> Optional[Fraction]:
    period = math.lcm(*elems)
    if period > PERIOD_SIEVE_CAP:
        return None
    return Fraction(count_free(elems, 0, period - 1), period)


def exact_density_of_multiples(values: Iterable[int]) -> DensityEstimate:
    """
    Exact d(M_S) for finite S.

    >>> exact_density_of_multiples([2, 3]).value
    Fraction(2, 3)
    >>> exact_density_of_multiples([]).value
    Fraction(0, 1)
    """
    prim = primitivize(values)
    if not prim:
        return DensityEstimate(Fraction(0), "exact", 0, method="empty")
    if prim == (1,):
        return DensityEstimate(Fraction(1), "exact", 1, method="contains-1")

    free = Fraction(1)
    methods = set()
    for group in _connected_classes(prim):
        part = None
        if len(group) <= IE_MAX_ELEMENTS:
            part = _inclusion_exclusion_free(group)
            methods.add("inclusion-exclusion")
        if part is None:
            part = _period_free(group)
            methods.add("period-count")
        if part is None:
            raise DensityCapError(
                f"use interval estimate: class of {len(group)} elements with lcm "
                f"{math.lcm(*group)} exceeds both caps"
            )
        free *= part
    return DensityEstimate(
        value=1 - free,
        kind="exact",
        horizon=max(prim),
        method="+".join(sorted(methods)),
    )


# ---------------------------------------------------------------------------
# Interval estimates
# ---------------------------------------------------------------------------

def interval_density(bset: BSet, target: str, n: int) -> DensityEstimate:
    """card(target ∩ [1, N]) / N for target in {"multiples", "free"}."""
    if target not in ("multiples", "free"):
        raise ValueError(f"Invalid target '{target}'. Must be one of: multiples, free")
    if n < 1:
        raise ValueError(f"interval_density needs N >= 1, got {n}")
    free = count_free(bset.elements_array(n), 1, n)
    count = free if target == "free" else n - free
    logger.info("interval_density(%s, %s, %d) = %d / %d", bset.name, target, n, count, n)
    return DensityEstimate(count / n, "interval_count", n, count=count, method=target)


def log_density_partial(bset: BSet, n: int) -> DensityEstimate:
    """(1 / log N) · Σ 1/n over the multiples in [1, N]."""
    if n < 2:
        raise ValueError(f"log_density_partial needs N >= 2, got {n}")
    total = 0.0
    count = 0
    for start, mask in iter_free_chunks(bset.elements_array(n), 1, n):
        hits = np.flatnonzero(~mask) + start
        count += int(hits.size)
        total += float(np.sum(1.0 / hits.astype(np.float64)))
    return DensityEstimate(total / math.log(n), "log_partial", n, count=count)


def davenport_erdos_trace(bset: BSet, cutoffs: Iterable[int]) -> DensityEstimate:
    """
    Exact d(M_{B ∩ [1, K]}) for each cutoff K. The trace is non-decreasing and
    its last value is a certified lower bound for the logarithmic density.

    >>> from core.bset_families import make_bset
    >>> est = davenport_erdos_trace(make_bset({"elements": [2, 3, 5]}), [2, 3, 5])
    >>> [str(v) for _, v in est.monotone_trace]
    ['1/2', '2/3', '11/15']
    """
    ks = list(cutoffs)
    if not ks:
        raise ValueError("davenport_erdos_trace needs at least one cutoff")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError(f"cutoffs must be strictly increasing, got {ks}")
    trace: list[tuple[int, Fraction]] = []
    for k in ks:
        value = exact_density_of_multiples(bset.elements_up_to(k)).value
        if trace and value < trace[-1][1]:
            raise RuntimeError(f"non-monotone trace at K={k}: {value} < {trace[-1][1]}")
        trace.append((k, value))
    return DensityEstimate(
        value=trace[-1][1],
        kind="davenport_erdos_limit",
        horizon=ks[-1],
        monotone_trace=trace,
    )


def light_tails_trace(bset: BSet, cutoffs: Iterable[int], n: int) -> list[tuple[int, float]]:
    """Interval density on [1, N] of the multiples of {b in B : K < b <= N}, per K."""
    if n < 1:
        raise ValueError(f"light_tails_trace needs N >= 1, got {n}")
    elems = bset.elements_array(n)
    out: list[tuple[int, float]] = []
    for k in cutoffs:
        tail = elems[elems > k]
        if tail.size == 0:
            out.append((k, 0.0))
            continue
        multiples = n - count_free(tail, 1, n)
        out.append((k, multiples / n))
    logger.debug("light_tails_trace(%s): %s", bset.name, out)
    return out


def squarefree_euler_product(limit: int) -> float:
    """∏_{p <= limit} (1 - p^-2), the independent oracle for squarefree counts."""
    ps = primes_up_to(limit).astype(np.float64)
    return float(np.prod(1.0 - 1.0 / (ps * ps)))
