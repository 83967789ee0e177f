"""
core/arithmetic.py — bfree-lab
================================
Exact integer arithmetic underpinning every other module. No sieving of
B-free sets, no UI, no file I/O.

Responsibilities:
- FiniteSet normalization (strictly increasing tuples of naturals >= 1)
- primitivize: drop every element divisible by a smaller element
- lcm_chain over arbitrary-precision naturals
- b_prime_of_q: the derived set {b / gcd(b, q)}
- factorize / divisors with a configurable input cap
- numpy prime tables and the prime-support helpers the family oracles use
- greedy pairwise-coprime chains (certificates for the classifier)

All functions are pure and thread-safe. Values are plain Python ints, so
s_k-sized lcms never overflow.

DO NOT add interval sieving here. That lives in core/interval_sieve.py.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
import sympy

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

FACTOR_CAP: int = 2 ** 63               # largest input factorize()/divisors() accept by default
TRIAL_DIVISION_LIMIT: int = 10 ** 6     # trial-divide by primes up to here, then hand off to sympy
NUMPY_PRIMITIVIZE_MIN: int = 2_000      # switch to the marking strategy above this many elements
NUMPY_PRIMITIVIZE_MAX_VALUE: int = 10 ** 7  # ...provided the largest element fits a mark array

FiniteSet = tuple[int, ...]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class FactorizationCapError(ValueError):
    """Input above the factorization cap."""


class EmptyLcmError(ValueError):
    """lcm requested of an empty set."""


# ---------------------------------------------------------------------------
# FiniteSet
# ---------------------------------------------------------------------------

def finite_set(values: Iterable[int]) -> FiniteSet:
    """
    Canonical FiniteSet: sorted, deduplicated, every element an int >= 1.

    >>> finite_set([6, 4, 6, 9])
    (4, 6, 9)
    """
    out = sorted({int(v) for v in values})
    if out and out[0] < 1:
        raise ValueError(f"FiniteSet elements must be >= 1, got {out[0]}")
    return tuple(out)


def primitivize(values: Iterable[int]) -> FiniteSet:
    """
    Remove every element divisible by a strictly smaller element.

    The result is primitive and generates the same set of multiples.

    >>> primitivize([2, 3, 4, 6, 9])
    (2, 3)
    >>> primitivize([1, 5, 7])
    (1,)
    """
    elems = finite_set(values)
    if not elems:
        return ()
    if elems[0] == 1:
        return (1,)
    if len(elems) >= NUMPY_PRIMITIVIZE_MIN and elems[-1] <= NUMPY_PRIMITIVIZE_MAX_VALUE:
        return _primitivize_marking(elems)

    kept: list[int] = []
    for a in elems:
        if not any(a % k == 0 for k in kept):
            kept.append(a)
    return tuple(kept)


def _primitivize_marking(elems: FiniteSet) -> FiniteSet:
    # An element divisible by a smaller member is divisible by a smaller kept
    # member, so marking multiples of kept elements alone is enough.
    top = elems[-1]
    present = np.zeros(top + 1, dtype=bool)
    present[list(elems)] = True
    covered = np.zeros(top + 1, dtype=bool)
    kept: list[int] = []
    for a in elems:
        if covered[a]:
            continue
        kept.append(a)
        covered[2 * a::a] = True
    return tuple(kept)


def lcm_chain(values: Iterable[int]) -> int:
    """
    Exact lcm of a non-empty set.

    >>> lcm_chain([36, 10, 21])
    1260
    """
    elems = finite_set(values)
    if not elems:
        raise EmptyLcmError("empty lcm")
    return math.lcm(*elems)


def b_prime_of_q(values: Iterable[int], q: int) -> FiniteSet:
    """
    The set {b / gcd(b, q) : b in B}. Contains 1 iff some b divides q.

    >>> b_prime_of_q([6, 10, 15], 2)
    (3, 5, 15)
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return finite_set(b // math.gcd(b, q) for b in finite_set(values))


def is_primitive(values: Iterable[int]) -> bool:
    elems = finite_set(values)
    return len(primitivize(elems)) == len(elems)


# ---------------------------------------------------------------------------
# Primes and factorization
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def primes_up_to(limit: int) -> np.ndarray:
    """
    All primes <= limit as a read-only int64 array (sieve of Eratosthenes).

    >>> primes_up_to(20).tolist()
    [2, 3, 5, 7, 11, 13, 17, 19]
    """
    if limit < 2:
        out = np.array([], dtype=np.int64)
    else:
        is_prime = np.ones(limit + 1, dtype=bool)
        is_prime[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if is_prime[p]:
                is_prime[p * p::p] = False
        out = np.flatnonzero(is_prime).astype(np.int64)
    out.setflags(write=False)
    return out


def factorize(n: int, cap: Optional[int] = FACTOR_CAP) -> dict[int, int]:
    """
    Prime factorization {p: exponent}.

    Trial division by primes up to TRIAL_DIVISION_LIMIT, then sympy for any
    remaining cofactor. `cap=None` lifts the input cap for internal callers
    that factor lcm values built from known small primes.

    >>> factorize(360)
    {2: 3, 3: 2, 5: 1}
    """
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    if cap is not None and n > cap:
        raise FactorizationCapError(f"factorization cap exceeded: {n} > {cap}")

    factors: dict[int, int] = {}
    rest = n
    for p in primes_up_to(TRIAL_DIVISION_LIMIT):
        p = int(p)
        if p * p > rest:
            break
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            factors[p] = e
    if rest > 1:
        if rest < TRIAL_DIVISION_LIMIT ** 2 or sympy.isprime(rest):
            factors[rest] = factors.get(rest, 0) + 1
        else:
            logger.debug("factorize: handing cofactor %d to sympy", rest)
            for p, e in sympy.factorint(rest).items():
                factors[int(p)] = factors.get(int(p), 0) + int(e)
    return dict(sorted(factors.items()))


def prime_support(n: int) -> FiniteSet:
    """Sorted primes dividing n (no cap; n is usually an lcm of small primes)."""
    return tuple(factorize(n, cap=None))


def valuation(n: int, p: int) -> int:
    """Exponent of the prime p in n (n >= 1)."""
    if n < 1:
        raise ValueError(f"valuation needs n >= 1, got {n}")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def divisors(n: int, cap: Optional[int] = FACTOR_CAP) -> FiniteSet:
    """
    All positive divisors of n, sorted.

    >>> divisors(12)
    (1, 2, 3, 4, 6, 12)
    """
    divs = [1]
    for p, e in factorize(n, cap=cap).items():
        divs = [d * p ** i for d in divs for i in range(e + 1)]
    return tuple(sorted(divs))


def next_prime(n: int) -> int:
    """Smallest prime > n."""
    return int(sympy.nextprime(n))


def is_prime(n: int) -> bool:
    return n >= 2 and bool(sympy.isprime(n))


# ---------------------------------------------------------------------------
# Coprime chains
# ---------------------------------------------------------------------------

def greedy_coprime_chain(values: Iterable[int], limit: Optional[int] = None) -> FiniteSet:
    """
    Greedy pairwise-coprime subsequence of the sorted values (1 excluded).

    Stops once `limit` elements are collected.

    >>> greedy_coprime_chain([4, 6, 9, 10, 21, 25])
    (4, 9, 25)
    """
    chain: list[int] = []
    product = 1
    for v in finite_set(values):
        if v == 1:
            continue
        if math.gcd(v, product) == 1:
            chain.append(v)
            product *= v
            if limit is not None and len(chain) >= limit:
                break
    return tuple(chain)


def pairwise_coprime(values: Iterable[int]) -> bool:
    elems = list(values)
    return all(
        math.gcd(a, b) == 1
        for i, a in enumerate(elems)
        for b in elems[i + 1:]
    )
