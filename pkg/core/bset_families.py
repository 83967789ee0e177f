"""
core/bset_families.py — bfree-lab
===================================
Models of the set B: explicit finite lists and the generator-backed
infinite families. No sieving, no UI, no file I/O.

Responsibilities:
- BSet base class: memoized exact enumeration of B ∩ [1, x], membership,
  natural blocks, gcd profiles {gcd(b, m) : b in B}
- Structural gcd oracles per family (exact over ALL of B, not a truncation)
- Deterministic prime streams (smallest qualifying prime wherever a choice
  is made)
- family_catalog() / make_bset() for config-driven construction

Families:
  explicit          any finite list (may contain 1)
  primes            all primes
  odd-primes        all odd primes
  prime-squares     {p^2}
  mod12             {4, 6} ∪ {primes ≡ 5, 7 mod 12}
  punctured-primes  primes minus K constructed primes p_k ∈ r_k + m_k·Z, p_k > 2^(k+1)
  ape1              {p^2·q : p among the first I primes, q prime, q != p}
  two-three         {36} ∪ {2p_i} ∪ {3q_i}
  cascade           B_1 = {p1·q1}, B_k = {P_(k-1)·p_k^2, P_(k-1)·q_k^2} ∪ {P_(i-1)·q_i·q_k^2 : i < k}
  q-family          B_k = {p_k·q} ∪ {p_i·p_k : i < k}
  power2            {2^k · b'_k} for a coprime set of odd b'_k > 1

1 is never an element of a generated family; explicit sets may contain it.

DO NOT import interval_sieve or any analysis module here (one-way dependency).
"""

from __future__ import annotations

import bisect
import logging
import math
import os
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import numpy as np

from core.arithmetic import (
    FiniteSet,
    factorize,
    finite_set,
    is_prime,
    is_primitive,
    next_prime,
    pairwise_coprime,
    prime_support,
    primes_up_to,
    valuation,
)

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

DEFAULT_HORIZON: int = 10 ** 7              # enumeration horizon for inexact profiles / sieves
ORACLE_STREAM_PRIME_LIMIT: int = 10 ** 7    # block oracles give up (inexact) past this stream prime
CONTAINS_ENUMERATION_CAP: int = 10 ** 9     # generic contains() refuses to enumerate beyond this
DEFAULT_PUNCTURED_COUNT: int = 10           # removed primes in punctured-primes when K is absent


def default_horizon() -> int:
    """Horizon N from BFREE_HORIZON, falling back to DEFAULT_HORIZON."""
    raw = os.environ.get("BFREE_HORIZON", "").strip()
    if not raw:
        return DEFAULT_HORIZON
    try:
        value = int(raw)
    except ValueError:
        logger.warning("BFREE_HORIZON=%r is not an integer; using %d", raw, DEFAULT_HORIZON)
        return DEFAULT_HORIZON
    if value < 1:
        logger.warning("BFREE_HORIZON=%d must be positive; using %d", value, DEFAULT_HORIZON)
        return DEFAULT_HORIZON
    return value


class UnknownFamilyError(ValueError):
    """Unknown family name or invalid family parameters."""


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class GcdProfile:
    """{gcd(b, modulus) : b in B}, with one realizing element per value."""
    modulus: int
    gcds: FiniteSet
    exact: bool                                  # True: computed over all of B
    witnesses: dict[int, int] = field(default_factory=dict)   # gcd value -> some b
    members: FiniteSet = ()                      # {b in B : b | modulus}
    horizon: Optional[int] = None                # enumeration horizon when not exact


@dataclass
class FamilyDescriptor:
    name: str
    summary: str
    params: dict[str, str]       # parameter name -> description
    infinite: bool               # with default parameters
    exact_oracle: bool           # structural gcd oracle available


# ---------------------------------------------------------------------------
# Prime streams
# ---------------------------------------------------------------------------

class PrimeStream:
    """
    Increasing primes >= start, minus `exclude`, addressable by 0-based index.

    Extended on demand from the numpy prime table; thread-safe.
    """

    def __init__(self, start: int = 2, exclude: Iterable[int] = ()) -> None:
        self.start = start
        self.exclude = frozenset(exclude)
        self._primes: list[int] = []
        self._limit = 0
        self._lock = threading.Lock()

    def _extend(self, limit: int) -> None:
        table = primes_up_to(limit)
        self._primes = [
            int(p) for p in table
            if p >= self.start and int(p) not in self.exclude
        ]
        self._limit = limit

    def __getitem__(self, i: int) -> int:
        if i < 0:
            raise IndexError("PrimeStream index must be >= 0")
        with self._lock:
            limit = max(self._limit, 1024)
            while len(self._primes) <= i:
                limit *= 2
                self._extend(limit)
            return self._primes[i]

    def up_to(self, x: int) -> list[int]:
        with self._lock:
            if x > self._limit:
                self._extend(x)
            return self._primes[:bisect.bisect_right(self._primes, x)]


# ---------------------------------------------------------------------------
# Base class
# ---------------------------------------------------------------------------

class BSet:
    """
    A finite or generator-backed model of B.

    Subclasses implement `_enumerate(x)` (B ∩ [1, x], any order) and may
    override `contains`, `block`, `_structural_profile`.
    """

    name: str = "abstract"
    summary: str = ""
    param_schema: dict[str, str] = {}
    primitive_flag: Optional[bool] = None   # tri-state: True / False / None (unknown)
    behrend_scale: Optional[int] = None     # q with q·A ⊆ B for a Behrend set A
    is_finite: bool = False

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        self.params: dict[str, Any] = dict(params or {})
        self._lock = threading.Lock()
        self._cache_limit = 0
        self._cache: list[int] = []

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params!r})"

    # -- enumeration ---------------------------------------------------------

    def _enumerate(self, x: int) -> Iterable[int]:
        raise NotImplementedError

    def elements_up_to(self, x: int) -> FiniteSet:
        """Exactly B ∩ [1, x], strictly increasing. Memoized."""
        if x < 1:
            raise ValueError(f"elements_up_to needs x >= 1, got {x}")
        with self._lock:
            if x > self._cache_limit:
                self._cache = list(finite_set(self._enumerate(x)))
                self._cache_limit = x
                logger.debug("%s: enumerated %d elements up to %d", self.name, len(self._cache), x)
            return tuple(self._cache[:bisect.bisect_right(self._cache, x)])

    def elements_array(self, x: int) -> np.ndarray:
        return np.array(self.elements_up_to(x), dtype=np.int64)

    def max_element(self) -> Optional[int]:
        """Largest element of a finite family, None when infinite."""
        return None

    def first_elements(self, k: int) -> FiniteSet:
        """The k smallest elements (all of them if B is finite and smaller)."""
        top = self.max_element()
        x = 64
        while True:
            elems = self.elements_up_to(x)
            if len(elems) >= k or (top is not None and x >= top):
                return elems[:k]
            x *= 2

    def block(self, k: int) -> FiniteSet:
        """Natural k-th block (1-based). Default: the k-th smallest element."""
        if k < 1:
            raise ValueError(f"block index must be >= 1, got {k}")
        elems = self.first_elements(k)
        return (elems[k - 1],) if len(elems) >= k else ()

    def block_count(self) -> Optional[int]:
        """Number of non-empty blocks, None when infinite."""
        if self.is_finite:
            top = self.max_element()
            return len(self.elements_up_to(top)) if top else 0
        return None

    def contains(self, n: int) -> bool:
        if n < 1:
            return False
        top = self.max_element()
        if top is None and n > CONTAINS_ENUMERATION_CAP:
            raise ValueError(
                f"{self.name}: membership of {n} needs enumeration beyond {CONTAINS_ENUMERATION_CAP}"
            )
        elems = self.elements_up_to(n)
        return bool(elems) and elems[-1] == n

    # -- gcd profile ---------------------------------------------------------

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        """(witnesses, members) over all of B, or None without an oracle."""
        return None

    def gcd_profile(self, m: int, horizon: Optional[int] = None) -> GcdProfile:
        """
        {gcd(b, m) : b in B}. Exact when the family has a structural oracle;
        otherwise computed over B ∩ [1, horizon] and flagged inexact.
        """
        if m < 1:
            raise ValueError(f"gcd_profile needs m >= 1, got {m}")
        structural = self._structural_profile(m)
        if structural is not None:
            witnesses, members = structural
            return GcdProfile(
                modulus=m,
                gcds=finite_set(witnesses),
                exact=True,
                witnesses=dict(sorted(witnesses.items())),
                members=members,
            )
        x = horizon or default_horizon()
        witnesses: dict[int, int] = {}
        members: list[int] = []
        for b in self.elements_up_to(x):
            g = math.gcd(b, m)
            witnesses.setdefault(g, b)
            if g == b:
                members.append(b)
        logger.warning("%s: gcd profile of %d truncated at horizon %d", self.name, m, x)
        return GcdProfile(
            modulus=m,
            gcds=finite_set(witnesses),
            exact=False,
            witnesses=dict(sorted(witnesses.items())),
            members=tuple(members),
            horizon=x,
        )

    # -- descriptors ---------------------------------------------------------

    def spec(self) -> dict[str, Any]:
        """Config-file form {"family": ..., "params": ...}."""
        return {"family": self.name, "params": dict(self.params)}

    def describe(self) -> dict[str, Any]:
        return {
            "family": self.name,
            "params": dict(self.params),
            "finite": self.is_finite,
            "primitive": self.primitive_flag,
            "behrend_scale": self.behrend_scale,
            "exact_oracle": type(self)._structural_profile is not BSet._structural_profile,
        }


def _direct_profile(elements: Iterable[int], m: int) -> tuple[dict[int, int], FiniteSet]:
    witnesses: dict[int, int] = {}
    members: list[int] = []
    for b in elements:
        g = math.gcd(b, m)
        witnesses.setdefault(g, b)
        if g == b:
            members.append(b)
    return witnesses, finite_set(members)


def _first_prime_not_dividing(m: int, candidates: Iterable[int]) -> int:
    for p in candidates:
        if m % p:
            return p
    raise RuntimeError("prime candidate stream exhausted")


def _primes_from(start: int) -> Iterable[int]:
    p = start if is_prime(start) else next_prime(start)
    while True:
        yield p
        p = next_prime(p)


# ---------------------------------------------------------------------------
# Explicit finite sets
# ---------------------------------------------------------------------------

class ExplicitBSet(BSet):
    name = "explicit"
    summary = "Any finite set of naturals; may contain 1."
    param_schema = {"elements": "list of integers >= 1"}
    is_finite = True

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        try:
            self.elements = finite_set(self.params.get("elements", ()))
        except (TypeError, ValueError) as exc:
            raise UnknownFamilyError(f"explicit: invalid elements: {exc}") from exc
        self.params = {"elements": list(self.elements)}
        self.primitive_flag = is_primitive(self.elements)

    def _enumerate(self, x: int) -> Iterable[int]:
        return [b for b in self.elements if b <= x]

    def max_element(self) -> Optional[int]:
        return self.elements[-1] if self.elements else 0

    def block(self, k: int) -> FiniteSet:
        if k < 1:
            raise ValueError(f"block index must be >= 1, got {k}")
        return self.elements if k == 1 else ()

    def block_count(self) -> Optional[int]:
        return 1 if self.elements else 0

    def contains(self, n: int) -> bool:
        return n in self.elements

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        return _direct_profile(self.elements, m)


# ---------------------------------------------------------------------------
# Prime-based families
# ---------------------------------------------------------------------------

class PrimesBSet(BSet):
    name = "primes"
    summary = "All primes."
    primitive_flag = True
    behrend_scale = 1
    odd_only = False

    def _enumerate(self, x: int) -> Iterable[int]:
        table = primes_up_to(x)
        if self.odd_only:
            table = table[table != 2]
        return table.tolist()

    def contains(self, n: int) -> bool:
        return is_prime(n) and not (self.odd_only and n == 2)

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        support = [p for p in prime_support(m) if not (self.odd_only and p == 2)]
        witnesses = {p: p for p in support}
        witnesses[1] = _first_prime_not_dividing(m, _primes_from(3 if self.odd_only else 2))
        return witnesses, tuple(support)


class OddPrimesBSet(PrimesBSet):
    name = "odd-primes"
    summary = "All odd primes."
    odd_only = True


class PrimeSquaresBSet(BSet):
    name = "prime-squares"
    summary = "Squares of primes; B-free numbers are the squarefree numbers."
    primitive_flag = True

    def _enumerate(self, x: int) -> Iterable[int]:
        return [int(p) * int(p) for p in primes_up_to(math.isqrt(x))]

    def contains(self, n: int) -> bool:
        r = math.isqrt(n)
        return r * r == n and is_prime(r)

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        witnesses: dict[int, int] = {}
        members: list[int] = []
        for p, e in factorize(m, cap=None).items():
            witnesses[p ** min(2, e)] = p * p
            if e >= 2:
                members.append(p * p)
        q = _first_prime_not_dividing(m, _primes_from(2))
        witnesses[1] = q * q
        return witnesses, finite_set(members)


class Mod12BSet(BSet):
    """
    {4, 6} ∪ {p_k : k in Z}, p_k the smallest prime divisor of 5 + 12k that is
    not ±1 mod 12. Every such prime is its own p_k, so the family equals
    {4, 6} ∪ {primes ≡ 5, 7 mod 12}.
    """
    name = "mod12"
    summary = "{4,6} ∪ {p_k}, p_k | 5+12k, p_k ≢ ±1 mod 12."
    primitive_flag = True
    behrend_scale = 1

    @staticmethod
    def qualifies(p: int) -> bool:
        return p % 12 in (5, 7)

    @classmethod
    def index_prime(cls, k: int) -> int:
        """p_k: smallest prime divisor of |5 + 12k| that is not ±1 mod 12."""
        for p in factorize(abs(5 + 12 * k), cap=None):
            if cls.qualifies(p):
                return p
        raise RuntimeError(f"no qualifying prime divisor of {5 + 12 * k}")

    def _enumerate(self, x: int) -> Iterable[int]:
        small = [b for b in (4, 6) if b <= x]
        return small + [int(p) for p in primes_up_to(x) if self.qualifies(int(p))]

    def contains(self, n: int) -> bool:
        return n in (4, 6) or (is_prime(n) and self.qualifies(n))

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        witnesses: dict[int, int] = {}
        members: list[int] = []
        for b in (4, 6):
            witnesses.setdefault(math.gcd(b, m), b)
            if m % b == 0:
                members.append(b)
        for p in prime_support(m):
            if self.qualifies(p):
                witnesses.setdefault(p, p)
                members.append(p)
        q = _first_prime_not_dividing(m, (p for p in _primes_from(5) if self.qualifies(p)))
        witnesses.setdefault(1, q)
        return witnesses, finite_set(members)


class PuncturedPrimesBSet(BSet):
    """
    Primes minus K constructed primes. (m_k, r_k) enumerates coprime pairs of
    naturals by increasing m + r, then increasing m; p_k is the smallest prime
    in r_k + m_k·Z with p_k > 2^(k+1) not already removed.
    """
    name = "punctured-primes"
    summary = "Primes minus p_k ∈ r_k + m_k·Z with p_k > 2^(k+1), k = 1..K."
    param_schema = {"count": "number K of removed primes (default 10)"}
    primitive_flag = True
    behrend_scale = 1

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        count = int(self.params.get("count", DEFAULT_PUNCTURED_COUNT))
        if count < 0:
            raise UnknownFamilyError(f"punctured-primes: count must be >= 0, got {count}")
        self.params = {"count": count}
        self.pairs = coprime_pairs(count)
        self.removed: tuple[int, ...] = self._choose_removed()
        self._removed_set = frozenset(self.removed)

    def _choose_removed(self) -> tuple[int, ...]:
        chosen: list[int] = []
        for k, (m, r) in enumerate(self.pairs, start=1):
            floor = 2 ** (k + 1)
            t = floor + 1 + ((r - floor - 1) % m)
            while not is_prime(t) or t in chosen:
                t += m
            chosen.append(t)
        logger.debug("punctured-primes: removed %s", chosen)
        return tuple(chosen)

    def _enumerate(self, x: int) -> Iterable[int]:
        return [int(p) for p in primes_up_to(x) if int(p) not in self._removed_set]

    def contains(self, n: int) -> bool:
        return is_prime(n) and n not in self._removed_set

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        support = [p for p in prime_support(m) if p not in self._removed_set]
        witnesses = {p: p for p in support}
        witnesses[1] = _first_prime_not_dividing(
            m, (p for p in _primes_from(2) if p not in self._removed_set)
        )
        return witnesses, tuple(support)


def coprime_pairs(count: int) -> list[tuple[int, int]]:
    """
    First `count` coprime pairs (m, r) of naturals, by m + r then m.

    >>> coprime_pairs(4)
    [(1, 1), (1, 2), (2, 1), (1, 3)]
    """
    pairs: list[tuple[int, int]] = []
    total = 2
    while len(pairs) < count:
        for m in range(1, total):
            r = total - m
            if math.gcd(m, r) == 1:
                pairs.append((m, r))
                if len(pairs) == count:
                    break
        total += 1
    return pairs


class Ape1BSet(BSet):
    """
    {p^2·q : p among the first I primes, q prime, q != p}; I absent = all primes.
    Contains 4·(odd primes), a scaled Behrend set, so it is not taut; its
    tautification is the prime-squares set over the same p.
    """
    name = "ape1"
    summary = "⋃ p_i^2·(primes minus p_i) over the first I primes."
    param_schema = {"indices": "number of prime indices I (absent = all primes)"}
    primitive_flag = True
    behrend_scale = 4

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        raw = self.params.get("indices")
        self.indices: Optional[int] = None if raw is None else int(raw)
        if self.indices is not None and self.indices < 1:
            raise UnknownFamilyError(f"ape1: indices must be >= 1, got {self.indices}")
        self.params = {} if self.indices is None else {"indices": self.indices}
        self._stream = PrimeStream(2)

    def _square_primes(self, bound: int) -> list[int]:
        """Primes p in the index range with p <= bound."""
        ps = self._stream.up_to(bound)
        return ps if self.indices is None else ps[: self.indices]

    def _in_index_range(self, p: int) -> bool:
        if self.indices is None:
            return True
        return p <= self._stream[self.indices - 1]

    def _enumerate(self, x: int) -> Iterable[int]:
        out: list[int] = []
        qs = primes_up_to(x // 4) if x >= 8 else np.array([], dtype=np.int64)
        for p in self._square_primes(math.isqrt(x // 2)):
            sq = p * p
            for q in qs[: np.searchsorted(qs, x // sq, side="right")]:
                if int(q) != p:
                    out.append(sq * int(q))
        return out

    def contains(self, n: int) -> bool:
        if n < 12:
            return False
        f = factorize(n, cap=None)
        if sorted(f.values()) != [1, 2]:
            return False
        p = next(p for p, e in f.items() if e == 2)
        return self._in_index_range(p)

    def tautification(self) -> BSet:
        if self.indices is None:
            return PrimeSquaresBSet()
        return ExplicitBSet({"elements": [p * p for p in self._square_primes(self._stream[self.indices - 1])]})

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        f = factorize(m, cap=None)
        support = list(f)
        witnesses: dict[int, int] = {}
        members: list[int] = []

        def generic_q(avoid: int) -> int:
            return _first_prime_not_dividing(m, (q for q in _primes_from(2) if q != avoid))

        for p in support:
            if not self._in_index_range(p):
                continue
            pp = p ** min(2, f[p])
            for q in support:
                if q != p:
                    witnesses.setdefault(pp * q, p * p * q)
                    if f[p] >= 2:
                        members.append(p * p * q)
            witnesses.setdefault(pp, p * p * generic_q(p))

        generic_p = None
        if self.indices is None:
            generic_p = _first_prime_not_dividing(m, _primes_from(2))
        else:
            for i in range(self.indices):
                if m % self._stream[i]:
                    generic_p = self._stream[i]
                    break
        if generic_p is not None:
            for q in support:
                witnesses.setdefault(q, generic_p * generic_p * q)
            witnesses.setdefault(1, generic_p * generic_p * generic_q(generic_p))
        return witnesses, finite_set(members)


# ---------------------------------------------------------------------------
# Block families
# ---------------------------------------------------------------------------

class BlockFamily(BSet):
    """
    B = B_1 ∪ B_2 ∪ ... built from prime streams. Block k introduces the
    stream primes `_block_primes(k)`; every element of blocks >= k is at
    least `_block_floor(k)`.

    Exact oracle: strip base and stream primes from m block by block to find
    the last block K0 whose new primes divide m; blocks past K0 only repeat
    gcd values already realized by blocks K0+1 and K0+2.
    """

    primitive_flag = True
    base_primes: tuple[int, ...] = ()
    finite_blocks: Optional[int] = None        # set when built from explicit lists

    def _block_primes(self, k: int) -> tuple[int, ...]:
        raise NotImplementedError

    def _block_floor(self, k: int) -> int:
        raise NotImplementedError

    def _oracle_min_block(self, m: int) -> int:
        return 0

    def block(self, k: int) -> FiniteSet:
        raise NotImplementedError

    def block_count(self) -> Optional[int]:
        return self.finite_blocks

    def max_element(self) -> Optional[int]:
        if self.finite_blocks is None:
            return None
        return max((max(self.block(k)) for k in range(1, self.finite_blocks + 1)), default=0)

    def _enumerate(self, x: int) -> Iterable[int]:
        out: list[int] = []
        k = 1
        while True:
            if self.finite_blocks is not None:
                if k > self.finite_blocks:
                    break
            elif self._block_floor(k) > x:
                break
            out.extend(b for b in self.block(k) if b <= x)
            k += 1
        return out

    def _structural_profile(self, m: int) -> Optional[tuple[dict[int, int], FiniteSet]]:
        if self.finite_blocks is not None:
            return _direct_profile(
                (b for k in range(1, self.finite_blocks + 1) for b in self.block(k)), m
            )
        rest = m
        for p in self.base_primes:
            while rest % p == 0:
                rest //= p
        last = self._oracle_min_block(m)
        k = 1
        while rest > 1:
            for p in self._block_primes(k):
                if rest % p == 0:
                    last = max(last, k)
                    while rest % p == 0:
                        rest //= p
            if rest == 1:
                break
            upcoming = min(self._block_primes(k + 1))
            if upcoming > rest:
                break
            if upcoming > ORACLE_STREAM_PRIME_LIMIT:
                logger.warning("%s: stream oracle for %d passed %d; falling back", self.name, m, ORACLE_STREAM_PRIME_LIMIT)
                return None
            k += 1
        return _direct_profile(
            (b for j in range(1, last + 3) for b in self.block(j)), m
        )


def _prime_list(raw: Any, label: str, family: str, minimum: int = 2) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise UnknownFamilyError(f"{family}: {label} must be a list of primes") from exc
    for v in values:
        if v < minimum or not is_prime(v):
            raise UnknownFamilyError(f"{family}: {label} entry {v} is not a prime >= {minimum}")
    return values


class TwoThreeBSet(BlockFamily):
    """
    {36} ∪ {2p_i} ∪ {3q_i}. Default streams deal the primes >= 5 alternately:
    p = 5, 11, 17, 23, ...; q = 7, 13, 19, 29, ...
    Block 1 = {36, 2p_1, 3q_1}; block k = {2p_k, 3q_k}.
    """
    name = "two-three"
    summary = "{36} ∪ {2p_i} ∪ {3q_i} with pairwise different primes p_i, q_i >= 5."
    param_schema = {"p": "optional list of primes >= 5", "q": "optional list of primes >= 5"}
    base_primes = (2, 3)
    behrend_scale = 2

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        self._stream = PrimeStream(5)
        self._p: Optional[tuple[int, ...]] = None
        self._q: Optional[tuple[int, ...]] = None
        if "p" in self.params or "q" in self.params:
            self._p = _prime_list(self.params.get("p", ()), "p", self.name, 5)
            self._q = _prime_list(self.params.get("q", ()), "q", self.name, 5)
            if len(self._p) != len(self._q) or not self._p:
                raise UnknownFamilyError("two-three: p and q must be non-empty and of equal length")
            if len(set(self._p + self._q)) != 2 * len(self._p):
                raise UnknownFamilyError("two-three: p and q primes must be pairwise different")
            self.finite_blocks = len(self._p)
            self.is_finite = True
            self.behrend_scale = None
            self.params = {"p": list(self._p), "q": list(self._q)}

    def p(self, k: int) -> int:
        return self._p[k - 1] if self._p is not None else self._stream[2 * (k - 1)]

    def q(self, k: int) -> int:
        return self._q[k - 1] if self._q is not None else self._stream[2 * k - 1]

    def block(self, k: int) -> FiniteSet:
        if k < 1:
            raise ValueError(f"block index must be >= 1, got {k}")
        if self.finite_blocks is not None and k > self.finite_blocks:
            return ()
        extra = (36,) if k == 1 else ()
        return finite_set(extra + (2 * self.p(k), 3 * self.q(k)))

    def _block_primes(self, k: int) -> tuple[int, ...]:
        return (self.p(k), self.q(k))

    def _block_floor(self, k: int) -> int:
        return 2 * self.p(k)


class CascadeBSet(BlockFamily):
    """
    B_1 = {p1·q1};  B_k = {P_(k-1)·p_k^2, P_(k-1)·q_k^2} ∪ {P_(i-1)·q_i·q_k^2 : 1 <= i < k}
    with P_j = p_1···p_j. Default streams deal all primes alternately:
    p = 2, 5, 11, 17, ...; q = 3, 7, 13, 19, ...
    """
    name = "cascade"
    summary = "Cascade of blocks B_k with P_(k-1)·p_k^2, P_(k-1)·q_k^2, P_(i-1)·q_i·q_k^2."
    param_schema = {"p": "optional list of primes", "q": "optional list of primes"}

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        self._stream = PrimeStream(2)
        self._p: Optional[tuple[int, ...]] = None
        self._q: Optional[tuple[int, ...]] = None
        if "p" in self.params or "q" in self.params:
            self._p = _prime_list(self.params.get("p", ()), "p", self.name)
            self._q = _prime_list(self.params.get("q", ()), "q", self.name)
            if len(self._p) != len(self._q) or not self._p:
                raise UnknownFamilyError("cascade: p and q must be non-empty and of equal length")
            if len(set(self._p + self._q)) != 2 * len(self._p):
                raise UnknownFamilyError("cascade: p and q primes must be pairwise different")
            self.finite_blocks = len(self._p)
            self.is_finite = True
            self.params = {"p": list(self._p), "q": list(self._q)}

    def p(self, k: int) -> int:
        return self._p[k - 1] if self._p is not None else self._stream[2 * (k - 1)]

    def q(self, k: int) -> int:
        return self._q[k - 1] if self._q is not None else self._stream[2 * k - 1]

    def p_product(self, j: int) -> int:
        """P_j = p_1···p_j (P_0 = 1)."""
        return math.prod(self.p(i) for i in range(1, j + 1))

    def block(self, k: int) -> FiniteSet:
        if k < 1:
            raise ValueError(f"block index must be >= 1, got {k}")
        if self.finite_blocks is not None and k > self.finite_blocks:
            return ()
        if k == 1:
            return (self.p(1) * self.q(1),)
        pk, qk = self.p(k), self.q(k)
        head = self.p_product(k - 1)
        elems = [head * pk * pk, head * qk * qk]
        elems += [self.p_product(i - 1) * self.q(i) * qk * qk for i in range(1, k)]
        return finite_set(elems)

    def _block_primes(self, k: int) -> tuple[int, ...]:
        return (self.p(k), self.q(k))

    def _block_floor(self, k: int) -> int:
        if k == 1:
            return 1
        return min(self.p(k), self.q(k)) ** 2


class QFamilyBSet(BlockFamily):
    """
    B_k = {p_k·q, p_1·p_k, ..., p_(k-1)·p_k}. Default q = 3 and p = the odd
    primes other than q in increasing order.
    """
    name = "q-family"
    summary = "B_k = {p_k·q, p_1·p_k, …, p_(k-1)·p_k} for pairwise different odd primes."
    param_schema = {"q": "odd prime (default 3)", "p": "optional list of odd primes"}

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        raw_p = self.params.get("p")
        self.qprime = int(self.params.get("q", 3))
        if self.qprime < 3 or not is_prime(self.qprime):
            raise UnknownFamilyError(f"q-family: q must be an odd prime, got {self.qprime}")
        self.base_primes = (self.qprime,)
        self.behrend_scale = self.qprime
        self._stream = PrimeStream(3, exclude=(self.qprime,))
        self._p: Optional[tuple[int, ...]] = None
        self.params = {"q": self.qprime}
        if raw_p is not None:
            self._p = _prime_list(raw_p, "p", self.name, 3)
            if not self._p or len(set(self._p)) != len(self._p) or self.qprime in self._p:
                raise UnknownFamilyError("q-family: p must be non-empty, pairwise different and avoid q")
            self.finite_blocks = len(self._p)
            self.is_finite = True
            self.behrend_scale = None
            self.params["p"] = list(self._p)

    def p(self, k: int) -> int:
        return self._p[k - 1] if self._p is not None else self._stream[k - 1]

    def block(self, k: int) -> FiniteSet:
        if k < 1:
            raise ValueError(f"block index must be >= 1, got {k}")
        if self.finite_blocks is not None and k > self.finite_blocks:
            return ()
        pk = self.p(k)
        return finite_set([pk * self.qprime] + [self.p(i) * pk for i in range(1, k)])

    def _enumerate(self, x: int) -> Iterable[int]:
        if self.finite_blocks is not None:
            return super()._enumerate(x)
        # blocks grow linearly; only the p_i <= x / p_k part of each is kept
        out: list[int] = []
        earlier: list[int] = []
        k = 1
        while self._block_floor(k) <= x:
            pk = self.p(k)
            if pk * self.qprime <= x:
                out.append(pk * self.qprime)
            bound = x // pk
            for pi in earlier:
                if pi > bound:
                    break
                out.append(pi * pk)
            earlier.append(pk)
            k += 1
        return out

    def _block_primes(self, k: int) -> tuple[int, ...]:
        return (self.p(k),)

    def _block_floor(self, k: int) -> int:
        return self.p(k) * min(self.qprime, self.p(1))


class Power2BSet(BlockFamily):
    """
    {2^k · b'_k : k >= 1} for a coprime set of odd b'_k > 1. Default b'_k are
    the odd primes; `count` truncates to the first K, `odd_parts` gives the
    b'_k explicitly. Block k = {2^k · b'_k}.
    """
    name = "power2"
    summary = "{2^k·b'_k} with {b'_k} a coprime set of odd numbers > 1."
    param_schema = {
        "count": "optional number K of elements (first K odd primes)",
        "odd_parts": "optional explicit list of pairwise coprime odd numbers > 1",
    }
    base_primes = (2,)

    def __init__(self, params: Optional[dict[str, Any]] = None) -> None:
        super().__init__(params)
        self._stream = PrimeStream(3)
        self._odd: Optional[tuple[int, ...]] = None
        if "odd_parts" in self.params:
            try:
                odd = tuple(int(v) for v in self.params["odd_parts"])
            except (TypeError, ValueError) as exc:
                raise UnknownFamilyError("power2: odd_parts must be a list of integers") from exc
            if not odd or any(v < 3 or v % 2 == 0 for v in odd) or not pairwise_coprime(odd):
                raise UnknownFamilyError("power2: odd_parts must be pairwise coprime odd numbers > 1")
            self._odd = odd
            self.params = {"odd_parts": list(odd)}
        elif self.params.get("count") is not None:
            count = int(self.params["count"])
            if count < 1:
                raise UnknownFamilyError(f"power2: count must be >= 1, got {count}")
            self._odd = tuple(self._stream[i] for i in range(count))
            self.params = {"count": count}
        else:
            self.params = {}
        if self._odd is not None:
            self.finite_blocks = len(self._odd)
            self.is_finite = True

    def odd_part(self, k: int) -> int:
        return self._odd[k - 1] if self._odd is not None else self._stream[k - 1]

    def block(self, k: int) -> FiniteSet:
        if k < 1:
            raise ValueError(f"block index must be >= 1, got {k}")
        if self.finite_blocks is not None and k > self.finite_blocks:
            return ()
        return (2 ** k * self.odd_part(k),)

    def _block_primes(self, k: int) -> tuple[int, ...]:
        return (self.odd_part(k),)

    def _block_floor(self, k: int) -> int:
        return 2 ** k * self.odd_part(k)

    def _oracle_min_block(self, m: int) -> int:
        return valuation(m, 2)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

_FAMILIES: dict[str, type[BSet]] = {
    cls.name: cls
    for cls in (
        ExplicitBSet,
        PrimesBSet,
        OddPrimesBSet,
        PrimeSquaresBSet,
        Power2BSet,
        TwoThreeBSet,
        CascadeBSet,
        QFamilyBSet,
        Ape1BSet,
        PuncturedPrimesBSet,
        Mod12BSet,
    )
}


def family_catalog() -> list[FamilyDescriptor]:
    """Every family with its parameter schema."""
    return [
        FamilyDescriptor(
            name=name,
            summary=cls.summary,
            params=dict(cls.param_schema),
            infinite=not cls.is_finite,
            exact_oracle=cls._structural_profile is not BSet._structural_profile,
        )
        for name, cls in _FAMILIES.items()
    ]


def make_bset(spec: dict[str, Any]) -> BSet:
    """
    Build a BSet from {"family": name, "params": {...}} or {"elements": [...]}.

    >>> make_bset({"family": "prime-squares"}).elements_up_to(30)
    (4, 9, 25)
    """
    if "elements" in spec and "family" not in spec:
        return ExplicitBSet({"elements": spec["elements"]})
    name = spec.get("family")
    cls = _FAMILIES.get(name)
    if cls is None:
        raise UnknownFamilyError(
            f"Unknown family '{name}'. Must be one of: {', '.join(sorted(_FAMILIES))}"
        )
    params = spec.get("params") or {}
    if not isinstance(params, dict):
        raise UnknownFamilyError(f"{name}: params must be an object, got {type(params).__name__}")
    try:
        return cls(params)
    except UnknownFamilyError:
        raise
    except (TypeError, ValueError) as exc:
        raise UnknownFamilyError(f"{name}: invalid params {params!r}: {exc}") from exc
