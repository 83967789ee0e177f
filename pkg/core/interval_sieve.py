"""
core/interval_sieve.py — bfree-lab
====================================
Exact η = 1_{F_B} on integer intervals by segmented divisor-marking sieves.
No density bookkeeping, no UI.

Responsibilities:
- free_mask(): chunked numpy sieve of the B-free positions in [lo, hi], lo >= 0
- sieve_eta(): exact EtaBlock on any [lo, hi] (negative n via |n|; η(0) = 0)
- sieve_progression(): η on {n ≡ r mod a} ∩ [lo, hi], indexed by step
- residue_coverage(): residues mod b met by the support (Y-membership evidence)
- EtaBlock text / 64-bit little-endian word export

Sieve layout: chunks of BFREE_SIEVE_CHUNK positions (default 2^20). Inside a
chunk, divisors shorter than the chunk are marked by strided slices; longer
divisors hit at most once and are scattered in one vectorized step.

DO NOT put density or classification logic here.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from core.bset_families import BSet

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

SIEVE_CHUNK_BITS: int = 2 ** 20          # positions per segment
SIEVE_MEMORY_BUDGET: int = 2 ** 31       # max positions in one returned block
INT64_SAFE: int = 2 ** 62                # positions beyond this do not fit the numpy path


def _chunk_bits() -> int:
    raw = os.environ.get("BFREE_SIEVE_CHUNK", "")
    try:
        value = int(raw) if raw else SIEVE_CHUNK_BITS
    except ValueError:
        logger.warning("BFREE_SIEVE_CHUNK=%r is not an integer; using %d", raw, SIEVE_CHUNK_BITS)
        return SIEVE_CHUNK_BITS
    return max(value, 1024)


def _workers() -> int:
    raw = os.environ.get("BFREE_SIEVE_WORKERS", "")
    try:
        return max(int(raw), 1) if raw else 1
    except ValueError:
        logger.warning("BFREE_SIEVE_WORKERS=%r is not an integer; using 1", raw)
        return 1


class SieveBudgetError(ValueError):
    """Interval longer than the memory budget."""

    def __init__(self, length: int, budget: int = SIEVE_MEMORY_BUDGET) -> None:
        self.length = length
        self.budget = budget
        self.suggested_chunks = math.ceil(length / budget)
        super().__init__(
            f"interval of {length} positions exceeds the sieve budget of {budget}; "
            f"split it into {self.suggested_chunks} sub-intervals"
        )


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class EtaBlock:
    """
    0/1 block on positions offset + step·i.

    bits[i] = 1 iff no b in B ∩ [1, b_horizon] divides offset + step·i;
    exact iff b_horizon >= every |position|.
    """
    offset: int
    bits: np.ndarray            # dtype bool
    b_horizon: int
    exact: bool
    step: int = 1
    label: str = "eta"

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def last(self) -> int:
        return self.offset + self.step * (len(self) - 1)

    def positions(self) -> np.ndarray:
        return self.offset + self.step * np.arange(len(self), dtype=np.int64)

    def support(self) -> list[int]:
        """Positions carrying a 1."""
        return [self.offset + self.step * int(i) for i in np.flatnonzero(self.bits)]

    def value_at(self, n: int) -> int:
        i, rem = divmod(n - self.offset, self.step)
        if rem or not 0 <= i < len(self):
            raise IndexError(f"position {n} not in block")
        return int(self.bits[i])

    def bitstring(self) -> str:
        return (self.bits.astype(np.uint8) + ord("0")).tobytes().decode("ascii")

    # -- export ----------------------------------------------------------------

    def to_text(self) -> str:
        """`offset <int>` line followed by the 0/1 string."""
        return f"offset {self.offset}\n{self.bitstring()}\n"

    def to_words(self) -> bytes:
        """Bits packed LSB-first into 64-bit little-endian words."""
        packed = np.packbits(self.bits.astype(np.uint8), bitorder="little")
        pad = (-packed.size) % 8
        if pad:
            packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
        return packed.view("<u8").tobytes()

    @classmethod
    def from_text(cls, text: str, b_horizon: Optional[int] = None) -> "EtaBlock":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if len(lines) < 1 or not lines[0].startswith("offset "):
            raise ValueError("EtaBlock text must start with 'offset <int>'")
        offset = int(lines[0].split()[1])
        payload = lines[1] if len(lines) > 1 else ""
        if set(payload) - {"0", "1"}:
            raise ValueError("EtaBlock payload must be a 0/1 string")
        bits = np.frombuffer(payload.encode("ascii"), dtype=np.uint8) == ord("1")
        horizon = b_horizon if b_horizon is not None else max(abs(offset), abs(offset + len(bits) - 1), 0)
        return cls(offset=offset, bits=bits.copy(), b_horizon=horizon,
                   exact=b_horizon is None or horizon >= max(abs(offset), abs(offset + len(bits) - 1)))

    @classmethod
    def from_words(cls, data: bytes, offset: int, length: int, b_horizon: int) -> "EtaBlock":
        raw = np.frombuffer(data, dtype="<u8").view(np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[:length].astype(bool)
        top = max(abs(offset), abs(offset + length - 1))
        return cls(offset=offset, bits=bits, b_horizon=b_horizon, exact=b_horizon >= top)


@dataclass
class ResidueCoverage:
    modulus: int
    residues_hit: frozenset[int]
    window: tuple[int, int]

    @property
    def missed(self) -> list[int]:
        return [r for r in range(self.modulus) if r not in self.residues_hit]

    @property
    def in_y_evidence(self) -> bool:
        """Exactly b - 1 classes met."""
        return len(self.residues_hit) == self.modulus - 1


# ---------------------------------------------------------------------------
# Sieve kernels
# ---------------------------------------------------------------------------

DivisorSource = Union[np.ndarray, Iterable[int]]


def _as_divisor_array(divisors: DivisorSource, hi: int) -> np.ndarray:
    if isinstance(divisors, np.ndarray):
        arr = divisors.astype(np.int64, copy=False)
        return arr[(arr >= 1) & (arr <= hi)]
    return np.array(sorted({int(d) for d in divisors if 1 <= d <= hi}), dtype=np.int64)


def _sieve_chunk(divs: np.ndarray, lo: int, hi: int) -> np.ndarray:
    n = hi - lo + 1
    mask = np.ones(n, dtype=bool)
    active = divs[divs <= hi]
    short = active[active < n]
    long_ = active[active >= n]
    for b in short.tolist():
        mask[(-lo) % b::b] = False
    if long_.size:
        starts = (-lo) % long_
        mask[starts[starts < n]] = False
    return mask


def free_mask(divisors: DivisorSource, lo: int, hi: int) -> np.ndarray:
    """
    Boolean mask over [lo, hi] (0 <= lo <= hi): True where no divisor divides n.
    Position 0 is always False.

    >>> free_mask([2, 3], 0, 9).nonzero()[0].tolist()
    [1, 5, 7]
    """
    if lo < 0 or lo > hi:
        raise ValueError(f"free_mask needs 0 <= lo <= hi, got [{lo}, {hi}]")
    if hi >= INT64_SAFE:
        raise SieveBudgetError(hi, INT64_SAFE)
    divs = _as_divisor_array(divisors, hi)
    length = hi - lo + 1
    chunk = _chunk_bits()
    bounds = [(c, min(c + chunk - 1, hi)) for c in range(lo, hi + 1, chunk)]

    out = np.empty(length, dtype=bool)
    workers = _workers()
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _sieve_chunk(divs, *b), bounds))
    else:
        parts = [_sieve_chunk(divs, c_lo, c_hi) for c_lo, c_hi in bounds]
    for (c_lo, c_hi), part in zip(bounds, parts):
        out[c_lo - lo:c_hi - lo + 1] = part
    if lo == 0:
        out[0] = False
    logger.debug("free_mask: [%d, %d] with %d divisors in %d chunks", lo, hi, divs.size, len(bounds))
    return out


def signed_free_mask(divisors: DivisorSource, lo: int, hi: int) -> np.ndarray:
    """free_mask on any [lo, hi], using η(-n) = η(n)."""
    if lo >= 0:
        return free_mask(divisors, lo, hi)
    if hi <= 0:
        return free_mask(divisors, -hi, -lo)[::-1].copy()
    top = max(-lo, hi)
    base = free_mask(divisors, 0, top)
    return base[np.abs(np.arange(lo, hi + 1, dtype=np.int64))]


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def sieve_eta(bset: BSet, lo: int, hi: int) -> EtaBlock:
    """
    Exact η on [lo, hi].

    >>> from core.bset_families import make_bset
    >>> sieve_eta(make_bset({"elements": [2, 3]}), 0, 9).support()
    [1, 5, 7]
    """
    if lo > hi:
        raise ValueError(f"sieve_eta needs lo <= hi, got [{lo}, {hi}]")
    length = hi - lo + 1
    if length > SIEVE_MEMORY_BUDGET:
        raise SieveBudgetError(length)
    horizon = max(abs(lo), abs(hi))
    divs = bset.elements_array(horizon) if horizon >= 1 else np.array([], dtype=np.int64)
    bits = signed_free_mask(divs, lo, hi)
    logger.info("sieve_eta(%s): [%d, %d], %d free", bset.name, lo, hi, int(bits.sum()))
    return EtaBlock(offset=lo, bits=bits, b_horizon=horizon, exact=True)


def sieve_progression(bset: BSet, a: int, r: int, lo: int, hi: int) -> EtaBlock:
    """
    η restricted to {n in [lo, hi] : n ≡ r mod a}, bit j <-> first + j·a.

    Each b marks the solutions of first + j·a ≡ 0 (mod b), a single class
    mod b / gcd(a, b) when gcd(a, b) divides first.
    """
    if a < 1:
        raise ValueError(f"sieve_progression needs a >= 1, got {a}")
    if lo > hi:
        raise ValueError(f"sieve_progression needs lo <= hi, got [{lo}, {hi}]")
    first = lo + ((r - lo) % a)
    count = 0 if first > hi else (hi - first) // a + 1
    if count > SIEVE_MEMORY_BUDGET:
        raise SieveBudgetError(count)
    horizon = max(abs(lo), abs(hi))
    bits = np.ones(count, dtype=bool)
    if count:
        for b in (bset.elements_up_to(horizon) if horizon >= 1 else ()):
            g = math.gcd(a, b)
            if first % g:
                continue
            bb = b // g
            j0 = (-(first // g) * pow(a // g, -1, bb)) % bb if bb > 1 else 0
            if j0 < count:
                bits[j0::bb] = False
        if first <= 0 <= first + a * (count - 1) and (-first) % a == 0:
            bits[(-first) // a] = False
    logger.debug("sieve_progression(%s): %d mod %d on [%d, %d], %d free", bset.name, r, a, lo, hi, int(bits.sum()))
    return EtaBlock(offset=first, bits=bits, b_horizon=horizon, exact=True, step=a)


def residue_coverage(block: EtaBlock, b: int) -> ResidueCoverage:
    """
    Residues mod b met by supp(block).

    >>> from core.bset_families import make_bset
    >>> sorted(residue_coverage(sieve_eta(make_bset({"elements": [2]}), 0, 9), 2).residues_hit)
    [1]
    """
    if not block.exact:
        raise ValueError("residue_coverage needs an exact block")
    if b < 1:
        raise ValueError(f"modulus must be >= 1, got {b}")
    support = block.positions()[block.bits]
    hit = frozenset(int(x) for x in np.unique(support % b))
    return ResidueCoverage(modulus=b, residues_hit=hit, window=(block.offset, block.last))


def iter_free_chunks(divisors: DivisorSource, lo: int, hi: int, block: int = 2 ** 24):
    """Yield (start, mask) over [lo, hi] block by block (lo >= 0)."""
    if lo < 0 or lo > hi:
        raise ValueError(f"iter_free_chunks needs 0 <= lo <= hi, got [{lo}, {hi}]")
    divs = _as_divisor_array(divisors, hi)
    for start in range(lo, hi + 1, block):
        yield start, free_mask(divs, start, min(start + block - 1, hi))


def count_free(divisors: DivisorSource, lo: int, hi: int) -> int:
    """Positions in [lo, hi] (lo >= 0) divisible by no divisor."""
    return sum(int(mask.sum()) for _, mask in iter_free_chunks(divisors, lo, hi))
