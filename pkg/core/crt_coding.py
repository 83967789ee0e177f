"""
core/crt_coding.py — bfree-lab
================================
Residue systems over B: CRT with non-coprime moduli, B-free solutions of a
residue system, the coding map φ on finitely described points of H, its
θ back-map and block dominance search.

Responsibilities:
- crt_solve(): pairwise xgcd merging; incompatibility is a result, not an error
- bfree_crt_search(): B-free members of n0 + lcm(S)·Z on [1, N]
- phi_block(): φ(h) on [lo, hi] for h = assigned residues + default rule
- theta_of_block(): the class of bZ missed by a block, per b
- block_containment_check(): verbatim or coordinatewise-dominating occurrences

Points h are described by finitely many assigned coordinates plus one
default: "zero" (h_b = 0), "delta" (h_b = n0 mod b, the point Δ(n0)) or
"none" (every coordinate that can fire must be assigned).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.arithmetic import primitivize
from core.bset_families import BSet
from core.density_lab import PERIOD_SIEVE_CAP
from core.interval_sieve import EtaBlock, residue_coverage, sieve_progression, signed_free_mask

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

DEFAULT_RULES = ("zero", "delta", "none")
MAX_SOLUTIONS_LISTED: int = 1_000      # solutions kept in a CrtSearch; `count` has them all
DOMINANCE_MODES = ("exact", "lower")
THETA_STATUSES = ("window-missed", "provably-missed", "undefined-none-missed", "undefined-several-missed")


class UnresolvedCoordinateError(ValueError):
    """A coordinate h_b is needed but neither assigned nor covered by the default rule."""

    def __init__(self, b: int, reason: str = "not assigned and default rule is 'none'") -> None:
        self.b = b
        super().__init__(f"coordinate b={b}: {reason}")


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class CylinderSpec:
    """Residues h_b (0 <= h_b < b) on a finite S ⊆ B."""
    residues: dict[int, int]

    def __post_init__(self) -> None:
        clean: dict[int, int] = {}
        for b, r in self.residues.items():
            b, r = int(b), int(r)
            if b < 1:
                raise ValueError(f"modulus must be >= 1, got {b}")
            clean[b] = r % b
        self.residues = dict(sorted(clean.items()))

    @property
    def S(self) -> tuple[int, ...]:
        return tuple(self.residues)


@dataclass
class CrtResult:
    compatible: bool
    n0: Optional[int] = None
    modulus: Optional[int] = None
    violating_pair: Optional[tuple[int, int]] = None

    def contains(self, n: int) -> bool:
        return self.compatible and n % self.modulus == self.n0


@dataclass
class CrtSearch:
    progression: CrtResult
    horizon: int
    count: int
    solutions: list[int]                     # first MAX_SOLUTIONS_LISTED
    density: float                           # count / N
    relative_density: float                  # count / (N / modulus)


@dataclass
class HPoint:
    """Finitely described h ∈ ∏ Z/bZ: assigned coordinates plus a default rule."""
    assigned: dict[int, int] = field(default_factory=dict)
    default: str = "zero"
    n0: int = 0                              # used by the "delta" rule

    def __post_init__(self) -> None:
        if self.default not in DEFAULT_RULES:
            raise ValueError(f"Invalid default rule '{self.default}'. Must be one of: {', '.join(DEFAULT_RULES)}")
        self.assigned = CylinderSpec(self.assigned).residues

    def coordinate(self, b: int) -> int:
        if b in self.assigned:
            return self.assigned[b]
        if self.default == "zero":
            return 0
        if self.default == "delta":
            return self.n0 % b
        raise UnresolvedCoordinateError(b)

    def validate(self, bset: BSet) -> None:
        """Assigned keys lie in B and are pairwise CRT-compatible."""
        for b in self.assigned:
            if not bset.contains(b):
                raise UnresolvedCoordinateError(b, f"not an element of {bset.name}")
        result = crt_solve(CylinderSpec(self.assigned))
        if not result.compatible:
            b1, b2 = result.violating_pair
            raise ValueError(
                f"h is not in H: h_{b1}={self.assigned[b1]} and h_{b2}={self.assigned[b2]} "
                f"differ mod gcd={math.gcd(b1, b2)}"
            )

    @classmethod
    def delta(cls, n0: int) -> "HPoint":
        return cls(default="delta", n0=n0)


@dataclass
class ThetaEntry:
    b: int
    status: str                              # one of THETA_STATUSES
    g: Optional[int]                         # θ coordinate when exactly one class is missed
    missed: list[int]


# ---------------------------------------------------------------------------
# CRT
# ---------------------------------------------------------------------------

def _merge(a1: int, m1: int, a2: int, m2: int) -> tuple[int, int]:
    g = math.gcd(m1, m2)
    l = m1 // g * m2
    if g == m2:
        return a1 % l, l
    # a1 + m1·t ≡ a2 (mod m2)  <=>  t ≡ ((a2 - a1)/g)·(m1/g)^-1 (mod m2/g)
    t = ((a2 - a1) // g * pow(m1 // g, -1, m2 // g)) % (m2 // g)
    return (a1 + m1 * t) % l, l


def crt_solve(spec: CylinderSpec) -> CrtResult:
    """
    Solve n ≡ h_b (mod b) for all b in S. Moduli need not be coprime.

    >>> crt_solve(CylinderSpec({4: 1, 6: 5}))
    CrtResult(compatible=True, n0=5, modulus=12, violating_pair=None)
    >>> crt_solve(CylinderSpec({4: 1, 6: 2})).violating_pair
    (4, 6)
    """
    items = list(spec.residues.items())
    for i, (b1, r1) in enumerate(items):
        for b2, r2 in items[i + 1:]:
            if (r1 - r2) % math.gcd(b1, b2):
                logger.debug("crt_solve: %d mod %d vs %d mod %d incompatible", r1, b1, r2, b2)
                return CrtResult(compatible=False, violating_pair=(b1, b2))
    n0, modulus = 0, 1
    for b, r in items:
        n0, modulus = _merge(n0, modulus, r, b)
    return CrtResult(compatible=True, n0=n0, modulus=modulus)


def bfree_crt_search(bset: BSet, spec: CylinderSpec, n: int) -> CrtSearch:
    """B-free n in [1, N] with n ≡ n0 (mod lcm S), sieved along the progression."""
    if n < 1:
        raise ValueError(f"bfree_crt_search needs N >= 1, got {n}")
    result = crt_solve(spec)
    if not result.compatible:
        b1, b2 = result.violating_pair
        raise ValueError(f"residues incompatible at ({b1}, {b2}); no progression to search")
    block = sieve_progression(bset, result.modulus, result.n0, 1, n)
    count = int(block.bits.sum())
    solutions = [block.offset + block.step * int(i) for i in np.flatnonzero(block.bits)[:MAX_SOLUTIONS_LISTED]]
    logger.info("bfree_crt_search(%s): %d mod %d on [1, %d] -> %d solutions",
                bset.name, result.n0, result.modulus, n, count)
    return CrtSearch(
        progression=result,
        horizon=n,
        count=count,
        solutions=solutions,
        density=count / n,
        relative_density=count * result.modulus / n,
    )


def exact_progression_density(bset: BSet, spec: CylinderSpec) -> float:
    """
    Share of n0 + lcm(S)·Z that is B-free, for finite B, over one full period
    lcm(lcm S, lcm prim B).
    """
    if not bset.is_finite:
        raise ValueError(f"{bset.name} is infinite; exact progression density needs a finite B")
    result = crt_solve(spec)
    if not result.compatible:
        return 0.0
    prim = primitivize(bset.elements_up_to(bset.max_element() or 1))
    period = math.lcm(result.modulus, *prim) if prim else result.modulus
    if period > PERIOD_SIEVE_CAP:
        raise ValueError(f"period {period} exceeds {PERIOD_SIEVE_CAP}")
    block = sieve_progression(bset, result.modulus, result.n0, 1, period)
    return int(block.bits.sum()) / len(block)


# ---------------------------------------------------------------------------
# Coding map
# ---------------------------------------------------------------------------

def phi_block(bset: BSet, h: HPoint, lo: int, hi: int) -> EtaBlock:
    """
    φ(h) on [lo, hi]: φ(h)(n) = 1 iff h_b + n ≢ 0 (mod b) for every b in B.

    Unassigned coordinates follow h.default. Under "zero" and "delta" they act
    like η shifted by n0, so only b <= max |n0 + n| can fire (plus n0 + n = 0).
    """
    if lo > hi:
        raise ValueError(f"phi_block needs lo <= hi, got [{lo}, {hi}]")
    shift = h.n0 if h.default == "delta" else 0
    horizon = max(abs(lo + shift), abs(hi + shift))
    candidates = bset.elements_up_to(max(horizon, max(h.assigned, default=1))) if horizon or h.assigned else ()
    unassigned = [b for b in candidates if b not in h.assigned and b <= max(horizon, 1)]

    if h.default == "none":
        if unassigned:
            raise UnresolvedCoordinateError(unassigned[0])
        bits = np.ones(hi - lo + 1, dtype=bool)
    else:
        bits = signed_free_mask(np.array(unassigned, dtype=np.int64), lo + shift, hi + shift)
        zero = -shift
        if lo <= zero <= hi and not _some_unassigned(bset, h):
            bits[zero - lo] = True
    for b, r in h.assigned.items():
        start = (-r - lo) % b
        bits[start::b] = False
    logger.debug("phi_block(%s): [%d, %d], default=%s, %d assigned", bset.name, lo, hi, h.default, len(h.assigned))
    return EtaBlock(offset=lo, bits=bits, b_horizon=horizon, exact=True, label="phi")


def _some_unassigned(bset: BSet, h: HPoint) -> bool:
    if not bset.is_finite:
        return True
    return any(b not in h.assigned for b in bset.elements_up_to(bset.max_element() or 1))


def theta_of_block(block: EtaBlock, bset: BSet, b_max: int) -> dict[int, ThetaEntry]:
    """
    For each b in B ∩ [1, b_max]: the classes r mod b the support misses.
    Exactly one missed class r gives θ_b = -r mod b (supp ∩ (bZ - θ_b) = ∅).
    """
    if not block.exact:
        raise ValueError("theta_of_block needs an exact block")
    full_period = None
    if bset.is_finite:
        prim = primitivize(bset.elements_up_to(bset.max_element() or 1))
        full_period = math.lcm(*prim) if prim else 1
    spans_period = full_period is not None and block.step == 1 and len(block) >= full_period

    out: dict[int, ThetaEntry] = {}
    for b in bset.elements_up_to(b_max) if b_max >= 1 else ():
        missed = residue_coverage(block, b).missed
        if len(missed) == 1:
            status = "provably-missed" if spans_period else "window-missed"
            out[b] = ThetaEntry(b, status, (-missed[0]) % b, missed)
        elif not missed:
            out[b] = ThetaEntry(b, "undefined-none-missed", None, missed)
        else:
            out[b] = ThetaEntry(b, "undefined-several-missed", None, missed[:MAX_SOLUTIONS_LISTED])
    return out


# ---------------------------------------------------------------------------
# Block search
# ---------------------------------------------------------------------------

def parse_needle(needle: Union[str, np.ndarray, list[int]]) -> np.ndarray:
    if isinstance(needle, str):
        if not needle or set(needle) - {"0", "1"}:
            raise ValueError(f"needle must be a non-empty 0/1 string, got {needle!r}")
        return np.frombuffer(needle.encode("ascii"), dtype=np.uint8) == ord("1")
    arr = np.asarray(needle).astype(bool)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("needle must be a non-empty 1-d pattern")
    return arr


def block_containment_check(
    needle: Union[str, np.ndarray, list[int]],
    hay: EtaBlock,
    dominance: str = "exact",
) -> list[int]:
    """
    Start positions in `hay` of windows equal to the needle ("exact") or
    dominating it coordinatewise ("lower"). Empty list = absent.

    >>> from core.interval_sieve import EtaBlock
    >>> import numpy as np
    >>> hay = EtaBlock(offset=0, bits=np.array([0, 1, 1, 0, 1], dtype=bool), b_horizon=4, exact=True)
    >>> block_containment_check("11", hay), block_containment_check("10", hay, "lower")
    ([1], [1, 2])
    """
    if dominance not in DOMINANCE_MODES:
        raise ValueError(f"Invalid dominance '{dominance}'. Must be one of: {', '.join(DOMINANCE_MODES)}")
    pattern = parse_needle(needle)
    if pattern.size > len(hay):
        return []
    windows = sliding_window_view(hay.bits, pattern.size)
    if dominance == "exact":
        hits = (windows == pattern).all(axis=1)
    else:
        hits = (windows | ~pattern).all(axis=1)
    return [hay.offset + hay.step * int(i) for i in np.flatnonzero(hits)]
