"""
core/window_classifier.py — bfree-lab
=======================================
Window measures, Toeplitz structure and the tri-state classification of
B-free systems from a filtration table. No CLI, no serialization.

Responsibilities:
- window_measures(): m(W), m(int W), m(∂W) with the per-stage boundary trace
- classify(): proximal / toeplitz / top_regular / regular_toeplitz /
  taut_evidence verdicts with witness data, Y-membership evidence and the MEF descriptor
- toeplitz_positions(): good-free / good-multiple / unresolved labels on [0, s_k)
- haar_regularity_scan(): cylinders meeting W whose free count vanishes
- dense_orbit_evidence(): which admissible cylinders contain a B-free integer

Every verdict is "yes", "no" or "undetermined-at-horizon". `certified`
marks verdicts backed by exact finite data; the rest are evidence.

Boundary counts use B ∩ [1, N] in place of B, so they bound m(∂W) from above.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

import numpy as np

from core.arithmetic import greedy_coprime_chain, primitivize
from core.bset_families import BSet
from core.density_lab import (
    DensityCapError,
    DensityEstimate,
    exact_density_of_multiples,
    light_tails_trace,
)
from core.filtration_engine import (
    FiltrationTable,
    MefDescriptor,
    compute_dk,
    detect_a_infinity,
    mef_descriptor,
)
from core.interval_sieve import ResidueCoverage, free_mask, residue_coverage, sieve_eta

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

COPRIME_CHAIN_THRESHOLD: int = 25        # pairwise coprime elements counted as C4/B4 evidence
CHAIN_SEARCH_HORIZON: int = 10 ** 6      # elements of B searched for coprime chains
BOUNDARY_THRESHOLD: float = 1e-3         # last boundary value for a regular Toeplitz verdict
REGULARITY_RATIO: float = 0.01           # cylinder count below ratio·N/s_k is "vanishing"
MIN_EXPECTED_PER_CYLINDER: int = 30      # skip stages with N/s_k below this
SCAN_MAX_MODULUS: int = 10 ** 7          # largest s_k bincounted by the scans
MAX_RECORDS_PER_STAGE: int = 64
TOEPLITZ_SIEVE_BUDGET: int = 10 ** 9     # s_k · N_periods cap for toeplitz_positions
TOEPLITZ_CHECK_PERIODS: int = 4          # periods sieved by the classifier's cross-check
LIGHT_TAIL_THRESHOLD: float = 1e-2       # last tail density counted as light-tails evidence
Y_WINDOW: int = 10 ** 5                  # η window for Y-membership evidence
Y_MAX_ELEMENTS: int = 12                 # elements of B tested for Y-membership

YES, NO, UNDETERMINED = "yes", "no", "undetermined-at-horizon"
VERDICTS = (YES, NO, UNDETERMINED)
POSITION_LABELS = ("unresolved", "good-free", "good-multiple")


class ToeplitzBudgetError(ValueError):
    """s_k · N_periods above TOEPLITZ_SIEVE_BUDGET."""


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    value: str                                  # one of VERDICTS
    certified: bool = False
    certificate: dict[str, Any] = field(default_factory=dict)
    note: str = ""

    def __post_init__(self) -> None:
        if self.value not in VERDICTS:
            raise ValueError(f"Invalid verdict '{self.value}'. Must be one of: {', '.join(VERDICTS)}")


@dataclass
class WindowMeasures:
    m_W: DensityEstimate
    m_intW: DensityEstimate
    m_boundary: DensityEstimate                 # upper bound (B truncated at N)
    per_stage_boundary: list[tuple[int, float]]
    per_stage_interior: list[tuple[int, Union[Fraction, float]]]
    boundary_non_increasing: bool
    bound_direction: str = "upper"


@dataclass
class ToeplitzPositions:
    k: int
    s_k: int
    labels: np.ndarray                          # int8 index into POSITION_LABELS
    counts: dict[str, int]
    unresolved_fraction: float
    periods_checked: int
    consistent: bool                            # good labels agree with sieved η
    mismatches: list[int] = field(default_factory=list)

    def label_of(self, n: int) -> str:
        return POSITION_LABELS[int(self.labels[n % self.s_k])]


@dataclass
class HaarRecord:
    k: int
    modulus: int
    residue: int
    count: int
    expected: float                             # N / s_k
    status: str                                 # vanishing | empty-within-horizon


@dataclass
class HaarScan:
    horizon: int
    ratio: float
    records: list[HaarRecord] = field(default_factory=list)
    skipped_stages: list[int] = field(default_factory=list)
    truncated_stages: list[int] = field(default_factory=list)

    @property
    def vanishing(self) -> list[HaarRecord]:
        return [r for r in self.records if r.status == "vanishing"]

    def flagged(self, modulus: int, residue: int) -> Optional[HaarRecord]:
        for r in self.records:
            if r.modulus == modulus and r.residue == residue:
                return r
        return None


@dataclass
class DenseOrbitRecord:
    k: int
    modulus: int
    admissible: int                             # |F_{S_k} ∩ [0, s_k)|
    hit: int                                    # admissible classes with a B-free n <= N
    missing: list[int] = field(default_factory=list)   # first few classes without one

    @property
    def complete(self) -> bool:
        return self.hit == self.admissible


@dataclass
class ClassificationReport:
    family: str
    horizon: int
    proximal: Verdict
    toeplitz: Verdict
    top_regular: Verdict
    regular_toeplitz: Verdict                   # m(∂W) = 0 on top of Toeplitz
    taut_evidence: Verdict
    y_membership: dict[int, ResidueCoverage]
    mef: MefDescriptor
    measures: WindowMeasures
    haar: Optional[HaarScan] = None
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Window measures
# ---------------------------------------------------------------------------

def _free_on(bset: BSet, n: int) -> np.ndarray:
    """η on [1, N] as a bool mask indexed by n - 1."""
    return free_mask(bset.elements_array(n), 1, n)


def _divisors_upto(values: Sequence[int], hi: int) -> np.ndarray:
    # A_k elements divide s_k and may exceed int64; only those <= hi can fire
    return np.array([v for v in values if v <= hi], dtype=np.int64)


def _interior_density(prim: Sequence[int], n: int) -> tuple[Union[Fraction, float], bool]:
    """d(F_A) for A = prim A_k: exact when the caps allow, else on [1, N]."""
    try:
        return 1 - exact_density_of_multiples(prim).value, True
    except DensityCapError:
        return int(free_mask(_divisors_upto(prim, n), 1, n).sum()) / n, False


def _finite_m_w(bset: BSet, n: int, free_count: int) -> DensityEstimate:
    try:
        d = exact_density_of_multiples(bset.elements_up_to(bset.max_element() or 1))
        return DensityEstimate(1 - d.value, "exact", n, method="finite B")
    except DensityCapError:
        return DensityEstimate(free_count / n, "interval_count", n, count=free_count, method="free")


def window_measures(
    bset: BSet,
    table: FiltrationTable,
    n: int,
    free: Optional[np.ndarray] = None,
) -> WindowMeasures:
    """
    m(W) = 1 - d(M_B); m(int W) = max_k d(F_{A_k}); per stage the share of
    [1, N] in M_{A_k} but free of B ∩ [1, N]. The stage counts are exactly
    non-increasing in k because M_{A_(k+1)} ⊆ M_{A_k}.
    """
    if n < 1:
        raise ValueError(f"window_measures needs N >= 1, got {n}")
    eta = _free_on(bset, n) if free is None else free
    free_count = int(eta.sum())

    if bset.is_finite:
        m_w = _finite_m_w(bset, n, free_count)
    else:
        m_w = DensityEstimate(free_count / n, "interval_count", n, count=free_count, method="free")

    counts: list[tuple[int, int]] = []
    interior: list[tuple[int, Union[Fraction, float]]] = []
    best_int: Union[Fraction, float] = Fraction(0)
    best_exact = True
    for st in table.stages:
        multiples_a = ~free_mask(_divisors_upto(st.primA_k, n), 1, n)
        counts.append((st.k, int((multiples_a & eta).sum())))
        value, exact = _interior_density(st.primA_k, n)
        interior.append((st.k, value))
        if value > best_int or (value == best_int and exact):
            best_int, best_exact = value, exact

    raw = [c for _, c in counts]
    non_increasing = all(b <= a for a, b in zip(raw, raw[1:]))
    if not non_increasing:
        logger.warning("%s: boundary counts not monotone %s", bset.name, raw)
    low = min(raw) if raw else 0
    m_int = DensityEstimate(
        best_int,
        "exact" if best_exact else "interval_count",
        n,
        method="max over stages (lower bound of sup)",
    )
    m_b = DensityEstimate(low / n, "interval_count", n, count=low,
                          method="min over stages, B truncated at N (upper bound)")
    boundary = [(k, c / n) for k, c in counts]
    logger.info("window_measures(%s, N=%d): m_W=%.6f m_intW=%.6f m_boundary<=%.6f",
                bset.name, n, float(m_w.value), float(best_int), low / n)
    return WindowMeasures(
        m_W=m_w,
        m_intW=m_int,
        m_boundary=m_b,
        per_stage_boundary=boundary,
        per_stage_interior=interior,
        boundary_non_increasing=non_increasing,
    )


# ---------------------------------------------------------------------------
# Toeplitz positions
# ---------------------------------------------------------------------------

def toeplitz_positions(bset: BSet, table: FiltrationTable, k: int, n_periods: int = 8) -> ToeplitzPositions:
    """
    Label n in [0, s_k): good-free (n in F_{A_k}, free along n + s_k·Z),
    good-multiple (n in M_{S_k}) or unresolved. The good labels are checked
    against η sieved on [0, s_k·N_periods).
    """
    if n_periods < 1:
        raise ValueError(f"n_periods must be >= 1, got {n_periods}")
    st = table.stage(k)
    s = st.s_k
    if s * n_periods > TOEPLITZ_SIEVE_BUDGET:
        raise ToeplitzBudgetError(
            f"s_{k} = {s} times {n_periods} periods exceeds {TOEPLITZ_SIEVE_BUDGET}; use a smaller k"
        )
    good_free = free_mask(_divisors_upto(st.primA_k, s), 0, s - 1)
    good_mult = ~free_mask(_divisors_upto(st.S_k, s), 0, s - 1)
    labels = np.zeros(s, dtype=np.int8)
    labels[good_free] = 1
    labels[good_mult] = 2

    grid = sieve_eta(bset, 0, s * n_periods - 1).bits.reshape(n_periods, s)
    # position 0 is a multiple of everything, so row 0 needs no special case
    bad_free = good_free & ~grid.all(axis=0)
    bad_mult = good_mult & grid.any(axis=0)
    mismatches = np.flatnonzero(bad_free | bad_mult)
    if mismatches.size:
        logger.error("toeplitz_positions(%s, k=%d): %d labels contradict η", bset.name, k, mismatches.size)

    counts = {name: int((labels == i).sum()) for i, name in enumerate(POSITION_LABELS)}
    return ToeplitzPositions(
        k=k,
        s_k=s,
        labels=labels,
        counts=counts,
        unresolved_fraction=counts["unresolved"] / s,
        periods_checked=n_periods,
        consistent=mismatches.size == 0,
        mismatches=mismatches[:MAX_RECORDS_PER_STAGE].tolist(),
    )


# ---------------------------------------------------------------------------
# Cylinder scans
# ---------------------------------------------------------------------------

def _cylinder_counts(eta: np.ndarray, s: int) -> np.ndarray:
    support = np.flatnonzero(eta) + 1
    return np.bincount(support % s, minlength=s)


def haar_regularity_scan(
    bset: BSet,
    table: FiltrationTable,
    n: int,
    ratio: float = REGULARITY_RATIO,
    free: Optional[np.ndarray] = None,
) -> HaarScan:
    """
    For each stage and each n in F_{S_k} ∩ [0, s_k): flag the cylinder
    n + s_k·Z when its B-free count on [1, N] is positive but below
    ratio·N/s_k (vanishing) or zero (empty-within-horizon).
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    eta = _free_on(bset, n) if free is None else free
    scan = HaarScan(horizon=n, ratio=ratio)
    for st in table.stages:
        s = st.s_k
        expected = n / s
        if expected < MIN_EXPECTED_PER_CYLINDER or s > SCAN_MAX_MODULUS:
            scan.skipped_stages.append(st.k)
            continue
        counts = _cylinder_counts(eta, s)
        admissible = np.flatnonzero(free_mask(_divisors_upto(st.S_k, s), 0, s - 1))
        low = admissible[counts[admissible] < ratio * expected]
        if low.size > MAX_RECORDS_PER_STAGE:
            scan.truncated_stages.append(st.k)
        for r in low[:MAX_RECORDS_PER_STAGE].tolist():
            c = int(counts[r])
            scan.records.append(HaarRecord(
                k=st.k, modulus=s, residue=r, count=c, expected=expected,
                status="vanishing" if c else "empty-within-horizon",
            ))
    logger.info("haar_regularity_scan(%s, N=%d): %d records, %d stages skipped",
                bset.name, n, len(scan.records), len(scan.skipped_stages))
    return scan


def dense_orbit_evidence(
    bset: BSet,
    table: FiltrationTable,
    n: int,
    free: Optional[np.ndarray] = None,
) -> list[DenseOrbitRecord]:
    """Per stage: how many classes of F_{S_k} mod s_k contain a B-free integer in [1, N]."""
    eta = _free_on(bset, n) if free is None else free
    out = []
    for st in table.stages:
        s = st.s_k
        if s > SCAN_MAX_MODULUS:
            continue
        counts = _cylinder_counts(eta, s)
        admissible = np.flatnonzero(free_mask(_divisors_upto(st.S_k, s), 0, s - 1))
        empty = admissible[counts[admissible] == 0]
        out.append(DenseOrbitRecord(
            k=st.k,
            modulus=s,
            admissible=int(admissible.size),
            hit=int(admissible.size - empty.size),
            missing=empty[:MAX_RECORDS_PER_STAGE].tolist(),
        ))
    return out


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def scaled_coprime_chain(
    bset: BSet,
    d: int,
    n: int = CHAIN_SEARCH_HORIZON,
    limit: Optional[int] = None,
) -> tuple[int, ...]:
    """
    Greedy pairwise coprime a_j inside B/d = {b/d : b in B ∩ [1, N], d | b}.
    d·{a_j} ⊆ B is the scaled coprime set that rules out a Toeplitz η.
    """
    if d < 1:
        raise ValueError(f"scaled_coprime_chain needs d >= 1, got {d}")
    quotients = (b // d for b in bset.elements_up_to(n) if b % d == 0)
    return greedy_coprime_chain(quotients, limit)


def _proximal(bset: BSet, table: FiltrationTable, threshold: int) -> Verdict:
    exact = table.exact
    missing_one = [st.k for st in table.stages if 1 not in st.A_k]
    if 1 in bset.elements_up_to(1):
        return Verdict(YES, True, {"one_in_B": True}, "η ≡ 0")
    if missing_one and table.stage(missing_one[0]).A_k_exact:
        st = table.stage(missing_one[0])
        return Verdict(NO, True, {"stage": st.k, "s_k": st.s_k, "A_k": list(st.A_k)},
                       "1 is not in A_k, so int(W) is non-empty")

    chain = greedy_coprime_chain(bset.elements_up_to(CHAIN_SEARCH_HORIZON), threshold)
    cert: dict[str, Any] = {"coprime_chain": list(chain)}
    if not missing_one:
        cert["stage_witnesses"] = {st.k: st.witnesses.get(1) for st in table.stages}
        if exact:
            return Verdict(YES, False, cert,
                           "1 in A_k at every computed stage (exact profiles)")
    if len(chain) >= threshold:
        return Verdict(YES, False, cert, f"pairwise coprime chain of {len(chain)} elements")
    if missing_one:
        cert["stages_without_one"] = missing_one
    return Verdict(UNDETERMINED, False, cert)


def _toeplitz(
    bset: BSet,
    table: FiltrationTable,
    proximal: Verdict,
    threshold: int,
    n: int,
) -> Verdict:
    if bset.is_finite:
        elems = bset.elements_up_to(bset.max_element() or 1)
        if 1 in elems or not elems:
            return Verdict(NO, True, {"one_in_B": bool(elems)}, "η is constant")
        period = math.lcm(*primitivize(elems))
        return Verdict(YES, True, {"period": period}, "finite B: η is periodic")
    if proximal.value == YES and proximal.certified:
        return Verdict(NO, True, {}, "proximal systems have trivial maximal equicontinuous factor")

    persistent = [c for c in table.a_infinity_candidates if c.persistent]
    if persistent:
        horizon = min(n, CHAIN_SEARCH_HORIZON)
        chains = {c.value: scaled_coprime_chain(bset, c.value, horizon, threshold) for c in persistent}
        d = max(chains, key=lambda v: (len(chains[v]), -v))
        first = next(c.first_stage for c in persistent if c.value == d)
        cert: dict[str, Any] = {
            "d": d,
            "persistent": [c.value for c in persistent],
            "first_stage": first,
            "scaled_chain": list(chains[d]),
        }
        if len(chains[d]) >= threshold:
            return Verdict(NO, False, cert,
                           f"{d} in A_k minus S_k from stage {first} and {d}·A ⊆ B for a coprime chain A")
        return Verdict(NO, False, cert, f"{d} in A_k minus S_k at every stage from {first}")

    if table.depth < 3:
        return Verdict(UNDETERMINED, False, {"depth": table.depth}, "A_∞ persistence needs >= 3 stages")
    if not table.exact:
        return Verdict(UNDETERMINED, False, {"depth": table.depth},
                       "A_k profiles are horizon-truncated; A_∞ emptiness not established")

    cert = {"depth": table.depth, "transient": [c.value for c in table.a_infinity_candidates]}
    check = _toeplitz_cross_check(bset, table)
    if check is not None:
        cert["positions_stage"] = check.k
        cert["unresolved_fraction"] = check.unresolved_fraction
        cert["positions_consistent"] = check.consistent
        if not check.consistent:
            return Verdict(UNDETERMINED, False, cert, "position labels contradict sieved η")
    return Verdict(YES, False, cert, "no element of A_k minus S_k persists on exact stages")


def _regular_toeplitz(toeplitz: Verdict, measures: WindowMeasures, boundary_threshold: float) -> Verdict:
    """Regular Toeplitz iff m(∂W) = 0; read from the per-stage boundary trace."""
    if toeplitz.value == NO:
        return Verdict(NO, toeplitz.certified, {}, "η is not Toeplitz")
    if toeplitz.value == UNDETERMINED:
        return Verdict(UNDETERMINED, False, {}, "requires a Toeplitz η")
    if toeplitz.certified and "period" in toeplitz.certificate:
        return Verdict(YES, True, {"boundary_last": 0.0}, "periodic η: W is clopen")
    trace = measures.per_stage_boundary
    last = trace[-1][1] if trace else 1.0
    cert = {"boundary_last": last, "boundary_non_increasing": measures.boundary_non_increasing}
    if measures.boundary_non_increasing and last < boundary_threshold:
        return Verdict(YES, False, cert, "boundary trace vanishes")
    return Verdict(UNDETERMINED, False, cert, f"last boundary value {last:.3g} >= {boundary_threshold:g}")


def _toeplitz_cross_check(bset: BSet, table: FiltrationTable) -> Optional[ToeplitzPositions]:
    usable = [st.k for st in table.stages if st.s_k * TOEPLITZ_CHECK_PERIODS <= TOEPLITZ_SIEVE_BUDGET // 100]
    if not usable:
        return None
    return toeplitz_positions(bset, table, usable[-1], TOEPLITZ_CHECK_PERIODS)


def _taut(
    bset: BSet,
    toeplitz: Verdict,
    haar: Optional[HaarScan],
    n: int,
) -> Verdict:
    if toeplitz.value == YES:
        return Verdict(YES, toeplitz.certified, {}, "η Toeplitz implies B taut")
    if bset.behrend_scale is not None:
        return Verdict(NO, True, {"behrend_scale": bset.behrend_scale},
                       f"{bset.behrend_scale}·A ⊆ B for a Behrend set A")
    if haar is not None and haar.vanishing:
        rec = haar.vanishing[0]
        return Verdict(NO, False, {"modulus": rec.modulus, "residue": rec.residue, "count": rec.count},
                       "cylinder meeting W with vanishing free count")
    cutoffs = [c for c in (10, 100, 1_000, 10_000) if c < n]
    if len(cutoffs) >= 2:
        tails = light_tails_trace(bset, cutoffs, n)
        values = [v for _, v in tails]
        if all(b <= a for a, b in zip(values, values[1:])) and values[-1] < LIGHT_TAIL_THRESHOLD:
            return Verdict(YES, False, {"light_tails": tails}, "light tails imply taut")
        return Verdict(UNDETERMINED, False, {"light_tails": tails})
    return Verdict(UNDETERMINED, False)


def _y_membership(bset: BSet, n: int) -> dict[int, ResidueCoverage]:
    window = min(n, Y_WINDOW)
    elems = [b for b in bset.elements_up_to(window) if b <= window // 10][:Y_MAX_ELEMENTS]
    if not elems:
        return {}
    block = sieve_eta(bset, 0, window)
    return {b: residue_coverage(block, b) for b in elems}


def classify(
    bset: BSet,
    table: FiltrationTable,
    n: int,
    chain_threshold: int = COPRIME_CHAIN_THRESHOLD,
    boundary_threshold: float = BOUNDARY_THRESHOLD,
    regularity_ratio: float = REGULARITY_RATIO,
) -> ClassificationReport:
    """
    Tri-state proximal / Toeplitz / regularity / tautness verdicts.

    proximal=yes never co-occurs with toeplitz=yes, and toeplitz=yes forces
    taut_evidence=yes. regular_toeplitz=yes additionally needs the boundary
    trace to fall below boundary_threshold.
    """
    if not table.d_k:
        table = compute_dk(table)
    if table.depth >= 3 and not table.a_infinity_candidates:
        table = dataclasses.replace(table, a_infinity_candidates=detect_a_infinity(table))

    eta = _free_on(bset, n)
    measures = window_measures(bset, table, n, free=eta)
    proximal = _proximal(bset, table, chain_threshold)
    toeplitz = _toeplitz(bset, table, proximal, chain_threshold, n)
    notes: list[str] = []
    if proximal.value == YES and toeplitz.value == YES:
        logger.warning("%s: proximal and Toeplitz verdicts conflict; Toeplitz set undetermined", bset.name)
        notes.append("proximal=yes contradicted toeplitz=yes; toeplitz downgraded")
        toeplitz = Verdict(UNDETERMINED, False, toeplitz.certificate, "conflicts with proximal=yes")
    top_regular = Verdict(toeplitz.value, toeplitz.certified, {},
                          "W topologically regular iff A_∞ is empty iff η Toeplitz")
    regular = _regular_toeplitz(toeplitz, measures, boundary_threshold)

    haar = None
    if not bset.is_finite:
        haar = haar_regularity_scan(bset, table, n, regularity_ratio, free=eta)
    taut = _taut(bset, toeplitz, haar, n)
    if not bset.primitive_flag and bset.primitive_flag is not None:
        notes.append("B is not primitive; taut_evidence refers to prim B")

    report = ClassificationReport(
        family=bset.name,
        horizon=n,
        proximal=proximal,
        toeplitz=toeplitz,
        top_regular=top_regular,
        regular_toeplitz=regular,
        taut_evidence=taut,
        y_membership=_y_membership(bset, n),
        mef=mef_descriptor(table),
        measures=measures,
        haar=haar,
        notes=notes,
    )
    logger.info("classify(%s): proximal=%s toeplitz=%s regular=%s taut=%s",
                bset.name, proximal.value, toeplitz.value, regular.value, taut.value)
    return report
