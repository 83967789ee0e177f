"""
core/filtration_engine.py — bfree-lab
=======================================
Filtrations S_1 ⊂ S_2 ⊂ ... of B and their period data. No sieving, no UI.

Responsibilities:
- build_filtration(): stages (S_k, s_k, A_k, prim A_k, c_k, A_k minus S_k)
  in three modes:
    blocks     S_k = B_1 ∪ ... ∪ B_k over the family's natural blocks (default)
    prefix     S_k = the k smallest elements of B
    saturated  blocks stage closed under S <- B ∩ A_S (one step is a fixpoint)
- compute_dk(): d_k = lim_j gcd(s_k, c_(k+j)) with certified / stable /
  heuristic / unconfirmed status
- detect_a_infinity(): persistence of elements of A_k minus S_k
- mef_descriptor(): lim<- Z/d_k Z by per-prime valuations, plus the
  H_int(W) descriptor from the quotients s_k / d_k
- next_block_shadow(), shadow_table(), period_branching(), restrict_profile()

Chains that hold for every table: c_k | d_k | s_k, d_k = gcd(s_k, d_(k+1))
for settled consecutive stages, and s_k/d_k | s_(k+1)/d_(k+1).

DO NOT sieve here; window measures live in core/window_classifier.py.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from core.arithmetic import (
    FiniteSet,
    factorize,
    finite_set,
    lcm_chain,
    primitivize,
    valuation,
)
from core.bset_families import BSet

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

DEFAULT_DEPTH: int = 8
DEFAULT_LOOKAHEAD: int = 6
DEFAULT_CONFIRM: int = 3
PERSIST_MIN_STAGES: int = 2        # a persistent candidate must be seen at least this often
MODES = ("blocks", "prefix", "saturated")
DK_STATUSES = ("certified", "stable", "heuristic", "unconfirmed")


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass
class FiltrationStage:
    k: int
    S_k: FiniteSet
    s_k: int                      # lcm(S_k)
    A_k: FiniteSet                # {gcd(b, s_k) : b in B}
    A_k_exact: bool
    primA_k: FiniteSet
    c_k: int                      # lcm(prim A_k), the minimal period of M_{A_k}
    new_elems: FiniteSet          # A_k minus S_k
    witnesses: dict[int, int] = field(default_factory=dict)   # a in A_k -> b with gcd(b, s_k) = a
    members: FiniteSet = ()       # B ∩ A_k


@dataclass
class DkEntry:
    k: int
    value: int
    stabilized: bool
    status: str                   # one of DK_STATUSES
    trace: list[int] = field(default_factory=list)   # gcd(s_k, c_(k+j)), j = 0..


@dataclass
class AInfinityCandidate:
    value: int
    first_stage: int
    last_stage: int
    count: int                    # stages in which value was in A_k minus S_k
    persistent: bool              # present from first_stage through the final stage
    recurrent: bool               # seen in at least two stages


@dataclass
class FiltrationTable:
    family: str
    mode: str
    stages: list[FiltrationStage]
    exhausted: bool = False       # finite B fully absorbed; c_k are final
    d_k: list[DkEntry] = field(default_factory=list)
    a_infinity_candidates: list[AInfinityCandidate] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.stages)

    @property
    def exact(self) -> bool:
        return all(st.A_k_exact for st in self.stages)

    @property
    def quotients(self) -> list[int]:
        """s_k / d_k per stage (requires compute_dk)."""
        return [st.s_k // d.value for st, d in zip(self.stages, self.d_k)]

    def stage(self, k: int) -> FiltrationStage:
        for st in self.stages:
            if st.k == k:
                return st
        raise KeyError(f"no stage {k} (table depth {self.depth})")

    def persistent(self) -> FiniteSet:
        return finite_set(c.value for c in self.a_infinity_candidates if c.persistent)

    def head(self, depth: int) -> "FiltrationTable":
        """First `depth` stages with their d_k entries."""
        return dataclasses.replace(
            self,
            stages=self.stages[:depth],
            d_k=self.d_k[:depth],
            exhausted=self.exhausted and depth >= self.depth,
        )


@dataclass
class PrimeComponent:
    prime: int
    valuation: int                # sup over computed stages
    growing: bool                 # still increasing at the end of the table

    @property
    def label(self) -> str:
        if self.growing:
            return f"Z_{self.prime}"
        return f"Z/{self.prime ** self.valuation}Z"


@dataclass
class MefDescriptor:
    components: list[PrimeComponent]
    new_primes_growing: bool      # d_k keeps acquiring new primes
    finite_order: Optional[int]   # |lim<- Z/d_k Z| when nothing grows
    label: str
    h_int_trivial: bool           # s_k = d_k at every stage
    h_int_components: list[PrimeComponent]
    h_int_label: str
    every_b_divides_some_c: bool  # alternative witness for a trivial H_int(W)
    tentative: bool               # some d_k not settled


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------

def _make_stage(bset: BSet, k: int, members: set[int]) -> FiltrationStage:
    S = finite_set(members)
    s = lcm_chain(S)
    profile = bset.gcd_profile(s)
    A = finite_set(set(profile.gcds) | set(S))
    prim = primitivize(A)
    witnesses = dict(profile.witnesses)
    for b in S:
        witnesses.setdefault(b, b)
    if not profile.exact:
        logger.warning("%s stage %d: A_k inexact (horizon %s)", bset.name, k, profile.horizon)
    return FiltrationStage(
        k=k,
        S_k=S,
        s_k=s,
        A_k=A,
        A_k_exact=profile.exact,
        primA_k=prim,
        c_k=lcm_chain(prim),
        new_elems=finite_set(set(A) - set(S)),
        witnesses=witnesses,
        members=finite_set(set(profile.members) | set(S)),
    )


def build_filtration(bset: BSet, depth: int = DEFAULT_DEPTH, mode: str = "blocks") -> FiltrationTable:
    """
    Stages 1..depth of a filtration of B. A finite B stops early once it is
    fully absorbed and the table is marked exhausted.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if mode not in MODES:
        raise ValueError(f"Invalid mode '{mode}'. Must be one of: {', '.join(MODES)}")

    stages: list[FiltrationStage] = []
    current: set[int] = set()
    exhausted = False
    for k in range(1, depth + 1):
        if mode == "prefix":
            first = bset.first_elements(k)
            if len(first) < k:
                exhausted = True
                break
            current = set(first)
        else:
            block = bset.block(k)
            if not block:
                exhausted = True
                break
            current |= set(block)
        stage = _make_stage(bset, k, current)
        if mode == "saturated" and not set(stage.members) <= current:
            current |= set(stage.members)
            stage = _make_stage(bset, k, current)
        stages.append(stage)
        logger.debug("%s stage %d: s_k=%d c_k=%d new=%s", bset.name, k, stage.s_k, stage.c_k, stage.new_elems)

    if not stages:
        raise ValueError(f"{bset.name}: B is empty, no filtration stages")
    if not exhausted and bset.is_finite:
        top = bset.max_element() or 0
        exhausted = len(stages[-1].S_k) >= len(bset.elements_up_to(top))
    table = FiltrationTable(family=bset.name, mode=mode, stages=stages, exhausted=exhausted)
    if len(stages) >= 3:
        table.a_infinity_candidates = detect_a_infinity(table)
    logger.info("build_filtration(%s, %s): %d stages, exact=%s, exhausted=%s",
                bset.name, mode, len(stages), table.exact, exhausted)
    return table


# ---------------------------------------------------------------------------
# d_k
# ---------------------------------------------------------------------------

def compute_dk(
    table: FiltrationTable,
    lookahead: int = DEFAULT_LOOKAHEAD,
    confirm: int = DEFAULT_CONFIRM,
) -> FiltrationTable:
    """
    New table with d_k entries. gcd(s_k, c_l) divides gcd(s_k, c_(l+1)) and is
    bounded by s_k, so the trace settles; it is certified when it reaches s_k
    or the filtration is exhausted, stable when the last `confirm` values agree
    on exact profiles with the full lookahead available.
    """
    if lookahead < 0 or confirm < 1:
        raise ValueError(f"need lookahead >= 0 and confirm >= 1, got {lookahead}, {confirm}")
    n = table.depth
    entries: list[DkEntry] = []
    for i, st in enumerate(table.stages):
        last = min(i + lookahead, n - 1)
        trace = [math.gcd(st.s_k, table.stages[j].c_k) for j in range(i, last + 1)]
        if table.exhausted:
            trace.append(math.gcd(st.s_k, table.stages[-1].c_k))
        value = trace[-1]
        settled = len(trace) >= confirm and len(set(trace[-confirm:])) == 1 and i + lookahead <= n - 1
        if value == st.s_k or table.exhausted:
            status = "certified"
        elif settled and all(s.A_k_exact for s in table.stages[i:last + 1]):
            status = "stable"
        elif settled:
            status = "heuristic"
        else:
            status = "unconfirmed"
        if status == "unconfirmed":
            logger.warning("%s: d_%d = %d unconfirmed (trace %s)", table.family, st.k, value, trace)
        entries.append(DkEntry(k=st.k, value=value, stabilized=status != "unconfirmed",
                               status=status, trace=trace))
    return dataclasses.replace(table, d_k=entries)


# ---------------------------------------------------------------------------
# A_infinity
# ---------------------------------------------------------------------------

def detect_a_infinity(table: FiltrationTable) -> list[AInfinityCandidate]:
    """
    Elements of A_k minus S_k with their persistence. `persistent` means seen
    at every stage from its first appearance to the end (and at least twice),
    evidence for membership in the limsup; never a proof.
    """
    if table.depth < 3:
        raise ValueError(f"detect_a_infinity needs >= 3 stages, got {table.depth}")
    seen: dict[int, list[int]] = {}
    for st in table.stages:
        for v in st.new_elems:
            seen.setdefault(v, []).append(st.k)
    final = table.stages[-1].k
    out = []
    for v, ks in sorted(seen.items()):
        contiguous = ks == list(range(ks[0], final + 1))
        out.append(AInfinityCandidate(
            value=v,
            first_stage=ks[0],
            last_stage=ks[-1],
            count=len(ks),
            persistent=contiguous and len(ks) >= PERSIST_MIN_STAGES,
            recurrent=len(ks) >= 2,
        ))
    return out


# ---------------------------------------------------------------------------
# Group descriptors
# ---------------------------------------------------------------------------

def _components(values: list[int], support_of: list[int]) -> tuple[list[PrimeComponent], bool]:
    primes: set[int] = set()
    for s in support_of:
        primes |= set(factorize(s, cap=None))
    comps = []
    for p in sorted(primes):
        vals = [valuation(v, p) for v in values]
        if max(vals) == 0:
            continue
        tail = vals[-min(3, len(vals)):]
        comps.append(PrimeComponent(prime=p, valuation=max(vals), growing=tail[-1] > tail[0]))
    last_primes = {c.prime for c in comps if values[-1] % c.prime == 0}
    prev_primes = {c.prime for c in comps if len(values) > 1 and values[-2] % c.prime == 0}
    new_primes = len(values) > 1 and bool(last_primes - prev_primes)
    return comps, new_primes


def _label(comps: list[PrimeComponent], new_primes: bool) -> tuple[str, Optional[int]]:
    if not comps:
        return "trivial", 1
    if not new_primes and not any(c.growing for c in comps):
        order = math.prod(c.prime ** c.valuation for c in comps)
        return f"Z/{order}Z", order
    parts = [c.label for c in comps]
    if new_primes:
        parts.append("...")
    return " x ".join(parts), None


def mef_descriptor(table: FiltrationTable) -> MefDescriptor:
    """
    lim<- Z/d_k Z as per-prime valuations: capped primes give finite cyclic
    factors, growing ones p-adic factors. Requires compute_dk.
    """
    if not table.d_k:
        raise ValueError("mef_descriptor needs d_k entries; run compute_dk first")
    ds = [d.value for d in table.d_k]
    s_values = [st.s_k for st in table.stages[:len(ds)]]
    comps, new_primes = _components(ds, s_values)
    label, order = _label(comps, new_primes)

    quotients = [s // d for s, d in zip(s_values, ds)]
    h_comps, h_new = _components(quotients, s_values)
    h_label, _ = _label(h_comps, h_new)

    all_b = set().union(*(st.S_k for st in table.stages))
    divides = all(any(st.c_k % b == 0 for st in table.stages) for b in all_b)
    return MefDescriptor(
        components=comps,
        new_primes_growing=new_primes,
        finite_order=order,
        label=label,
        h_int_trivial=all(q == 1 for q in quotients),
        h_int_components=h_comps,
        h_int_label=h_label,
        every_b_divides_some_c=divides,
        tentative=not all(d.stabilized for d in table.d_k),
    )


# ---------------------------------------------------------------------------
# Supplementary views
# ---------------------------------------------------------------------------

def restrict_profile(values: Iterable[int], s: int) -> FiniteSet:
    """{gcd(a, s) : a in values}; equals A_S when values = A_S' with S ⊆ S'."""
    return finite_set(math.gcd(a, s) for a in values)


def next_block_shadow(bset: BSet, table: FiltrationTable, k: int) -> FiniteSet:
    """{gcd(b, s_k) : b in B_(k+1)}, the part of A_k seen from the following block."""
    s = table.stage(k).s_k
    return finite_set(math.gcd(b, s) for b in bset.block(k + 1))


def shadow_table(bset: BSet, table: FiltrationTable) -> FiltrationTable:
    """
    The table with A_k replaced by S_k ∪ next_block_shadow(k): the shadow
    of B at level s_k seen only through the following block.
    """
    stages = []
    for st in table.stages:
        shadow = next_block_shadow(bset, table, st.k)
        A = finite_set(set(st.S_k) | set(shadow))
        prim = primitivize(A)
        stages.append(dataclasses.replace(
            st,
            A_k=A,
            primA_k=prim,
            c_k=lcm_chain(prim),
            new_elems=finite_set(set(A) - set(st.S_k)),
            witnesses={a: b for a, b in st.witnesses.items() if a in A},
        ))
    out = FiltrationTable(family=table.family, mode=f"{table.mode}+shadow", stages=stages,
                          exhausted=table.exhausted)
    if len(stages) >= 3:
        out.a_infinity_candidates = detect_a_infinity(out)
    return out


def period_branching(table: FiltrationTable) -> list[int]:
    """
    s_1/d_1 followed by s_(k+1) / lcm(s_k, d_(k+1)): the number of period
    classes of int(W) at stage k+1 above each class at stage k. Their running
    product reproduces s_k/d_k whenever d_k = gcd(s_k, d_(k+1)).
    """
    if not table.d_k:
        raise ValueError("period_branching needs d_k entries; run compute_dk first")
    st, ds = table.stages, [d.value for d in table.d_k]
    out = [st[0].s_k // ds[0]]
    for i in range(len(ds) - 1):
        out.append(st[i + 1].s_k // math.lcm(st[i].s_k, ds[i + 1]))
    return out
