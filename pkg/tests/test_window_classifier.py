"""
tests/test_window_classifier.py — window measures, Toeplitz labels, verdicts

Tests cover:
- Verdict validation
- window_measures: finite B closed form, monotone boundary trace
- toeplitz_positions: label counts on the finite power2 family, budget
- haar_regularity_scan: the 4 + 12Z cylinder of ape1
- dense_orbit_evidence on the primes
- scaled_coprime_chain over the members of the two-three family
- classify: verdict combinations that must never occur, finite B certificates,
  the infinite power2 family (Toeplitz, regular only under the boundary threshold)

Run: pytest tests/test_window_classifier.py -v
"""

import math
from fractions import Fraction

import pytest

from core.bset_families import make_bset
from core.filtration_engine import build_filtration, compute_dk
from core.window_classifier import (
    NO,
    TOEPLITZ_SIEVE_BUDGET,
    UNDETERMINED,
    YES,
    ToeplitzBudgetError,
    Verdict,
    classify,
    dense_orbit_evidence,
    haar_regularity_scan,
    scaled_coprime_chain,
    toeplitz_positions,
    window_measures,
)

N_SMALL = 10 ** 4


def _power2(count: int = 3):
    bset = make_bset({"family": "power2", "params": {"count": count}})
    return bset, build_filtration(bset, 8)


# ---------------------------------------------------------------------------
# Verdict
# ---------------------------------------------------------------------------

class TestVerdict:

    def test_valid(self):
        assert Verdict(UNDETERMINED).value == "undetermined-at-horizon"

    def test_invalid(self):
        with pytest.raises(ValueError, match="Invalid verdict"):
            Verdict("maybe")


# ---------------------------------------------------------------------------
# Window measures
# ---------------------------------------------------------------------------

class TestWindowMeasures:

    def test_finite_two_three(self):
        bset = make_bset({"elements": [2, 3]})
        m = window_measures(bset, build_filtration(bset, 2), 600)
        assert m.m_W.value == Fraction(1, 3)
        assert m.m_W.kind == "exact"
        assert m.m_intW.value == Fraction(1, 3)
        assert m.per_stage_boundary == [(1, 0.0)]

    def test_boundary_trace_monotone(self):
        bset = make_bset({"family": "prime-squares"})
        m = window_measures(bset, build_filtration(bset, 5), N_SMALL)
        values = [v for _, v in m.per_stage_boundary]
        assert m.boundary_non_increasing
        assert values == sorted(values, reverse=True)
        assert m.m_boundary.value == pytest.approx(values[-1])
        assert m.bound_direction == "upper"

    def test_interval_m_w_for_infinite(self):
        bset = make_bset({"family": "prime-squares"})
        m = window_measures(bset, build_filtration(bset, 3), 100)
        assert m.m_W.count == 61

    def test_rejects_bad_horizon(self):
        bset = make_bset({"family": "primes"})
        with pytest.raises(ValueError):
            window_measures(bset, build_filtration(bset, 2), 0)


# ---------------------------------------------------------------------------
# Toeplitz positions
# ---------------------------------------------------------------------------

class TestToeplitzPositions:

    def test_first_stage_labels(self):
        bset, table = _power2()
        pos = toeplitz_positions(bset, table, 1, n_periods=4)
        # s_1 = 6, prim A_1 = {2}: odd residues are good-free, 0 is good-multiple
        assert pos.s_k == 6
        assert pos.counts == {"unresolved": 2, "good-free": 3, "good-multiple": 1}
        assert pos.unresolved_fraction == pytest.approx(1 / 3)
        assert pos.consistent and pos.mismatches == []
        assert pos.label_of(7) == "good-free"
        assert pos.label_of(12) == "good-multiple"
        assert pos.label_of(2) == "unresolved"

    def test_unresolved_shrinks(self):
        bset, table = _power2()
        fractions = [toeplitz_positions(bset, table, k, 4).unresolved_fraction for k in (1, 2, 3)]
        assert fractions == sorted(fractions, reverse=True)
        assert all(f <= 2 ** -k + 1e-2 for k, f in zip((1, 2, 3), fractions))

    def test_budget(self):
        bset, table = _power2()
        with pytest.raises(ToeplitzBudgetError):
            toeplitz_positions(bset, table, 1, n_periods=TOEPLITZ_SIEVE_BUDGET)

    def test_bad_periods(self):
        bset, table = _power2()
        with pytest.raises(ValueError):
            toeplitz_positions(bset, table, 1, n_periods=0)


# ---------------------------------------------------------------------------
# Cylinder scans
# ---------------------------------------------------------------------------

class TestHaarScan:

    def test_ape1_cylinder_flagged(self):
        bset = make_bset({"family": "ape1"})
        scan = haar_regularity_scan(bset, build_filtration(bset, 2), 10 ** 6)
        rec = scan.flagged(12, 4)
        assert rec is not None
        assert rec.count < 0.01 * rec.expected
        assert rec.status in ("vanishing", "empty-within-horizon")

    def test_small_horizon_skips_stages(self):
        bset = make_bset({"family": "cascade"})
        scan = haar_regularity_scan(bset, build_filtration(bset, 3), 1000)
        assert scan.skipped_stages
        assert all(r.expected >= 30 for r in scan.records)

    def test_bad_ratio(self):
        bset = make_bset({"family": "primes"})
        with pytest.raises(ValueError):
            haar_regularity_scan(bset, build_filtration(bset, 2), 100, ratio=1.5)


class TestDenseOrbit:

    def test_primes_only_one_class(self):
        bset = make_bset({"family": "primes"})
        records = dense_orbit_evidence(bset, build_filtration(bset, 3), 1000)
        assert [r.modulus for r in records] == [2, 6, 30]
        assert records[0].complete
        last = records[-1]
        # 1 is the only primes-free integer
        assert last.admissible == 8
        assert last.hit == 1
        assert not last.complete
        assert 7 in last.missing


class TestScaledChain:

    def test_two_three_chain_from_members(self):
        bset = make_bset({"family": "two-three"})
        chain = scaled_coprime_chain(bset, 2, N_SMALL, 25)
        assert len(chain) == 25
        assert all(bset.contains(2 * a) for a in chain)
        assert all(math.gcd(a, b) == 1 for i, a in enumerate(chain) for b in chain[i + 1:])

    def test_unbounded_chain_exceeds_depth(self):
        bset = make_bset({"family": "two-three"})
        # far longer than any filtration depth the classifier builds
        assert len(scaled_coprime_chain(bset, 3, N_SMALL)) > 100

    def test_no_multiples(self):
        assert scaled_coprime_chain(make_bset({"elements": [4, 6]}), 5, 100) == ()

    def test_bad_divisor(self):
        with pytest.raises(ValueError, match="d >= 1"):
            scaled_coprime_chain(make_bset({"family": "primes"}), 0)


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

class TestClassify:

    def test_finite_power2_is_toeplitz(self):
        bset, table = _power2()
        report = classify(bset, table, N_SMALL)
        assert report.toeplitz.value == YES and report.toeplitz.certified
        assert report.toeplitz.certificate["period"] == 840
        assert report.taut_evidence.value == YES
        assert report.proximal.value == NO and report.proximal.certified
        assert report.haar is None

    def test_infinite_power2_is_toeplitz(self):
        bset = make_bset({"family": "power2"})
        table = compute_dk(build_filtration(bset, 14), 6).head(8)
        report = classify(bset, table, 10 ** 6)
        assert not bset.is_finite
        assert report.toeplitz.value == YES
        assert not report.toeplitz.certified
        assert report.toeplitz.certificate["positions_consistent"]
        assert report.top_regular.value == YES
        assert report.taut_evidence.value == YES
        assert report.proximal.value == NO

    def test_infinite_power2_regularity_threshold(self):
        bset = make_bset({"family": "power2"})
        table = compute_dk(build_filtration(bset, 14), 6).head(8)
        # unresolved positions at stage 8 lie in 256Z, so the trace ends below 2^-8
        loose = classify(bset, table, 10 ** 6, boundary_threshold=1e-2)
        strict = classify(bset, table, 10 ** 6, boundary_threshold=1e-6)
        assert loose.regular_toeplitz.value == YES
        assert loose.regular_toeplitz.certificate["boundary_last"] < 2.0 ** -8
        assert strict.toeplitz.value == YES
        assert strict.regular_toeplitz.value == UNDETERMINED

    def test_shallow_infinite_table_undetermined(self):
        bset = make_bset({"family": "power2"})
        report = classify(bset, build_filtration(bset, 2), N_SMALL)
        assert report.toeplitz.value == UNDETERMINED
        assert report.regular_toeplitz.value == UNDETERMINED

    def test_finite_power2_is_regular(self):
        bset, table = _power2()
        report = classify(bset, table, N_SMALL)
        assert report.regular_toeplitz.value == YES and report.regular_toeplitz.certified

    def test_primes_proximal(self):
        bset = make_bset({"family": "primes"})
        report = classify(bset, build_filtration(bset, 4), 10 ** 5)
        assert report.proximal.value == YES
        assert report.toeplitz.value != YES
        assert report.mef.label == "trivial"

    def test_two_three_not_toeplitz(self):
        bset = make_bset({"family": "two-three"})
        report = classify(bset, compute_dk(build_filtration(bset, 6)), N_SMALL)
        assert report.proximal.value == NO
        assert report.toeplitz.value == NO
        assert report.toeplitz.certificate["d"] == 2
        assert report.top_regular.value == NO
        assert report.regular_toeplitz.value == NO
        assert len(report.toeplitz.certificate["scaled_chain"]) == 25
        assert report.taut_evidence.value == NO

    @pytest.mark.parametrize("spec", [
        {"family": "primes"},
        {"family": "mod12"},
        {"family": "q-family"},
        {"family": "prime-squares"},
        {"family": "power2", "params": {"count": 4}},
        {"elements": [4, 6, 9]},
    ])
    def test_verdict_consistency(self, spec):
        bset = make_bset(spec)
        report = classify(bset, build_filtration(bset, 3), N_SMALL)
        assert not (report.proximal.value == YES and report.toeplitz.value == YES)
        if report.toeplitz.value == YES:
            assert report.taut_evidence.value == YES
        assert report.top_regular.value == report.toeplitz.value
        if report.regular_toeplitz.value == YES:
            assert report.toeplitz.value == YES

    def test_y_membership_for_mod12(self):
        bset = make_bset({"family": "mod12"})
        report = classify(bset, build_filtration(bset, 3), N_SMALL)
        assert report.y_membership[4].missed == [0]
