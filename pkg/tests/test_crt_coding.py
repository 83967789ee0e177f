"""
tests/test_crt_coding.py — CRT, the coding map φ, θ and block search

Tests cover:
- crt_solve against sympy's solve_congruence, incompatibility reporting
- bfree_crt_search / exact_progression_density
- HPoint validation and default rules
- phi_block: the odd-primes block, Δ(n0) reproduces shifted η, unresolved coordinates
- theta_of_block on windows and full periods
- block_containment_check in both dominance modes

Run: pytest tests/test_crt_coding.py -v
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.ntheory.modular import solve_congruence

from core.bset_families import make_bset
from core.crt_coding import (
    CrtResult,
    CylinderSpec,
    HPoint,
    UnresolvedCoordinateError,
    bfree_crt_search,
    block_containment_check,
    crt_solve,
    exact_progression_density,
    phi_block,
    theta_of_block,
)
from core.interval_sieve import EtaBlock, sieve_eta

residue_systems = st.dictionaries(
    st.integers(min_value=2, max_value=60),
    st.integers(min_value=0, max_value=500),
    min_size=1,
    max_size=5,
)


# ---------------------------------------------------------------------------
# crt_solve
# ---------------------------------------------------------------------------

class TestCrtSolve:

    def test_compatible(self):
        assert crt_solve(CylinderSpec({4: 1, 6: 5})) == CrtResult(True, 5, 12, None)

    def test_incompatible(self):
        result = crt_solve(CylinderSpec({4: 1, 6: 2}))
        assert not result.compatible
        assert result.violating_pair == (4, 6)
        assert not result.contains(5)

    def test_residues_reduced(self):
        assert CylinderSpec({5: 13, 3: -1}).residues == {3: 2, 5: 3}

    def test_rejects_zero_modulus(self):
        with pytest.raises(ValueError):
            CylinderSpec({0: 1})

    @settings(max_examples=500, deadline=None)
    @given(residue_systems)
    def test_matches_sympy(self, residues):
        ours = crt_solve(CylinderSpec(residues))
        theirs = solve_congruence(*[(r, b) for b, r in residues.items()])
        if theirs is None:
            assert not ours.compatible
        else:
            assert ours.compatible
            assert (ours.n0, ours.modulus) == (int(theirs[0]), int(theirs[1]))
            assert all(ours.n0 % b == r % b for b, r in residues.items())


# ---------------------------------------------------------------------------
# B-free search
# ---------------------------------------------------------------------------

class TestBfreeSearch:

    def test_mod12_five_class_has_no_solutions(self):
        search = bfree_crt_search(make_bset({"family": "mod12"}), CylinderSpec({4: 1, 6: 5}), 10 ** 4)
        assert search.progression.n0 == 5
        assert search.count == 0
        assert search.solutions == []

    def test_finite_counts(self):
        search = bfree_crt_search(make_bset({"elements": [2, 3]}), CylinderSpec({4: 1}), 1200)
        assert search.count == 200
        assert search.solutions[:3] == [1, 5, 13]
        assert search.relative_density == pytest.approx(2 / 3)

    def test_incompatible_raises(self):
        with pytest.raises(ValueError, match="incompatible"):
            bfree_crt_search(make_bset({"family": "primes"}), CylinderSpec({4: 1, 6: 2}), 100)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            bfree_crt_search(make_bset({"family": "primes"}), CylinderSpec({4: 1}), 0)

    def test_exact_progression_density(self):
        bset = make_bset({"elements": [2, 3]})
        assert exact_progression_density(bset, CylinderSpec({4: 1})) == pytest.approx(2 / 3)
        assert exact_progression_density(bset, CylinderSpec({4: 1, 6: 2})) == 0.0

    def test_exact_progression_density_needs_finite(self):
        with pytest.raises(ValueError, match="finite"):
            exact_progression_density(make_bset({"family": "primes"}), CylinderSpec({4: 1}))


# ---------------------------------------------------------------------------
# HPoint
# ---------------------------------------------------------------------------

class TestHPoint:

    def test_bad_default(self):
        with pytest.raises(ValueError, match="Invalid default rule"):
            HPoint(default="one")

    def test_coordinates(self):
        assert HPoint({5: 7}).coordinate(5) == 2
        assert HPoint().coordinate(9) == 0
        assert HPoint.delta(11).coordinate(4) == 3
        with pytest.raises(UnresolvedCoordinateError):
            HPoint(default="none").coordinate(3)

    def test_validate(self):
        bset = make_bset({"family": "two-three"})
        HPoint({10: 1, 36: 5}).validate(bset)
        with pytest.raises(ValueError, match="not in H"):
            HPoint({10: 0, 36: 1}).validate(bset)
        with pytest.raises(UnresolvedCoordinateError) as err:
            HPoint({11: 0}).validate(bset)
        assert err.value.b == 11


# ---------------------------------------------------------------------------
# φ and θ
# ---------------------------------------------------------------------------

class TestPhiBlock:

    def test_odd_primes_block(self):
        h = HPoint({3: 0, 5: 1, 7: 0, 11: 0})
        block = phi_block(make_bset({"family": "odd-primes"}), h, 0, 8)
        assert block.bitstring() == "011001001"
        assert block_containment_check("11001001", block) == [1]

    @pytest.mark.parametrize("n0", [0, 5, -7])
    def test_delta_is_shifted_eta(self, n0):
        bset = make_bset({"family": "odd-primes"})
        block = phi_block(bset, HPoint.delta(n0), -30, 30)
        assert np.array_equal(block.bits, sieve_eta(bset, n0 - 30, n0 + 30).bits)

    def test_none_rule_needs_every_coordinate(self):
        bset = make_bset({"family": "odd-primes"})
        with pytest.raises(UnresolvedCoordinateError) as err:
            phi_block(bset, HPoint({3: 0}, default="none"), 0, 8)
        assert err.value.b == 5

    def test_none_rule_fully_assigned(self):
        h = HPoint({3: 0, 5: 1}, default="none")
        block = phi_block(make_bset({"family": "odd-primes"}), h, 0, 4)
        assert block.bitstring() == "01100"

    def test_bad_window(self):
        with pytest.raises(ValueError):
            phi_block(make_bset({"family": "primes"}), HPoint(), 5, 1)


class TestTheta:

    def test_recovers_assigned_coordinates(self):
        bset = make_bset({"family": "odd-primes"})
        h = HPoint({3: 0, 5: 1, 7: 0, 11: 0})
        theta = theta_of_block(phi_block(bset, h, -2000, 2000), bset, 5)
        assert theta[3].g == 0
        assert theta[5].g == 1
        assert theta[5].status == "window-missed"

    def test_finite_full_period(self):
        bset = make_bset({"elements": [4, 6]})
        theta = theta_of_block(sieve_eta(bset, 0, 11), bset, 6)
        assert theta[4].status == "provably-missed" and theta[4].g == 0
        assert theta[6].missed == [0]

    def test_several_missed(self):
        bset = make_bset({"elements": [2, 3]})
        block = EtaBlock(offset=0, bits=np.array([0, 1, 0, 0], dtype=bool), b_horizon=3, exact=True)
        theta = theta_of_block(block, bset, 3)
        assert theta[3].status == "undefined-several-missed"
        assert theta[3].g is None

    def test_needs_exact(self):
        block = EtaBlock(offset=0, bits=np.ones(5, dtype=bool), b_horizon=1, exact=False)
        with pytest.raises(ValueError):
            theta_of_block(block, make_bset({"family": "primes"}), 5)


# ---------------------------------------------------------------------------
# Block search
# ---------------------------------------------------------------------------

class TestBlockContainment:

    def _hay(self, offset=0):
        return EtaBlock(offset=offset, bits=np.array([0, 1, 1, 0, 1], dtype=bool), b_horizon=4, exact=True)

    def test_exact_and_lower(self):
        assert block_containment_check("11", self._hay()) == [1]
        assert block_containment_check("10", self._hay(), "lower") == [1, 2]

    def test_offset(self):
        assert block_containment_check([1, 0, 1], self._hay(-3)) == [-1]

    def test_needle_longer_than_hay(self):
        assert block_containment_check("110101", self._hay()) == []

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            block_containment_check("12", self._hay())
        with pytest.raises(ValueError):
            block_containment_check("1", self._hay(), "upper")

    def test_no_dominating_eta_block_nearby(self):
        bset = make_bset({"family": "odd-primes"})
        eta = sieve_eta(bset, -10 ** 4, 10 ** 4)
        assert block_containment_check("11001001", eta, "lower") == []
