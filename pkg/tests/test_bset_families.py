"""
tests/test_bset_families.py — B-set models

Tests cover:
- make_bset / family_catalog: construction, unknown family, bad params
- elements_up_to for every family against hand-computed prefixes
- natural blocks of the block families
- contains() against enumeration
- gcd_profile: structural oracles agree with brute force over a long prefix
- BFREE_HORIZON handling in default_horizon

Run: pytest tests/test_bset_families.py -v
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.bset_families import (
    DEFAULT_HORIZON,
    BSet,
    Mod12BSet,
    UnknownFamilyError,
    coprime_pairs,
    default_horizon,
    family_catalog,
    make_bset,
)

BRUTE_HORIZON = 10 ** 5

small_moduli = st.builds(
    lambda a, b, c, d, e: 2 ** a * 3 ** b * 5 ** c * 7 ** d * 11 ** e,
    st.integers(0, 6), st.integers(0, 2), st.integers(0, 2), st.integers(0, 1), st.integers(0, 1),
)


def _brute_gcds(bset: BSet, m: int) -> set[int]:
    return {math.gcd(b, m) for b in bset.elements_up_to(BRUTE_HORIZON)}


class _Evens(BSet):
    """A family without a structural oracle."""
    name = "evens"

    def _enumerate(self, x):
        return range(2, x + 1, 2)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

class TestMakeBset:

    def test_catalog_names(self):
        names = {f.name for f in family_catalog()}
        assert {"explicit", "primes", "odd-primes", "prime-squares", "mod12", "punctured-primes",
                "ape1", "two-three", "cascade", "q-family", "power2"} <= names

    def test_explicit_shortcut(self):
        bset = make_bset({"elements": [6, 4, 4]})
        assert bset.name == "explicit"
        assert bset.elements_up_to(10) == (4, 6)
        assert bset.is_finite

    def test_unknown_family(self):
        with pytest.raises(UnknownFamilyError, match="Unknown family"):
            make_bset({"family": "fibonacci"})

    def test_params_must_be_object(self):
        with pytest.raises(UnknownFamilyError):
            make_bset({"family": "power2", "params": [1, 2]})

    def test_power2_rejects_non_coprime(self):
        with pytest.raises(UnknownFamilyError, match="coprime"):
            make_bset({"family": "power2", "params": {"odd_parts": [3, 9]}})

    def test_two_three_rejects_repeated_primes(self):
        with pytest.raises(UnknownFamilyError):
            make_bset({"family": "two-three", "params": {"p": [5, 7], "q": [7, 11]}})

    def test_q_family_rejects_even_q(self):
        with pytest.raises(UnknownFamilyError):
            make_bset({"family": "q-family", "params": {"q": 2}})

    def test_spec_round_trip(self):
        bset = make_bset({"family": "power2", "params": {"count": 4}})
        again = make_bset(bset.spec())
        assert again.elements_up_to(10 ** 4) == bset.elements_up_to(10 ** 4)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

class TestEnumeration:

    @pytest.mark.parametrize("spec, x, expected", [
        ({"family": "primes"}, 20, (2, 3, 5, 7, 11, 13, 17, 19)),
        ({"family": "odd-primes"}, 20, (3, 5, 7, 11, 13, 17, 19)),
        ({"family": "prime-squares"}, 30, (4, 9, 25)),
        ({"family": "mod12"}, 30, (4, 5, 6, 7, 17, 19, 29)),
        ({"family": "ape1"}, 50, (12, 18, 20, 28, 44, 45, 50)),
        ({"family": "two-three"}, 40, (10, 21, 22, 34, 36, 39)),
        ({"family": "q-family"}, 60, (15, 21, 33, 35, 39, 51, 55, 57)),
        ({"family": "power2"}, 200, (6, 20, 56, 176)),
    ])
    def test_prefix(self, spec, x, expected):
        assert make_bset(spec).elements_up_to(x) == expected

    def test_memoized_prefix_consistent(self):
        bset = make_bset({"family": "primes"})
        big = bset.elements_up_to(1000)
        assert bset.elements_up_to(100) == tuple(p for p in big if p <= 100)

    def test_elements_up_to_rejects_zero(self):
        with pytest.raises(ValueError):
            make_bset({"family": "primes"}).elements_up_to(0)

    def test_first_elements(self):
        assert make_bset({"family": "prime-squares"}).first_elements(4) == (4, 9, 25, 49)

    def test_punctured_removed(self):
        bset = make_bset({"family": "punctured-primes"})
        assert bset.removed[:5] == (5, 11, 17, 37, 67)
        assert not bset.contains(5)
        assert bset.contains(7)
        assert 11 not in bset.elements_up_to(100)

    def test_coprime_pairs(self):
        assert coprime_pairs(6) == [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (1, 4)]

    @pytest.mark.parametrize("name", ["primes", "mod12", "ape1", "prime-squares", "two-three"])
    def test_contains_matches_enumeration(self, name):
        bset = make_bset({"family": name})
        elems = set(bset.elements_up_to(400))
        assert {n for n in range(1, 401) if bset.contains(n)} == elems


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------

class TestBlocks:

    def test_two_three(self):
        bset = make_bset({"family": "two-three"})
        assert bset.block(1) == (10, 21, 36)
        assert bset.block(2) == (22, 39)

    def test_cascade(self):
        bset = make_bset({"family": "cascade"})
        assert bset.block(1) == (6,)
        assert bset.block(2) == (50, 98, 147)

    def test_q_family(self):
        bset = make_bset({"family": "q-family"})
        assert bset.block(1) == (15,)
        assert bset.block(2) == (21, 35)
        assert bset.block(3) == (33, 55, 77)

    def test_power2_finite(self):
        bset = make_bset({"family": "power2", "params": {"count": 3}})
        assert [bset.block(k) for k in (1, 2, 3, 4)] == [(6,), (20,), (56,), ()]
        assert bset.block_count() == 3
        assert bset.max_element() == 56

    def test_explicit_is_one_block(self):
        bset = make_bset({"elements": [4, 6]})
        assert bset.block(1) == (4, 6)
        assert bset.block(2) == ()

    def test_generic_blocks_are_single_elements(self):
        bset = make_bset({"family": "primes"})
        assert [bset.block(k) for k in (1, 2, 3)] == [(2,), (3,), (5,)]

    def test_block_index_positive(self):
        with pytest.raises(ValueError):
            make_bset({"family": "cascade"}).block(0)


# ---------------------------------------------------------------------------
# gcd profiles
# ---------------------------------------------------------------------------

class TestGcdProfile:

    @settings(max_examples=40, deadline=None)
    @given(small_moduli)
    @pytest.mark.parametrize("name", [
        "primes", "odd-primes", "prime-squares", "mod12", "two-three", "q-family", "power2",
        "punctured-primes", "ape1",
    ])
    def test_oracle_matches_brute_force(self, name, m):
        bset = make_bset({"family": name})
        profile = bset.gcd_profile(m)
        assert profile.exact
        assert set(profile.gcds) == _brute_gcds(bset, m)

    @settings(max_examples=40, deadline=None)
    @given(small_moduli)
    def test_witnesses_realize_their_gcd(self, m):
        bset = make_bset({"family": "two-three"})
        profile = bset.gcd_profile(m)
        for g, b in profile.witnesses.items():
            assert math.gcd(b, m) == g
            assert bset.contains(b)

    def test_cascade_profile(self):
        bset = make_bset({"family": "cascade"})
        m = 6 * 50 * 7
        assert set(bset.gcd_profile(m).gcds) == _brute_gcds(bset, m)

    def test_members(self):
        profile = make_bset({"family": "mod12"}).gcd_profile(60)
        assert set(profile.members) == {4, 5, 6}

    def test_inexact_without_oracle(self):
        profile = _Evens().gcd_profile(12, horizon=100)
        assert not profile.exact
        assert profile.horizon == 100
        assert set(profile.gcds) == {2, 4, 6, 12}

    def test_rejects_zero_modulus(self):
        with pytest.raises(ValueError):
            make_bset({"family": "primes"}).gcd_profile(0)

    def test_mod12_index_prime(self):
        for k in range(-10, 10):
            p = Mod12BSet.index_prime(k)
            assert (5 + 12 * k) % p == 0
            assert p % 12 in (5, 7)


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------

class TestDefaultHorizon:

    def test_default(self, monkeypatch):
        monkeypatch.delenv("BFREE_HORIZON", raising=False)
        assert default_horizon() == DEFAULT_HORIZON

    def test_override(self, monkeypatch):
        monkeypatch.setenv("BFREE_HORIZON", "5000")
        assert default_horizon() == 5000

    def test_garbage_falls_back(self, monkeypatch):
        monkeypatch.setenv("BFREE_HORIZON", "lots")
        assert default_horizon() == DEFAULT_HORIZON
