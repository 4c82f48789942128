"""Commitments, PRG expansion, seed XOR and permutation derivation."""
import hashlib
import random

import pytest
from hypothesis import given, settings, strategies as st

from pi3sim.core import PartialSeed
from pi3sim.randomness import (
    SeedMatrixEntry,
    combine_seeds,
    commit,
    perm_from_rand_bits,
    prg,
    verify_opening,
)

# SHA-256 of 32 zero bytes, a published constant.
ZERO32_SHA256 = "66687aadf862bd776c8fc18b8e9f8e20089714856ee233b3902a591d0d5f2925"
# SHA-256 of 32 zero bytes followed by a zero 64-bit big-endian counter.
PRG_BLOCK0 = "2c34ce1df23b838c5abf2a7f6437cca3d3067ed509ff25f11df6b11b582b51eb"


def seed_of(n: int, nbytes: int = 32) -> PartialSeed:
    return PartialSeed(n.to_bytes(nbytes, "big"))


class TestCommit:
    def test_deterministic(self):
        s = seed_of(123456789)
        assert commit(s) == commit(s)

    def test_zero_seed_golden(self):
        assert commit(PartialSeed.zero()).digest.hex() == ZERO32_SHA256

    def test_no_collisions_at_test_scale(self):
        rng = random.Random(42)
        digests = set()
        for _ in range(100_000):
            digests.add(commit(seed_of(rng.getrandbits(256))).digest)
        assert len(digests) == 100_000

    def test_verify_opening(self):
        s, other = seed_of(1), seed_of(2)
        assert verify_opening(s, commit(s))
        assert not verify_opening(other, commit(s))

    def test_single_bit_flip_fails(self):
        s = seed_of(99)
        flipped = PartialSeed(bytes([s.bits[0] ^ 0x01]) + s.bits[1:])
        assert not verify_opening(flipped, commit(s))


class TestCombineSeeds:
    def test_all_absent_gives_zero(self):
        assert combine_seeds([None, None, None]) == PartialSeed.zero()

    def test_xor_identity(self):
        s = seed_of(77)
        assert combine_seeds([s, None, None]) == s

    def test_xor_self_inverse(self):
        s, t = seed_of(5), seed_of(6)
        assert combine_seeds([s, s, t]) == t

    def test_commutative_exhaustive_one_byte(self):
        # every ordered pair of 8-bit seeds
        for a in range(256):
            for b in range(256):
                sa, sb = seed_of(a, 1), seed_of(b, 1)
                assert combine_seeds([sa, sb], 8) == combine_seeds([sb, sa], 8)

    @given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
    def test_associative(self, a, b, c):
        sa, sb, sc = seed_of(a, 1), seed_of(b, 1), seed_of(c, 1)
        left = combine_seeds([combine_seeds([sa, sb], 8), sc], 8)
        right = combine_seeds([sa, combine_seeds([sb, sc], 8)], 8)
        assert left == right

    def test_one_fresh_slot_makes_output_uniform(self):
        # adversary fixes every other opening; a single random slot still
        # sweeps the combined seed through all 256 values exactly once
        fixed = [seed_of(0xA5, 1), seed_of(0x3C, 1), None]
        outputs = {
            combine_seeds(fixed + [seed_of(v, 1)], 8).bits for v in range(256)
        }
        assert len(outputs) == 256

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            combine_seeds([seed_of(1, 1)], 256)


class TestPrg:
    def test_zero_length(self):
        assert prg(seed_of(1), 0) == b""

    def test_prefix_consistency(self):
        s = seed_of(31337)
        assert prg(s, 64)[:32] == prg(s, 32)

    def test_counter_mode_golden(self):
        assert prg(PartialSeed.zero(), 32).hex() == PRG_BLOCK0

    def test_block_layout_is_counter_mode(self):
        s = seed_of(2**100)
        block1 = hashlib.sha256(s.bits + (1).to_bytes(8, "big")).digest()
        assert prg(s, 64)[32:] == block1

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            prg(seed_of(1), -1)


class TestPermFromRandBits:
    def test_singleton_identity(self):
        assert perm_from_rand_bits(seed_of(9), 1).mapping == (0,)

    def test_empty(self):
        assert perm_from_rand_bits(seed_of(9), 0).mapping == ()

    def test_deterministic(self):
        s = seed_of(4242)
        assert perm_from_rand_bits(s, 50) == perm_from_rand_bits(s, 50)

    @settings(max_examples=60)
    @given(st.integers(0, 2**256 - 1), st.integers(0, 2000))
    def test_always_bijection(self, n, length):
        mapping = perm_from_rand_bits(seed_of(n), length).mapping
        assert sorted(mapping) == list(range(length))

    def test_large_length_bijection(self):
        mapping = perm_from_rand_bits(seed_of(7), 10_000).mapping
        assert sorted(mapping) == list(range(10_000))

    def test_chi_square_uniform_small(self):
        # smoke-scale uniformity; the acceptance suite runs the full version
        from collections import Counter

        rng = random.Random(1)
        counts = Counter(
            perm_from_rand_bits(seed_of(rng.getrandbits(256)), 3).mapping for _ in range(6000)
        )
        expected = 6000 / 6
        stat = sum((c - expected) ** 2 / expected for c in counts.values())
        assert stat < 20.5  # 0.999 quantile of chi-square with 5 dof


class TestSeedMatrixEntry:
    def test_opening_must_match_commitment(self):
        s = seed_of(10)
        SeedMatrixEntry(1, 1, commit(s), s)  # fine
        with pytest.raises(ValueError):
            SeedMatrixEntry(1, 1, commit(s), seed_of(11))
