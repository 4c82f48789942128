"""Commitment hashing, PRG expansion, seed combination and permutation derivation.

Byte layouts are bit-exact so goldens transfer across implementations:
the commitment is SHA-256 of the seed bytes, the PRG is SHA-256 in counter
mode with a 64-bit big-endian counter, and index draws for the shuffle read
big-endian values off the PRG stream.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import Commitment, PartialSeed, Permutation


def commit(sigma: PartialSeed) -> Commitment:
    """Hash commitment to a partial seed (SHA-256 of the seed bytes)."""
    return Commitment(hashlib.sha256(sigma.bits).digest())


def verify_opening(sigma: PartialSeed, c: Commitment) -> bool:
    return commit(sigma) == c


def combine_seeds(openings: Iterable[Optional[PartialSeed]], nbits: int = 256) -> PartialSeed:
    """XOR all present openings over an all-zero start; absent entries contribute nothing."""
    acc = PartialSeed.zero(nbits)
    for sigma in openings:
        if sigma is None:
            continue
        if sigma.nbits != nbits:
            raise ValueError(f"opening is {sigma.nbits} bits, expected {nbits}")
        acc = acc.xor(sigma)
    return acc


def prg(seed: PartialSeed, nbytes: int) -> bytes:
    """Deterministic expansion: block t is SHA-256(seed || t as 64-bit big-endian)."""
    if nbytes < 0:
        raise ValueError("nbytes must be >= 0")
    out = bytearray()
    counter = 0
    while len(out) < nbytes:
        out += hashlib.sha256(seed.bits + counter.to_bytes(8, "big")).digest()
        counter += 1
    return bytes(out[:nbytes])


class PrgStream:
    """Sequential byte reader over the counter-mode PRG of one seed."""

    def __init__(self, seed: PartialSeed):
        self._bits = seed.bits
        self._counter = 0
        self._buf = b""
        self._pos = 0

    def read(self, n: int) -> bytes:
        while len(self._buf) - self._pos < n:
            block = hashlib.sha256(self._bits + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buf = self._buf[self._pos :] + block
            self._pos = 0
        chunk = self._buf[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def draw_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling.

        Reads the minimal number of bytes covering the range and rejects
        values at or above the largest multiple of the range, so the result
        is exactly uniform.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        nbytes = (bound - 1).bit_length()
        nbytes = (nbytes + 7) // 8
        space = 1 << (8 * nbytes)
        limit = (space // bound) * bound
        while True:
            value = int.from_bytes(self.read(nbytes), "big")
            if value < limit:
                return value % bound


def perm_from_rand_bits(seed: PartialSeed, length: int) -> Permutation:
    """Fisher-Yates shuffle of the identity array, driven by the seed's PRG stream.

    Deterministic in (seed, length); uniform over all length! permutations
    for uniformly random seeds, up to PRG quality.
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    arr = list(range(length))
    stream = PrgStream(seed)
    for i in range(length - 1, 0, -1):
        j = stream.draw_below(i + 1)
        arr[i], arr[j] = arr[j], arr[i]
    return Permutation(tuple(arr))


@dataclass(frozen=True)
class SeedMatrixEntry:
    """One (committing height, offset) cell of the seed/commitment table."""

    height: int
    offset: int
    commitment: Commitment
    sigma: Optional[PartialSeed] = None

    def __post_init__(self) -> None:
        if self.sigma is not None and not verify_opening(self.sigma, self.commitment):
            raise ValueError("stored opening does not match its commitment")
