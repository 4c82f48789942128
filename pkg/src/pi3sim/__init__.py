"""Simulator and analysis toolkit for commit-reveal randomized transaction ordering."""

from .core import (
    Block,
    Chunk,
    Commitment,
    PartialSeed,
    Permutation,
    ProtocolParams,
    Transaction,
    Transfer,
    validate_block,
)
from .execution import PoolState, sandwich_revenue, swap_exact_in
from .randomness import combine_seeds, commit, perm_from_rand_bits, prg, verify_opening

__version__ = "0.1.0"

__all__ = [
    "Block",
    "Chunk",
    "Commitment",
    "PartialSeed",
    "Permutation",
    "PoolState",
    "ProtocolParams",
    "Transaction",
    "Transfer",
    "combine_seeds",
    "commit",
    "perm_from_rand_bits",
    "prg",
    "sandwich_revenue",
    "swap_exact_in",
    "validate_block",
    "verify_opening",
]
