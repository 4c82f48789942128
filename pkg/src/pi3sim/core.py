"""Shared domain types: transactions, chunks, blocks, commitments, permutations.

Amounts are exact rationals (`fractions.Fraction`) so that chunk sums and
pool invariants hold bit-for-bit; only the closed-form analysis layer works
in floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

PartyId = int
AccountId = int
AssetId = int

# Swap directions over a two-asset pool.
X_TO_Y = "x_to_y"
Y_TO_X = "y_to_x"

# Transaction kinds.
TX_TRANSFER = "transfer"
TX_SWAP = "swap"
TX_OPEN = "open"
TX_NOOP = "noop"

UNBOUNDED = Fraction(0)  # sentinel: slippage bound "infinity" is modeled as None


@dataclass(frozen=True)
class Transfer:
    """A single value movement between two accounts."""

    source: AccountId
    dest: AccountId
    asset: AssetId
    amount: Fraction

    def __post_init__(self) -> None:
        if self.amount < 0:
            raise ValueError(f"transfer amount must be >= 0, got {self.amount}")
        if self.source == self.dest:
            raise ValueError("transfer source and dest must differ")

    def scaled(self, factor: Fraction) -> "Transfer":
        return Transfer(self.source, self.dest, self.asset, self.amount * factor)


@dataclass(frozen=True)
class SwapPayload:
    pool: int
    direction: str  # X_TO_Y or Y_TO_X
    amount_in: Fraction
    # Worst acceptable exchange rate (amount_in per unit out); None = unbounded.
    slippage_bound: Optional[Fraction] = None
    # Executes only if the referenced transaction already executed in an
    # earlier delivered block (conditional cross-block execution).
    requires: Optional[int] = None

    def __post_init__(self) -> None:
        if self.amount_in <= 0:
            raise ValueError("swap input amount must be positive")
        if self.slippage_bound is not None and self.slippage_bound <= 0:
            raise ValueError("slippage bound must be positive when given")
        if self.direction not in (X_TO_Y, Y_TO_X):
            raise ValueError(f"unknown swap direction {self.direction!r}")


@dataclass(frozen=True)
class OpenPayload:
    """On-chain reveal of the partial seed committed at `commit_height`, slot `offset`."""

    commit_height: int
    offset: int
    sigma: "PartialSeed"


Payload = Union[Transfer, SwapPayload, OpenPayload, None]


@dataclass(frozen=True)
class Transaction:
    id: int
    kind: str
    payload: Payload
    submitter: PartyId

    def __post_init__(self) -> None:
        if self.kind not in (TX_TRANSFER, TX_SWAP, TX_OPEN, TX_NOOP):
            raise ValueError(f"unknown transaction kind {self.kind!r}")


def transfer_tx(txid: int, submitter: PartyId, transfer: Transfer) -> Transaction:
    return Transaction(txid, TX_TRANSFER, transfer, submitter)


def swap_tx(txid: int, submitter: PartyId, payload: SwapPayload) -> Transaction:
    return Transaction(txid, TX_SWAP, payload, submitter)


def open_tx(txid: int, submitter: PartyId, payload: OpenPayload) -> Transaction:
    return Transaction(txid, TX_OPEN, payload, submitter)


def noop_tx(txid: int, submitter: PartyId) -> Transaction:
    return Transaction(txid, TX_NOOP, None, submitter)


@dataclass(frozen=True)
class PartialSeed:
    """A lambda-bit random string, stored big-endian as bytes."""

    bits: bytes

    @property
    def nbits(self) -> int:
        return len(self.bits) * 8

    def xor(self, other: "PartialSeed") -> "PartialSeed":
        if len(self.bits) != len(other.bits):
            raise ValueError("cannot XOR seeds of different lengths")
        return PartialSeed(bytes(a ^ b for a, b in zip(self.bits, other.bits)))

    @classmethod
    def zero(cls, nbits: int = 256) -> "PartialSeed":
        if nbits % 8:
            raise ValueError("seed length must be a whole number of bytes")
        return cls(bytes(nbits // 8))


@dataclass(frozen=True)
class Commitment:
    """256-bit hash commitment to a partial seed."""

    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != 32:
            raise ValueError("commitment digest must be exactly 256 bits")


@dataclass(frozen=True)
class Chunk:
    """One of the m equal slices of a transaction's transfers.

    Only the chunk with index 1 carries the parent's code (kept here as the
    parent transaction itself) and triggers re-execution in stage two.
    """

    parent: int
    index: int
    transfers: tuple[Transfer, ...]
    carries_code: bool
    code_tx: Optional[Transaction] = None

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("chunk index starts at 1")
        if self.carries_code != (self.index == 1):
            raise ValueError("exactly the first chunk carries the code")
        if self.carries_code and self.code_tx is None:
            raise ValueError("code-carrying chunk needs the parent transaction")


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..L-1}; mapping[src] is the target position of element src."""

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.mapping)
        seen = [False] * n
        for dst in self.mapping:
            if not 0 <= dst < n or seen[dst]:
                raise ValueError("mapping is not a bijection")
            seen[dst] = True

    def __len__(self) -> int:
        return len(self.mapping)

    def apply(self, items: list) -> list:
        if len(items) != len(self.mapping):
            raise ValueError("length mismatch")
        out = [None] * len(items)
        for src, dst in enumerate(self.mapping):
            out[dst] = items[src]
        return out

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for src, dst in enumerate(self.mapping):
            inv[dst] = src
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))


@dataclass
class Block:
    """Unit ordered by the base chain.

    `coms` has one slot per leader; an unfilled slot is None and makes the
    block invalid.  `chain(i)` walks parents to the ancestor at height i.
    """

    height: int
    miner: PartyId
    txs: tuple[Transaction, ...]
    coms: tuple[Optional[Commitment], ...]
    parent: Optional["Block"]
    id: int = field(default=-1)

    def chain(self, height: int) -> "Block":
        if height > self.height or height < 0:
            raise IndexError(f"no ancestor at height {height}")
        node = self
        while node.height > height:
            assert node.parent is not None, "broken parent link"
            node = node.parent
        return node

    def get_com(self, offset: int) -> Optional[Commitment]:
        """Commitment slot `offset` (1-based, per leader-set convention)."""
        return self.coms[offset - 1]


ValidityPredicate = Callable[[Transaction], bool]


def default_vt(tx: Transaction) -> bool:
    """Structural transaction validity: well-formed payload for its kind."""
    if tx.kind == TX_TRANSFER:
        return isinstance(tx.payload, Transfer)
    if tx.kind == TX_SWAP:
        return isinstance(tx.payload, SwapPayload)
    if tx.kind == TX_OPEN:
        return isinstance(tx.payload, OpenPayload) and tx.payload.offset >= 1
    if tx.kind == TX_NOOP:
        return tx.payload is None
    return False


def validate_block(
    bl: Block,
    vt: ValidityPredicate = default_vt,
    n_leaders: Optional[int] = None,
) -> bool:
    """Block validity: every transaction passes vt and no commitment slot is empty.

    Total function (never raises); pass `n_leaders` to also enforce the
    commitment count.
    """
    if n_leaders is not None and len(bl.coms) != n_leaders:
        return False
    if any(c is None for c in bl.coms):
        return False
    return all(vt(tx) for tx in bl.txs)


@dataclass(frozen=True)
class ProtocolParams:
    """Wrapper-protocol parameters.

    The waiting phase (blocks until a miner's reward is released) is
    n_leaders + silent_phase + loud_phase + confirm_depth.
    """

    n_leaders: int = 10
    silent_phase: int = 3  # blocks after a block before its openings may appear
    loud_phase: int = 3  # blocks during which openings must land
    confirm_depth: int = 6  # depth at which the base chain delivers
    chunks_per_tx: int = 1
    seed_bits: int = 256
    miner_share: Fraction = Fraction(1, 2)  # fraction of the block reward kept by the miner
    block_reward: Fraction = Fraction(2)
    txs_per_block: int = 8

    def __post_init__(self) -> None:
        if self.n_leaders < 1 or self.silent_phase < 1 or self.loud_phase < 1:
            raise ValueError("n_leaders, silent_phase and loud_phase must be >= 1")
        if self.confirm_depth < 1 or self.chunks_per_tx < 1 or self.txs_per_block < 1:
            raise ValueError("confirm_depth, chunks_per_tx and txs_per_block must be >= 1")
        if self.seed_bits % 8 or self.seed_bits <= 0:
            raise ValueError("seed_bits must be a positive multiple of 8")
        if not 0 < self.miner_share < 1:
            raise ValueError("miner_share must lie in (0, 1)")
        if self.block_reward <= 0:
            raise ValueError("block_reward must be positive")

    @property
    def waiting_phase(self) -> int:
        return self.n_leaders + self.silent_phase + self.loud_phase + self.confirm_depth
