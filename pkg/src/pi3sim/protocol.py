"""Wrapper protocol: commitment emission, opening scheduling, delivery transform.

Every block carries one fresh seed commitment per leader slot.  When the
block at height i + silent + 1 is mined, the leaders of block i reveal the
seeds committed for it; openings landing in the loud window
[i + silent + 1, i + silent + loud] are verified against the commitments
in the n_leaders blocks below i, XOR-combined, expanded through the PRG and
turned into the chunk permutation applied before the block is finally
delivered.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import (
    Block,
    Commitment,
    OpenPayload,
    PartialSeed,
    PartyId,
    Permutation,
    ProtocolParams,
    Transaction,
    TX_OPEN,
    open_tx,
)
from .execution import ExecutionReceipt, Market, run_block
from .randomness import SeedMatrixEntry, combine_seeds, commit, perm_from_rand_bits, verify_opening


def fresh_seed(rng: random.Random, nbits: int) -> PartialSeed:
    return PartialSeed(rng.getrandbits(8 * (nbits // 8)).to_bytes(nbits // 8, "big"))


def make_commitments(
    params: ProtocolParams, rng: random.Random
) -> tuple[tuple[Commitment, ...], list[PartialSeed]]:
    """Fresh partial seeds for the next n_leaders blocks plus their commitments."""
    seeds = [fresh_seed(rng, params.seed_bits) for _ in range(params.n_leaders)]
    return tuple(commit(s) for s in seeds), seeds


def make_block(
    txs: list[Transaction],
    params: ProtocolParams,
    rng: random.Random,
    *,
    parent: Optional[Block] = None,
    miner: PartyId = 0,
    block_id: int = -1,
) -> tuple[Block, list[PartialSeed]]:
    """Build a block carrying the given transactions plus fresh commitments.

    The returned seeds are for the miner's local storage only and are never
    broadcast with the block.
    """
    if len(txs) != params.txs_per_block:
        raise ValueError(f"expected {params.txs_per_block} transactions, got {len(txs)}")
    coms, seeds = make_commitments(params, rng)
    height = parent.height + 1 if parent is not None else 1
    block = Block(height, miner, tuple(txs), coms, parent, id=block_id)
    return block, seeds


def opening_window(i_del: int, params: ProtocolParams) -> tuple[int, int]:
    """Heights of the loud phase for the block delivered at i_del (inclusive)."""
    return i_del + params.silent_phase + 1, i_del + params.silent_phase + params.loud_phase


@dataclass
class Pi3Delivery:
    """One transformed block as finally delivered."""

    height: int
    block_id: int
    miner: PartyId
    seed: PartialSeed
    permutation: Permutation
    chunk_order: list[tuple[int, int]]  # (parent tx id, chunk index) after the swap
    receipt: ExecutionReceipt
    bootstrap: bool = False
    openings_used: int = 0


@dataclass
class Pi3State:
    """Per-party wrapper-protocol state."""

    pid: PartyId
    # Seeds for blocks this party mined, keyed by block id (reorg-safe).
    sigma_by_block: dict[int, list[PartialSeed]] = field(default_factory=dict)
    # (commit block id, offset) pairs already revealed.
    emitted: set[tuple[int, int]] = field(default_factory=set)
    # Write-once record of commitments and accepted openings per (height, offset).
    seed_matrix: dict[tuple[int, int], SeedMatrixEntry] = field(default_factory=dict)
    delivered: list[Pi3Delivery] = field(default_factory=list)

    def record_entry(self, entry: SeedMatrixEntry) -> None:
        key = (entry.height, entry.offset)
        if key in self.seed_matrix:
            existing = self.seed_matrix[key]
            if existing.sigma is not None and entry.sigma != existing.sigma:
                raise ValueError(f"seed matrix entry {key} is write-once")
        self.seed_matrix[key] = entry


def on_mined(
    bl: Block,
    pid: PartyId,
    state: Pi3State,
    params: ProtocolParams,
    alloc_txid: Callable[[], int],
) -> list[Transaction]:
    """Openings to broadcast when `bl` is observed as mined.

    Mining height h starts the reveal phase for the block at height
    h - silent - 1: any block in that block's leader window that this party
    mined owes one opening.
    """
    i_open = bl.height - params.silent_phase - 1
    out: list[Transaction] = []
    if i_open < 1:
        return out
    for i_prime in range(max(1, i_open - params.n_leaders), i_open):
        ancestor = bl.chain(i_prime)
        if ancestor.miner != pid:
            continue
        offset = i_open - i_prime
        seeds = state.sigma_by_block.get(ancestor.id)
        if seeds is None:
            continue
        key = (ancestor.id, offset)
        if key in state.emitted:
            continue
        state.emitted.add(key)
        payload = OpenPayload(i_prime, offset, seeds[offset - 1])
        out.append(open_tx(alloc_txid(), pid, payload))
    return out


def collect_openings(
    bl: Block, i_del: int, params: ProtocolParams
) -> tuple[list[Optional[PartialSeed]], list[SeedMatrixEntry]]:
    """Commitments and verified openings for the block delivered at i_del.

    Reads commitment j from the block j below the target, then scans the
    loud window for matching open transactions; the first valid opening per
    slot wins, anything outside the window or failing verification is
    ignored.
    """
    commitments = [bl.chain(i_del - j).get_com(j) for j in range(1, params.n_leaders + 1)]
    openings: list[Optional[PartialSeed]] = [None] * params.n_leaders
    lo, hi = opening_window(i_del, params)
    for height in range(lo, min(hi, bl.height) + 1):
        for tx in bl.chain(height).txs:
            if tx.kind != TX_OPEN:
                continue
            p: OpenPayload = tx.payload
            if p.commit_height + p.offset != i_del:
                continue
            if not 1 <= p.offset <= params.n_leaders:
                continue
            slot = p.offset - 1
            if openings[slot] is not None or commitments[slot] is None:
                continue
            if verify_opening(p.sigma, commitments[slot]):
                openings[slot] = p.sigma
    entries = [
        SeedMatrixEntry(i_del, j + 1, commitments[j], openings[j])
        for j in range(params.n_leaders)
        if commitments[j] is not None
    ]
    return openings, entries


def on_delivered(
    bl: Block,
    state: Pi3State,
    params: ProtocolParams,
    market: Market,
) -> Optional[Pi3Delivery]:
    """Transform and deliver the block silent+loud positions below `bl`.

    The first n_leaders blocks lack commitment history and pass through with
    the identity permutation (bootstrap).  Missing or invalid openings are
    skipped; an all-withheld slate degrades to the all-zero seed.
    """
    i_del = bl.height - params.silent_phase - params.loud_phase
    if i_del < 1:
        return None
    target = bl.chain(i_del)
    m = params.chunks_per_tx
    length = len(target.txs) * m

    bootstrap = i_del <= params.n_leaders
    if bootstrap:
        seed = PartialSeed.zero(params.seed_bits)
        perm = Permutation.identity(length)
        used = 0
    else:
        openings, entries = collect_openings(bl, i_del, params)
        for entry in entries:
            state.record_entry(entry)
        seed = combine_seeds(openings, params.seed_bits)
        perm = perm_from_rand_bits(seed, length)
        used = sum(1 for o in openings if o is not None)

    receipt, ordered = run_block(market, list(target.txs), m, perm)
    delivery = Pi3Delivery(
        height=i_del,
        block_id=target.id,
        miner=target.miner,
        seed=seed,
        permutation=perm,
        chunk_order=[(c.parent, c.index) for c in ordered],
        receipt=receipt,
        bootstrap=bootstrap,
        openings_used=used,
    )
    state.delivered.append(delivery)
    return delivery


def chain_has_opening(tip: Block, commit_height: int, offset: int, params: ProtocolParams) -> bool:
    """True when the canonical chain already records this opening in its window."""
    i_del = commit_height + offset
    lo, hi = opening_window(i_del, params)
    for height in range(lo, min(hi, tip.height) + 1):
        for tx in tip.chain(height).txs:
            if tx.kind != TX_OPEN:
                continue
            p: OpenPayload = tx.payload
            if p.commit_height == commit_height and p.offset == offset:
                return True
    return False
