"""Constant-product pool math and two-stage chunked block execution.

Stage one runs every transaction serially in miner order and records the
transfers it produces.  Each valid transaction is then split into m chunks
carrying 1/m of every transfer; the permuted chunk stream is executed in
stage two, where the code-carrying chunk re-runs its parent against the
live state and aborts the whole parent if the produced transfers differ.
Per-parent effects are buffered and committed only when all m chunks have
executed, so aborted parents never touch the state.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .core import (
    AccountId,
    AssetId,
    Chunk,
    Permutation,
    SwapPayload,
    Transaction,
    Transfer,
    TX_NOOP,
    TX_OPEN,
    TX_SWAP,
    TX_TRANSFER,
    X_TO_Y,
    Y_TO_X,
)

POOL_ACCOUNT_BASE = 1_000_000

STATUS_EXECUTED = "executed"
STATUS_ABORTED = "aborted"
STATUS_SKIPPED = "skipped-slippage"

# Swap outputs at the market layer snap to this fixed fractional grid.
# Exact pool outputs would compound digit counts without limit over long
# runs; with every output's denominator dividing the grid, balances stay
# small rationals forever.  Conservation is unaffected: the rounded amount
# is what both sides of the transfer move.
MARKET_GRID = 10**18


def _snap_to_grid(value: Fraction) -> Fraction:
    if MARKET_GRID % value.denominator == 0:
        return value
    return Fraction(round(value * MARKET_GRID), MARKET_GRID)


@dataclass(frozen=True)
class PoolState:
    """Constant-product inventory; with fee 0 the reserve product is invariant."""

    x_reserve: Fraction
    y_reserve: Fraction
    fee: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.x_reserve <= 0 or self.y_reserve <= 0:
            raise ValueError("pool reserves must be positive")
        if not 0 <= self.fee < 1:
            raise ValueError("fee must lie in [0, 1)")


def swap_exact_in(
    pool: PoolState,
    direction: str,
    amount_in: Fraction,
    fee: Optional[Fraction] = None,
) -> tuple[Fraction, Fraction, PoolState]:
    """Swap `amount_in` through the pool; returns (amount_out, rate, new pool).

    The rate is amount_in / amount_out, i.e. the price paid per unit
    received.  Exact rational arithmetic throughout.
    """
    if amount_in <= 0:
        raise ValueError("swap input must be positive")
    f = pool.fee if fee is None else fee
    scaled = (1 - f) * amount_in
    if direction == X_TO_Y:
        out = pool.y_reserve * scaled / (pool.x_reserve + scaled)
        new = replace(pool, x_reserve=pool.x_reserve + amount_in, y_reserve=pool.y_reserve - out)
    elif direction == Y_TO_X:
        out = pool.x_reserve * scaled / (pool.y_reserve + scaled)
        new = replace(pool, x_reserve=pool.x_reserve - out, y_reserve=pool.y_reserve + amount_in)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return out, amount_in / out, new


def quote_rate(pool: PoolState, direction: str, amount_in: Fraction) -> Fraction:
    """Rate the swap would realize right now, without touching the pool."""
    out, rate, _ = swap_exact_in(pool, direction, amount_in)
    return rate


@dataclass(frozen=True)
class PoolHandle:
    """Registration of a pool in the market: traded assets and its account."""

    pool_id: int
    x_asset: AssetId
    y_asset: AssetId
    fee: Fraction

    @property
    def account(self) -> AccountId:
        return POOL_ACCOUNT_BASE + self.pool_id


class Market:
    """Mutable economic state: balances per (account, asset) plus pool registry.

    Pool reserves are the pool account's balances, so every state change is
    expressible as transfers and conservation is a pure balance statement.
    """

    def __init__(self) -> None:
        self.balances: dict[tuple[AccountId, AssetId], Fraction] = {}
        self.pools: dict[int, PoolHandle] = {}
        self.executed: set[int] = set()

    def add_pool(self, pool_id: int, state: PoolState, x_asset: AssetId, y_asset: AssetId) -> None:
        if pool_id in self.pools:
            raise ValueError(f"pool {pool_id} already registered")
        handle = PoolHandle(pool_id, x_asset, y_asset, state.fee)
        self.pools[pool_id] = handle
        self.balances[(handle.account, x_asset)] = state.x_reserve
        self.balances[(handle.account, y_asset)] = state.y_reserve

    def pool_state(self, pool_id: int) -> PoolState:
        h = self.pools[pool_id]
        return PoolState(
            self.balances[(h.account, h.x_asset)],
            self.balances[(h.account, h.y_asset)],
            h.fee,
        )

    def balance(self, account: AccountId, asset: AssetId) -> Fraction:
        return self.balances.get((account, asset), Fraction(0))

    def apply_transfer(self, t: Transfer) -> None:
        self.balances[(t.source, t.asset)] = self.balance(t.source, t.asset) - t.amount
        self.balances[(t.dest, t.asset)] = self.balance(t.dest, t.asset) + t.amount

    def copy(self) -> "Market":
        m = Market()
        m.balances = dict(self.balances)
        m.pools = dict(self.pools)
        m.executed = set(self.executed)
        return m

    def asset_totals(self) -> dict[AssetId, Fraction]:
        totals: dict[AssetId, Fraction] = {}
        for (_, asset), amount in self.balances.items():
            totals[asset] = totals.get(asset, Fraction(0)) + amount
        return totals


@dataclass(frozen=True)
class CodeResult:
    valid: bool
    transfers: tuple[Transfer, ...]


def execute_code(market: Market, tx: Transaction) -> CodeResult:
    """Run a transaction's code against the market, read-only.

    Swaps that violate their slippage bound, reference an unknown pool or an
    unmet cross-block condition are invalid and produce no transfers.
    """
    if tx.kind in (TX_NOOP, TX_OPEN):
        return CodeResult(True, ())
    if tx.kind == TX_TRANSFER:
        return CodeResult(True, (tx.payload,))
    assert tx.kind == TX_SWAP
    p: SwapPayload = tx.payload
    if p.pool not in market.pools:
        return CodeResult(False, ())
    if p.requires is not None and p.requires not in market.executed:
        return CodeResult(False, ())
    handle = market.pools[p.pool]
    out, rate, _ = swap_exact_in(market.pool_state(p.pool), p.direction, p.amount_in)
    out = _snap_to_grid(out)
    if p.slippage_bound is not None and rate > p.slippage_bound:
        return CodeResult(False, ())
    if p.direction == X_TO_Y:
        asset_in, asset_out = handle.x_asset, handle.y_asset
    else:
        asset_in, asset_out = handle.y_asset, handle.x_asset
    return CodeResult(
        True,
        (
            Transfer(tx.submitter, handle.account, asset_in, p.amount_in),
            Transfer(handle.account, tx.submitter, asset_out, out),
        ),
    )


@dataclass(frozen=True)
class StageOneRecord:
    tx: Transaction
    valid: bool
    transfers: tuple[Transfer, ...]


def stage_one_execute(txs: list[Transaction], market: Market) -> list[StageOneRecord]:
    """Serial pre-execution in miner order on a scratch copy of the market.

    Invalid transactions are flagged and contribute nothing to the state the
    following transactions see.  The given market is left untouched.
    """
    scratch = market.copy()
    records = []
    for tx in txs:
        result = execute_code(scratch, tx)
        if result.valid:
            for t in result.transfers:
                scratch.apply_transfer(t)
            scratch.executed.add(tx.id)
        records.append(StageOneRecord(tx, result.valid, result.transfers))
    return records


def chunk(tx: Transaction, transfers: tuple[Transfer, ...], m: int) -> list[Chunk]:
    """Split a transaction into m chunks of 1/m transfers; chunk 1 carries the code."""
    if m < 1:
        raise ValueError("m must be >= 1")
    share = Fraction(1, m)
    sliced = tuple(t.scaled(share) for t in transfers)
    return [
        Chunk(tx.id, i, sliced, carries_code=(i == 1), code_tx=tx if i == 1 else None)
        for i in range(1, m + 1)
    ]


def chunk_block(records: list[StageOneRecord], m: int) -> list[Chunk]:
    """Chunk every transaction of a block, in miner order.

    Stage-one-invalid parents still occupy chunk slots (keeping the permuted
    length at n_t * m) but carry no transfers and are skipped in stage two.
    """
    chunks: list[Chunk] = []
    for rec in records:
        transfers = rec.transfers if rec.valid else ()
        chunks.extend(chunk(rec.tx, transfers, m))
    return chunks


def swap_chunks(permuted: list[Chunk]) -> list[Chunk]:
    """Move each parent's code chunk to the earliest position that parent holds.

    The earliest-positioned chunk of every parent is swapped with the
    parent's chunk 1; relative positions of other parents are unchanged.
    """
    out = list(permuted)
    first_pos: dict[int, int] = {}
    code_pos: dict[int, int] = {}
    for pos, ch in enumerate(out):
        if ch.parent not in first_pos:
            first_pos[ch.parent] = pos
        if ch.carries_code:
            code_pos[ch.parent] = pos
    for parent, first in first_pos.items():
        code = code_pos[parent]
        if code != first:
            out[first], out[code] = out[code], out[first]
    return out


@dataclass
class ExecutionReceipt:
    """Outcome of stage two: per-chunk statuses, net deltas, final pools.

    `parent_deltas` holds the committed balance movement of each executed
    parent; aborted and skipped parents never appear there, which is the
    all-or-nothing guarantee in checkable form.
    """

    chunk_statuses: list[tuple[int, int, str]] = field(default_factory=list)
    parent_status: dict[int, str] = field(default_factory=dict)
    balance_deltas: dict[tuple[AccountId, AssetId], Fraction] = field(default_factory=dict)
    parent_deltas: dict[int, dict[tuple[AccountId, AssetId], Fraction]] = field(default_factory=dict)
    pool_states: dict[int, PoolState] = field(default_factory=dict)

    def executed_parents(self) -> set[int]:
        return {p for p, s in self.parent_status.items() if s == STATUS_EXECUTED}

    def net_delta(self, account: AccountId, asset: AssetId) -> Fraction:
        return self.balance_deltas.get((account, asset), Fraction(0))

    def deltas_match_executed_parents(self) -> bool:
        """True iff the block's net deltas are fully explained by executed parents."""
        total: dict[tuple[AccountId, AssetId], Fraction] = {}
        for parent, deltas in self.parent_deltas.items():
            if self.parent_status.get(parent) != STATUS_EXECUTED:
                return False
            for key, value in deltas.items():
                total[key] = total.get(key, Fraction(0)) + value
        return {k: v for k, v in total.items() if v} == self.balance_deltas


def stage_two_execute(
    chunks: list[Chunk],
    market: Market,
    stage_one: list[StageOneRecord],
) -> ExecutionReceipt:
    """Execute the permuted chunk stream against the market.

    When a code chunk is reached its parent is re-run against the current
    committed state; if the produced transfers differ from stage one (same
    source, dest, asset, amount, as multisets) the parent aborts with zero
    net effect.  A parent's buffered transfers commit only when its last
    chunk executes.
    """
    by_parent = {rec.tx.id: rec for rec in stage_one}
    total_chunks = Counter(ch.parent for ch in chunks)
    before = dict(market.balances)

    buffered: dict[int, list[Transfer]] = {}
    seen: dict[int, int] = {}
    status: dict[tuple[int, int], str] = {}
    parent_status: dict[int, str] = {}
    committed_deltas: dict[int, dict[tuple[AccountId, AssetId], Fraction]] = {}

    for ch in chunks:
        rec = by_parent[ch.parent]
        if not rec.valid:
            status[(ch.parent, ch.index)] = STATUS_SKIPPED
            parent_status[ch.parent] = STATUS_SKIPPED
            continue
        if parent_status.get(ch.parent) == STATUS_ABORTED:
            status[(ch.parent, ch.index)] = STATUS_ABORTED
            continue
        if ch.carries_code:
            live = execute_code(market, ch.code_tx)
            if not live.valid or Counter(live.transfers) != Counter(rec.transfers):
                # Abort the whole parent: drop buffered effects, skip the rest.
                buffered.pop(ch.parent, None)
                parent_status[ch.parent] = STATUS_ABORTED
                for idx in range(1, total_chunks[ch.parent] + 1):
                    status[(ch.parent, idx)] = STATUS_ABORTED
                continue
        buffered.setdefault(ch.parent, []).extend(ch.transfers)
        seen[ch.parent] = seen.get(ch.parent, 0) + 1
        status[(ch.parent, ch.index)] = STATUS_EXECUTED
        if seen[ch.parent] == total_chunks[ch.parent]:
            deltas: dict[tuple[AccountId, AssetId], Fraction] = {}
            for t in buffered.pop(ch.parent, []):
                market.apply_transfer(t)
                deltas[(t.source, t.asset)] = deltas.get((t.source, t.asset), Fraction(0)) - t.amount
                deltas[(t.dest, t.asset)] = deltas.get((t.dest, t.asset), Fraction(0)) + t.amount
            market.executed.add(ch.parent)
            parent_status[ch.parent] = STATUS_EXECUTED
            committed_deltas[ch.parent] = deltas

    receipt = ExecutionReceipt()
    receipt.chunk_statuses = [
        (ch.parent, ch.index, status[(ch.parent, ch.index)]) for ch in chunks
    ]
    receipt.parent_status = parent_status
    receipt.parent_deltas = {p: {k: v for k, v in d.items() if v} for p, d in committed_deltas.items()}
    keys = set(before) | set(market.balances)
    for key in keys:
        delta = market.balances.get(key, Fraction(0)) - before.get(key, Fraction(0))
        if delta:
            receipt.balance_deltas[key] = delta
    receipt.pool_states = {pid: market.pool_state(pid) for pid in market.pools}
    return receipt


def run_block(
    market: Market,
    txs: list[Transaction],
    m: int,
    perm: Permutation,
) -> tuple[ExecutionReceipt, list[Chunk]]:
    """Full block pipeline: stage one, chunk, permute, swap, stage two."""
    records = stage_one_execute(txs, market)
    chunks = chunk_block(records, m)
    if len(perm) != len(chunks):
        raise ValueError(f"permutation length {len(perm)} != chunk count {len(chunks)}")
    ordered = swap_chunks(perm.apply(chunks))
    receipt = stage_two_execute(ordered, market, records)
    return receipt, ordered


def sandwich_revenue(
    pool: PoolState,
    front_in: Fraction,
    victim_in: Fraction,
    order: Permutation,
    m: int,
) -> Fraction:
    """Net X gained by a chunked sandwich executed in the given chunk order.

    The three parents are the attacker's front-run (X to Y, `front_in`), the
    victim (X to Y, `victim_in`) and the attacker's back-run selling all Y
    the front-run received at its miner-order position.  Chunk input amounts
    are fixed at 1/m of those stage-one amounts; the permuted chunks then
    simply run through the pool, so the result is the raw ordering utility
    with no abort or slippage logic.
    """
    if len(order) != 3 * m:
        raise ValueError("order must permute the 3m sandwich chunks")
    front_out, _, _ = swap_exact_in(pool, X_TO_Y, front_in)
    back_in = front_out  # all Y received, per the miner's plan

    # Miner-order chunk stream: m front chunks, m victim chunks, m back chunks.
    legs = [(X_TO_Y, front_in / m)] * m + [(X_TO_Y, victim_in / m)] * m + [(Y_TO_X, back_in / m)] * m
    ordered = order.apply(legs)

    state = pool
    back_received = Fraction(0)
    for direction, amount in ordered:
        out, _, state = swap_exact_in(state, direction, amount)
        if direction == Y_TO_X:
            back_received += out
    return back_received - front_in
