"""Round-based simulation of the underlying chain.

The network is structured into synchronous rounds: a block broadcast in
round r reaches every party by r+1, and even under adversarial selective
delay by r+2.  At most one block is mined per round, the winner drawn from
the configured power vector; fork choice is longest-chain with first-seen
tie-break, and a block is delivered once `confirm_depth` blocks sit above
it on the observer's canonical chain.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .core import (
    Block,
    Commitment,
    PartyId,
    Transaction,
    TX_OPEN,
    ValidityPredicate,
    default_vt,
    validate_block,
)

EVENT_MINED = "mined"
EVENT_DELIVERED = "delivered"

# (miner, parent, mempool snapshot, allocated block id) -> (txs, commitments)
MakeBlockHook = Callable[
    [PartyId, Block, list[Transaction], int],
    tuple[tuple[Transaction, ...], tuple[Commitment, ...]],
]
OnMinedHook = Callable[[PartyId, Block], list[Transaction]]
OnDeliveredHook = Callable[[PartyId, Block], None]
DelayPolicy = Callable[[int, Block], Iterable[PartyId]]


class AgreementViolation(Exception):
    """A reorg crossed a delivered prefix; the run's assumptions are broken."""


@dataclass(frozen=True)
class Event:
    round: int
    kind: str
    height: int
    miner: PartyId
    block_id: int
    party: Optional[PartyId] = None  # observing party for delivered events


@dataclass(frozen=True)
class MiningModel:
    """Per-party mining weights and the per-round block probability."""

    power: tuple[float, ...]
    block_prob: float

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.power):
            raise ValueError("mining power must be non-negative")
        total = sum(self.power)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mining power must sum to 1, got {total}")
        if not 0 < self.block_prob <= 1:
            raise ValueError("block_prob must lie in (0, 1]")

    def draw(self, rng: random.Random) -> Optional[PartyId]:
        """Winner of this round's lottery, or None when no block is mined."""
        if rng.random() >= self.block_prob:
            return None
        target = rng.random()
        acc = 0.0
        for pid, p in enumerate(self.power):
            acc += p
            if target < acc:
                return pid
        return len(self.power) - 1


class PartyView:
    """One party's local chain state: known blocks, tip, delivered prefix, mempool."""

    def __init__(self, pid: PartyId, genesis: Block):
        self.pid = pid
        self.known: dict[int, Block] = {genesis.id: genesis}
        self.arrival: dict[int, int] = {genesis.id: 0}
        self._arrival_seq = 1
        self.tip: Block = genesis
        self.delivered: list[Block] = []
        self.mempool: dict[int, Transaction] = {}
        self.mined_seen: set[int] = set()

    @property
    def delivered_height(self) -> int:
        return self.delivered[-1].height if self.delivered else 0

    def add_block(self, block: Block) -> bool:
        if block.id in self.known:
            return False
        self.known[block.id] = block
        self.arrival[block.id] = self._arrival_seq
        self._arrival_seq += 1
        # Longest chain wins; ties keep the earlier arrival.
        if block.height > self.tip.height:
            self.tip = block
        for tx in block.txs:
            # Openings stay pooled until their window closes (they may need
            # re-inclusion if the carrying block is orphaned).
            if tx.kind != TX_OPEN:
                self.mempool.pop(tx.id, None)
        return True

    def add_tx(self, tx: Transaction) -> None:
        if tx.id not in self.mempool:
            self.mempool[tx.id] = tx


class BaseChainSim:
    """Driver for the round-structured world.

    Block content and the reaction to mined/delivered blocks are supplied as
    hooks so the wrapper protocol stays layered on top of the plain chain.
    """

    def __init__(
        self,
        n_parties: int,
        mining: MiningModel,
        confirm_depth: int,
        rng: random.Random,
        make_block: MakeBlockHook,
        on_mined: Optional[OnMinedHook] = None,
        on_delivered: Optional[OnDeliveredHook] = None,
        vt: ValidityPredicate = default_vt,
        n_leaders: Optional[int] = None,
        delay_policy: Optional[DelayPolicy] = None,
    ):
        if len(mining.power) != n_parties:
            raise ValueError("power vector length must match the party count")
        self.n_parties = n_parties
        self.mining = mining
        self.confirm_depth = confirm_depth
        self.rng = rng
        self.make_block = make_block
        self.on_mined = on_mined or (lambda pid, bl: [])
        self.on_delivered = on_delivered or (lambda pid, bl: None)
        self.vt = vt
        self.n_leaders = n_leaders
        self.delay_policy = delay_policy

        self.round = 0
        self.genesis = Block(0, -1, (), tuple(Commitment(bytes(32)) for _ in range(n_leaders or 0)), None, id=0)
        self._next_block_id = 1
        self.parties = [PartyView(pid, self.genesis) for pid in range(n_parties)]
        self.blocks: dict[int, Block] = {0: self.genesis}
        self.mined_log: list[Event] = []
        self.events: list[Event] = []
        # (arrival_round, recipient, payload) queues
        self._block_queue: dict[int, list[tuple[PartyId, Block]]] = {}
        self._tx_queue: dict[int, list[tuple[PartyId, Transaction]]] = {}

    # -- message plumbing ---------------------------------------------------

    def broadcast_tx(self, sender: PartyId, tx: Transaction, extra_delay: int = 0) -> None:
        """Diffuse a transaction; it reaches every mempool next round."""
        self.parties[sender].add_tx(tx)
        arrival = self.round + 1 + extra_delay
        for pid in range(self.n_parties):
            if pid != sender:
                self._tx_queue.setdefault(arrival, []).append((pid, tx))

    def pending_broadcasts(self, arrival_round: Optional[int] = None) -> list[Transaction]:
        """Transactions currently in flight (rushing observers see these)."""
        if arrival_round is None:
            arrival_round = self.round + 1
        return [tx for _, tx in self._tx_queue.get(arrival_round, [])]

    def _diffuse_block(self, miner: PartyId, block: Block) -> None:
        delayed = set(self.delay_policy(self.round, block)) if self.delay_policy else set()
        for pid in range(self.n_parties):
            if pid == miner:
                continue
            arrival = self.round + (2 if pid in delayed else 1)
            self._block_queue.setdefault(arrival, []).append((pid, block))

    # -- per-party processing -----------------------------------------------

    def _receive_block(self, pid: PartyId, block: Block) -> None:
        view = self.parties[pid]
        if not validate_block(block, self.vt, self.n_leaders):
            return
        if not view.add_block(block):
            return
        if block.id not in view.mined_seen:
            view.mined_seen.add(block.id)
            for tx in self.on_mined(pid, block):
                self.broadcast_tx(pid, tx)

    def _process_delivery(self, pid: PartyId) -> None:
        view = self.parties[pid]
        while view.tip.height - view.delivered_height > self.confirm_depth:
            next_height = view.delivered_height + 1
            block = view.tip.chain(next_height)
            prev = view.delivered[-1] if view.delivered else self.genesis
            if block.parent is not prev:
                raise AgreementViolation(
                    f"party {pid}: delivery of height {next_height} does not extend its prefix"
                )
            view.delivered.append(block)
            self.events.append(
                Event(self.round, EVENT_DELIVERED, block.height, block.miner, block.id, pid)
            )
            self.on_delivered(pid, block)

    # -- round loop -----------------------------------------------------------

    def advance_round(self) -> list[Event]:
        """Advance one synchronous round; returns the events it produced."""
        self.round += 1
        start = len(self.events)

        for pid, tx in self._tx_queue.pop(self.round, []):
            self.parties[pid].add_tx(tx)
        for pid, block in self._block_queue.pop(self.round, []):
            self._receive_block(pid, block)
        for pid in range(self.n_parties):
            self._process_delivery(pid)

        winner = self.mining.draw(self.rng)
        if winner is not None:
            view = self.parties[winner]
            block_id = self._next_block_id
            self._next_block_id += 1
            txs, coms = self.make_block(winner, view.tip, list(view.mempool.values()), block_id)
            block = Block(
                height=view.tip.height + 1,
                miner=winner,
                txs=tuple(txs),
                coms=tuple(coms),
                parent=view.tip,
                id=block_id,
            )
            self.blocks[block.id] = block
            mined = Event(self.round, EVENT_MINED, block.height, winner, block.id)
            self.mined_log.append(mined)
            self.events.append(mined)
            self._receive_block(winner, block)
            self._process_delivery(winner)
            self._diffuse_block(winner, block)

        return self.events[start:]

    def run(self, rounds: int) -> None:
        for _ in range(rounds):
            self.advance_round()

    # -- reorg race ----------------------------------------------------------

    def attempt_reorg(self, adversary_power: float, target_height: int,
                      rng: Optional[random.Random] = None) -> bool:
        """Simulate a private-fork race rewriting the chain from `target_height`.

        The adversary must catch up `tip - target + 1` blocks; success
        probability decays exponentially in that depth.
        """
        tip = max(view.tip.height for view in self.parties)
        if target_height > tip:
            raise ValueError(f"target height {target_height} exceeds tip {tip}")
        if target_height < 1:
            raise ValueError("target height must be >= 1")
        depth = tip - target_height + 1
        return private_fork_race(depth, adversary_power, rng or self.rng)


def private_fork_race(
    deficit: int,
    adversary_power: float,
    rng: random.Random,
    max_excess: int = 64,
) -> bool:
    """Biased random walk: the adversary wins a step with probability `adversary_power`.

    Returns True when the deficit ever reaches zero (the private fork catches
    the public chain); gives up once the deficit grows by `max_excess`, where
    the residual success probability is negligible.
    """
    if not 0 <= adversary_power < 0.5:
        raise ValueError("adversary power must lie in [0, 0.5)")
    if deficit <= 0:
        return True
    cap = deficit + max_excess
    d = deficit
    while 0 < d < cap:
        d += -1 if rng.random() < adversary_power else 1
    return d == 0
