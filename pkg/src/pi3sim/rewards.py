"""Delayed block-reward ledger.

A miner's reward stays pending for the whole waiting phase.  While pending
it can be claimed by a rival leader who appends the miner's seed preimage
early (theft), or burned if any of the miner's commitments is never opened
inside its loud window; otherwise the miner keeps its share and each miner
that appended one of the openings receives an equal cut of the remainder.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .core import Block, OpenPayload, PartyId, ProtocolParams, TX_OPEN
from .randomness import verify_opening

STATUS_PENDING = "pending"
STATUS_OPENED = "opened"
STATUS_BURNED = "burned"
STATUS_STOLEN = "stolen"


@dataclass
class RewardEntry:
    """Resolution of one block's reward after its windows closed."""

    miner: PartyId
    height: int
    release_height: int
    commitment_status: dict[int, str]  # offset -> opened | burned | stolen
    miner_amount: Fraction = Fraction(0)
    appender_amounts: dict[PartyId, Fraction] = field(default_factory=dict)
    claimed_by: Optional[PartyId] = None
    burned_amount: Fraction = Fraction(0)


class RewardLedger:
    """Chain-derived reward accounting, driven by delivered blocks in order."""

    def __init__(self, params: ProtocolParams):
        self.params = params
        self.entries: dict[int, RewardEntry] = {}
        self.released: dict[PartyId, Fraction] = {}
        self.minted = Fraction(0)
        self.burned = Fraction(0)
        self.excluded: set[PartyId] = set()
        self.last_processed = 0

    # -- queries --------------------------------------------------------------

    def released_balance(self, pid: PartyId) -> Fraction:
        return self.released.get(pid, Fraction(0))

    def total_released(self) -> Fraction:
        return sum(self.released.values(), Fraction(0))

    # -- processing -----------------------------------------------------------

    def process_delivered(self, bl: Block) -> Optional[RewardEntry]:
        """Feed the next delivered block; finalizes the block whose windows it closes.

        Delivery of height H closes every opening window of the block at
        height H - (n_leaders + silent + loud); by then the chain has reached
        that block's release height, so finalization and release coincide.
        """
        if bl.height != self.last_processed + 1:
            raise ValueError(
                f"blocks must be processed in delivery order, got {bl.height} after {self.last_processed}"
            )
        self.last_processed = bl.height
        p = self.params
        i = bl.height - (p.n_leaders + p.silent_phase + p.loud_phase)
        if i < 1:
            return None
        return self._finalize(bl, i)

    def _finalize(self, horizon: Block, i: int) -> RewardEntry:
        p = self.params
        target = horizon.chain(i)
        entry = RewardEntry(
            miner=target.miner,
            height=i,
            release_height=i + p.waiting_phase,
            commitment_status={},
        )
        self.entries[i] = entry
        self.minted += p.block_reward

        thief = self._find_theft(horizon, target)
        if thief is not None:
            offset, claimer = thief
            for j in range(1, p.n_leaders + 1):
                entry.commitment_status[j] = STATUS_STOLEN if j == offset else STATUS_PENDING
            entry.claimed_by = claimer
            self.excluded.add(target.miner)
            self._credit(claimer, p.block_reward)
            return entry

        appenders: list[Optional[PartyId]] = []
        all_opened = True
        for j in range(1, p.n_leaders + 1):
            opener = self._find_opening_appender(horizon, target, j)
            appenders.append(opener)
            entry.commitment_status[j] = STATUS_OPENED if opener is not None else STATUS_BURNED
            if opener is None:
                all_opened = False

        if not all_opened:
            entry.burned_amount = p.block_reward
            self.burned += p.block_reward
            return entry

        entry.miner_amount = p.miner_share * p.block_reward
        self._credit(target.miner, entry.miner_amount)
        share = (1 - p.miner_share) * p.block_reward / p.n_leaders
        for opener in appenders:
            assert opener is not None
            entry.appender_amounts[opener] = entry.appender_amounts.get(opener, Fraction(0)) + share
            self._credit(opener, share)
        return entry

    def _credit(self, pid: PartyId, amount: Fraction) -> None:
        self.released[pid] = self.released.get(pid, Fraction(0)) + amount

    def _find_theft(self, horizon: Block, target: Block) -> Optional[tuple[int, PartyId]]:
        """First rival-leader preimage posted before the silent phase of B_{i+j} ends."""
        p = self.params
        i = target.height
        for height in range(i + 1, min(i + p.n_leaders + p.silent_phase, horizon.height) + 1):
            block = horizon.chain(height)
            for tx in block.txs:
                if tx.kind != TX_OPEN:
                    continue
                payload: OpenPayload = tx.payload
                j = payload.offset
                if payload.commit_height != i or not 1 <= j <= p.n_leaders:
                    continue
                if height > i + j + p.silent_phase:
                    continue  # that slot's silent phase already ended
                if tx.submitter == target.miner:
                    continue
                com = target.get_com(j)
                if com is None or not verify_opening(payload.sigma, com):
                    continue
                if self._is_leader_of(horizon, i + j, tx.submitter):
                    return j, tx.submitter
        return None

    def _is_leader_of(self, horizon: Block, height: int, pid: PartyId) -> bool:
        for h in range(max(1, height - self.params.n_leaders), height):
            if h <= horizon.height and horizon.chain(h).miner == pid:
                return True
        return False

    def _find_opening_appender(
        self, horizon: Block, target: Block, offset: int
    ) -> Optional[PartyId]:
        """Miner of the block holding the first valid opening of (target, offset)."""
        p = self.params
        i_del = target.height + offset
        lo = i_del + p.silent_phase + 1
        hi = i_del + p.silent_phase + p.loud_phase
        com = target.get_com(offset)
        if com is None:
            return None
        for height in range(lo, min(hi, horizon.height) + 1):
            block = horizon.chain(height)
            for tx in block.txs:
                if tx.kind != TX_OPEN:
                    continue
                payload: OpenPayload = tx.payload
                if payload.commit_height != target.height or payload.offset != offset:
                    continue
                if verify_opening(payload.sigma, com):
                    return block.miner
        return None


def process_block_for_rewards(bl: Block, ledger: RewardLedger) -> Optional[RewardEntry]:
    return ledger.process_delivered(bl)


def expected_honest_utility(
    params: ProtocolParams, q: Union[Fraction, float] = Fraction(0)
) -> Union[Fraction, float]:
    """Expected reward of an honest leader: (1-q)^n_leaders * miner_share * block_reward.

    Pass q as a Fraction for an exact result.
    """
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    return (1 - q) ** params.n_leaders * params.miner_share * params.block_reward
