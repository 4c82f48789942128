"""Shared helpers: minimal worlds with plain commitment-carrying blocks."""
import random

import pytest

from pi3sim.basechain import BaseChainSim, MiningModel
from pi3sim.core import ProtocolParams, noop_tx
from pi3sim.protocol import make_commitments


class SimpleWorldFactory:
    """Worlds whose blocks carry noops plus fresh commitments; no wrapper logic."""

    def __init__(self):
        self._txid = 0

    def build(
        self,
        n_parties=4,
        power=None,
        block_prob=0.5,
        confirm_depth=3,
        n_leaders=2,
        seed=7,
        txs_per_block=2,
        delay_policy=None,
        on_mined=None,
        on_delivered=None,
    ):
        params = ProtocolParams(
            n_leaders=n_leaders,
            silent_phase=1,
            loud_phase=1,
            confirm_depth=confirm_depth,
            txs_per_block=txs_per_block,
        )
        rng = random.Random(seed)
        com_rng = random.Random(seed + 1)

        def make_block(pid, parent, mempool, block_id):
            txs = []
            for tx in sorted(mempool, key=lambda t: t.id):
                if len(txs) >= txs_per_block:
                    break
                txs.append(tx)
            while len(txs) < txs_per_block:
                self._txid += 1
                txs.append(noop_tx(10_000_000 + self._txid, pid))
            coms, _ = make_commitments(params, com_rng)
            return tuple(txs), coms

        power = power or tuple(1.0 / n_parties for _ in range(n_parties))
        return BaseChainSim(
            n_parties=n_parties,
            mining=MiningModel(tuple(power), block_prob),
            confirm_depth=confirm_depth,
            rng=rng,
            make_block=make_block,
            on_mined=on_mined,
            on_delivered=on_delivered,
            n_leaders=n_leaders,
            delay_policy=delay_policy,
        )


@pytest.fixture
def world_factory():
    return SimpleWorldFactory()
