"""Attack strategy planners: withholding, seed grinding, slippage games.

These operate on an isolated sandwich context (three parents: front-run,
victim, back-run) and on pool rate algebra; the full-simulation wiring that
feeds them live chain state lives in the runner.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import PartialSeed, PartyId, Permutation, X_TO_Y, Y_TO_X
from .execution import PoolState, quote_rate, sandwich_revenue, swap_exact_in
from .randomness import perm_from_rand_bits


class PreconditionError(ValueError):
    """An attack's stated hypothesis does not hold for the given market."""


@dataclass(frozen=True)
class CoalitionSpec:
    """Who colludes and how many commitments/loud-phase slots they control."""

    members: frozenset[PartyId]
    k: int  # commitments controlled for the target block
    k_tilde: int = 10**9  # coalition miners in the loud phase; large = unconstrained
    coordination_cost: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.k < 0 or self.k_tilde < 0:
            raise ValueError("k and k_tilde must be non-negative")

    @property
    def kappa(self) -> int:
        return min(self.k, self.k_tilde)


@dataclass(frozen=True)
class SandwichBlock:
    """Three-parent sandwich context: front-run, victim, back-run over one pool."""

    pool: PoolState
    front_in: Fraction
    victim_in: Fraction
    chunks: int = 1

    @property
    def n_chunks(self) -> int:
        return 3 * self.chunks

    def revenue(self, order: Permutation) -> Fraction:
        return sandwich_revenue(self.pool, self.front_in, self.victim_in, order, self.chunks)

    def miner_order_revenue(self) -> Fraction:
        """Revenue of the un-permuted (front, victim, back) order: the raw sandwich value."""
        return self.revenue(Permutation.identity(self.n_chunks))

    def permutation_for(self, seed: PartialSeed) -> Permutation:
        return perm_from_rand_bits(seed, self.n_chunks)


@dataclass(frozen=True)
class BiasedAttackOutcome:
    withhold: frozenset[int]  # indices into the coalition's seed list
    net_revenue: Fraction  # best permutation revenue minus burned rewards
    honest_revenue: Fraction  # revenue when everything is opened
    permutation: Permutation

    @property
    def gain(self) -> Fraction:
        return self.net_revenue - self.honest_revenue


def biased_permutation_attack(
    block: SandwichBlock,
    coalition: CoalitionSpec,
    honest_seed: PartialSeed,
    coalition_seeds: Sequence[PartialSeed],
    block_reward: Fraction,
) -> BiasedAttackOutcome:
    """Exhaustively pick which of the coalition's openings to withhold.

    Every withheld opening burns one block reward; the reachable seeds are
    the honest XOR combined with any sub-XOR of the coalition's seeds.
    Withholding nothing is always in the search set, so the result never
    falls below the honest baseline.
    """
    k = len(coalition_seeds)
    if k != coalition.k:
        raise ValueError("coalition seed list must match its claimed k")
    if k > 20:
        raise ValueError("exhaustive search is infeasible beyond k = 20")

    best: Optional[BiasedAttackOutcome] = None
    honest_revenue: Optional[Fraction] = None
    for mask in range(2**k):
        seed = honest_seed
        withheld = []
        for i, s in enumerate(coalition_seeds):
            if mask >> i & 1:
                withheld.append(i)
            else:
                seed = seed.xor(s)
        perm = block.permutation_for(seed)
        revenue = block.revenue(perm)
        net = revenue - len(withheld) * block_reward
        if mask == 0:
            honest_revenue = revenue
        if best is None or net > best.net_revenue:
            best = BiasedAttackOutcome(frozenset(withheld), net, Fraction(0), perm)
    assert best is not None and honest_revenue is not None
    return BiasedAttackOutcome(best.withhold, best.net_revenue, honest_revenue, best.permutation)


@dataclass(frozen=True)
class ChosenAttackOutcome:
    seeds: Optional[tuple[PartialSeed, ...]]  # per-leader seeds to commit, None if degenerate
    permutation: Optional[Permutation]
    revenue: Fraction  # best found (or expected, when degenerate)
    net_utility: Fraction  # revenue minus the coordination cost
    degenerate: bool = False


def chosen_permutation_attack(
    block: SandwichBlock,
    coalition: CoalitionSpec,
    n_leaders: int,
    trial_budget: int,
    rng: random.Random,
    seed_bits: int = 256,
) -> ChosenAttackOutcome:
    """Grind seeds toward the most profitable ordering found within the budget.

    Controlling all leader slots lets the coalition realize any combined
    seed: grind candidates, keep the best, then back out per-leader seeds
    whose XOR equals it.  With even one slot outside the coalition the
    resulting permutation is uniform regardless, so the attack degenerates
    to the honest expectation (estimated over the same budget).
    """
    if trial_budget < 1:
        raise ValueError("trial budget must be >= 1")
    nbytes = seed_bits // 8

    def draw() -> PartialSeed:
        return PartialSeed(rng.getrandbits(8 * nbytes).to_bytes(nbytes, "big"))

    if coalition.k < n_leaders:
        total = Fraction(0)
        for _ in range(trial_budget):
            total += block.revenue(block.permutation_for(draw()))
        expected = total / trial_budget
        return ChosenAttackOutcome(None, None, expected, expected - coalition.coordination_cost, True)

    best_seed = draw()
    best_perm = block.permutation_for(best_seed)
    best_revenue = block.revenue(best_perm)
    for _ in range(trial_budget - 1):
        seed = draw()
        perm = block.permutation_for(seed)
        revenue = block.revenue(perm)
        if revenue > best_revenue:
            best_seed, best_perm, best_revenue = seed, perm, revenue

    shares = [draw() for _ in range(n_leaders - 1)]
    last = best_seed
    for s in shares:
        last = last.xor(s)
    seeds = tuple(shares + [last])
    return ChosenAttackOutcome(
        seeds, best_perm, best_revenue, best_revenue - coalition.coordination_cost
    )


def single_miner_streak_probability(power: float, n_leaders: int) -> float:
    """Probability a miner with the given power mines n_leaders blocks in a row."""
    if not 0 <= power <= 0.5:
        raise ValueError("a secure underlying chain needs power <= 1/2")
    if n_leaders < 1:
        raise ValueError("n_leaders must be >= 1")
    return power**n_leaders


@dataclass(frozen=True)
class SlippageAttackParams:
    """Abstract utilities and slippage margins of the slippage-controlled sandwich."""

    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    eps1: Fraction
    eps2: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.beta < self.alpha:
            raise ValueError("need 0 <= beta < alpha")
        if self.gamma <= self.alpha:
            raise ValueError("need gamma > alpha")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("slippage margins must be positive")


# Canonical ordering of the six (tx1, t*, tx2) arrangements; the utility
# table is reported in this order.
SLIP_ORDERINGS: tuple[tuple[str, str, str], ...] = (
    ("tx1", "t*", "tx2"),
    ("tx1", "tx2", "t*"),
    ("t*", "tx1", "tx2"),
    ("t*", "tx2", "tx1"),
    ("tx2", "tx1", "t*"),
    ("tx2", "t*", "tx1"),
)


@dataclass(frozen=True)
class SlipAttackResult:
    table: tuple[Fraction, ...]  # utility per SLIP_ORDERINGS entry
    expectation: Fraction
    tx1_bound: Fraction
    tx2_bound: Fraction
    tx2_in: Fraction


def _slip_rates(
    pool: PoolState, victim_in: Fraction, adv_in: Fraction
) -> tuple[Fraction, Fraction, Fraction, Fraction, Fraction, Fraction]:
    """Exchange rates the slippage attack is built from.

    Returns (rate for tx1 now, rate for tx1 after t*, tx2's input, and the
    Y-to-X rates for that input after tx1 only, after t* only, after both).
    """
    rate_xy_now = quote_rate(pool, X_TO_Y, adv_in)
    y1, _, after_tx1 = swap_exact_in(pool, X_TO_Y, adv_in)
    _, _, after_victim = swap_exact_in(pool, X_TO_Y, victim_in)
    _, _, after_both = swap_exact_in(after_tx1, X_TO_Y, victim_in)
    rate_xy_after_victim = quote_rate(after_victim, X_TO_Y, adv_in)
    rate_yx_tx1 = quote_rate(after_tx1, Y_TO_X, y1)
    rate_yx_victim = quote_rate(after_victim, Y_TO_X, y1)
    rate_yx_both = quote_rate(after_both, Y_TO_X, y1)
    return rate_xy_now, rate_xy_after_victim, y1, rate_yx_tx1, rate_yx_victim, rate_yx_both


def slip_attack(
    pool: PoolState,
    victim_in: Fraction,
    params: SlippageAttackParams,
    adv_in: Fraction,
) -> SlipAttackResult:
    """Evaluate the slippage-controlled sandwich over all six orderings.

    tx1 buys with bound (current rate + eps1) so it only executes before the
    victim moved the price; tx2 sells with bound (rate after both trades +
    eps2) so it only executes once tx1 and the victim are through.  Whenever
    the margin hypotheses hold the utility table is exactly
    (alpha, beta, 0, 0, beta, 0) and the expectation (alpha + 2 beta) / 6.
    """
    rate_xy_now, rate_xy_after_victim, y1, rate_yx_tx1, rate_yx_victim, rate_yx_both = _slip_rates(
        pool, victim_in, adv_in
    )
    if params.eps1 >= rate_xy_after_victim - rate_xy_now:
        raise PreconditionError("eps1 must stay below the victim's rate impact on tx1")
    if params.eps2 >= min(rate_yx_tx1, rate_yx_victim) - rate_yx_both:
        raise PreconditionError("eps2 must stay below the combined rate impact on tx2")
    tx1_bound = rate_xy_now + params.eps1
    tx2_bound = rate_yx_both + params.eps2

    table = []
    for ordering in SLIP_ORDERINGS:
        state = pool
        executed = {"tx1": False, "tx2": False}
        for name in ordering:
            if name == "t*":
                _, _, state = swap_exact_in(state, X_TO_Y, victim_in)
            elif name == "tx1":
                rate = quote_rate(state, X_TO_Y, adv_in)
                if rate <= tx1_bound:
                    _, _, state = swap_exact_in(state, X_TO_Y, adv_in)
                    executed["tx1"] = True
            else:
                rate = quote_rate(state, Y_TO_X, y1)
                if rate <= tx2_bound:
                    _, _, state = swap_exact_in(state, Y_TO_X, y1)
                    executed["tx2"] = True
        table.append(_slip_utility(ordering, executed, params))

    expectation = sum(table, Fraction(0)) / 6
    return SlipAttackResult(tuple(table), expectation, tx1_bound, tx2_bound, y1)


def _slip_utility(
    ordering: tuple[str, str, str], executed: dict[str, bool], params: SlippageAttackParams
) -> Fraction:
    pos = {name: i for i, name in enumerate(ordering)}
    if executed["tx1"] and executed["tx2"]:
        if pos["tx1"] < pos["t*"] < pos["tx2"]:
            return params.alpha
        if pos["tx2"] < pos["t*"] < pos["tx1"]:
            return -params.alpha
        return Fraction(0)
    if executed["tx1"]:
        return params.beta if pos["tx1"] < pos["t*"] else Fraction(0)
    if executed["tx2"]:
        return -params.gamma if pos["tx2"] < pos["t*"] else Fraction(0)
    return Fraction(0)


def long_range_slip_attack(
    pool: PoolState,
    victim_in: Fraction,
    params: SlippageAttackParams,
    adv_in: Fraction,
) -> Fraction:
    """Expected utility of splitting the sandwich across blocks: beta / 2.

    tx1 lands in the victim's block with bound (current rate + eps1); tx2 is
    only submitted (and always profitable at utility beta) once tx1 is on
    chain.  The two relative orders of tx1 and t* are equally likely.
    """
    rate_xy_now = quote_rate(pool, X_TO_Y, adv_in)
    _, _, after_victim = swap_exact_in(pool, X_TO_Y, victim_in)
    rate_xy_after_victim = quote_rate(after_victim, X_TO_Y, adv_in)
    if params.eps1 >= rate_xy_after_victim - rate_xy_now:
        raise PreconditionError("eps1 must stay below the victim's rate impact on tx1")
    return params.beta / 2


def long_range_slip_simulate(
    pool: PoolState,
    victim_in: Fraction,
    params: SlippageAttackParams,
    adv_in: Fraction,
    trials: int,
    rng: random.Random,
    n_fillers: int = 6,
    seed_bits: int = 256,
) -> Fraction:
    """Monte Carlo of the long-range attack over protocol-style permutations.

    Each trial permutes a block holding tx1, t* and neutral fillers with a
    fresh seed; tx1's slippage check runs against the live pool, and utility
    beta accrues only when tx1 actually executed.
    """
    expected = long_range_slip_attack(pool, victim_in, params, adv_in)  # validates eps1
    assert expected == params.beta / 2
    tx1_bound = quote_rate(pool, X_TO_Y, adv_in) + params.eps1
    length = n_fillers + 2
    nbytes = seed_bits // 8
    total = Fraction(0)
    for _ in range(trials):
        seed = PartialSeed(rng.getrandbits(8 * nbytes).to_bytes(nbytes, "big"))
        perm = perm_from_rand_bits(seed, length)
        order = perm.apply(["tx1", "t*"] + ["-"] * n_fillers)
        state = pool
        for name in order:
            if name == "t*":
                _, _, state = swap_exact_in(state, X_TO_Y, victim_in)
            elif name == "tx1":
                if quote_rate(state, X_TO_Y, adv_in) <= tx1_bound:
                    total += params.beta
                break
    return total / trials
