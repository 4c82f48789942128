"""Closed-form attack bounds, Monte Carlo verification, overhead and case-study data.

Everything here works in floating point (the bounds are transcendental);
the exact-rational execution layer stays the ground truth the Monte Carlo
is calibrated against.
"""
from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .adversary import SandwichBlock
from .core import PartialSeed, X_TO_Y
from .randomness import perm_from_rand_bits

COMMITMENT_BITS = 256
OPENING_BITS = 468  # on-chain footprint of one open() call
PER_LEADER_OVERHEAD_BITS = COMMITMENT_BITS + OPENING_BITS

Number = Union[int, float, Fraction]


class TailBoundViolation(AssertionError):
    """A Monte Carlo estimate exceeded the closed-form tail bound."""


def revenue_tail_bound(m: int, kappa: int, w: Number, lam: Number, k: int) -> float:
    """Upper bound on P[withholding revenue >= kappa * w] for a k-commitment coalition.

    1 - (1 - e^(-2 m kappa w / lambda))^(2^k), clamped to [0, 1].
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if kappa < 0 or k < 0:
        raise ValueError("kappa and k must be non-negative")
    inner = 1.0 - math.exp(-2.0 * m * kappa * float(w) / float(lam))
    value = 1.0 - inner ** (2**k)
    return min(1.0, max(0.0, value))


def p_k_lambda(
    m: int,
    k: int,
    w: Number,
    lam: Number,
    q: float = 0.0,
    n_leaders: int = 10,
) -> float:
    """Bound on a k-commitment coalition achieving positive net revenue.

    Maximizes the tail bound over the number of withheld openings, with the
    (1-q)^n_leaders discount on the reward at stake.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 <= q < 1:
        raise ValueError("q must lie in [0, 1)")
    discount = (1.0 - q) ** n_leaders
    return max(
        1.0 - (1.0 - math.exp(-2.0 * m * discount * k_prime * float(w) / float(lam))) ** (2**k)
        for k_prime in range(1, k + 1)
    )


def epsilon_equilibrium(lam: Number, big_lambda: Number, n_leaders: int, p: float) -> float:
    """Deviation benefit bound: max(lambda / 2^n_leaders, p * Lambda)."""
    if lam <= 0 or big_lambda <= 0:
        raise ValueError("lambda and Lambda must be positive")
    if n_leaders < 1:
        raise ValueError("n_leaders must be >= 1")
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    return max(float(lam) / 2**n_leaders, p * float(big_lambda))


def block_overhead_bits(n_leaders: int) -> int:
    """Per-block space cost of carrying commitments and openings: 724 bits per leader."""
    if n_leaders < 0:
        raise ValueError("n_leaders must be >= 0")
    return PER_LEADER_OVERHEAD_BITS * n_leaders


def overhead_breakdown(n_leaders: int) -> dict[str, int]:
    return {
        "commitment_bits": COMMITMENT_BITS,
        "opening_bits": OPENING_BITS,
        "per_leader_bits": PER_LEADER_OVERHEAD_BITS,
        "total_bits": block_overhead_bits(n_leaders),
    }


# -- Monte Carlo harness ------------------------------------------------------

# Reference sandwich shape: feeless pool, front-run and victim both 10% of
# the reserves.  Ordering utility then stays within [-lambda, +lambda]
# (fees would let round-trip losses dwarf the sandwich gain and break that
# premise).  Revenue scales linearly with the pool size, so one scale
# factor calibrates the un-permuted revenue exactly.
_BASE_POOL = (Fraction(100), Fraction(100))
_BASE_FEE = Fraction(0)
_BASE_FRONT = Fraction(10)
_BASE_VICTIM = Fraction(10)


def calibrate_sandwich(lam: Number, m: int) -> SandwichBlock:
    """Sandwich block whose un-permuted m=1 revenue equals `lam` exactly."""
    from .execution import PoolState

    lam_frac = lam if isinstance(lam, Fraction) else Fraction(str(lam))
    if lam_frac <= 0:
        raise ValueError("lambda must be positive")
    unit = SandwichBlock(
        PoolState(_BASE_POOL[0], _BASE_POOL[1], _BASE_FEE), _BASE_FRONT, _BASE_VICTIM, 1
    )
    unit_revenue = unit.miner_order_revenue()
    scale = lam_frac / unit_revenue
    return SandwichBlock(
        PoolState(_BASE_POOL[0] * scale, _BASE_POOL[1] * scale, _BASE_FEE),
        _BASE_FRONT * scale,
        _BASE_VICTIM * scale,
        m,
    )


def _float_legs(block: SandwichBlock) -> tuple[np.ndarray, np.ndarray, float, float, float]:
    """Per-chunk (direction, amount) arrays in miner order, plus pool floats."""
    from .execution import swap_exact_in

    m = block.chunks
    front_out, _, _ = swap_exact_in(block.pool, X_TO_Y, block.front_in)
    amounts = (
        [float(block.front_in) / m] * m
        + [float(block.victim_in) / m] * m
        + [float(front_out) / m] * m
    )
    directions = [1] * (2 * m) + [0] * m  # 1 = X to Y, 0 = Y to X (back-run)
    return (
        np.array(directions, dtype=np.int8),
        np.array(amounts, dtype=np.float64),
        float(block.pool.x_reserve),
        float(block.pool.y_reserve),
        float(block.pool.fee),
    )


def _batch_revenues(block: SandwichBlock, orders: np.ndarray) -> np.ndarray:
    """Sandwich revenue for each permutation row (mapping[src] = dst semantics)."""
    directions, amounts, x0, y0, fee = _float_legs(block)
    n, length = orders.shape
    if length != 3 * block.chunks:
        raise ValueError("orders must cover the 3m chunks")
    seq = np.argsort(orders, axis=1)  # seq[:, pos] = miner-order index executed at pos
    x = np.full(n, x0)
    y = np.full(n, y0)
    back = np.zeros(n)
    keep = 1.0 - fee
    for pos in range(length):
        idx = seq[:, pos]
        amt = amounts[idx]
        fwd = directions[idx] == 1
        scaled = keep * amt
        out_fwd = y * scaled / (x + scaled)
        out_back = x * scaled / (y + scaled)
        x = np.where(fwd, x + amt, x - out_back)
        y = np.where(fwd, y - out_fwd, y + amt)
        back += np.where(fwd, 0.0, out_back)
    front_total = float(block.front_in)
    return back - front_total


def _random_seed(rng: random.Random, nbits: int = 256) -> PartialSeed:
    return PartialSeed(rng.getrandbits(nbits).to_bytes(nbits // 8, "big"))


def _lattice_orders(
    block: SandwichBlock, honest: PartialSeed, coalition: Sequence[PartialSeed]
) -> np.ndarray:
    """Permutations for every open/withhold subset (mask bit set = withheld)."""
    k = len(coalition)
    length = 3 * block.chunks
    orders = np.empty((2**k, length), dtype=np.int64)
    for mask in range(2**k):
        seed = honest
        for i, s in enumerate(coalition):
            if not mask >> i & 1:
                seed = seed.xor(s)
        orders[mask] = perm_from_rand_bits(seed, length).mapping
    return orders


@dataclass(frozen=True)
class TailEstimate:
    m: int
    k: int
    w: float
    lam: float
    trials: int
    estimate: float
    stderr: float
    bound: float

    @property
    def ci95(self) -> float:
        return 1.96 * self.stderr

    @property
    def within_bound(self) -> bool:
        return self.estimate <= self.bound + 3 * self.stderr


def _tail_hits(
    revenues: np.ndarray, k: int, w: float, kappa_w: float, tol: float
) -> np.ndarray:
    """Event indicator per trial: withholding gain over honest play >= kappa * w.

    `revenues` has one row per trial and one column per withhold mask
    (column 0 = nothing withheld, the honest baseline).
    """
    masks = np.arange(2**k)
    burns = np.array([bin(m).count("1") for m in masks], dtype=np.float64) * w
    net = revenues - burns[None, :]
    gain = net.max(axis=1) - revenues[:, 0]
    return gain >= kappa_w - tol


def montecarlo_tail(
    m: int,
    k: int,
    w: Number,
    lam: Number,
    trials: int,
    rng: random.Random,
) -> TailEstimate:
    """Estimate P[withholding gain >= k * w] on a calibrated sandwich block.

    Samples honest and coalition seeds, enumerates every withhold subset
    through the real permutation derivation, and measures the coalition's
    best net revenue against honestly opening everything.  Raises
    TailBoundViolation when the estimate exceeds the closed-form bound by
    more than three standard errors.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if k < 0 or k > 12:
        raise ValueError("k must lie in [0, 12] for exhaustive enumeration")
    block = calibrate_sandwich(lam, m)
    w_f = float(w)
    lam_f = float(lam)
    tol = 1e-9 * lam_f

    rows = []
    for _ in range(trials):
        honest = _random_seed(rng)
        coalition = [_random_seed(rng) for _ in range(k)]
        rows.append(_lattice_orders(block, honest, coalition))
    orders = np.concatenate(rows, axis=0)
    revenues = _batch_revenues(block, orders).reshape(trials, 2**k)

    # With no controlled commitments the gain is identically zero, so the
    # probability of clearing any positive multiple of the reward is zero.
    hits = _tail_hits(revenues, k, w_f, max(k, 1) * w_f, tol)
    estimate = float(hits.mean())
    stderr = math.sqrt(estimate * (1.0 - estimate) / trials)
    bound = revenue_tail_bound(m, k, w_f, lam_f, k) if k >= 1 else 1.0
    result = TailEstimate(m, k, w_f, lam_f, trials, estimate, stderr, bound)
    if k >= 1 and not result.within_bound:
        raise TailBoundViolation(
            f"empirical {estimate:.5f} exceeds bound {bound:.5f} + 3se at m={m} k={k} w={w_f} lam={lam_f}"
        )
    return result


def tail_grid(
    ms: Sequence[int],
    ks: Sequence[int],
    ratios: Sequence[float],
    trials: int,
    seed: int,
    lam: float = 6.37,
) -> list[TailEstimate]:
    """Monte Carlo sweep over (m, k, lambda/w) sharing seeds across the grid.

    The same honest/coalition seed draws are reused for every k and ratio at
    a given m (common random numbers), so permutations are derived once per
    (m, trial, mask) and only the thresholds change.
    """
    k_max = max(ks)
    if k_max > 12:
        raise ValueError("k beyond 12 is not supported")
    rng = random.Random(seed)
    seeds = [
        (_random_seed(rng), [_random_seed(rng) for _ in range(k_max)]) for _ in range(trials)
    ]
    results = []
    for m in ms:
        block = calibrate_sandwich(lam, m)
        rows = [_lattice_orders(block, honest, coalition) for honest, coalition in seeds]
        revenues = _batch_revenues(block, np.concatenate(rows, axis=0)).reshape(
            trials, 2**k_max
        )
        for k in ks:
            # Masks touching only the first k coalition seeds form the k-lattice.
            cols = [mask for mask in range(2**k_max) if mask >> k == 0]
            sub = revenues[:, cols]
            for ratio in ratios:
                w = lam / ratio
                tol = 1e-9 * lam
                hits = _tail_hits(sub, k, w, k * w, tol)
                estimate = float(hits.mean())
                stderr = math.sqrt(estimate * (1.0 - estimate) / trials)
                bound = revenue_tail_bound(m, k, w, lam, k)
                results.append(TailEstimate(m, k, w, lam, trials, estimate, stderr, bound))
    return results


def withholding_gain_curve(
    ms: Sequence[int],
    k: int,
    ratio: float,
    trials: int,
    seed: int,
    lam: float = 6.37,
) -> dict[int, np.ndarray]:
    """Per-trial withholding gain (best net minus honest) for each m, paired by seed."""
    rng = random.Random(seed)
    seeds = [(_random_seed(rng), [_random_seed(rng) for _ in range(k)]) for _ in range(trials)]
    w = lam / ratio
    masks = np.arange(2**k)
    burns = np.array([bin(int(x)).count("1") for x in masks], dtype=np.float64) * w
    curves: dict[int, np.ndarray] = {}
    for m in ms:
        block = calibrate_sandwich(lam, m)
        rows = [_lattice_orders(block, honest, coalition) for honest, coalition in seeds]
        revenues = _batch_revenues(block, np.concatenate(rows, axis=0)).reshape(trials, 2**k)
        net = revenues - burns[None, :]
        curves[m] = net.max(axis=1) - revenues[:, 0]
    return curves


# -- case-study ingestion -------------------------------------------------------

DEFAULT_ETH_USD = 1570.0


@dataclass(frozen=True)
class SandwichDataset:
    """Per-attack profit records (USD) plus the conversion rate to ETH."""

    profits_usd: tuple[float, ...]
    eth_usd: float

    def __post_init__(self) -> None:
        if not self.profits_usd:
            raise ValueError("dataset must hold at least one record")
        if self.eth_usd <= 0:
            raise ValueError("eth_usd rate must be positive")

    @property
    def profits_eth(self) -> tuple[float, ...]:
        return tuple(sorted(p / self.eth_usd for p in self.profits_usd))

    def max_eth(self) -> float:
        return max(self.profits_usd) / self.eth_usd


def ingest_profit_csv(path: str, eth_usd: float = DEFAULT_ETH_USD) -> SandwichDataset:
    """Read one USD profit value per row; malformed rows are reported by line."""
    profits: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                value = float(row[0])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed profit value {row[0]!r}") from exc
            if value < 0:
                raise ValueError(f"{path}:{lineno}: profit must be non-negative")
            profits.append(value)
    if not profits:
        raise ValueError(f"{path}: no profit records found")
    return SandwichDataset(tuple(profits), eth_usd)


def percentile(dataset: SandwichDataset, p: Number) -> float:
    """Nearest-rank percentile of the ETH-denominated profits."""
    if not 0 < p <= 100:
        raise ValueError("percentile must lie in (0, 100]")
    values = dataset.profits_eth
    # Exact rank: float p like 99.97 must not creep past its true rank.
    p_exact = p if isinstance(p, Fraction) else Fraction(str(p))
    rank = math.ceil(p_exact * len(values) / 100)
    return values[max(rank, 1) - 1]


# -- probability grid -----------------------------------------------------------

def probability_grid(
    lambdas: Sequence[float],
    ks: Sequence[int],
    ms: Iterable[int],
    w: float,
    q: float = 0.0,
    n_leaders: int = 10,
    empirical: Optional[dict[tuple[int, int, float], TailEstimate]] = None,
) -> list[dict[str, object]]:
    """Rows of p_k_lambda over the (m, k, lambda) grid, CSV-ready."""
    rows: list[dict[str, object]] = []
    for lam in lambdas:
        for k in ks:
            for m in ms:
                p = p_k_lambda(m, k, w, lam, q, n_leaders)
                est = empirical.get((m, k, lam)) if empirical else None
                rows.append(
                    {
                        "m": m,
                        "k": k,
                        "lambda_eth": lam,
                        "w_eth": w,
                        "p_bound": p,
                        "p_empirical": est.estimate if est else "",
                        "ci95": est.ci95 if est else "",
                    }
                )
    return rows


GRID_FIELDS = ["m", "k", "lambda_eth", "w_eth", "p_bound", "p_empirical", "ci95"]


def write_grid_csv(rows: list[dict[str, object]], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=GRID_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
