#!/usr/bin/env python3
"""Regenerate the bundled sandwich-profit sample (USD, one value per row).

The distribution is heavy-tailed like observed MEV extraction data: most
attacks net at most a dollar, a handful reach five or six figures.  Two
anchor rows are pinned so the case-study queries land on round numbers at
the default 1570 USD/ETH rate: the 99.97th nearest-rank percentile sits at
6.37 ETH and the maximum at about 109 ETH.
"""
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "pi3sim" / "data" / "sandwich_profits_usd.csv"

ETH_USD = 1570.0
N = 10_000


def log_uniform(rng: random.Random, lo: float, hi: float) -> float:
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def main() -> None:
    rng = random.Random(20221031)
    values: list[float] = []
    for _ in range(6000):
        values.append(round(log_uniform(rng, 0.01, 1.0), 2))
    for _ in range(2500):
        values.append(round(log_uniform(rng, 1.0, 100.0), 2))
    for _ in range(1000):
        values.append(round(log_uniform(rng, 100.0, 1000.0), 2))
    for _ in range(496):
        values.append(round(log_uniform(rng, 1000.0, 9800.0), 2))
    values.append(round(6.37 * ETH_USD, 2))  # the 99.97th percentile anchor
    values.extend([25000.00, 80000.00])
    values.append(170902.35)  # the top attack, about 109 ETH
    assert len(values) == N
    rng.shuffle(values)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w") as fh:
        for v in values:
            fh.write(f"{v:.2f}\n")
    print(f"wrote {N} records to {OUT}")


if __name__ == "__main__":
    main()
