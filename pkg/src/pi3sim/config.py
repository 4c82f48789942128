"""Scenario configuration: dataclasses, TOML parsing and serialization.

Rational parameters (amounts, reward shares, fees) are written as strings
like "3/1000" so configs round-trip exactly.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import ProtocolParams
from .execution import PoolState

STRATEGIES = ("honest", "biased", "chosen", "slip", "longslip")


def parse_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    raise ValueError(f"cannot interpret {value!r} as a rational")


def format_fraction(value: Fraction) -> str:
    return str(value)


@dataclass(frozen=True)
class NetworkConfig:
    n_parties: int = 5
    power: tuple[float, ...] = ()
    block_prob: float = 0.5
    rounds: int = 400
    delay_prob: float = 0.0  # adversarial scheduling: chance a recipient sees a block one round late

    def __post_init__(self) -> None:
        power = self.power or tuple(1.0 / self.n_parties for _ in range(self.n_parties))
        object.__setattr__(self, "power", tuple(power))
        if len(self.power) != self.n_parties:
            raise ValueError("power vector length must equal n_parties")
        if abs(sum(self.power) - 1.0) > 1e-9:
            raise ValueError("power vector must sum to 1")
        if not 0 <= self.delay_prob <= 1:
            raise ValueError("delay_prob must be a probability")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class WorkloadConfig:
    victim_rate: float = 0.15  # per-round chance an honest client submits a pool swap
    victim_amount: Fraction = Fraction(5000)
    transfer_rate: float = 0.3
    transfer_amount: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if not 0 <= self.victim_rate <= 1 or not 0 <= self.transfer_rate <= 1:
            raise ValueError("workload rates must be probabilities")
        if self.victim_amount <= 0 or self.transfer_amount <= 0:
            raise ValueError("workload amounts must be positive")


@dataclass(frozen=True)
class AdversaryConfig:
    strategy: str = "honest"
    parties: tuple[int, ...] = ()
    front_amount: Optional[Fraction] = None  # defaults to twice the victim amount
    coordination_cost: Fraction = Fraction(0)
    eps1: Fraction = Fraction(1, 50)
    eps2: Fraction = Fraction(1, 50)
    trial_budget: int = 2000

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.strategy != "honest" and not self.parties:
            raise ValueError("an attacking adversary needs at least one party")
        if self.trial_budget < 1:
            raise ValueError("trial_budget must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    pools: tuple[PoolState, ...] = (PoolState(Fraction(10**6), Fraction(10**6), Fraction(3, 1000)),)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    master_seed: int = 1

    def __post_init__(self) -> None:
        if not self.pools:
            raise ValueError("at least one pool is required")
        for pid in self.adversary.parties:
            if not 0 <= pid < self.network.n_parties:
                raise ValueError(f"adversary party {pid} out of range")


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    proto = data.get("protocol", {})
    protocol = ProtocolParams(
        n_leaders=proto.get("n_leaders", 10),
        silent_phase=proto.get("silent_phase", 3),
        loud_phase=proto.get("loud_phase", 3),
        confirm_depth=proto.get("confirm_depth", 6),
        chunks_per_tx=proto.get("chunks_per_tx", 1),
        seed_bits=proto.get("seed_bits", 256),
        miner_share=parse_fraction(proto.get("miner_share", "1/2")),
        block_reward=parse_fraction(proto.get("block_reward", "2")),
        txs_per_block=proto.get("txs_per_block", 8),
    )
    net = data.get("network", {})
    network = NetworkConfig(
        n_parties=net.get("n_parties", 5),
        power=tuple(net.get("power", ())),
        block_prob=net.get("block_prob", 0.5),
        rounds=net.get("rounds", 400),
        delay_prob=net.get("delay_prob", 0.0),
    )
    pools = tuple(
        PoolState(
            parse_fraction(p["x_reserve"]),
            parse_fraction(p["y_reserve"]),
            parse_fraction(p.get("fee", "0")),
        )
        for p in data.get("pools", [{"x_reserve": "1000000", "y_reserve": "1000000", "fee": "3/1000"}])
    )
    wl = data.get("workload", {})
    workload = WorkloadConfig(
        victim_rate=wl.get("victim_rate", 0.15),
        victim_amount=parse_fraction(wl.get("victim_amount", "5000")),
        transfer_rate=wl.get("transfer_rate", 0.3),
        transfer_amount=parse_fraction(wl.get("transfer_amount", "1")),
    )
    adv = data.get("adversary", {})
    adversary = AdversaryConfig(
        strategy=adv.get("strategy", "honest"),
        parties=tuple(adv.get("parties", ())),
        front_amount=parse_fraction(adv["front_amount"]) if "front_amount" in adv else None,
        coordination_cost=parse_fraction(adv.get("coordination_cost", "0")),
        eps1=parse_fraction(adv.get("eps1", "1/50")),
        eps2=parse_fraction(adv.get("eps2", "1/50")),
        trial_budget=adv.get("trial_budget", 2000),
    )
    return ScenarioConfig(
        protocol=protocol,
        network=network,
        pools=pools,
        workload=workload,
        adversary=adversary,
        master_seed=data.get("master_seed", 1),
    )


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    return {
        "master_seed": cfg.master_seed,
        "protocol": {
            "n_leaders": cfg.protocol.n_leaders,
            "silent_phase": cfg.protocol.silent_phase,
            "loud_phase": cfg.protocol.loud_phase,
            "confirm_depth": cfg.protocol.confirm_depth,
            "chunks_per_tx": cfg.protocol.chunks_per_tx,
            "seed_bits": cfg.protocol.seed_bits,
            "miner_share": format_fraction(cfg.protocol.miner_share),
            "block_reward": format_fraction(cfg.protocol.block_reward),
            "txs_per_block": cfg.protocol.txs_per_block,
        },
        "network": {
            "n_parties": cfg.network.n_parties,
            "power": list(cfg.network.power),
            "block_prob": cfg.network.block_prob,
            "rounds": cfg.network.rounds,
            "delay_prob": cfg.network.delay_prob,
        },
        "pools": [
            {
                "x_reserve": format_fraction(p.x_reserve),
                "y_reserve": format_fraction(p.y_reserve),
                "fee": format_fraction(p.fee),
            }
            for p in cfg.pools
        ],
        "workload": {
            "victim_rate": cfg.workload.victim_rate,
            "victim_amount": format_fraction(cfg.workload.victim_amount),
            "transfer_rate": cfg.workload.transfer_rate,
            "transfer_amount": format_fraction(cfg.workload.transfer_amount),
        },
        "adversary": {
            "strategy": cfg.adversary.strategy,
            "parties": list(cfg.adversary.parties),
            **(
                {"front_amount": format_fraction(cfg.adversary.front_amount)}
                if cfg.adversary.front_amount is not None
                else {}
            ),
            "coordination_cost": format_fraction(cfg.adversary.coordination_cost),
            "eps1": format_fraction(cfg.adversary.eps1),
            "eps2": format_fraction(cfg.adversary.eps2),
            "trial_budget": cfg.adversary.trial_budget,
        },
    }


def load_config(path: str) -> ScenarioConfig:
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


def loads_config(text: str) -> ScenarioConfig:
    return config_from_dict(tomllib.loads(text))


# -- minimal TOML emission (scalars, lists, tables, arrays of tables) ----------

def _toml_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)} to TOML")


def dumps_config(cfg: ScenarioConfig) -> str:
    data = config_to_dict(cfg)
    lines: list[str] = []
    for key, value in data.items():
        if not isinstance(value, (dict, list)) or isinstance(value, list) and not all(
            isinstance(v, dict) for v in value
        ):
            lines.append(f"{key} = {_toml_scalar(value)}")
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append("")
            lines.append(f"[{key}]")
            for k, v in value.items():
                lines.append(f"{k} = {_toml_scalar(v)}")
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            for item in value:
                lines.append("")
                lines.append(f"[[{key}]]")
                for k, v in item.items():
                    lines.append(f"{k} = {_toml_scalar(v)}")
    return "\n".join(lines) + "\n"


def dump_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_config(cfg))
