"""Command-line surface: subcommands, exit codes, config round-trips."""
import json
import os
from fractions import Fraction

import pytest

from pi3sim.cli import main
from pi3sim.config import (
    AdversaryConfig,
    ScenarioConfig,
    dumps_config,
    load_config,
    loads_config,
)

F = Fraction

TINY_SCENARIO = """
master_seed = 5

[protocol]
n_leaders = 2
silent_phase = 1
loud_phase = 3
confirm_depth = 2
chunks_per_tx = 1
txs_per_block = 4
miner_share = "1/2"
block_reward = "1/100"

[network]
n_parties = 4
power = [0.25, 0.25, 0.25, 0.25]
block_prob = 0.5
rounds = 140

[[pools]]
x_reserve = "1000000"
y_reserve = "1000000"
fee = "0"

[workload]
victim_rate = 0.15
victim_amount = "20000"
transfer_rate = 0.2
transfer_amount = "1"

[adversary]
strategy = "honest"
parties = []
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "scenario.toml"
    path.write_text(TINY_SCENARIO)
    return str(path)


class TestRunCommand:
    def test_honest_run_exit_zero(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["run", tiny_config, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert all(report["assertions"].values())
        assert report["rewards"]["burned"] == "0"
        assert report["adversary"]["revenue_x"] == 0.0

    def test_byte_identical_reports(self, tiny_config, tmp_path):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        main(["run", tiny_config, "--out", str(out1)])
        main(["run", tiny_config, "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_env_seed_override(self, tiny_config, tmp_path, monkeypatch):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        main(["run", tiny_config, "--out", str(out1)])
        monkeypatch.setenv("PI3_SEED", "777")
        main(["run", tiny_config, "--out", str(out2)])
        r1, r2 = json.loads(out1.read_text()), json.loads(out2.read_text())
        assert r1["config_seed"] == 5 and r2["config_seed"] == 777

    def test_bad_config_exit_two(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[network]\nn_parties = 3\npower = [0.9, 0.9, 0.9]\n")
        assert main(["run", str(path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file_exit_two(self, capsys):
        assert main(["run", "/nonexistent/file.toml"]) == 2


class TestBoundCommand:
    def test_reference_values(self, capsys):
        assert main(["bound", "--m", "10", "--k", "1", "--lambda", "6.37", "--w", "2"]) == 0
        out = capsys.readouterr().out
        assert "p_k_lambda = 0.003745" in out

    def test_m2_value(self, capsys):
        main(["bound", "--m", "2", "--k", "1", "--lambda", "6.37", "--w", "2"])
        assert "p_k_lambda = 0.488" in capsys.readouterr().out

    def test_tiny_lambda_vanishes(self, capsys):
        main(["bound", "--m", "10", "--k", "1", "--lambda", "0.000001", "--w", "2"])
        assert "p_k_lambda = 0.000000" in capsys.readouterr().out

    def test_epsilon_with_capital_lambda(self, capsys):
        main(
            [
                "bound", "--m", "10", "--k", "1", "--lambda", "6.37", "--w", "2",
                "--leaders", "10", "--Lambda", "109",
            ]
        )
        out = capsys.readouterr().out
        assert "epsilon = 0.408249" in out


class TestGridCommand:
    def test_writes_both_tables(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        assert main(["grid", "--out", str(out), "--m-max", "40"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "m,k,lambda_eth,w_eth,p_bound,p_empirical,ci95"
        assert len(lines) == 1 + 2 * 4 * 40  # two lambdas, four ks, forty ms
        for line in lines[1:]:
            p = float(line.split(",")[4])
            assert 0 <= p <= 1


class TestMonteCarloCommand:
    def test_safe_point_within_bound(self, capsys):
        code = main(
            [
                "montecarlo", "--m", "1", "--k", "1", "--lambda", "6.37", "--w", "6.37",
                "--trials", "2000", "--seed", "3",
            ]
        )
        assert code == 0
        assert "within bound: True" in capsys.readouterr().out

    def test_violating_point_nonzero_exit(self, capsys):
        code = main(
            [
                "montecarlo", "--m", "10", "--k", "1", "--lambda", "6.37", "--w", "2.12",
                "--trials", "3000", "--seed", "3",
            ]
        )
        assert code == 1
        assert "BOUND VIOLATION" in capsys.readouterr().err


class TestCaseStudyCommand:
    def test_bundled_fixture(self, capsys):
        assert main(["casestudy"]) == 0
        out = capsys.readouterr().out
        assert "p99.97 = 6.37 ETH" in out
        assert "max    = 108.86 ETH" in out

    def test_custom_rate(self, tmp_path, capsys):
        path = tmp_path / "p.csv"
        path.write_text("100\n200\n")
        assert main(["casestudy", str(path), "--rate", "100"]) == 0
        assert "max    = 2.00 ETH" in capsys.readouterr().out

    def test_malformed_csv_exit_two(self, tmp_path, capsys):
        path = tmp_path / "p.csv"
        path.write_text("xyz\n")
        assert main(["casestudy", str(path)]) == 2


class TestOverheadCommand:
    def test_ten_leaders(self, capsys):
        assert main(["overhead", "--leaders", "10"]) == 0
        out = capsys.readouterr().out
        assert "total_bits = 7240" in out
        assert "commitment_bits = 256" in out
        assert "opening_bits = 468" in out


class TestConfigRoundTrip:
    def test_parse_serialize_parse_identity(self, tiny_config):
        cfg = load_config(tiny_config)
        again = loads_config(dumps_config(cfg))
        assert cfg == again

    def test_round_trip_with_adversary(self):
        cfg = ScenarioConfig(
            adversary=AdversaryConfig(
                strategy="biased", parties=(0, 1), front_amount=F(3, 7), eps1=F(2, 99)
            )
        )
        assert loads_config(dumps_config(cfg)) == cfg

    def test_bundled_scenarios_parse(self):
        for name in ("scenarios/honest.toml", "scenarios/biased.toml"):
            cfg = load_config(name)
            assert cfg.network.rounds > 0
