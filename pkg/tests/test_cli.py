import csv
import json

import numpy as np
import pytest

from airdlr import cli
from airdlr.errors import ContractViolation


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_db_to_linear():
    assert np.isclose(cli.db_to_linear(0.0), 1.0)
    assert np.isclose(cli.db_to_linear(10.0), 10.0)
    assert np.isclose(cli.db_to_linear(-3.0), 10 ** -0.3)


def test_parse_int_list():
    assert cli.parse_int_list("4") == [4]
    assert cli.parse_int_list("2,4,8") == [2, 4, 8]
    assert cli.parse_int_list("2:6") == [2, 3, 4, 5, 6]
    assert cli.parse_int_list("2:10:4") == [2, 6, 10]
    assert cli.parse_int_list([1, 2]) == [1, 2]
    with pytest.raises(ContractViolation):
        cli.parse_int_list("5:2")
    with pytest.raises(ContractViolation):
        cli.parse_int_list("")


def test_sweep_config_contracts():
    with pytest.raises(ContractViolation):
        cli.SweepConfig(scenario="MISO", k_values=[])
    with pytest.raises(ContractViolation):
        cli.SweepConfig(scenario="MISO", k_values=[2], draws=0)
    with pytest.raises(ContractViolation):
        cli.SweepConfig(scenario="MISO", k_values=[2], methods=("sgd",))


def test_solve_prints_summary(capsys):
    assert cli.main(["solve", "--scenario", "MISO", "--k", "3", "--nd", "2"]) == 0
    out = capsys.readouterr().out
    assert "scenario=MISO" in out and "mse/sigma2=" in out


def test_contract_violation_exit_code(capsys):
    assert cli.main(["solve", "--scenario", "MISO", "--rmin", "2.0"]) == 1
    assert "error:" in capsys.readouterr().err


def test_sweep_rows_and_aggregate(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = cli.main([
        "sweep-mse", "--scenario", "MISO", "--nd", "3", "--k", "2:4",
        "--draws", "2", "--out", str(out),
    ])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == cli.ROW_COLUMNS
    body = rows[1:]
    assert len(body) == 3 * 2 * 2  # K values x draws x methods
    for row in body:
        assert row[-1] == "ok"
        for cell in row[8:11]:
            assert np.isfinite(float(cell))
    # paired channels: dlr and fixed at the same point share the bound column
    by_key = {}
    for row in body:
        by_key.setdefault((row[1], row[7]), []).append(row)
    for pair in by_key.values():
        assert len(pair) == 2
        assert pair[0][9] == pair[1][9]  # identical mse_lb on shared channels
    agg = read_csv(tmp_path / "sweep_agg.csv")
    assert agg[0] == cli.AGG_COLUMNS
    assert len(agg) == 1 + 3 * 2


def test_sweep_deterministic_modulo_seconds(tmp_path):
    args = ["sweep-mse", "--scenario", "MISO", "--nd", "2", "--k", "3",
            "--draws", "2", "--seed", "4"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    strip = lambda rows: [r[:11] + r[12:] for r in rows]
    assert strip(read_csv(out1)) == strip(read_csv(out2))


def test_bars_sorted_and_monotone(tmp_path):
    out = tmp_path / "bars.csv"
    assert cli.main([
        "bars", "--scenario", "MISO", "--nd", "8", "--k", "10",
        "--seed", "3", "--out", str(out),
    ]) == 0
    rows = read_csv(out)
    assert rows[0] == ["device", "channel_gain", "dlr_value"]
    gains = [float(r[1]) for r in rows[1:]]
    ratios = [float(r[2]) for r in rows[1:]]
    assert gains == sorted(gains)
    for a, b in zip(ratios, ratios[1:]):
        assert b <= a + 1e-9  # DLR non-increasing in channel gain


def test_bars_equal_gains_all_one(tmp_path, monkeypatch):
    # equal channels force every ratio to 1
    import airdlr.cli as cli_mod
    from airdlr.channel import ChannelSet, Scenario, MISO

    def fake_draw(scenario, k, seed):
        h = np.array([1.0 + 0j, 1.0 + 0j])
        return ChannelSet(scenario=scenario, channels=[h.copy() for _ in range(k)])

    monkeypatch.setattr(cli_mod, "draw_channels", fake_draw)
    out = tmp_path / "bars.csv"
    assert cli.main([
        "bars", "--scenario", "MISO", "--nd", "2", "--k", "4", "--out", str(out),
    ]) == 0
    ratios = [float(r[2]) for r in read_csv(out)[1:]]
    assert np.allclose(ratios, 1.0, atol=1e-9)


def test_asymptotic_csv(tmp_path):
    out = tmp_path / "asym.csv"
    assert cli.main([
        "asymptotic", "--scenario", "SIMO", "--k", "4", "--antennas", "32,64",
        "--draws", "2", "--out", str(out),
    ]) == 0
    rows = read_csv(out)
    assert rows[0][:4] == ["scenario", "K", "antennas", "draw"]
    assert len(rows) == 1 + 2 * 2
    for row in rows[1:]:
        assert np.isfinite(float(row[4]))


def test_train_csv_paired_methods(tmp_path):
    out = tmp_path / "train.csv"
    assert cli.main([
        "train", "--task", "synthetic", "--scenario", "SISO", "--k", "4",
        "--rounds", "3", "--solver", "both", "--sigma2-db=-inf",
        "--out", str(out),
    ]) == 0
    rows = read_csv(out)
    assert rows[0] == ["method", "round", "loss", "acc", "e_sq", "retx"]
    methods = {r[0] for r in rows[1:]}
    assert methods == {"dlr", "fixed"}
    assert len(rows) == 1 + 2 * 3


def test_train_loss_decreases(tmp_path):
    out = tmp_path / "train.csv"
    assert cli.main([
        "train", "--task", "synthetic", "--scenario", "SISO", "--k", "5",
        "--rounds", "10", "--mu", "0.5", "--sigma2-db=-inf", "--out", str(out),
    ]) == 0
    losses = [float(r[2]) for r in read_csv(out)[1:]]
    drops = sum(1 for a, b in zip(losses, losses[1:]) if b < a)
    assert drops >= 8


def test_config_file_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"draws": 2, "seed": 6, "nd": 2}))
    out = tmp_path / "s.csv"
    assert cli.main([
        "sweep-mse", "--config", str(cfg), "--scenario", "MISO", "--k", "2",
        "--out", str(out),
    ]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 + 2 * 2  # draws taken from the config file
    assert rows[1][2] == "2"       # nd from the config file
