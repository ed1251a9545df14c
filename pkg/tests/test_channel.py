import numpy as np
import pytest

from airdlr.channel import (
    MIMO,
    MISO,
    SIMO,
    SISO,
    ChannelSet,
    Scenario,
    draw_channels,
    load_channels_csv,
    save_channels_csv,
)
from airdlr.errors import ContractViolation


def test_scenario_invariants():
    assert Scenario(SISO).n_d == 1
    assert Scenario(MISO, n_d=4).multi_receive is False
    assert Scenario(SIMO, n_t=3).multi_receive is True
    with pytest.raises(ContractViolation):
        Scenario("TDD")
    with pytest.raises(ContractViolation):
        Scenario(SISO, n_d=2)
    with pytest.raises(ContractViolation):
        Scenario(MISO, n_t=2)
    with pytest.raises(ContractViolation):
        Scenario(SIMO, n_d=2)
    with pytest.raises(ContractViolation):
        Scenario(MIMO, n_d=0)


def test_shapes_per_scenario():
    assert np.asarray(draw_channels(Scenario(SISO), 3, 0).channels[0]).shape == ()
    assert draw_channels(Scenario(MISO, n_d=4), 3, 0).channels[0].shape == (4,)
    assert draw_channels(Scenario(SIMO, n_t=5), 3, 0).channels[0].shape == (5,)
    assert draw_channels(Scenario(MIMO, n_d=3, n_t=2), 3, 0).channels[0].shape == (2, 3)


def test_determinism_and_seed_mixing():
    scen = Scenario(MISO, n_d=3)
    a = draw_channels(scen, 4, 7)
    b = draw_channels(scen, 4, 7)
    for ha, hb in zip(a.channels, b.channels):
        assert np.array_equal(ha, hb)
    # adding devices never perturbs earlier devices' draws
    c = draw_channels(scen, 6, 7)
    for ha, hc in zip(a.channels, c.channels[:4]):
        assert np.array_equal(ha, hc)
    d = draw_channels(scen, 4, 8)
    assert not np.array_equal(a.channels[0], d.channels[0])


def test_unit_variance_monte_carlo():
    # E|h_ij|^2 = 1 per complex entry, E||h||^2 = antenna count.
    scen = Scenario(MISO, n_d=8)
    draws = [draw_channels(scen, 1, seed).channels[0] for seed in range(4000)]
    stacked = np.stack(draws)
    assert abs(np.mean(np.abs(stacked) ** 2) - 1.0) < 0.05
    assert abs(np.mean(stacked.real)) < 0.05
    assert abs(np.mean(stacked.imag)) < 0.05
    # real and imaginary parts carry half the power each
    assert abs(np.mean(stacked.real ** 2) - 0.5) < 0.05


def test_channel_set_validation():
    scen = Scenario(MISO, n_d=2)
    with pytest.raises(ContractViolation):
        ChannelSet(scenario=scen, channels=[])
    with pytest.raises(ContractViolation):
        ChannelSet(scenario=scen, channels=[np.ones(3, dtype=complex)])
    with pytest.raises(ContractViolation):
        ChannelSet(scenario=scen, channels=[np.array([np.nan, 1.0 + 0j])])


def test_csv_round_trip(tmp_path):
    for scen in (Scenario(SISO), Scenario(MISO, n_d=3),
                 Scenario(MIMO, n_d=2, n_t=3)):
        original = draw_channels(scen, 5, 11)
        path = tmp_path / f"{scen.tag}.csv"
        save_channels_csv(original, path)
        loaded = load_channels_csv(path, scen)
        assert loaded.k == original.k
        for ha, hb in zip(original.channels, loaded.channels):
            assert np.allclose(np.asarray(ha), np.asarray(hb))
