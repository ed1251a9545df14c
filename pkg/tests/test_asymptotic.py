import numpy as np
import pytest

from airdlr.asymptotic import (
    MIMO_ND,
    MIMO_NT,
    MISO_ND,
    SIMO_NT,
    closed_form_beamformer,
    theoretical_mse,
)
from airdlr.channel import MIMO, MISO, SIMO, Scenario, draw_channels
from airdlr.dlr_miso import MisoInstance, solve_dlr_miso
from airdlr.errors import ContractViolation
from airdlr.mimo_solver import MimoInstance, solve_dlr_given_m


def test_theoretical_values():
    assert np.isclose(theoretical_mse(MISO_ND, 4, 1.0, 2.0, n_d=8).mse,
                      2.0 / (16 * 8))
    assert np.isclose(theoretical_mse(SIMO_NT, 4, 2.0, 1.0, n_t=16).mse,
                      1.0 / (2.0 * 4 * 16))
    assert np.isclose(theoretical_mse(MIMO_ND, 3, 1.0, 1.0, n_d=4).mse,
                      1.0 / (9 * 4))
    assert np.isclose(theoretical_mse(MIMO_NT, 3, 1.0, 1.0, n_t=4).mse,
                      1.0 / (3 * 4))
    assert theoretical_mse(MISO_ND, 2, 1.0, 1.0).r_limit == 1.0
    with pytest.raises(ContractViolation):
        theoretical_mse("bogus", 2, 1.0, 1.0)
    with pytest.raises(ContractViolation):
        theoretical_mse(MISO_ND, 0, 1.0, 1.0)


def test_closed_form_beamformer_simo():
    chans = draw_channels(Scenario(SIMO, n_t=6), 4, 0)
    m = closed_form_beamformer(chans)
    assert abs(np.linalg.norm(m) - 1.0) < 1e-12
    expect = np.sum([h / np.linalg.norm(h) for h in chans.channels], axis=0)
    assert np.allclose(m, expect / np.linalg.norm(expect))


def test_closed_form_beamformer_mimo():
    chans = draw_channels(Scenario(MIMO, n_d=2, n_t=4), 3, 1)
    m = closed_form_beamformer(chans)
    assert abs(np.linalg.norm(m) - 1.0) < 1e-12
    # combiner correlates with every device's dominant receive direction
    for h in chans.channels:
        gram = h @ h.conj().T
        top = np.linalg.eigvalsh(gram)[-1]
        assert np.real(np.vdot(m, gram @ m)) > 0.05 * top


def test_closed_form_requires_receive_array():
    chans = draw_channels(Scenario(MISO, n_d=4), 3, 0)
    with pytest.raises(ContractViolation):
        closed_form_beamformer(chans)


def test_miso_limit_monte_carlo():
    # with many transmit antennas the gains concentrate, ratios approach 1
    # and the solved MSE approaches sigma^2/(P K^2 N_d)
    k, n_d = 4, 256
    theory = theoretical_mse(MISO_ND, k, 1.0, 1.0, n_d=n_d).mse
    values, ratio_gap = [], []
    for seed in range(8):
        chans = draw_channels(Scenario(MISO, n_d=n_d), k, seed)
        sol = solve_dlr_miso(MisoInstance(list(chans.channels), np.ones(k), 1.0))
        values.append(sol.mse)
        ratio_gap.append(np.mean(np.abs(sol.r - 1.0)))
    assert abs(np.mean(values) - theory) <= 0.1 * theory
    assert np.mean(ratio_gap) <= 0.05


def test_simo_limit_monte_carlo():
    k, n_t = 4, 256
    theory = theoretical_mse(SIMO_NT, k, 1.0, 1.0, n_t=n_t).mse
    values = []
    for seed in range(8):
        chans = draw_channels(Scenario(SIMO, n_t=n_t), k, seed)
        m = closed_form_beamformer(chans)
        mats = [np.asarray(h).reshape(n_t, 1) for h in chans.channels]
        sol = solve_dlr_given_m(MimoInstance(mats, np.ones(k), 1.0), m)
        values.append(sol.mse)
    assert abs(np.mean(values) - theory) <= 0.1 * theory
