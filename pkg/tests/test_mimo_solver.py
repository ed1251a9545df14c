import numpy as np
import pytest

from airdlr.dlr_miso import DlrBounds, MisoInstance, solve_dlr_miso
from airdlr.errors import ContractViolation, DegenerateChannelError, InfeasibleError
from airdlr.mimo_solver import (
    MimoInstance,
    feasibility_check,
    mse_lower_bound_mimo,
    solve_beamforming,
    solve_dlr_given_m,
    solve_joint,
    tau_interval,
)


def random_instance(rng, k, n_t, n_d, sigma2=1.0):
    chans = [
        (rng.standard_normal((n_t, n_d)) + 1j * rng.standard_normal((n_t, n_d)))
        / np.sqrt(2.0)
        for _ in range(k)
    ]
    return MimoInstance(chans, np.ones(k), sigma2)


def per_device_levels(inst, r, m):
    """tau_k(m) = 1 / (K^2 P_k r_k^2 m^H H_k H_k^H m), computed directly."""
    m = m / np.linalg.norm(m)
    out = []
    for i, h in enumerate(inst.channels):
        quad = float(np.real(np.vdot(m, (h @ h.conj().T) @ m)))
        out.append(1.0 / (inst.k ** 2 * inst.p[i] * r[i] ** 2 * quad))
    return np.array(out)


def test_instance_contracts():
    rng = np.random.default_rng(0)
    with pytest.raises(ContractViolation):
        MimoInstance([np.ones((2, 2), complex)], np.ones(2), 1.0)
    with pytest.raises(DegenerateChannelError):
        MimoInstance([np.zeros((2, 2), complex)], np.ones(1), 1.0)
    with pytest.raises(ContractViolation):
        MimoInstance(
            [np.ones((2, 2), complex), np.ones((2, 3), complex)], np.ones(2), 1.0
        )
    inst = random_instance(rng, 3, 2, 2)
    assert inst.n_t == 2 and inst.n_d == 2 and inst.k == 3


def test_lemma1_containment():
    # Rayleigh-Ritz: every unit m yields per-device levels inside the interval.
    rng = np.random.default_rng(1)
    for _ in range(5):
        inst = random_instance(rng, 4, 3, 2)
        r = rng.uniform(0.85, 1.2, 4)
        interval = tau_interval(inst, r)
        for _ in range(200):
            m = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            levels = per_device_levels(inst, r, m)
            assert np.all(levels >= interval.per_device_low - 1e-9)
            assert np.all(levels <= interval.per_device_up + 1e-9)
        assert interval.tau_low == interval.per_device_low.min()


def test_tau_interval_unbounded_when_rank_deficient():
    rng = np.random.default_rng(2)
    # n_t > n_d makes H_k H_k^H singular: upper end is unbounded
    inst = random_instance(rng, 3, 3, 1)
    interval = tau_interval(inst, np.ones(3))
    assert np.isinf(interval.tau_up)


def test_feasibility_certificate_is_genuine():
    rng = np.random.default_rng(3)
    inst = random_instance(rng, 4, 2, 2)
    r = np.ones(4)
    interval = tau_interval(inst, r)
    res = feasibility_check(inst, r, interval.tau_up)
    assert res.feasible
    levels = per_device_levels(inst, r, res.m)
    assert levels.max() <= interval.tau_up * (1.0 + 1e-5)
    # far below the interval no certificate can exist
    res_low = feasibility_check(inst, r, 0.5 * interval.tau_low)
    assert not res_low.feasible
    with pytest.raises(ContractViolation):
        feasibility_check(inst, r, 0.0)


def test_bisection_brackets_and_certifies():
    rng = np.random.default_rng(4)
    for trial in range(5):
        inst = random_instance(rng, int(rng.integers(2, 6)), 2, 2)
        r = rng.uniform(0.85, 1.2, inst.k)
        interval = tau_interval(inst, r)
        delta = 1e-4 * interval.tau_low
        m, tau, tau_unc = solve_beamforming(inst, r, delta=delta)
        assert tau_unc < tau <= tau_unc + delta + 1e-15
        assert tau >= interval.tau_low - 1e-12
        # returned m actually achieves the level
        levels = per_device_levels(inst, r, m)
        assert levels.max() <= tau * (1.0 + 1e-5)


def test_angular_grid_oracle_nt2():
    # For N_t = 2 the unit sphere is two angles; exhaustive search bounds
    # the solver's tau from above within the grid resolution.
    rng = np.random.default_rng(5)
    thetas = np.arange(0.0, np.pi / 2 + 0.01, 0.01)
    phis = np.arange(0.0, 2 * np.pi, 0.01)
    sphere = np.stack(
        [
            np.repeat(np.cos(thetas), phis.size),
            (np.sin(thetas)[:, None] * np.exp(1j * phis)[None, :]).ravel(),
        ],
        axis=1,
    )
    for trial in range(10):
        k = int(rng.integers(2, 6))
        inst = random_instance(rng, k, 2, 2)
        r = rng.uniform(0.85, 1.2, k)
        _, tau, _ = solve_beamforming(inst, r)
        denom = k ** 2 * inst.p * r ** 2
        quads = np.stack(
            [
                np.einsum("di,ij,dj->d", sphere.conj(), g, sphere).real
                for g in inst.gram_matrices()
            ],
            axis=1,
        )
        oracle = (1.0 / (denom[None, :] * quads)).max(axis=1).min()
        assert tau <= oracle * 1.02


def test_solve_dlr_given_m_reduces_to_miso():
    rng = np.random.default_rng(6)
    inst = random_instance(rng, 4, 3, 2)
    m = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    m /= np.linalg.norm(m)
    sol = solve_dlr_given_m(inst, m)
    equivalent = [m.conj() @ h for h in inst.channels]
    direct = solve_dlr_miso(MisoInstance(equivalent, inst.p, inst.sigma2))
    assert np.allclose(sol.l, direct.l)
    assert np.isclose(sol.objective, direct.objective)
    with pytest.raises(ContractViolation):
        solve_dlr_given_m(inst, 2.0 * m)


def test_joint_monotone_and_beats_fixed():
    rng = np.random.default_rng(7)
    for trial in range(4):
        inst = random_instance(rng, int(rng.integers(2, 6)), 3, 3)
        dlr = solve_joint(inst, DlrBounds(), seed=trial)
        fixed = solve_joint(inst, DlrBounds(1.0, 1.0), seed=trial)
        hist = dlr.history
        assert all(b <= a + 1e-8 for a, b in zip(hist, hist[1:]))
        assert dlr.tau <= fixed.tau + 1e-9
        assert dlr.mse >= mse_lower_bound_mimo(inst, dlr.m) - 1e-9
        assert abs(np.linalg.norm(dlr.m) - 1.0) < 1e-9
        assert np.array_equal(fixed.dlr.r, np.ones(inst.k))


def test_joint_determinism():
    rng = np.random.default_rng(8)
    inst = random_instance(rng, 3, 2, 2)
    a = solve_joint(inst, seed=5)
    b = solve_joint(inst, seed=5)
    assert a.tau == b.tau
    assert np.array_equal(a.m, b.m)


def test_joint_contracts():
    rng = np.random.default_rng(9)
    inst = random_instance(rng, 2, 2, 2)
    with pytest.raises(ContractViolation):
        solve_joint(inst, max_iter=0)
    with pytest.raises(ContractViolation):
        solve_joint(inst, restarts=0)


def test_mse_lower_bound_contract():
    rng = np.random.default_rng(10)
    inst = random_instance(rng, 3, 2, 2)
    with pytest.raises(ContractViolation):
        mse_lower_bound_mimo(inst, np.array([1.0, 1.0]))
