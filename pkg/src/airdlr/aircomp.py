"""Over-the-air aggregation model.

Effective per-device gains, the superposed received signal, the aggregate
error, its residual MSE and the retransmission probability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import MIMO, MISO, SIMO, SISO, ChannelSet, Scenario
from .errors import ContractViolation

POWER_SLACK = 1e-9       # allowed overshoot of ||b_k||^2 over P_k
UNIT_NORM_TOL = 1e-9     # ||m|| = 1 check


@dataclass
class SystemModel:
    scenario: Scenario
    p: np.ndarray          # per-device max transmit power, linear watts
    sigma2: float          # noise power, linear
    a: float = 1.0         # retransmission modulation parameter

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p <= 0):
            raise ContractViolation("transmit powers must be positive")
        if self.sigma2 < 0:
            raise ContractViolation("noise power must be non-negative")
        if self.a <= 0:
            raise ContractViolation("retransmission parameter must be positive")

    @property
    def k(self) -> int:
        return self.p.shape[0]


@dataclass
class TransmitConfig:
    """Transmit coefficients, optional receive beamformer, scaling factor."""

    b: list                          # per-device scalar or vector coefficient
    eta: float
    m: Optional[np.ndarray] = None   # unit-norm combiner when n_t > 1
    p: Optional[np.ndarray] = None   # power budgets, checked when given

    def __post_init__(self):
        if self.eta <= 0:
            raise ContractViolation("scaling factor must be positive")
        if self.m is not None:
            self.m = np.asarray(self.m, dtype=np.complex128).reshape(-1)
            if abs(np.linalg.norm(self.m) - 1.0) > UNIT_NORM_TOL:
                raise ContractViolation("receive beamformer must be unit-norm")
        if self.p is not None:
            for bk, pk in zip(self.b, np.asarray(self.p, dtype=float)):
                if np.sum(np.abs(np.asarray(bk)) ** 2) > pk + POWER_SLACK:
                    raise ContractViolation("transmit power budget exceeded")


def effective_gains(channels: ChannelSet, cfg: TransmitConfig) -> np.ndarray:
    """Complex gain A_k seen by each device's symbol after combining."""
    scenario = channels.scenario
    if scenario.multi_receive and cfg.m is None:
        raise ContractViolation("multi-antenna receiver needs a beamformer")
    if not scenario.multi_receive and cfg.m is not None:
        raise ContractViolation("beamformer given for a single-antenna receiver")
    gains = np.empty(channels.k, dtype=np.complex128)
    for i, (h, b) in enumerate(zip(channels.channels, cfg.b)):
        if scenario.tag == SISO:
            gains[i] = complex(h) * complex(b)
        elif scenario.tag == MISO:
            b = np.asarray(b, dtype=np.complex128).reshape(-1)
            h = np.asarray(h, dtype=np.complex128).reshape(-1)
            if h.shape != b.shape:
                raise ContractViolation("channel/coefficient shape mismatch")
            gains[i] = h @ b
        elif scenario.tag == SIMO:
            h = np.asarray(h, dtype=np.complex128).reshape(-1)
            gains[i] = np.vdot(cfg.m, h) * complex(b)
        else:  # MIMO
            h = np.asarray(h, dtype=np.complex128)
            b = np.asarray(b, dtype=np.complex128).reshape(-1)
            if h.shape != (cfg.m.shape[0], b.shape[0]):
                raise ContractViolation("channel/coefficient shape mismatch")
            gains[i] = cfg.m.conj() @ h @ b
    return gains


def aggregate(symbols, gains, eta: float, noise_sample: complex) -> complex:
    """Received estimate y = sqrt(eta) * (sum_k A_k s_k + B)."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    gains = np.asarray(gains, dtype=np.complex128)
    if symbols.shape != gains.shape:
        raise ContractViolation("symbols and gains must have the same length")
    if eta <= 0:
        raise ContractViolation("scaling factor must be positive")
    return complex(np.sqrt(eta) * (gains @ symbols + noise_sample))


def aggregate_error(symbols, gains, eta: float, noise_sample: complex) -> complex:
    """e = sum_k (1/K - sqrt(eta) A_k) s_k - sqrt(eta) B."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    gains = np.asarray(gains, dtype=np.complex128)
    k = symbols.shape[0]
    root = np.sqrt(eta)
    return complex((1.0 / k - root * gains) @ symbols - root * noise_sample)


def channel_error_term(w: complex, g, mu: float, r, eta: float, gains) -> complex:
    """Fading-induced part of the error; zero when the cancellation
    conditions sqrt(eta)*sum A_k = 1 and r_k = 1/(K sqrt(eta) A_k) hold."""
    g = np.asarray(g, dtype=np.complex128)
    gains = np.asarray(gains, dtype=np.complex128)
    r = np.asarray(r, dtype=float)
    k = gains.shape[0]
    root = np.sqrt(eta)
    first = (1.0 - root * np.sum(gains)) * w
    second = np.sum((root * gains * (r * mu) - mu / k) * g)
    return complex(first + second)


def mse(system: SystemModel, cfg: TransmitConfig) -> float:
    """Residual noise MSE: eta*sigma^2, times ||m||^2 when combining."""
    if cfg.m is not None:
        return float(system.sigma2 * np.linalg.norm(cfg.m) ** 2 * cfg.eta)
    return float(system.sigma2 * cfg.eta)


def retransmission_probability(e_sq: float, p_des: float, a: float) -> float:
    """P = 1 - exp(-a * ||e||^2 / p_des), in [0, 1)."""
    if e_sq < 0:
        raise ContractViolation("error energy must be non-negative")
    if p_des <= 0:
        raise ContractViolation("desired-signal power must be positive")
    if a <= 0:
        raise ContractViolation("modulation parameter must be positive")
    return float(-np.expm1(-a * e_sq / p_des))
