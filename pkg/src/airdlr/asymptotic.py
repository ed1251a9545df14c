"""Closed-form receive beamformers and large-antenna MSE limits.

With many antennas the per-device channels become orthogonal with equal
power, so summing normalized channel directions (or per-device principal
singular directions in the matrix case) is a near-optimal combiner, and
the MSE approaches simple inverse laws in K and the antenna count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit
from .channel import MIMO, SIMO, ChannelSet
from .errors import ContractViolation, DegenerateChannelError

MISO_ND = "MISO-Nd"
SIMO_NT = "SIMO-Nt"
MIMO_ND = "MIMO-Nd"
MIMO_NT = "MIMO-Nt"
_REGIMES = (MISO_ND, SIMO_NT, MIMO_ND, MIMO_NT)


@dataclass(frozen=True)
class AsymptoticPrediction:
    mse: float
    r_limit: float
    regime: str


def closed_form_beamformer(channels: ChannelSet) -> np.ndarray:
    """Normalized sum of per-device channel directions (SIMO) or principal
    eigenvectors of H_k H_k^H (MIMO)."""
    scenario = channels.scenario
    if not scenario.multi_receive:
        raise ContractViolation("closed-form combiner needs n_t > 1")
    directions = []
    for h in channels.channels:
        h = np.asarray(h, dtype=np.complex128)
        if scenario.tag == SIMO:
            norm = np.linalg.norm(h)
            if norm == 0:
                raise DegenerateChannelError("zero channel vector")
            directions.append(h / norm)
        elif scenario.tag == MIMO:
            v, lam = numkit.principal_eigenvector(h @ h.conj().T)
            if lam <= 0:
                raise DegenerateChannelError("zero channel matrix")
            directions.append(v)
        else:
            raise ContractViolation(f"unsupported scenario {scenario.tag}")
    total = np.sum(directions, axis=0)
    norm = np.linalg.norm(total)
    if norm < 1e-12:
        raise DegenerateChannelError("channel directions cancel; combiner undefined")
    return total / norm


def theoretical_mse(
    regime: str,
    k: int,
    p: float,
    sigma2: float,
    n_d: int = 1,
    n_t: int = 1,
) -> AsymptoticPrediction:
    """Large-antenna limit: sigma^2/(P K^2 N_d) when transmit antennas grow,
    sigma^2/(P K N_t) when receive antennas grow; ratios tend to 1."""
    if regime not in _REGIMES:
        raise ContractViolation(f"unknown regime {regime!r}")
    if k < 1 or p <= 0 or sigma2 <= 0:
        raise ContractViolation("parameters must be positive")
    if regime in (MISO_ND, MIMO_ND):
        if n_d < 1:
            raise ContractViolation("n_d must be >= 1")
        value = sigma2 / (p * k**2 * n_d)
    else:
        if n_t < 1:
            raise ContractViolation("n_t must be >= 1")
        value = sigma2 / (p * k * n_t)
    return AsymptoticPrediction(mse=float(value), r_limit=1.0, regime=regime)
