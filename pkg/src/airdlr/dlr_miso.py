"""Closed-form learning-rate-ratio optimization for SISO/MISO uplinks.

The min-max objective max_k c_k*l_k with c_k = 1/(K*sqrt(P_k)*||h_k||)
is solved per candidate max-index by bisection on the clipped simplex
constraint sum_i l_i = K, then the best candidate wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DegenerateChannelError, InfeasibleError

DEFAULT_DELTA = 1e-6
ZERO_CHANNEL_TOL = 1e-300


@dataclass(frozen=True)
class DlrBounds:
    """Admissible ratio interval; must bracket 1 so sum 1/(K r_k) = 1 is
    always reachable (every r_k = 1 is feasible)."""

    r_min: float = 1.0 / 1.2
    r_max: float = 1.0 / 0.8

    def __post_init__(self):
        if not (0.0 < self.r_min <= 1.0 <= self.r_max):
            raise ContractViolation("bounds must satisfy 0 < r_min <= 1 <= r_max")

    @property
    def l_lo(self) -> float:
        return 1.0 / self.r_max

    @property
    def l_hi(self) -> float:
        return 1.0 / self.r_min


@dataclass
class MisoInstance:
    channels: list                  # per-device channel vector (scalar for SISO)
    p: np.ndarray
    sigma2: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if len(self.channels) != self.p.shape[0]:
            raise ContractViolation("one power budget per device required")
        if np.any(self.p <= 0):
            raise ContractViolation("powers must be positive")
        norms = np.array(
            [np.linalg.norm(np.atleast_1d(np.asarray(h))) for h in self.channels]
        )
        if np.any(norms <= ZERO_CHANNEL_TOL):
            raise DegenerateChannelError("zero channel rejected")
        self.norms = norms

    @property
    def k(self) -> int:
        return self.p.shape[0]

    def costs(self) -> np.ndarray:
        """c_k = 1/(K sqrt(P_k) ||h_k||)."""
        return 1.0 / (self.k * np.sqrt(self.p) * self.norms)


@dataclass
class DlrSolution:
    l: np.ndarray
    r: np.ndarray
    eta: float
    b: list
    objective: float
    mse: float
    fixed_objective: float = field(default=float("nan"))

    @property
    def fixed_mse_factor(self) -> float:
        return self.fixed_objective**2


def mse_lower_bound(inst: MisoInstance) -> float:
    """sigma^2 / (sum_i sqrt(P_i)||h_i||)^2."""
    return float(inst.sigma2 / np.sum(np.sqrt(inst.p) * inst.norms) ** 2)


def scaling_factor(inst: MisoInstance, r) -> float:
    """eta = max_k 1/(K^2 P_k r_k^2 ||h_k||^2)."""
    r = np.asarray(r, dtype=float)
    return float(np.max(1.0 / (inst.k**2 * inst.p * r**2 * inst.norms**2)))


def transmit_coefficients(inst: MisoInstance, eta: float, r) -> list:
    """Uniform-forcing coefficients b_k = conj(h_k)/(K sqrt(eta) ||h_k||^2 r_k)."""
    if eta <= 0:
        raise ContractViolation("eta must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ContractViolation("ratios must be positive")
    out = []
    for h, norm, rk in zip(inst.channels, inst.norms, r):
        h = np.asarray(h, dtype=np.complex128)
        out.append(np.conj(h) / (inst.k * np.sqrt(eta) * norm**2 * rk))
    return out


def _clip_sum(costs: np.ndarray, k_idx: int, lk: float, lo: float, hi: float):
    l = np.clip(costs[k_idx] * lk / costs, lo, hi)
    l[k_idx] = lk
    return l


def _refine_exact(costs, idx, l, lo, hi, k):
    """Freeze the clip pattern found by bisection and solve sum(l) = K for
    the free coordinates in closed form (removes the bisection residual)."""
    free = (l > lo) | (np.arange(costs.shape[0]) == idx)
    free &= (l < hi) | (np.arange(costs.shape[0]) == idx)
    clipped_sum = float(np.sum(l[~free]))
    denom = costs[idx] * float(np.sum(1.0 / costs[free]))
    if denom <= 0:
        return l
    lk = (k - clipped_sum) / denom
    if not (lo - 1e-9 <= lk <= hi + 1e-9):
        return l
    cand = _clip_sum(costs, idx, min(max(lk, lo), hi), lo, hi)
    if abs(float(np.sum(cand)) - k) <= abs(float(np.sum(l)) - k):
        return cand
    return l


def solve_dlr_miso(
    inst: MisoInstance, bounds: DlrBounds = DlrBounds(), delta: float = DEFAULT_DELTA
) -> DlrSolution:
    """Bisection + clipping over every candidate max-index; best candidate wins
    (smallest index on ties)."""
    if delta <= 0:
        raise ContractViolation("delta must be positive")
    costs = inst.costs()
    k = inst.k
    lo, hi = bounds.l_lo, bounds.l_hi
    max_iter = math.ceil(math.log2(max((hi - lo) / delta, 1.0))) + 8

    best_l = None
    best_obj = math.inf
    for idx in range(k):
        s_lo = float(np.sum(_clip_sum(costs, idx, lo, lo, hi)))
        s_hi = float(np.sum(_clip_sum(costs, idx, hi, lo, hi)))
        if s_lo > k + delta or s_hi < k - delta:
            continue  # this index cannot balance the constraint
        a, b = lo, hi
        l = _clip_sum(costs, idx, 0.5 * (a + b), lo, hi)
        for _ in range(max_iter):
            mid = 0.5 * (a + b)
            l = _clip_sum(costs, idx, mid, lo, hi)
            total = float(np.sum(l))
            if abs(total - k) <= delta:
                break
            if total >= k:
                b = mid
            else:
                a = mid
        if abs(float(np.sum(l)) - k) > delta:
            continue
        l = _refine_exact(costs, idx, l, lo, hi, k)
        obj = float(np.max(costs * l))
        if obj < best_obj - 1e-15:
            best_obj = obj
            best_l = l
    if best_l is None:
        raise InfeasibleError("no candidate index balances sum(l) = K")

    r = 1.0 / best_l
    eta = scaling_factor(inst, r)
    b_coeffs = transmit_coefficients(inst, eta, r)
    return DlrSolution(
        l=best_l,
        r=r,
        eta=eta,
        b=b_coeffs,
        objective=best_obj,
        mse=best_obj**2 * inst.sigma2,
        fixed_objective=float(np.max(costs)),
    )


def fixed_lr_solution(inst: MisoInstance) -> DlrSolution:
    """Baseline with every ratio pinned to 1 (no learning-rate adaptation)."""
    r = np.ones(inst.k)
    eta = scaling_factor(inst, r)
    obj = float(np.max(inst.costs()))
    return DlrSolution(
        l=r.copy(),
        r=r,
        eta=eta,
        b=transmit_coefficients(inst, eta, r),
        objective=obj,
        mse=obj**2 * inst.sigma2,
        fixed_objective=obj,
    )
