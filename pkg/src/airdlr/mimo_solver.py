"""Joint receive-beamforming and learning-rate-ratio optimization (MIMO).

The beamformer is found by bisection on the min-max level tau; each level
is a rank-one feasibility problem on the lifted matrix M = m m^H, handled
by alternating projections on the PSD cone / trace-one slice / per-device
half-spaces, a rank-one pull toward the principal eigenvector, and a
Gaussian-randomization fallback.  An unfound certificate is treated as
infeasible, which can only enlarge the returned tau (never invalidate it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numkit
from .dlr_miso import DEFAULT_DELTA, DlrBounds, DlrSolution, MisoInstance, solve_dlr_miso
from .errors import ContractViolation, DegenerateChannelError, InfeasibleError

EPS_FEAS = 1e-7          # admissible per-constraint slack for a certificate
EPS_RANK = 1e-9          # eigenvalue below this counts as zero (Lemma-1 branch)
RANK_ONE_TOL = 1e-6      # Tr(M) - lambda_max(M) target for the rank-one pull
TAU_CAP_FACTOR = 1e4     # finite stand-in for an unbounded upper tau
RANDOMIZATION_DRAWS = 200


@dataclass
class MimoInstance:
    channels: list                  # N_t x N_d matrix per device
    p: np.ndarray
    sigma2: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if len(self.channels) != self.p.shape[0]:
            raise ContractViolation("one power budget per device required")
        if np.any(self.p <= 0):
            raise ContractViolation("powers must be positive")
        mats = [np.atleast_2d(np.asarray(h, dtype=np.complex128)) for h in self.channels]
        shape = mats[0].shape
        for h in mats:
            if h.shape != shape:
                raise ContractViolation("all channel matrices must share a shape")
            if np.linalg.norm(h) == 0:
                raise DegenerateChannelError("zero channel matrix rejected")
        self.channels = mats
        self.n_t, self.n_d = shape

    @property
    def k(self) -> int:
        return self.p.shape[0]

    def gram_matrices(self) -> list:
        """A_k = H_k H_k^H, one per device."""
        return [h @ h.conj().T for h in self.channels]


@dataclass(frozen=True)
class TauInterval:
    tau_low: float
    tau_up: float
    per_device_low: np.ndarray
    per_device_up: np.ndarray


@dataclass
class FeasibilityResult:
    feasible: bool
    slack: float
    m: Optional[np.ndarray] = None
    lifted: Optional[np.ndarray] = None


@dataclass
class MimoSolution:
    m: np.ndarray
    dlr: DlrSolution
    tau: float
    history: list = field(default_factory=list)

    @property
    def mse(self) -> float:
        return self.tau * self._sigma2

    _sigma2: float = 0.0


def tau_interval(inst: MimoInstance, r) -> TauInterval:
    """Eigenvalue (Rayleigh-Ritz) bounds on the per-device level."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ContractViolation("ratios must be positive")
    lows = np.empty(inst.k)
    ups = np.empty(inst.k)
    for i, gram in enumerate(inst.gram_matrices()):
        dec = numkit.hermitian_eig(gram)
        lam_min, lam_max = float(dec.eigenvalues[0]), float(dec.eigenvalues[-1])
        denom = inst.k**2 * inst.p[i] * r[i] ** 2
        lows[i] = 1.0 / (denom * lam_max)
        ups[i] = 1.0 / (denom * lam_min) if lam_min > EPS_RANK else np.inf
    return TauInterval(
        tau_low=float(np.min(lows)),
        tau_up=float(np.max(ups)),
        per_device_low=lows,
        per_device_up=ups,
    )


def _constraint_matrices(inst: MimoInstance, r, tau: float) -> np.ndarray:
    """C_k = tau K^2 P_k r_k^2 H_k H_k^H - I, stacked as a (K, n, n) tensor;
    feasibility is m^H C_k m >= 0 for every k."""
    r = np.asarray(r, dtype=float)
    grams = np.stack(inst.gram_matrices())
    weights = tau * inst.k**2 * inst.p * r**2
    return weights[:, None, None] * grams - np.eye(inst.n_t)


def _all_slacks(m: np.ndarray, constraints: np.ndarray) -> np.ndarray:
    """m^H C_k m for every k (m assumed unit-norm)."""
    return np.real(np.einsum("i,kij,j->k", m.conj(), constraints, m))


def _min_slack(m: np.ndarray, constraints: np.ndarray) -> float:
    m = m / np.linalg.norm(m)
    return float(_all_slacks(m, constraints).min())


def _project_feasible_set(m_mat, constraints, cycles: int):
    """Alternating projections: PSD cone, Tr = 1, violated half-spaces."""
    n = m_mat.shape[0]
    eye = np.eye(n)
    norms_sq = np.einsum("kij,kij->k", constraints, constraints.conj()).real
    for _ in range(cycles):
        m_mat = 0.5 * (m_mat + m_mat.conj().T)
        m_mat = numkit.psd_project(m_mat)
        m_mat = m_mat + (1.0 - np.trace(m_mat).real) / n * eye
        inners = np.einsum("kij,ij->k", constraints.conj(), m_mat).real
        violated = inners < 0.0
        if violated.any():
            for idx in np.nonzero(violated)[0]:
                m_mat = m_mat - (inners[idx] / norms_sq[idx]) * constraints[idx]
        elif abs(np.trace(m_mat).real - 1.0) < 1e-9:
            break
    return m_mat


def _ascend_min_slack(m, constraints, iters=80, step=0.5, target=None):
    """Maximize min_k m^H C_k m on the unit sphere by subgradient ascent with
    backtracking; polishes candidates extracted from the lifted solution.
    Stops as soon as `target` (when given) is reached."""
    m = m / np.linalg.norm(m)
    slacks = _all_slacks(m, constraints)
    best = slacks.min()
    for _ in range(iters):
        if target is not None and best >= target:
            break
        worst = int(np.argmin(slacks))
        grad = constraints[worst] @ m
        grad = grad - np.vdot(m, grad) * m  # tangent component
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-14:
            break
        improved = False
        trial_step = step
        for _ in range(8):
            cand = m + trial_step * grad / gnorm
            cand /= np.linalg.norm(cand)
            cand_slacks = _all_slacks(cand, constraints)
            if cand_slacks.min() > best:
                m, slacks, best = cand, cand_slacks, cand_slacks.min()
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            break
    return m, best


def feasibility_check(
    inst: MimoInstance,
    r,
    tau: float,
    warm: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    dc_refinement: bool = True,
    pocs_cycles: int = 30,
    pull_steps: int = 10,
) -> FeasibilityResult:
    """Search for a unit m with m^H C_k m >= -EPS_FEAS for every device."""
    if tau <= 0:
        raise ContractViolation("tau must be positive")
    constraints = _constraint_matrices(inst, r, tau)
    n = inst.n_t
    if rng is None:
        rng = np.random.default_rng(0)

    # Fast path: multi-start max-min ascent directly on the sphere.  The
    # per-constraint principal directions plus the warm start cover the
    # typical optima; the lifted machinery below handles the rest.
    starts = []
    if warm is not None:
        starts.append(numkit.principal_eigenvector(
            0.5 * (np.asarray(warm) + np.asarray(warm).conj().T))[0])
    singles = [numkit.principal_eigenvector(c)[0] for c in constraints]
    starts.extend(singles)
    for _ in range(4):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        starts.append(z / np.linalg.norm(z))
    # When single-constraint directions fail, the optimum usually sits
    # between two active constraints; try their combinations next.
    pair_starts = []
    for i in range(len(singles)):
        for j in range(i + 1, len(singles)):
            mix = singles[i] + singles[j]
            nm = np.linalg.norm(mix)
            if nm > 1e-12:
                pair_starts.append(mix / nm)

    # Last-resort stage: fresh random directions, unbiased by the warm
    # start, for levels where the structured starts all land in bad basins.
    fresh = []
    for _ in range(8):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        fresh.append(z / np.linalg.norm(z))

    best_m, best_slack = None, -np.inf
    for stage in (starts, pair_starts, fresh):
        for start in stage:
            polished, slack = _ascend_min_slack(
                start, constraints, target=-EPS_FEAS
            )
            if slack > best_slack:
                best_slack, best_m = slack, polished
            if best_slack >= -EPS_FEAS:
                return FeasibilityResult(
                    feasible=True, slack=best_slack, m=best_m,
                    lifted=np.outer(best_m, best_m.conj()),
                )

    if warm is not None:
        m_mat = np.asarray(warm, dtype=np.complex128).copy()
    else:
        m_mat = np.eye(n, dtype=np.complex128) / n

    candidates = []
    m_mat = _project_feasible_set(m_mat, constraints, pocs_cycles)
    v, lam = numkit.principal_eigenvector(m_mat)
    candidates.append(v)
    if dc_refinement:
        # Rank-one pull: mix toward the principal dyad, re-project, repeat
        # until the trace is carried by a single eigenvalue.
        for _ in range(pull_steps):
            gap = float(np.trace(m_mat).real) - lam
            if gap <= RANK_ONE_TOL:
                break
            m_mat = 0.5 * m_mat + 0.5 * np.outer(v, v.conj())
            m_mat = _project_feasible_set(m_mat, constraints, pocs_cycles // 3)
            v, lam = numkit.principal_eigenvector(m_mat)
            candidates.append(v)

    for cand in candidates:
        polished, slack = _ascend_min_slack(cand, constraints, target=-EPS_FEAS)
        if slack > best_slack:
            best_slack, best_m = slack, polished
        if best_slack >= -EPS_FEAS:
            break
    if best_slack >= -EPS_FEAS:
        return FeasibilityResult(feasible=True, slack=best_slack, m=best_m, lifted=m_mat)

    # Gaussian randomization from the lifted solution, evaluated in batch.
    vals, vecs = np.linalg.eigh(0.5 * (m_mat + m_mat.conj().T))
    root = vecs * np.sqrt(np.maximum(vals, 0.0))
    noise = (
        rng.standard_normal((RANDOMIZATION_DRAWS, n))
        + 1j * rng.standard_normal((RANDOMIZATION_DRAWS, n))
    ) / np.sqrt(2.0)
    draws = noise @ root.T
    norms = np.linalg.norm(draws, axis=1)
    draws = draws[norms > 0] / norms[norms > 0, None]
    if draws.shape[0]:
        slacks = np.einsum("di,kij,dj->dk", draws.conj(), constraints, draws).real
        mins = slacks.min(axis=1)
        top = int(np.argmax(mins))
        if mins[top] > best_slack:
            best_slack, best_m = float(mins[top]), draws[top]
    if best_m is not None and best_slack < -EPS_FEAS:
        best_m, best_slack = _ascend_min_slack(best_m, constraints, target=-EPS_FEAS)
    return FeasibilityResult(
        feasible=best_slack >= -EPS_FEAS, slack=best_slack, m=best_m, lifted=m_mat
    )


def solve_beamforming(
    inst: MimoInstance,
    r,
    delta: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
    warm: Optional[np.ndarray] = None,
    tau_start: Optional[float] = None,
):
    """Bisection on tau over the Rayleigh-Ritz interval (smallest certified
    feasible level wins).  `tau_start`, when given and certified, caps the
    search from above.  Returns (m, tau, tau_uncertified) where the last
    entry is the largest level that failed certification (the interval's
    provable lower end when no level failed)."""
    interval = tau_interval(inst, r)
    lo = interval.tau_low
    hi = interval.tau_up if np.isfinite(interval.tau_up) else TAU_CAP_FACTOR * lo
    if delta is None:
        delta = 1e-4 * lo
    if rng is None:
        rng = np.random.default_rng(0)

    best = None
    if tau_start is not None and tau_start <= hi:
        res = feasibility_check(inst, r, tau_start, warm=warm, rng=rng)
        if res.feasible:
            hi, best, warm = tau_start, res, res.lifted
    if best is None:
        res = feasibility_check(inst, r, hi, warm=warm, rng=rng)
        if not res.feasible:
            raise InfeasibleError("no feasible beamformer found at the upper tau")
        best, warm = res, res.lifted

    while hi - lo > delta:
        mid = 0.5 * (lo + hi)
        res = feasibility_check(inst, r, mid, warm=warm, rng=rng)
        if res.feasible:
            hi, best, warm = mid, res, res.lifted
        else:
            lo = mid
    return best.m, hi, lo


def solve_dlr_given_m(
    inst: MimoInstance,
    m: np.ndarray,
    bounds: DlrBounds = DlrBounds(),
    delta: float = DEFAULT_DELTA,
) -> DlrSolution:
    """Reduce to the MISO problem on equivalent channels h'_k = m^H H_k."""
    m = np.asarray(m, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(m) - 1.0) > 1e-9:
        raise ContractViolation("beamformer must be unit-norm")
    equivalent = [m.conj() @ h for h in inst.channels]
    for h in equivalent:
        if np.linalg.norm(h) < 1e-12:
            raise DegenerateChannelError(
                "beamformer is orthogonal to a device's channel"
            )
    return solve_dlr_miso(
        MisoInstance(channels=equivalent, p=inst.p, sigma2=inst.sigma2),
        bounds=bounds,
        delta=delta,
    )


def mse_lower_bound_mimo(inst: MimoInstance, m: np.ndarray) -> float:
    """sigma^2 / (sum_i sqrt(P_i) ||m^H H_i||)^2 for a unit beamformer."""
    m = np.asarray(m, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(m) - 1.0) > 1e-9:
        raise ContractViolation("beamformer must be unit-norm")
    total = sum(
        np.sqrt(p) * np.linalg.norm(m.conj() @ h) for p, h in zip(inst.p, inst.channels)
    )
    return float(inst.sigma2 / total**2)


def solve_joint(
    inst: MimoInstance,
    bounds: DlrBounds = DlrBounds(),
    delta1: Optional[float] = None,
    delta2: float = DEFAULT_DELTA,
    max_iter: int = 30,
    restarts: int = 1,
    seed: int = 0,
    conv_rtol: float = 1e-6,
) -> MimoSolution:
    """Alternate beamforming (bisection) and ratio updates from r_k = 1,
    keeping the per-iteration tau monotone; best restart wins."""
    if max_iter < 1 or restarts < 1:
        raise ContractViolation("max_iter and restarts must be >= 1")
    best: Optional[MimoSolution] = None
    failures = 0
    for restart in range(restarts):
        rng = np.random.default_rng([np.uint64(seed), np.uint64(restart)])
        warm = None
        if restart > 0:
            z = (rng.standard_normal(inst.n_t) + 1j * rng.standard_normal(inst.n_t))
            z /= np.linalg.norm(z)
            warm = np.outer(z, z.conj())
        try:
            sol = _solve_joint_once(
                inst, bounds, delta1, delta2, max_iter, rng, warm, conv_rtol
            )
        except InfeasibleError:
            failures += 1
            continue
        if best is None or sol.tau < best.tau:
            best = sol
    if best is None:
        raise InfeasibleError(f"all {failures} restarts failed to certify feasibility")
    return best


def _solve_joint_once(inst, bounds, delta1, delta2, max_iter, rng, warm, conv_rtol):
    r = np.ones(inst.k)
    history: list[float] = []
    tau_prev = np.inf
    m_best = None
    dlr_best = None
    for _ in range(max_iter):
        m, tau_b, _ = solve_beamforming(
            inst, r, delta=delta1, rng=rng, warm=warm,
            tau_start=tau_prev if np.isfinite(tau_prev) else None,
        )
        dlr = solve_dlr_given_m(inst, m, bounds=bounds, delta=delta2)
        tau = dlr.objective**2
        if tau > tau_prev + 1e-12:
            break  # numerical wobble; keep the previous (better) iterate
        history.append(tau)
        m_best, dlr_best = m, dlr
        warm = np.outer(m, m.conj())
        if np.isfinite(tau_prev) and abs(tau_prev - tau) <= conv_rtol * max(tau, 1e-300):
            tau_prev = tau
            break
        if np.array_equal(dlr.r, r):
            break  # ratio update is a fixed point; alternation has converged
        r = dlr.r
        tau_prev = tau
    if m_best is None:
        raise InfeasibleError("no iterate produced a certified beamformer")
    sol = MimoSolution(m=m_best, dlr=dlr_best, tau=history[-1], history=history)
    sol._sigma2 = inst.sigma2
    return sol
