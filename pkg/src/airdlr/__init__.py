"""Dynamic learning rates and beamforming for over-the-air federated
model aggregation.

Modules:

- ``numkit``      — Hermitian eigen kernels (Jacobi), PSD projection.
- ``channel``     — seeded Rayleigh-fading channel generation and CSV I/O.
- ``aircomp``     — over-the-air aggregation model and residual MSE.
- ``dlr_miso``    — closed-form learning-rate ratios for SISO/MISO uplinks.
- ``mimo_solver`` — receive beamforming and joint alternation for
  SIMO/MIMO uplinks.
- ``asymptotic``  — closed-form beamformers and large-antenna MSE limits.
- ``flsim``       — federated training simulation over the noisy uplink.
- ``cli``         — the ``airdlr`` experiment driver.
"""

from .errors import (
    ContractViolation,
    DegenerateChannelError,
    IdxCountMismatchError,
    IdxFormatError,
    IdxMagicError,
    InfeasibleError,
)

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "DegenerateChannelError",
    "IdxCountMismatchError",
    "IdxFormatError",
    "IdxMagicError",
    "InfeasibleError",
    "__version__",
]
