"""Seeded Rayleigh-fading channel generation for SISO/MISO/SIMO/MIMO links.

Entries are i.i.d. circularly-symmetric complex Gaussian with unit variance
per complex entry (real and imaginary parts each have variance 1/2), so
E||h_k||^2 equals the antenna count.  Per-device RNG streams are derived by
seed mixing: adding devices never perturbs earlier devices' draws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

SISO = "SISO"
MISO = "MISO"
SIMO = "SIMO"
MIMO = "MIMO"
_TAGS = (SISO, MISO, SIMO, MIMO)


@dataclass(frozen=True)
class Scenario:
    tag: str
    n_d: int = 1
    n_t: int = 1

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ContractViolation(f"unknown scenario tag {self.tag!r}")
        if self.n_d < 1 or self.n_t < 1:
            raise ContractViolation("antenna counts must be >= 1")
        if self.tag == SISO and (self.n_d != 1 or self.n_t != 1):
            raise ContractViolation("SISO requires n_d = n_t = 1")
        if self.tag == MISO and self.n_t != 1:
            raise ContractViolation("MISO requires n_t = 1")
        if self.tag == SIMO and self.n_d != 1:
            raise ContractViolation("SIMO requires n_d = 1")

    @property
    def multi_receive(self) -> bool:
        return self.n_t > 1


@dataclass
class ChannelSet:
    """One block-fading realization: channel per device, constant in a round."""

    scenario: Scenario
    channels: list = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        if len(self.channels) < 1:
            raise ContractViolation("need at least one device")
        for h in self.channels:
            h = np.asarray(h)
            if not np.all(np.isfinite(h.real)) or not np.all(np.isfinite(h.imag)):
                raise ContractViolation("channel entries must be finite")
            expected = _expected_shape(self.scenario)
            if h.shape != expected:
                raise ContractViolation(
                    f"channel shape {h.shape} does not match scenario {expected}"
                )

    @property
    def k(self) -> int:
        return len(self.channels)


def _expected_shape(scenario: Scenario):
    if scenario.tag == SISO:
        return ()
    if scenario.tag == MISO:
        return (scenario.n_d,)
    if scenario.tag == SIMO:
        return (scenario.n_t,)
    return (scenario.n_t, scenario.n_d)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def draw_channels(scenario: Scenario, k: int, seed: int) -> ChannelSet:
    """Draw one i.i.d. Rayleigh realization per device, deterministically."""
    if k < 1:
        raise ContractViolation("k must be >= 1")
    shape = _expected_shape(scenario)
    channels = []
    for device in range(k):
        rng = np.random.default_rng([np.uint64(seed), np.uint64(device)])
        h = _complex_gaussian(rng, shape if shape else (1,))
        channels.append(h[0] if shape == () else h)
    return ChannelSet(scenario=scenario, channels=channels, seed=seed)


def save_channels_csv(channel_set: ChannelSet, path) -> None:
    """Dump as (device, row, col, re, im) rows for test fixtures."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device", "row", "col", "re", "im"])
        for device, h in enumerate(channel_set.channels):
            mat = np.atleast_2d(np.asarray(h, dtype=np.complex128))
            for r in range(mat.shape[0]):
                for c in range(mat.shape[1]):
                    writer.writerow(
                        [device, r, c,
                         repr(float(mat[r, c].real)), repr(float(mat[r, c].imag))]
                    )


def load_channels_csv(path, scenario: Scenario) -> ChannelSet:
    cells: dict[int, dict[tuple[int, int], complex]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            device = int(row["device"])
            cells.setdefault(device, {})[(int(row["row"]), int(row["col"]))] = complex(
                float(row["re"]), float(row["im"])
            )
    shape = _expected_shape(scenario)
    channels = []
    for device in sorted(cells):
        entries = cells[device]
        rows = 1 + max(r for r, _ in entries)
        cols = 1 + max(c for _, c in entries)
        mat = np.zeros((rows, cols), dtype=np.complex128)
        for (r, c), val in entries.items():
            mat[r, c] = val
        if shape == ():
            channels.append(mat[0, 0])
        elif len(shape) == 1:
            channels.append(mat.reshape(-1))
        else:
            channels.append(mat)
    return ChannelSet(scenario=scenario, channels=channels, seed=-1)
