"""Federated training whose aggregation step rides the analog channel.

Local full-batch gradient steps with per-device learning rates, symbol
packing of model parameters, noisy over-the-air averaging with Bernoulli
retransmissions, plus the synthetic task and MNIST IDX ingestion.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import aircomp
from .aircomp import SystemModel, TransmitConfig, effective_gains
from .asymptotic import closed_form_beamformer
from .channel import MIMO, MISO, SIMO, SISO, ChannelSet, draw_channels
from .dlr_miso import DlrBounds, DlrSolution, MisoInstance, fixed_lr_solution, solve_dlr_miso
from .errors import (
    ContractViolation,
    IdxCountMismatchError,
    IdxFormatError,
    IdxMagicError,
)
from .mimo_solver import MimoInstance, MimoSolution, solve_dlr_given_m, solve_joint

LOGISTIC = "logistic"
MLP = "mlp"

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801


# ---------------------------------------------------------------------------
# Models with analytic gradients
# ---------------------------------------------------------------------------


@dataclass
class Model:
    params: np.ndarray
    arch: str
    n_features: int
    n_classes: int
    hidden: int = 0

    def __post_init__(self):
        if self.arch not in (LOGISTIC, MLP):
            raise ContractViolation(f"unknown architecture {self.arch!r}")
        expected = _param_count(self.arch, self.n_features, self.n_classes, self.hidden)
        self.params = np.asarray(self.params, dtype=float).reshape(-1)
        if self.params.shape[0] != expected:
            raise ContractViolation(
                f"expected {expected} parameters, got {self.params.shape[0]}"
            )


def _param_count(arch, d, c, h):
    if arch == LOGISTIC:
        return d * c + c
    return d * h + h + h * c + c


def init_model(arch, n_features, n_classes, hidden=64, seed=0) -> Model:
    rng = np.random.default_rng(seed)
    if arch == LOGISTIC:
        params = np.zeros(_param_count(arch, n_features, n_classes, 0))
        hidden = 0
    else:
        w1 = rng.normal(0.0, np.sqrt(1.0 / n_features), size=n_features * hidden)
        w2 = rng.normal(0.0, np.sqrt(1.0 / hidden), size=hidden * n_classes)
        params = np.concatenate([w1, np.zeros(hidden), w2, np.zeros(n_classes)])
    return Model(params, arch, n_features, n_classes, hidden)


def _unpack_logistic(model):
    d, c = model.n_features, model.n_classes
    w = model.params[: d * c].reshape(d, c)
    b = model.params[d * c :]
    return w, b


def _unpack_mlp(model):
    d, c, h = model.n_features, model.n_classes, model.hidden
    p = model.params
    i = 0
    w1 = p[i : i + d * h].reshape(d, h); i += d * h
    b1 = p[i : i + h]; i += h
    w2 = p[i : i + h * c].reshape(h, c); i += h * c
    b2 = p[i : i + c]
    return w1, b1, w2, b2


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def predict_logits(model: Model, x: np.ndarray) -> np.ndarray:
    if model.arch == LOGISTIC:
        w, b = _unpack_logistic(model)
        return x @ w + b
    w1, b1, w2, b2 = _unpack_mlp(model)
    return _sigmoid(x @ w1 + b1) @ w2 + b2


def loss_and_gradient(model: Model, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its analytic gradient as a flat vector."""
    n = x.shape[0]
    if n == 0:
        raise ContractViolation("empty batch")
    onehot = np.zeros((n, model.n_classes))
    onehot[np.arange(n), y] = 1.0
    if model.arch == LOGISTIC:
        probs = _softmax(x @ _unpack_logistic(model)[0] + _unpack_logistic(model)[1])
        delta = (probs - onehot) / n
        gw = x.T @ delta
        gb = delta.sum(axis=0)
        loss = -np.mean(np.log(np.sum(probs * onehot, axis=1) + 1e-300))
        return float(loss), np.concatenate([gw.reshape(-1), gb])
    w1, b1, w2, b2 = _unpack_mlp(model)
    z1 = x @ w1 + b1
    a1 = _sigmoid(z1)
    probs = _softmax(a1 @ w2 + b2)
    delta2 = (probs - onehot) / n
    gw2 = a1.T @ delta2
    gb2 = delta2.sum(axis=0)
    delta1 = (delta2 @ w2.T) * a1 * (1.0 - a1)
    gw1 = x.T @ delta1
    gb1 = delta1.sum(axis=0)
    loss = -np.mean(np.log(np.sum(probs * onehot, axis=1) + 1e-300))
    return float(loss), np.concatenate(
        [gw1.reshape(-1), gb1, gw2.reshape(-1), gb2]
    )


def gradient(model: Model, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return loss_and_gradient(model, x, y)[1]


def local_update(params: np.ndarray, grad: np.ndarray, mu_k: float) -> np.ndarray:
    """One local gradient step: w_k = w - mu_k * g_k."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape:
        raise ContractViolation("parameter/gradient shape mismatch")
    return params - mu_k * grad


def evaluate(model: Model, x: np.ndarray, y: np.ndarray):
    logits = predict_logits(model, x)
    probs = _softmax(logits)
    loss = -np.mean(np.log(probs[np.arange(len(y)), y] + 1e-300))
    accuracy = float(np.mean(np.argmax(logits, axis=1) == y))
    return float(loss), accuracy


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    partition: Optional[list] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ContractViolation("feature/label count mismatch")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.n_classes
        ):
            raise ContractViolation("labels out of range")


def partition_equal(dataset: Dataset, k: int, seed: int = 0) -> Dataset:
    """Disjoint equal-size device shards (remainder samples dropped)."""
    n = dataset.features.shape[0]
    if k < 1 or k > n:
        raise ContractViolation("device count out of range")
    per = n // k
    idx = np.random.default_rng(seed).permutation(n)[: per * k]
    shards = [np.sort(idx[i * per : (i + 1) * per]) for i in range(k)]
    return replace(dataset, partition=shards)


def synthetic_task(seed: int = 0):
    """Two Gaussian blobs at +-(1.5, 1.5): 2000 train / 500 test samples."""
    rng = np.random.default_rng(seed)

    def make(n):
        half = n // 2
        x0 = rng.normal(loc=(-1.5, -1.5), size=(half, 2))
        x1 = rng.normal(loc=(1.5, 1.5), size=(half, 2))
        x = np.vstack([x0, x1])
        y = np.concatenate([np.zeros(half, int), np.ones(half, int)])
        order = rng.permutation(n)
        return Dataset(x[order], y[order], n_classes=2)

    return make(2000), make(500)


def _read_idx(path, expected_magic):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        head = fh.read(4)
        if len(head) < 4:
            raise IdxFormatError(f"{path}: truncated header")
        (magic,) = struct.unpack(">i", head)
        if magic != expected_magic:
            raise IdxMagicError(
                f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
            )
        ndim = magic & 0xFF
        dims_raw = fh.read(4 * ndim)
        if len(dims_raw) < 4 * ndim:
            raise IdxFormatError(f"{path}: truncated dimension block")
        dims = struct.unpack(f">{ndim}i", dims_raw)
        count = int(np.prod(dims))
        data = fh.read(count)
        if len(data) < count:
            raise IdxFormatError(f"{path}: truncated payload")
        return np.frombuffer(data, dtype=np.uint8).reshape(dims)


def load_mnist_idx(image_path, label_path) -> Dataset:
    """Parse IDX image/label files; pixels scaled to [0, 1]."""
    images = _read_idx(image_path, IDX_MAGIC_IMAGES)
    labels = _read_idx(label_path, IDX_MAGIC_LABELS)
    if images.shape[0] != labels.shape[0]:
        raise IdxCountMismatchError(
            f"{images.shape[0]} images vs {labels.shape[0]} labels"
        )
    flat = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return Dataset(flat, labels.astype(int), n_classes=10)


# ---------------------------------------------------------------------------
# Symbol packing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolCoding:
    """Affine normalization metadata; assumed conveyed error-free."""

    mean: complex
    scale: float
    pad: int
    dim: int


def _pack(params: np.ndarray) -> np.ndarray:
    pad = params.shape[0] % 2
    if pad:
        params = np.concatenate([params, [0.0]])
    return params[0::2] + 1j * params[1::2]


def coding_for(params: np.ndarray) -> SymbolCoding:
    """Metadata that maps `params` to zero-mean unit-variance symbols."""
    params = np.asarray(params, dtype=float).reshape(-1)
    raw = _pack(params)
    mean = complex(np.mean(raw))
    var = float(np.mean(np.abs(raw - mean) ** 2))
    scale = np.sqrt(var) if var > 1e-30 else 1.0
    return SymbolCoding(mean=mean, scale=scale, pad=params.shape[0] % 2,
                        dim=params.shape[0])


def coding_for_group(models: list) -> SymbolCoding:
    """Shared metadata from the concatenated parameters of several models."""
    stacked = np.concatenate([np.asarray(p, dtype=float).reshape(-1) for p in models])
    base = coding_for(stacked)
    dim = np.asarray(models[0]).reshape(-1).shape[0]
    return SymbolCoding(mean=base.mean, scale=base.scale, pad=dim % 2, dim=dim)


def encode_symbols(params, coding: Optional[SymbolCoding] = None):
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.shape[0] < 1:
        raise ContractViolation("empty parameter vector")
    if coding is None:
        coding = coding_for(params)
    symbols = (_pack(params) - coding.mean) / coding.scale
    return symbols, coding


def decode_symbols(symbols, coding: SymbolCoding) -> np.ndarray:
    raw = np.asarray(symbols, dtype=np.complex128) * coding.scale + coding.mean
    flat = np.empty(2 * raw.shape[0])
    flat[0::2] = raw.real
    flat[1::2] = raw.imag
    return flat[: coding.dim]


# ---------------------------------------------------------------------------
# Aggregation over the channel
# ---------------------------------------------------------------------------


@dataclass
class RoundLog:
    round: int
    loss: float
    accuracy: float
    e_sq: float
    retransmits: int
    retx_exhausted: bool = False


def write_round_logs(logs, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "loss", "acc", "e_sq", "retx"])
        for log in logs:
            writer.writerow(
                [log.round, repr(log.loss), repr(log.accuracy), repr(log.e_sq),
                 log.retransmits]
            )


def _solution_parts(solution):
    if isinstance(solution, MimoSolution):
        return solution.dlr.b, solution.dlr.eta, solution.m, solution.dlr.r
    return solution.b, solution.eta, None, solution.r


def air_aggregate_round(
    local_params: list,
    channels: ChannelSet,
    solution,
    system: SystemModel,
    rng: np.random.Generator,
    coding: Optional[SymbolCoding] = None,
    max_retx: int = 5,
):
    """One noisy aggregation of the devices' local models.

    The desired value is the ratio-weighted average sum_k s_k/(K r_k): with
    the cancellation conditions in force it decodes to the centralized
    gradient step.  Retransmission redraws noise only (block fading).
    """
    k = len(local_params)
    if k != channels.k:
        raise ContractViolation("one channel per device required")
    b, eta, m, r = _solution_parts(solution)
    if coding is None:
        coding = coding_for_group(local_params)
    cfg = TransmitConfig(b=b, eta=eta, m=m)
    gains = effective_gains(channels, cfg)

    symbols = np.stack([encode_symbols(p, coding)[0] for p in local_params])
    n_sym = symbols.shape[1]
    ideal = 1.0 / (k * np.asarray(r, dtype=float))
    y_des = ideal @ symbols
    p_des = float(np.mean(np.abs(y_des) ** 2))

    root = np.sqrt(eta)
    retransmits = 0
    exhausted = False
    while True:
        if system.sigma2 > 0:
            noise = np.sqrt(system.sigma2 / 2.0) * (
                rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)
            )
        else:
            noise = np.zeros(n_sym, dtype=np.complex128)
        y = root * (gains @ symbols + noise)
        e_sq = float(np.sum(np.abs(y_des - y) ** 2))
        if p_des <= 0:
            break
        prob = aircomp.retransmission_probability(e_sq / n_sym, p_des, system.a)
        if rng.random() >= prob:
            break
        retransmits += 1
        if retransmits > max_retx:
            exhausted = True
            break
    return decode_symbols(y, coding), e_sq, retransmits, exhausted


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    mu: float
    epochs: int
    system: SystemModel
    bounds: DlrBounds = DlrBounds()
    seed: int = 0
    solver: str = "dlr"            # "dlr" | "fixed"
    beamformer: str = "joint"      # "joint" | "asymptotic" (n_t > 1 only)
    arch: str = LOGISTIC
    hidden: int = 64
    max_retx: int = 5

    def __post_init__(self):
        if self.mu <= 0:
            raise ContractViolation("learning rate must be positive")
        if self.epochs < 1:
            raise ContractViolation("epochs must be >= 1")
        if self.solver not in ("dlr", "fixed"):
            raise ContractViolation(f"unknown solver {self.solver!r}")


def _round_seed(seed: int, tag: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, tag, t]).generate_state(1)[0])


def _solve_round(channels: ChannelSet, config: TrainConfig, t: int):
    system = config.system
    scenario = channels.scenario
    bounds = config.bounds if config.solver == "dlr" else DlrBounds(1.0, 1.0)
    if scenario.tag in (SISO, MISO):
        inst = MisoInstance(list(channels.channels), system.p, system.sigma2)
        if config.solver == "fixed":
            return fixed_lr_solution(inst)
        return solve_dlr_miso(inst, bounds)
    mats = [
        np.asarray(h, dtype=np.complex128).reshape(scenario.n_t, scenario.n_d)
        for h in channels.channels
    ]
    inst = MimoInstance(mats, system.p, system.sigma2)
    if config.beamformer == "asymptotic":
        m = closed_form_beamformer(channels)
        dlr = solve_dlr_given_m(inst, m, bounds)
        sol = MimoSolution(m=m, dlr=dlr, tau=dlr.objective**2,
                           history=[dlr.objective**2])
        sol._sigma2 = system.sigma2
        return sol
    return solve_joint(inst, bounds, seed=_round_seed(config.seed, 3, t))


def train_federated(train: Dataset, test: Dataset, config: TrainConfig, k: int):
    """Run `epochs` aggregation rounds; deterministic under the config seed."""
    data = train if train.partition is not None else partition_equal(
        train, k, seed=config.seed
    )
    if len(data.partition) != k:
        raise ContractViolation("partition count does not match device count")
    model = init_model(config.arch, data.features.shape[1], data.n_classes,
                       hidden=config.hidden, seed=config.seed)
    logs: list[RoundLog] = []
    for t in range(config.epochs):
        channels = draw_channels(
            config.system.scenario, k, _round_seed(config.seed, 1, t)
        )
        solution = _solve_round(channels, config, t)
        _, _, _, r = _solution_parts(solution)
        locals_ = []
        for dev in range(k):
            idx = data.partition[dev]
            grad = gradient(model, data.features[idx], data.labels[idx])
            locals_.append(local_update(model.params, grad, float(r[dev]) * config.mu))
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, 2, t])
        )
        params, e_sq, retx, exhausted = air_aggregate_round(
            locals_, channels, solution, config.system, rng,
            max_retx=config.max_retx,
        )
        model = replace(model, params=params)
        loss, _ = evaluate(model, data.features, data.labels)
        _, acc = evaluate(model, test.features, test.labels)
        logs.append(RoundLog(t, loss, acc, e_sq, retx, exhausted))
    return logs, model
