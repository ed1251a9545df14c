"""Experiment driver: single solves, MSE sweeps, bar data, asymptotic
comparisons and federated training runs, all emitting CSV.

Powers and noise are taken in dB on the command line and converted to
linear internally.  All methods evaluated at one sweep point share the
same channel seed, so method comparisons are paired.  Optional JSON
config files provide defaults that individual flags override.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aircomp import SystemModel
from .asymptotic import (
    MIMO_ND,
    MIMO_NT,
    MISO_ND,
    SIMO_NT,
    closed_form_beamformer,
    theoretical_mse,
)
from .channel import MIMO, MISO, SIMO, SISO, Scenario, draw_channels
from .dlr_miso import (
    DlrBounds,
    MisoInstance,
    fixed_lr_solution,
    mse_lower_bound,
    solve_dlr_miso,
)
from .errors import ContractViolation, IdxFormatError, InfeasibleError
from .flsim import (
    TrainConfig,
    load_mnist_idx,
    partition_equal,
    synthetic_task,
    train_federated,
)
from .mimo_solver import (
    MimoInstance,
    mse_lower_bound_mimo,
    solve_dlr_given_m,
    solve_joint,
)

ROW_COLUMNS = [
    "scenario", "K", "N_d", "N_t", "r_min", "r_max", "method", "draw",
    "mse_over_sigma2", "mse_lb_over_sigma2", "tau", "seconds", "status",
]
AGG_COLUMNS = [
    "scenario", "K", "N_d", "N_t", "r_min", "r_max", "method", "draws",
    "mse_mean", "mse_std", "mse_lb_mean",
]
METHODS = ("dlr", "fixed", "asymptotic")


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def parse_int_list(text) -> list:
    """Accept '4', '2,4,8' or inclusive ranges '2:20' / '2:20:2'."""
    if isinstance(text, (list, tuple)):
        values = [int(v) for v in text]
    else:
        text = str(text)
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ContractViolation(f"bad range syntax {text!r}")
            if step < 1 or hi < lo:
                raise ContractViolation(f"bad range {text!r}")
            values = list(range(lo, hi + 1, step))
        else:
            values = [int(p) for p in text.split(",") if p]
    if not values:
        raise ContractViolation("empty value list")
    return values


def make_scenario(tag: str, n_d: int, n_t: int) -> Scenario:
    tag = tag.upper()
    if tag == SISO:
        return Scenario(SISO)
    if tag == MISO:
        return Scenario(MISO, n_d=n_d)
    if tag == SIMO:
        return Scenario(SIMO, n_t=n_t)
    if tag == MIMO:
        return Scenario(MIMO, n_d=n_d, n_t=n_t)
    raise ContractViolation(f"unknown scenario {tag!r}")


@dataclass
class SweepConfig:
    scenario: str
    k_values: list
    nd_values: list = field(default_factory=lambda: [1])
    nt_values: list = field(default_factory=lambda: [1])
    r_min: float = 1.0 / 1.2
    r_max: float = 1.0 / 0.8
    sigma2: float = 1.0
    power: float = 1.0
    draws: int = 1
    seed: int = 0
    methods: tuple = ("dlr", "fixed")
    out: str = "sweep.csv"
    jobs: int = 1

    def __post_init__(self):
        if not self.k_values or not self.nd_values or not self.nt_values:
            raise ContractViolation("sweep ranges must be non-empty")
        if self.draws < 1:
            raise ContractViolation("draws must be >= 1")
        if self.sigma2 <= 0 or self.power <= 0:
            raise ContractViolation("noise and power must be positive")
        for m in self.methods:
            if m not in METHODS:
                raise ContractViolation(f"unknown method {m!r}")

    def points(self) -> list:
        return [
            (k, nd, nt)
            for k in self.k_values
            for nd in self.nd_values
            for nt in self.nt_values
        ]


def _point_seed(seed: int, k: int, nd: int, nt: int, draw: int) -> int:
    return int(
        np.random.SeedSequence([seed, k, nd, nt, draw]).generate_state(1)[0]
    )


def _solve_point(scenario, channels, method, sigma2, power, bounds, seed):
    """One (channel realization, method) solve; returns the numeric cells."""
    k = channels.k
    p = np.full(k, power)
    start = time.perf_counter()
    if scenario.tag in (SISO, MISO):
        inst = MisoInstance(list(channels.channels), p, sigma2)
        if method == "fixed":
            sol = fixed_lr_solution(inst)
        elif method == "dlr":
            sol = solve_dlr_miso(inst, bounds)
        else:
            raise ContractViolation(
                "asymptotic beamformer needs a multi-antenna receiver"
            )
        mse = sol.mse
        tau = sol.objective ** 2
        lb = mse_lower_bound(inst)
    else:
        mats = [
            np.asarray(h, dtype=np.complex128).reshape(scenario.n_t, scenario.n_d)
            for h in channels.channels
        ]
        inst = MimoInstance(mats, p, sigma2)
        if method == "asymptotic":
            m = closed_form_beamformer(channels)
            dlr = solve_dlr_given_m(inst, m, bounds)
            mse, tau = dlr.mse, dlr.objective ** 2
        else:
            sweep_bounds = bounds if method == "dlr" else DlrBounds(1.0, 1.0)
            sol = solve_joint(inst, sweep_bounds, seed=seed)
            m, mse, tau = sol.m, sol.mse, sol.tau
        lb = mse_lower_bound_mimo(inst, m)
    seconds = time.perf_counter() - start
    return mse / sigma2, lb / sigma2, tau, seconds


def _sweep_job(payload):
    (index, tag, k, nd, nt, r_min, r_max, sigma2, power, seed, draw,
     methods) = payload
    scenario = make_scenario(tag, nd, nt)
    bounds = DlrBounds(r_min, r_max)
    chan_seed = _point_seed(seed, k, nd, nt, draw)
    channels = draw_channels(scenario, k, chan_seed)
    rows = []
    for method in methods:
        try:
            mse, lb, tau, seconds = _solve_point(
                scenario, channels, method, sigma2, power, bounds, chan_seed
            )
            status = "ok"
        except InfeasibleError:
            mse = lb = tau = seconds = float("nan")
            status = "infeasible"
        rows.append([
            scenario.tag, k, nd, nt, repr(r_min), repr(r_max), method, draw,
            repr(mse), repr(lb), repr(tau), f"{seconds:.6f}", status,
        ])
    return index, rows


def _aggregate_path(out: str) -> str:
    if out.endswith(".csv"):
        return out[:-4] + "_agg.csv"
    return out + "_agg.csv"


def run_sweep(config: SweepConfig) -> None:
    """Emit one row per (point, draw, method) plus a mean/std summary file."""
    jobs = []
    index = 0
    for (k, nd, nt) in config.points():
        for draw in range(config.draws):
            jobs.append((
                index, config.scenario, k, nd, nt, config.r_min, config.r_max,
                config.sigma2, config.power, config.seed, draw,
                tuple(config.methods),
            ))
            index += 1
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(job) for job in jobs]
    results.sort(key=lambda item: item[0])

    groups: dict = {}
    with open(config.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROW_COLUMNS)
        for _, rows in results:
            for row in rows:
                writer.writerow(row)
                if row[-1] == "ok":
                    key = tuple(row[:7])
                    groups.setdefault(key, []).append(
                        (float(row[8]), float(row[9]))
                    )
    with open(_aggregate_path(config.out), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_COLUMNS)
        for key in sorted(groups, key=lambda item: [str(v) for v in item]):
            values = np.array(groups[key])
            writer.writerow(list(key) + [
                values.shape[0],
                repr(float(values[:, 0].mean())),
                repr(float(values[:, 0].std())),
                repr(float(values[:, 1].mean())),
            ])


def run_bars(args) -> None:
    """Per-device equivalent channel power and DLR ratio, sorted by power."""
    scenario = make_scenario(args.scenario, args.nd, args.nt)
    channels = draw_channels(scenario, args.k, args.seed)
    sigma2 = db_to_linear(args.sigma2_db)
    power = db_to_linear(args.power_db)
    bounds = DlrBounds(args.rmin, args.rmax)
    p = np.full(args.k, power)
    if scenario.tag in (SISO, MISO):
        inst = MisoInstance(list(channels.channels), p, sigma2)
        sol = solve_dlr_miso(inst, bounds)
        gains = p * inst.norms ** 2
    else:
        mats = [
            np.asarray(h, dtype=np.complex128).reshape(scenario.n_t, scenario.n_d)
            for h in channels.channels
        ]
        inst = MimoInstance(mats, p, sigma2)
        joint = solve_joint(inst, bounds, seed=args.seed)
        sol = joint.dlr
        m = joint.m
        gains = p * np.array(
            [np.linalg.norm(m.conj() @ h) ** 2 for h in mats]
        )
    order = np.argsort(gains, kind="stable")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["device", "channel_gain", "dlr_value"])
        for dev in order:
            writer.writerow([int(dev), repr(float(gains[dev])),
                             repr(float(sol.r[dev]))])


def run_asymptotic(args) -> None:
    """Solved MSE against the large-antenna closed forms, per antenna count."""
    sigma2 = db_to_linear(args.sigma2_db)
    power = db_to_linear(args.power_db)
    bounds = DlrBounds(args.rmin, args.rmax)
    antennas = parse_int_list(args.antennas)
    tag = args.scenario.upper()
    if tag == MISO:
        regime = MISO_ND
    elif tag == SIMO:
        regime = SIMO_NT
    elif tag == MIMO:
        regime = MIMO_ND if args.grow == "nd" else MIMO_NT
    else:
        raise ContractViolation("asymptotic comparison needs MISO, SIMO or MIMO")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "scenario", "K", "antennas", "draw", "mse_over_sigma2",
            "theory_over_sigma2", "mean_abs_r_minus_1",
        ])
        for n in antennas:
            if regime in (MISO_ND, MIMO_ND):
                nd, nt = n, (args.nt if tag == MIMO else 1)
            else:
                nd, nt = (args.nd if tag == MIMO else 1), n
            scenario = make_scenario(tag, nd, nt)
            theory = theoretical_mse(
                regime, args.k, power, sigma2, n_d=nd, n_t=nt
            )
            for draw in range(args.draws):
                chan_seed = _point_seed(args.seed, args.k, nd, nt, draw)
                channels = draw_channels(scenario, args.k, chan_seed)
                p = np.full(args.k, power)
                if tag == MISO:
                    inst = MisoInstance(list(channels.channels), p, sigma2)
                    sol = solve_dlr_miso(inst, bounds)
                else:
                    mats = [
                        np.asarray(h, dtype=np.complex128).reshape(nt, nd)
                        for h in channels.channels
                    ]
                    inst = MimoInstance(mats, p, sigma2)
                    m = closed_form_beamformer(channels)
                    sol = solve_dlr_given_m(inst, m, bounds)
                writer.writerow([
                    scenario.tag, args.k, n, draw, repr(sol.mse / sigma2),
                    repr(theory.mse / sigma2),
                    repr(float(np.mean(np.abs(sol.r - 1.0)))),
                ])


def run_train(args) -> None:
    """Federated training over the analog channel; RoundLog rows per method."""
    sigma2 = db_to_linear(args.sigma2_db)  # --sigma2-db=-inf gives a noiseless run
    power = db_to_linear(args.power_db)
    scenario = make_scenario(args.scenario, args.nd, args.nt)
    system = SystemModel(scenario, np.full(args.k, power), sigma2)
    if args.task == "synthetic":
        train, test = synthetic_task(seed=args.seed)
    else:
        train = load_mnist_idx(args.mnist_images, args.mnist_labels)
        test = load_mnist_idx(args.mnist_test_images, args.mnist_test_labels)
        if args.subsample < 1.0:
            n = max(1, int(train.features.shape[0] * args.subsample))
            idx = np.random.default_rng(args.seed).permutation(
                train.features.shape[0]
            )[:n]
            train = type(train)(
                train.features[idx], train.labels[idx], train.n_classes
            )
    train = partition_equal(train, args.k, seed=args.seed)
    solvers = ["dlr", "fixed"] if args.solver == "both" else [args.solver]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "round", "loss", "acc", "e_sq", "retx"])
        for solver in solvers:
            config = TrainConfig(
                mu=args.mu, epochs=args.rounds, system=system,
                bounds=DlrBounds(args.rmin, args.rmax), seed=args.seed,
                solver=solver, beamformer=args.beamformer, arch=args.arch,
                hidden=args.hidden,
            )
            logs, _ = train_federated(train, test, config, args.k)
            for log in logs:
                writer.writerow([
                    solver, log.round, repr(log.loss), repr(log.accuracy),
                    repr(log.e_sq), log.retransmits,
                ])


def run_solve(args) -> None:
    """Solve one instance and print the solution summary."""
    scenario = make_scenario(args.scenario, args.nd, args.nt)
    sigma2 = db_to_linear(args.sigma2_db)
    power = db_to_linear(args.power_db)
    bounds = DlrBounds(args.rmin, args.rmax)
    channels = draw_channels(scenario, args.k, args.seed)
    mse, lb, tau, _ = _solve_point(
        scenario, channels, args.method, sigma2, power, bounds, args.seed
    )
    print(f"scenario={scenario.tag} K={args.k} N_d={scenario.n_d} "
          f"N_t={scenario.n_t} method={args.method}")
    print(f"mse/sigma2={mse:.6e} lower_bound/sigma2={lb:.6e} tau={tau:.6e}")


def _add_common(parser):
    parser.add_argument("--config", help="JSON file with flag defaults")
    parser.add_argument("--scenario", default="MISO",
                        choices=["SISO", "MISO", "SIMO", "MIMO",
                                 "siso", "miso", "simo", "mimo"])
    parser.add_argument("--nd", type=int, default=1)
    parser.add_argument("--nt", type=int, default=1)
    parser.add_argument("--rmin", type=float, default=1.0 / 1.2)
    parser.add_argument("--rmax", type=float, default=1.0 / 0.8)
    parser.add_argument("--sigma2-db", type=float, default=0.0)
    parser.add_argument("--power-db", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airdlr",
        description="Learning-rate-aware over-the-air aggregation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance and print it")
    _add_common(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--method", default="dlr", choices=list(METHODS))

    p = sub.add_parser("sweep-mse", help="MSE sweep over K / antenna counts")
    _add_common(p)
    p.add_argument("--k", default="2:20", help="int, list or lo:hi[:step]")
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--method", default="dlr,fixed",
                   help="comma-separated subset of dlr,fixed,asymptotic")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("bars", help="per-device gain vs DLR ratio")
    _add_common(p)
    p.add_argument("--k", type=int, default=10)

    p = sub.add_parser("asymptotic", help="compare against closed-form limits")
    _add_common(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--antennas", default="64,128,256,512")
    p.add_argument("--draws", type=int, default=5)
    p.add_argument("--grow", default="nd", choices=["nd", "nt"])

    p = sub.add_parser("train", help="federated training over the channel")
    _add_common(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--task", default="synthetic", choices=["synthetic", "mnist"])
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--solver", default="dlr", choices=["dlr", "fixed", "both"])
    p.add_argument("--beamformer", default="joint",
                   choices=["joint", "asymptotic"])
    p.add_argument("--arch", default="logistic", choices=["logistic", "mlp"])
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--subsample", type=float, default=0.1)
    p.add_argument("--mnist-images")
    p.add_argument("--mnist-labels")
    p.add_argument("--mnist-test-images")
    p.add_argument("--mnist-test-labels")
    return parser


def _apply_config_file(parser, argv):
    """Pre-scan for --config and install its values as parser defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        with open(known.config) as fh:
            values = json.load(fh)
        if not isinstance(values, dict):
            raise ContractViolation("config file must hold a JSON object")
        for sp in parser._subparsers._group_actions[0].choices.values():
            sp.set_defaults(**{
                key.replace("-", "_"): val for key, val in values.items()
            })


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.out is None:
            args.out = {
                "sweep-mse": "sweep.csv", "bars": "bars.csv",
                "asymptotic": "asymptotic.csv", "train": "train.csv",
            }.get(args.command)
        if args.command == "solve":
            run_solve(args)
        elif args.command == "sweep-mse":
            config = SweepConfig(
                scenario=args.scenario.upper(),
                k_values=parse_int_list(args.k),
                nd_values=[args.nd],
                nt_values=[args.nt],
                r_min=args.rmin,
                r_max=args.rmax,
                sigma2=db_to_linear(args.sigma2_db),
                power=db_to_linear(args.power_db),
                draws=args.draws,
                seed=args.seed,
                methods=tuple(m for m in args.method.split(",") if m),
                out=args.out,
                jobs=args.jobs,
            )
            run_sweep(config)
        elif args.command == "bars":
            run_bars(args)
        elif args.command == "asymptotic":
            run_asymptotic(args)
        elif args.command == "train":
            run_train(args)
        return 0
    except (ContractViolation, InfeasibleError, IdxFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
