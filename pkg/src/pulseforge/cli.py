"""Command-line experiment runner.

Subcommands
-----------
train         train one model and write its report, loss history and parameters
sweep-layers  accuracy of the two-qubit pipeline over a grid of layer counts
sweep-noise   accuracy of the two-qubit pipeline over a grid of depolarizing strengths
verify        fast invariant checks
device        print a device description with its derived noise parameters
gen-data      write the synthetic circle dataset as CSV

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 data or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .datasets import DataError, dataset_from_csv, save_csv, split, synth_circle
from .models import params_to_dict
from .noise import DeviceFileError, NoisePolicy, describe_device, device_to_dict, load_device
from .training import TrainConfig, train, two_stage_train
from .verify import run_checks

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``dataset`` is ``"circle"`` or a CSV path.  ``epochs_1q`` is the length of
    the single-qubit stage of the two-qubit pipeline; ``train`` holds the
    optimizer settings of every stage (its seed is replaced per run).
    """

    variant: str | None = None
    n_qubits: int = 1
    layers: list = field(default_factory=lambda: [5])
    seeds: list = field(default_factory=lambda: [0])
    noise_enabled: bool = True
    spam_enabled: bool = True
    depolarizing_override_p: float | None = None
    noise_p: list = field(default_factory=lambda: [0.0, 0.1, 0.3])
    dataset: str = "circle"
    dataset_size: int = 300
    data_seed: int = 0
    pca: bool = True
    csv_header: bool | None = None
    n_train: int = 200
    n_test: int = 100
    split_seed: int = 0
    epochs_1q: int = 100
    train: dict = field(default_factory=lambda: {"epochs": 100})
    device: str = "builtin-brisbane"
    out: str = "results"

    def validate(self):
        if self.variant not in (None, "gate", "pulsed", "both"):
            raise ConfigError(f"variant must be gate, pulsed or both, got {self.variant!r}")
        if self.n_qubits not in (1, 2):
            raise ConfigError("n_qubits must be 1 or 2")
        if not self.layers or any(int(l) != l or l < 1 for l in self.layers):
            raise ConfigError("layers must be a non-empty list of positive integers")
        if not self.seeds or any(int(s) != s for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of integers")
        if not self.noise_p or any(not 0 <= p <= 1 for p in self.noise_p):
            raise ConfigError("noise_p must be a non-empty list of probabilities in [0, 1]")
        if self.depolarizing_override_p is not None and not 0 <= self.depolarizing_override_p <= 1:
            raise ConfigError("depolarizing_override_p must lie in [0, 1]")
        if self.n_train < 1 or self.n_test < 0:
            raise ConfigError("n_train must be positive and n_test non-negative")
        if self.dataset == "circle" and self.n_train + self.n_test > self.dataset_size:
            raise ConfigError("n_train + n_test exceeds dataset_size")
        if self.epochs_1q < 1:
            raise ConfigError("epochs_1q must be positive")
        self.train_config(0)
        return self

    def train_config(self, seed, epochs=None):
        opts = dict(self.train)
        if epochs is not None:
            opts["epochs"] = epochs
        opts["seed"] = int(seed)
        try:
            return TrainConfig(**opts)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"train: {exc}") from None

    def policy(self, override=None):
        p = self.depolarizing_override_p if override is None else override
        return NoisePolicy(enabled=self.noise_enabled, depolarizing_override_p=p, spam_enabled=self.spam_enabled)

    def variants(self, default="gate"):
        """Variants to run; ``None`` falls back to ``default`` ("both" for the sweeps)."""
        v = self.variant or default
        return ["gate", "pulsed"] if v == "both" else [v]

    def to_dict(self):
        return asdict(self)


def load_config(path):
    if path is None:
        return ExperimentConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def resolve_config(args):
    cfg = load_config(args.config)
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "seed", None):
        cfg.seeds = list(args.seed)
    if getattr(args, "layers", None) is not None:
        cfg.layers = args.layers
    if getattr(args, "noise_p", None) is not None:
        cfg.noise_p = args.noise_p
    if getattr(args, "variant", None) is not None:
        cfg.variant = args.variant
    if getattr(args, "no_noise", False):
        cfg.noise_enabled = False
    if getattr(args, "device", None) is not None:
        cfg.device = args.device
    if getattr(args, "data", None) is not None:
        cfg.dataset = args.data
    try:
        return cfg.validate()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from None


def load_dataset(cfg):
    if cfg.dataset == "circle":
        ds = synth_circle(cfg.dataset_size, cfg.data_seed)
    else:
        ds = dataset_from_csv(cfg.dataset, has_header=cfg.csv_header, reduce=cfg.pca)
    return split(ds, cfg.n_train, cfg.n_test, cfg.split_seed)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def _threads():
    try:
        return max(1, int(os.environ.get("PULSEFORGE_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _run_train(cfg, variant, seed, dev, train_set, test_set):
    policy = cfg.policy()
    layers = cfg.layers[0]
    stages = []
    if cfg.n_qubits == 1:
        stages.append(("1q", train(variant, layers, train_set, dev, policy, cfg.train_config(seed), test=test_set)))
    else:
        r1, r2 = two_stage_train(variant, layers, train_set, dev, policy,
                                 cfg.train_config(seed, cfg.epochs_1q), cfg.train_config(seed), test=test_set)
        stages.extend([("1q", r1), ("2q", r2)])
    return stages


def cmd_train(cfg):
    dev = load_device(cfg.device)
    train_set, test_set = load_dataset(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for variant in cfg.variants():
        for seed in cfg.seeds:
            stages = _run_train(cfg, variant, seed, dev, train_set, test_set)
            final = stages[-1][1]
            tag = f"{variant}_seed{seed}"
            rows = [(stage, k, _fmt(raw), _fmt(best))
                    for stage, r in stages
                    for k, (raw, best) in enumerate(zip(r.raw_loss_history, r.loss_history))]
            _write_csv(out / f"loss_history_{tag}.csv", ["stage", "epoch", "loss", "best_loss"], rows)
            _write_json(out / f"params_{tag}.json", params_to_dict(final.params))
            report = {
                "config": cfg.to_dict(),
                "device": device_to_dict(dev),
                "variant": variant,
                "seed": seed,
                "n_qubits": cfg.n_qubits,
                "layers": cfg.layers[0],
                "train_acc": final.train_accuracy,
                "test_acc": final.test_accuracy,
                "best_loss": final.best_loss,
                "stages": {stage: r.summary() for stage, r in stages},
            }
            _write_json(out / f"report_{tag}.json", report)
            print(f"{variant} seed={seed}: train_acc={final.train_accuracy:.3f} "
                  f"test_acc={_fmt(final.test_accuracy)} -> {out}")
    return EXIT_OK


def _pipeline_job(job):
    cfg, variant, layers, seed, override = job
    dev = load_device(cfg.device)
    train_set, test_set = load_dataset(cfg)
    _, r2 = two_stage_train(variant, layers, train_set, dev, cfg.policy(override),
                            cfg.train_config(seed, cfg.epochs_1q), cfg.train_config(seed), test=test_set)
    return r2.train_accuracy, r2.test_accuracy


def _run_grid(jobs):
    n = min(_threads(), len(jobs))
    if n <= 1:
        return [_pipeline_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_pipeline_job, jobs))


def _write_sweep(cfg, name, axis, jobs, results, axis_of):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sorted(
        ((variant, axis_of(job), seed, tr, te) for job, (tr, te) in zip(jobs, results)
         for (_, variant, _, seed, _) in [job]),
        key=lambda r: (r[0], r[1], r[2]),
    )
    _write_csv(out / f"{name}.csv", ["variant", axis, "seed", "train_acc", "test_acc"],
               [[r[0], _fmt(r[1]), r[2], _fmt(r[3]), _fmt(r[4])] for r in rows])
    groups = {}
    for r in rows:
        groups.setdefault((r[0], r[1]), []).append(r)
    med = [[v, _fmt(a), len(g), _fmt(statistics.median(x[3] for x in g)),
            _fmt(statistics.median(x[4] for x in g if x[4] is not None) if g[0][4] is not None else None)]
           for (v, a), g in sorted(groups.items())]
    _write_csv(out / f"{name}_median.csv", ["variant", axis, "n_seeds", "median_train_acc", "median_test_acc"], med)
    _write_json(out / f"{name}_config.json", {"config": cfg.to_dict()})
    for row in med:
        print(f"{row[0]:>6} {axis}={row[1]}: median train {row[3]}, test {row[4]}")
    print(f"wrote {out / (name + '.csv')}")
    return EXIT_OK


def cmd_sweep_layers(cfg):
    load_device(cfg.device)
    load_dataset(cfg)
    jobs = [(cfg, v, L, s, None) for v in cfg.variants("both") for L in cfg.layers for s in cfg.seeds]
    return _write_sweep(cfg, "sweep_layers", "L", jobs, _run_grid(jobs), lambda j: j[2])


def cmd_sweep_noise(cfg):
    if not cfg.noise_enabled:
        raise ConfigError("sweep-noise varies the depolarizing strength and needs noise enabled")
    load_device(cfg.device)
    load_dataset(cfg)
    jobs = [(cfg, v, cfg.layers[0], s, float(p)) for v in cfg.variants("both") for p in cfg.noise_p for s in cfg.seeds]
    return _write_sweep(cfg, "sweep_noise", "p", jobs, _run_grid(jobs), lambda j: j[4])


def cmd_verify(device_source):
    results = run_checks(device_source)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<24} {r.detail}  ({r.seconds:.2f} s)")
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "verification FAILED")
    return EXIT_OK if ok else EXIT_VERIFY


def format_device(dev):
    """Human-readable device table in datasheet units."""
    d = device_to_dict(dev)
    derived = describe_device(dev)
    g = lambda v: "-" if v is None else f"{v:g}"  # noqa: E731
    lines = [
        f"device: {d['name']}",
        f"  coupling: {g(d['coupling_ghz'])} GHz   2Q time: {g(d['twoq_time_ns'])} ns   ECR err: {g(d['ecr_err'])}",
    ]
    for i, q in enumerate(d["qubits"], start=1):
        lines.append(
            f"  qubit {i}: T1 {g(q['t1_us'])} us, T2 {g(q['t2_us'])} us, freq {g(q['freq_ghz'])} GHz, "
            f"anh. {g(q['anharmonicity_ghz'])} GHz, 1Q time {g(q['oneq_time_ns'])} ns"
        )
        lines.append(
            f"           RO err {g(q['readout_err'])}, P(0|1) {g(q['p0_given_1'])}, P(1|0) {g(q['p1_given_0'])}, "
            f"Rz err {g(q['rz_err'])}, SX err {g(q['sx_err'])}, X err {g(q['x_err'])}, p_prep {g(q['p_prep'])}"
        )
    lines.append("derived:")
    lines.append(f"  Delta_12 = {derived['detuning_12_rad_per_ns']:.9g} rad/ns, "
                 f"J = {derived['coupling_J_rad_per_ns']:.9g} rad/ns, mu = {derived['mu']:.9g}, nu = {derived['nu']:.9g}")
    for q in derived["qubits"]:
        lines.append(
            f"  qubit {q['qubit']}: depolarizing p = {q['depolarizing_p']:.9g}, "
            f"gamma(1Q) = {q['gamma_1q']:.9g}, lambda(1Q) = {q['lambda_1q']:.9g}, "
            f"gamma(2Q) = {q['gamma_2q']:.9g}, lambda(2Q) = {q['lambda_2q']:.9g}"
        )
    return "\n".join(lines)


def cmd_device(source):
    dev = load_device(source)
    print(format_device(dev))
    print(json.dumps({"device": device_to_dict(dev), "derived": describe_device(dev)}, indent=2))
    return EXIT_OK


def cmd_gen_data(cfg, seed=None):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = synth_circle(cfg.dataset_size, cfg.data_seed if seed is None else seed)
    path = out / "circle.csv"
    save_csv(ds, path)
    print(f"wrote {len(ds)} samples to {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="pulseforge", description="Pulse-level quantum classifier simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grids=False):
        p.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, action="append", metavar="N", help="training seed (repeatable)")
        p.add_argument("--variant", choices=("gate", "pulsed", "both"))
        p.add_argument("--no-noise", action="store_true", help="disable every noise channel and SPAM")
        p.add_argument("--device", metavar="PATH|builtin-brisbane")
        p.add_argument("--data", metavar="PATH|circle", help="dataset source")
        p.add_argument("--layers", type=_int_list, metavar="LIST", help="comma-separated layer counts")
        if grids:
            p.add_argument("--noise-p", type=_float_list, metavar="LIST", help="comma-separated depolarizing strengths")

    common(sub.add_parser("train", help="train one model"))
    common(sub.add_parser("sweep-layers", help="accuracy versus layer count (two-qubit pipeline)"))
    common(sub.add_parser("sweep-noise", help="accuracy versus depolarizing strength (two-qubit pipeline)"), grids=True)
    p = sub.add_parser("verify", help="run the fast invariant checks")
    p.add_argument("--device", metavar="PATH|builtin-brisbane", default="builtin-brisbane")
    p = sub.add_parser("device", help="show a device description")
    p.add_argument("--device", metavar="PATH|builtin-brisbane", default="builtin-brisbane")
    p = sub.add_parser("gen-data", help="write the synthetic circle dataset as CSV")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", type=int, action="append", metavar="N", help="data seed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.device)
        if args.command == "device":
            return cmd_device(args.device)
        if args.command == "gen-data":
            seed = args.seed[0] if args.seed else None
            args.seed = None
            return cmd_gen_data(resolve_config(args), seed)
        cfg = resolve_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "sweep-layers":
            return cmd_sweep_layers(cfg)
        return cmd_sweep_noise(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DeviceFileError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
