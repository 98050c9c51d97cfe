"""Command-line experiment runner.

    vqc-lottery run --dataset iris2 --model mvqc --mode weak-iterative --out runs/a
    vqc-lottery summarize runs/a
    vqc-lottery plot-data runs/a --kind weak-curve --out curve.csv

``run`` writes ``config.json``, ``records.jsonl`` (one JSON object per
line) and ``summary.csv`` into the output directory. Floats are written
with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import lth
from .data import DATASET_NAMES, Dataset, load_builtin, load_csv
from .errors import ConfigError, ContractError, VQCLotteryError
from .models import FAMILIES, ModelSpec
from .training import TrainConfig

log = logging.getLogger("vqc_lottery")

MODES = ("weak-iterative", "weak-oneshot", "strong-ea")
RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.csv"
CONFIG_FILE = "config.json"

# Tuned hyperparameters per (dataset, model):
# learning rate, weight decay, layers, data re-uploading, init range.
PRESETS = {
    ("iris2", "bvqc"): (0.0061690543775444456, 0.00011451748647630793, 10, False, 1.78340734641020670),
    ("iris2", "mvqc"): (0.1404603283295513300, 0.00020043419481312650, 15, False, 0.34099999999999997),
    ("iris2", "snn"): (0.0189753941329335250, 0.00037958686849631810, None, None, None),
    ("iris", "mvqc"): (0.0276674656133278770, 0.00014188599748059832, 16, False, 0.99700000000000000),
    ("iris", "snn"): (0.0412876064499254560, 0.00011458294311477400, None, None, None),
    ("wine2", "bvqc"): (0.0341163513021525840, 0.00048832766322303640, 14, False, 0.76659265358979310),
    ("wine2", "mvqc"): (0.0469360377064666600, 0.00017400041959447874, 9, False, 0.13840734641020713),
    ("wine2", "snn"): (0.0012576386169755418, 0.00077375502517089950, None, None, None),
    ("wine", "mvqc"): (0.0562921735356738800, 0.00033968499286871637, 16, False, 0.35300000000000000),
    ("wine", "snn"): (0.0574452822141239800, 0.00010743993876395757, None, None, None),
}

# iterative pruning stops once at most this fraction of prunable weights remains
DEFAULT_RW_FRACTION = 0.08


@dataclass
class ExperimentConfig:
    dataset: str = "iris2"
    model: str = "mvqc"
    mode: str = "weak-iterative"
    seeds: list = field(default_factory=lambda: list(range(10)))
    learning_rate: float = 0.01
    weight_decay: float = 0.0
    epochs: int = 100
    batch_size: int = 16
    n_layers: int = 1
    data_reuploading: bool = False
    init_range: float = math.pi
    hidden_width: int = 24
    label_column: int = -1
    train_fraction: float = 0.8
    rw_threshold: int | None = None
    ratios: list | None = None
    rounding: str = "floor"
    generations: int = 20
    population: int = 30
    mutation_rate: float = 0.05
    migrant_keep_prob: float = 0.5

    def validate(self) -> None:
        if self.model not in FAMILIES:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {FAMILIES}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.dataset not in DATASET_NAMES and not Path(self.dataset).is_file():
            raise ConfigError(f"unknown dataset {self.dataset!r}: not a built-in name or an existing file")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be a nonempty list without duplicates")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if self.rounding not in ("floor", "round"):
            raise ConfigError("rounding must be 'floor' or 'round'")
        if self.rw_threshold is not None and self.rw_threshold < 0:
            raise ConfigError("rw_threshold must be >= 0")
        if self.ratios is not None:
            if any(not 0 < r < 1 for r in self.ratios) or any(b <= a for a, b in zip(self.ratios, self.ratios[1:])):
                raise ConfigError("ratios must lie in (0, 1) and be strictly increasing")
        if self.generations < 1 or self.population < 6:
            raise ConfigError("need generations >= 1 and population >= 6")
        if not 0 <= self.mutation_rate <= 1:
            raise ConfigError("mutation_rate must lie in [0, 1]")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        self.train_config()

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.weight_decay, self.epochs, self.batch_size, 0)

    def ea_config(self) -> lth.EAConfig:
        try:
            return lth.EAConfig(mutation_rate=self.mutation_rate, migrant_keep_prob=self.migrant_keep_prob)
        except ContractError as exc:
            raise ConfigError(str(exc)) from None

    def model_spec(self, dataset: Dataset) -> ModelSpec:
        return ModelSpec(
            self.model,
            dataset.n_features,
            dataset.n_classes,
            n_layers=self.n_layers,
            data_reuploading=self.data_reuploading,
            init_uniform_range=self.init_range,
            hidden_width=self.hidden_width,
        )

    def load_dataset(self) -> Dataset:
        if self.dataset in DATASET_NAMES:
            return load_builtin(self.dataset)
        return load_csv(self.dataset, label_column=self.label_column)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def preset_values(dataset: str, model: str) -> dict:
    """Tuned defaults for a built-in (dataset, model) pair, or ``{}``."""
    row = PRESETS.get((dataset, model))
    if row is None:
        return {}
    lr, wd, layers, dru, rng = row
    out = {"learning_rate": lr, "weight_decay": wd}
    if layers is not None:
        out.update(n_layers=layers, data_reuploading=dru, init_range=rng)
    return out


def build_config(base: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults < preset for (dataset, model) < config file < flags."""
    merged = dict(base or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    dataset = merged.get("dataset", ExperimentConfig.dataset)
    model = merged.get("model", ExperimentConfig.model)
    values = preset_values(dataset, model)
    values.update(merged)
    try:
        config = ExperimentConfig.from_dict(values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    config.validate()
    return config


# --- execution ------------------------------------------------------------


def _run_seed(config: ExperimentConfig, seed: int) -> list:
    dataset = config.load_dataset()
    spec = config.model_spec(dataset)
    tc = config.train_config()
    if config.mode == "weak-iterative":
        threshold = config.rw_threshold
        if threshold is None:
            threshold = int(math.floor(DEFAULT_RW_FRACTION * spec.n_prunable))
        return lth.run_iterative([seed], threshold, spec, tc, dataset,
                                 rounding=config.rounding, train_fraction=config.train_fraction)
    if config.mode == "weak-oneshot":
        ratios = lth.default_ratios() if config.ratios is None else config.ratios
        return lth.run_oneshot([seed], ratios, spec, tc, dataset,
                               rounding=config.rounding, train_fraction=config.train_fraction)
    return lth.run_ea([seed], config.generations, config.population, spec, config.ea_config(),
                      dataset, train_fraction=config.train_fraction)


def execute(config: ExperimentConfig, workers: int = 1) -> list:
    """Run every seed (in a bounded process pool when ``workers > 1``)."""
    config.validate()
    # surface dataset/model mismatches before any work starts
    config.model_spec(config.load_dataset())
    seeds = list(config.seeds)
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            chunks = list(pool.map(_run_seed, [config] * len(seeds), seeds))
    else:
        chunks = [_run_seed(config, s) for s in seeds]
    return [r for chunk in chunks for r in chunk]


# --- records and tables -----------------------------------------------------


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def _record_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "weak":
        return lth.RunRecord.from_dict(d)
    if kind == "ea":
        return lth.EARecord.from_dict(d)
    raise ContractError(f"unrecognised record kind {kind!r}")


def _record_files(paths) -> list:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.rglob(RECORDS_FILE)))
        elif p.is_file():
            files.append(p)
        else:
            raise ContractError(f"{p}: no such file or directory")
    return files


def read_records(paths) -> list:
    """Records from ``records.jsonl`` files or directories containing them."""
    out = []
    for f in _record_files(paths):
        with open(f, encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                if line.strip():
                    try:
                        out.append(_record_from_dict(json.loads(line)))
                    except (json.JSONDecodeError, KeyError) as exc:
                        raise ContractError(f"{f}:{n}: malformed record ({exc})") from None
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _table(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


RUN_HEADER = ("mode", "dataset", "model", "seed", "round", "remaining_count", "remaining_percent",
              "best_val_accuracy", "final_train_accuracy", "error")
EA_HEADER = ("mode", "dataset", "model", "seed", "generation", "best_fitness", "best_val_accuracy",
             "best_remaining_count", "best_remaining_percent", "mean_fitness")


def run_summary(records) -> str:
    """Per-record table written next to ``records.jsonl``."""
    weak = [r for r in records if isinstance(r, lth.RunRecord)]
    ea = [r for r in records if isinstance(r, lth.EARecord)]
    if weak and ea:
        raise ContractError("cannot mix weak and strong records in one summary")
    if ea:
        rows = [
            ("strong-ea", r.dataset, r.model, r.seed, g.generation, g.best_fitness, g.best_val_accuracy,
             g.best_remaining.count, g.best_remaining.percent, g.mean_fitness)
            for r in ea for g in r.generations
        ]
        return _table(EA_HEADER, rows)
    rows = [
        (r.mode, r.dataset, r.model, r.seed, r.round, r.remaining.count, r.remaining.percent,
         r.best_val_accuracy if r.history.val_accuracy else None,
         r.history.train_accuracy[-1] if r.history.train_accuracy else None, r.error)
        for r in weak
    ]
    return _table(RUN_HEADER, rows)


TICKET_HEADER = ("dataset", "model", "mode", "n_seeds", "unpruned_accuracy", "winning_ticket_percent",
                 "n_pruned_levels")


def summarize(records) -> str:
    """Winning-ticket table: one row per (dataset, model, mode)."""
    weak = [r for r in records if isinstance(r, lth.RunRecord)]
    if not weak:
        raise ContractError("no weak-LTH records to summarize")
    groups = {}
    for r in weak:
        groups.setdefault((r.dataset, r.model, r.mode), []).append(r)
    rows = []
    for key in sorted(groups):
        group = groups[key]
        levels = lth.level_accuracies(group)
        ticket = lth.detect_winning_ticket(group)
        rows.append((*key, len({r.seed for r in group}), levels[100.0],
                     "none" if ticket is None else ticket, sum(1 for k in levels if k < 100.0)))
    return _table(TICKET_HEADER, rows)


CURVE_HEADER = ("mode", "dataset", "model", "seed", "round", "remaining_percent", "epoch", "split", "accuracy")
TRACE_HEADER = ("dataset", "model", "seed", "generation", "split", "accuracy", "remaining_percent")


def plot_data(records, kind: str) -> str:
    """Long-format table for plotting accuracy curves or EA traces."""
    if kind not in ("weak-curve", "ea-trace"):
        raise ContractError(f"unknown plot kind {kind!r}")
    want = lth.RunRecord if kind == "weak-curve" else lth.EARecord
    if any(not isinstance(r, want) for r in records):
        raise ContractError(f"records do not all match plot kind {kind!r}")
    if kind == "weak-curve":
        rows = []
        for r in records:
            for epoch, (tr, va) in enumerate(zip(r.history.train_accuracy, r.history.val_accuracy)):
                base = (r.mode, r.dataset, r.model, r.seed, r.round, r.remaining.percent, epoch)
                rows.append((*base, "train", tr))
                rows.append((*base, "validation", va))
        return _table(CURVE_HEADER, rows)
    rows = [
        (r.dataset, r.model, r.seed, g.generation, "fitness", g.best_fitness, g.best_remaining.percent)
        for r in records for g in r.generations
    ]
    return _table(TRACE_HEADER, rows)


# --- argument parsing ---------------------------------------------------------


def _int_list(text: str) -> list:
    """``0-9``, ``1,3,5`` or a mix such as ``0-2,7``."""
    out = []
    try:
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    return out


def _float_list(text: str) -> list:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# flag -> (config field, type)
RUN_FLAGS = {
    "--dataset": ("dataset", str),
    "--model": ("model", str),
    "--mode": ("mode", str),
    "--seeds": ("seeds", _int_list),
    "--epochs": ("epochs", int),
    "--batch-size": ("batch_size", int),
    "--lr": ("learning_rate", float),
    "--weight-decay": ("weight_decay", float),
    "--layers": ("n_layers", int),
    "--reupload": ("data_reuploading", _bool),
    "--init-range": ("init_range", float),
    "--rw-threshold": ("rw_threshold", int),
    "--ratios": ("ratios", _float_list),
    "--generations": ("generations", int),
    "--population": ("population", int),
    "--mutation-rate": ("mutation_rate", float),
    "--rounding": ("rounding", str),
    "--train-fraction": ("train_fraction", float),
    "--label-column": ("label_column", int),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqc-lottery", description="Lottery-ticket experiments on simulated VQCs.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write records")
    for flag, (dest, typ) in RUN_FLAGS.items():
        run.add_argument(flag, dest=dest, type=typ, default=None)
    run.add_argument("--config", type=Path, help="JSON file with config fields; flags override it")
    run.add_argument("--workers", type=int, default=1, help="parallel seed workers")
    run.add_argument("--out", type=Path, required=True, help="output directory")

    summ = sub.add_parser("summarize", help="winning-ticket table from records")
    summ.add_argument("paths", nargs="+")
    summ.add_argument("--out", type=Path)

    plot = sub.add_parser("plot-data", help="long-format plotting table from records")
    plot.add_argument("paths", nargs="*")
    plot.add_argument("--kind", choices=("weak-curve", "ea-trace"), required=True)
    plot.add_argument("--out", type=Path)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _cmd_run(args) -> int:
    base = {}
    if args.config is not None:
        try:
            base = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {dest: getattr(args, dest) for dest, _ in RUN_FLAGS.values()}
    config = build_config(base, overrides)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    try:
        config.model_spec(config.load_dataset())
    except (ConfigError, ContractError) as exc:
        raise ConfigError(str(exc)) from None
    records = execute(config, args.workers)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_records(records, out / RECORDS_FILE)
    (out / SUMMARY_FILE).write_text(run_summary(records), encoding="utf-8")
    if config.mode != "strong-ea":
        sys.stdout.write(summarize(records))
    failed = [r for r in records if getattr(r, "error", None)]
    if failed:
        print(f"{len(failed)} run(s) hit numeric errors; see {out / RECORDS_FILE}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "summarize":
            _emit(summarize(read_records(args.paths)), args.out)
            return 0
        _emit(plot_data(read_records(args.paths), args.kind), args.out)
        return 0
    except ConfigError as exc:
        print(f"vqc-lottery: error: {exc}", file=sys.stderr)
        return 2
    except (VQCLotteryError, OSError, ValueError) as exc:
        print(f"vqc-lottery: {exc}", file=sys.stderr)
        return 1
