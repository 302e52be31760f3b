"""Experiment runner: config files, per-run metric CSVs, seed aggregates, sweeps."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import generate_synthetic, load_csv, train_test_split
from .errors import ConfigurationError
from .model import make_objective
from .optimizer import METRIC_COLUMNS, VARIANTS, MetricsRow, OptimizerConfig, train

METRICS_HEADER = "# d2p2-metrics v1"
AGGREGATE_HEADER = "# d2p2-aggregate v1"
REPORT_HEADER = "# d2p2-report v1"
AGG_METRICS = ("train_loss", "test_accuracy", "epsilon", "sigma_eps_k", "wall_ms")
AGGREGATE_COLUMNS = ("variant", "sweep_axis", "sweep_value", "epoch", "step", "n_seeds") + tuple(
    f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "min", "max")
)
REPORT_COLUMNS = ("sweep_axis", "sweep_value", "variant", "final_accuracy", "final_epsilon")

# sweep axis -> OptimizerConfig field
SWEEP_AXES = {"sigma_eps": "sigma_eps", "batch_size": "B", "reduction_rate": "reduction_rate"}

DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass
class ExperimentSpec:
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    variants: tuple[str, ...] = ("d2p2",)
    objective: str = "logistic"
    hidden: int = 32
    dataset: str = "synthetic"
    n: int = 4000
    d_feat: int = 50
    separation: float = 4.0
    data_seed: int = 0
    test_fraction: float = 0.2
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    out: Path = Path("results")
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigurationError(f"unknown optimizer variant {v!r}")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigurationError(f"unknown sweep axis {self.sweep_axis!r}")
            if not self.sweep_values:
                raise ConfigurationError("sweep axis given without values")
            for v in self.sweep_values:
                _check_axis_value(self.sweep_axis, v)
        self.out = Path(self.out)


def _check_axis_value(axis, v):
    if axis == "sigma_eps" and not v > 0:
        raise ConfigurationError("sigma_eps sweep values must be > 0")
    if axis == "batch_size" and (v < 1 or v != int(v)):
        raise ConfigurationError("batch_size sweep values must be positive integers")
    if axis == "reduction_rate" and not 0 <= v < 1:
        raise ConfigurationError("reduction_rate sweep values must lie in [0, 1)")


# ---- config files -------------------------------------------------------

def _bool(s):
    s = str(s).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _opt_str(s):
    s = str(s).strip()
    return None if s in ("", "none", "default") else s


# key -> (target, field, parser); target "opt" is OptimizerConfig, "spec" the ExperimentSpec
CONFIG_KEYS = {
    "optimizer": ("spec", "variants", lambda s: tuple(v.strip() for v in str(s).split(",") if v.strip())),
    "epochs": ("opt", "K_epochs", int),
    "batch_size": ("opt", "B", int),
    "lr": ("opt", "alpha", float),
    "sigma_eps": ("opt", "sigma_eps", float),
    "gamma": ("opt", "gamma", float),
    "clip_scale": ("opt", "G", float),
    "reduction_rate": ("opt", "reduction_rate", float),
    "sigma_a": ("opt", "sigma_A", float),
    "delta": ("opt", "delta", float),
    "projection": ("opt", "projection", _opt_str),
    "schedule": ("opt", "schedule", _opt_str),
    "clip_mode": ("opt", "clip_mode", _opt_str),
    "sampling": ("opt", "sampling", str),
    "eval_size": ("opt", "eval_size", int),
    "record_timing": ("opt", "record_timing", _bool),
    "seeds": ("spec", "seeds", _ints),
    "objective": ("spec", "objective", str),
    "hidden": ("spec", "hidden", int),
    "dataset": ("spec", "dataset", str),
    "n": ("spec", "n", int),
    "d_feat": ("spec", "d_feat", int),
    "separation": ("spec", "separation", float),
    "data_seed": ("spec", "data_seed", int),
    "test_fraction": ("spec", "test_fraction", float),
    "out": ("spec", "out", Path),
    "sweep_axis": ("spec", "sweep_axis", _opt_str),
    "sweep_values": ("spec", "sweep_values", _floats),
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip().lower().replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = val.strip()
    return out


def build_spec(values: dict[str, object]) -> ExperimentSpec:
    """Build a spec from raw key/values (config file entries overlaid with CLI flags)."""
    opt_kw, spec_kw = {}, {}
    for key, raw in values.items():
        if raw is None:
            continue
        target, name, parse = CONFIG_KEYS[key]
        try:
            val = parse(raw) if isinstance(raw, str) else raw
        except ValueError:
            raise ConfigurationError(f"bad value {raw!r} for {key}") from None
        (opt_kw if target == "opt" else spec_kw)[name] = val
    variants = spec_kw.get("variants", ("d2p2",))
    opt = OptimizerConfig(variant=variants[0], **opt_kw)
    return ExperimentSpec(optimizer=opt, **spec_kw)


def load_spec(path=None, overrides: dict[str, object] | None = None) -> ExperimentSpec:
    values: dict[str, object] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(), str(path)))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return build_spec(values)


# ---- running ------------------------------------------------------------

def load_data(spec: ExperimentSpec):
    if spec.dataset == "synthetic":
        full = generate_synthetic(spec.n, spec.d_feat, spec.separation, spec.data_seed)
    elif spec.dataset.startswith("csv:"):
        full = load_csv(spec.dataset[4:])
    else:
        raise ConfigurationError(f"unknown dataset source {spec.dataset!r}")
    return train_test_split(full, spec.test_fraction)


def _objective(spec: ExperimentSpec, train_data):
    n_classes = train_data.n_classes or 2
    return make_objective(spec.objective, train_data.width, n_classes, spec.hidden)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _fmt_point(v) -> str:
    return "" if v is None else _fmt(float(v))


def metrics_csv_text(rows: list[MetricsRow]) -> str:
    buf = io.StringIO()
    buf.write(METRICS_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in METRIC_COLUMNS])
    return buf.getvalue()


def read_metrics_csv(path) -> list[MetricsRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ConfigurationError(f"{path}: missing '{METRICS_HEADER}' header")
    reader = csv.DictReader(lines[1:])
    if tuple(reader.fieldnames or ()) != METRIC_COLUMNS:
        raise ConfigurationError(f"{path}: unexpected columns {reader.fieldnames}")
    ints = {"seed", "epoch", "step"}
    return [MetricsRow(**{k: (int(v) if k in ints else float(v)) for k, v in row.items()})
            for row in reader]


def run_file_name(variant: str, axis: str | None, point, seed: int) -> str:
    tag = f"_{axis}-{_fmt_point(point)}" if axis else ""
    return f"{variant}{tag}_seed{seed}.csv"


def _job(args):
    spec, variant, point, seed = args
    train_data, test_data = load_data(spec)
    obj = _objective(spec, train_data)
    kw = {"variant": variant, "seed": seed}
    if point is not None:
        val = point
        if spec.sweep_axis == "batch_size":
            val = int(point)
        kw[SWEEP_AXES[spec.sweep_axis]] = val
    cfg = replace(spec.optimizer, **kw)
    return train(cfg, obj, train_data, test_data)


def _threads() -> int:
    raw = os.environ.get("D2P2_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"D2P2_THREADS must be an integer, got {raw!r}") from None


@dataclass
class AggregateRow:
    variant: str
    sweep_axis: str
    sweep_value: str
    epoch: int
    step: int
    n_seeds: int
    stats: dict[str, tuple[float, float, float]]


@dataclass
class RunResult:
    run_files: list[Path]
    aggregate_file: Path
    aggregates: list[AggregateRow]
    runs: dict[tuple, list[MetricsRow]]


def aggregate(runs: dict[tuple, list[MetricsRow]], axis: str | None) -> list[AggregateRow]:
    """Per (variant, sweep point, epoch): mean/min/max of every metric across seeds."""
    groups: dict[tuple, list[list[MetricsRow]]] = {}
    for (variant, point, _seed), rows in runs.items():
        groups.setdefault((variant, point), []).append(rows)
    out = []
    for (variant, point), per_seed in groups.items():
        n_epochs = len(per_seed[0])
        for e in range(n_epochs):
            epoch_rows = [rows[e] for rows in per_seed]
            stats = {}
            for m in AGG_METRICS:
                vals = np.array([getattr(r, m) for r in epoch_rows], dtype=np.float64)
                stats[m] = (_mean(vals), float(vals.min()), float(vals.max()))
            out.append(AggregateRow(variant, axis or "", _fmt_point(point),
                                    epoch_rows[0].epoch, epoch_rows[0].step,
                                    len(epoch_rows), stats))
    return out


def _mean(vals):
    with np.errstate(invalid="ignore"):
        return float(vals.sum() / len(vals))


def aggregate_csv_text(rows: list[AggregateRow]) -> str:
    buf = io.StringIO()
    buf.write(AGGREGATE_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for r in rows:
        vals = [r.variant, r.sweep_axis, r.sweep_value, str(r.epoch), str(r.step), str(r.n_seeds)]
        for m in AGG_METRICS:
            vals.extend(_fmt(v) for v in r.stats[m])
        w.writerow(vals)
    return buf.getvalue()


def run(spec: ExperimentSpec) -> RunResult:
    """Train every (variant, sweep point, seed) and write per-run and aggregate CSVs."""
    points = list(spec.sweep_values) if spec.sweep_axis else [None]
    keys = [(v, p, s) for v in spec.variants for p in points for s in spec.seeds]
    jobs = [(spec, v, p, s) for v, p, s in keys]
    threads = min(_threads(), len(jobs))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    runs = dict(zip(keys, results))

    run_dir = spec.out / "runs"
    run_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for (variant, point, seed), rows in runs.items():
        path = run_dir / run_file_name(variant, spec.sweep_axis, point, seed)
        path.write_text(metrics_csv_text(rows))
        files.append(path)
    aggs = aggregate(runs, spec.sweep_axis)
    agg_path = spec.out / "aggregate.csv"
    agg_path.write_text(aggregate_csv_text(aggs))
    return RunResult(files, agg_path, aggs, runs)


@dataclass(frozen=True)
class ReportRow:
    sweep_axis: str
    sweep_value: str
    variant: str
    final_accuracy: float
    final_epsilon: float


def sweep_report(aggregates: list[AggregateRow]) -> list[ReportRow]:
    """Final-epoch mean accuracy and mean epsilon for each (sweep point, variant)."""
    last: dict[tuple, AggregateRow] = {}
    for r in aggregates:
        key = (r.sweep_value, r.variant)
        if key not in last or r.epoch > last[key].epoch:
            last[key] = r
    return [
        ReportRow(r.sweep_axis, r.sweep_value, r.variant,
                  r.stats["test_accuracy"][0], r.stats["epsilon"][0])
        for r in last.values()
    ]


def report_csv_text(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r.sweep_axis, r.sweep_value, r.variant,
                    _fmt(r.final_accuracy), _fmt(r.final_epsilon)])
    return buf.getvalue()


def format_report(rows: list[ReportRow]) -> str:
    lines = [f"{'sweep':>14} {'variant':>8} {'accuracy':>9} {'epsilon':>10}"]
    for r in rows:
        point = f"{r.sweep_axis}={r.sweep_value}" if r.sweep_axis else "-"
        lines.append(f"{point:>14} {r.variant:>8} {r.final_accuracy:9.4f} {r.final_epsilon:10.4g}")
    return "\n".join(lines)
