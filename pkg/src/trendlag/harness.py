"""Experiment orchestration: leave-target-out datasets, CV, crisis, sweeps.

For every stock in the panel a separate model is trained to predict that
stock's gradient direction change from all other stocks' preceding-interval
gradients.  Three modes are supported:

* ``cross_validated``: five contiguous folds per stock; within each fold's
  training portion the most recent quarter is split off for early stopping,
  yielding the 60-20-20 train/validation/test arithmetic per fold.
* ``crisis``: one chronological split; everything before the boundary
  trains (validation = most recent quarter of it), the bounded window is
  the test set.  No cross-validation.
* ``bottleneck_sweep``: repeats the cross-validated experiment once per
  bottleneck width plus once without, with identical folds and seeds so
  the runs are directly comparable.

Reports carry per-stock model and baseline accuracies, Welch tests and
minimum differences against each baseline, box-whisker summaries, and full
provenance; they serialize to JSON and flatten to CSV.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import time as time_mod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import baselines, features, neural, stats, synth
from .errors import ConfigError, DataError
from .market_data import (
    PriceMatrix,
    TickTable,
    TimeGrid,
    fill_missing,
    format_timestamp,
    parse_ticks,
    parse_timestamp,
    select_consistent_stocks,
)

logger = logging.getLogger(__name__)

MODES = ("cross_validated", "crisis", "bottleneck_sweep")
BASELINE_SERIES = ("randomized", "class1", "class2", "bestof")
ALL_SERIES = ("model",) + BASELINE_SERIES


def derive_seed(*parts: Any) -> int:
    """Stable (process-independent) seed from arbitrary labelled parts."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


@dataclass
class ExperimentConfig:
    """One experiment run: data source, pipeline, network, and mode settings."""

    mode: str = "cross_validated"
    tick_csv: str | None = None
    matrix_csv: str | None = None
    synthetic: synth.SyntheticConfig | None = None
    step_size: int = 16
    grid_step_seconds: float = 60.0
    price_source: str = "auto"
    min_observed_fraction: float = 0.9
    stock_filter: tuple[str, ...] | None = None
    network: dict[str, Any] = field(default_factory=dict)
    bottleneck_widths: tuple[int, ...] = (1, 3, 5, 10)
    crisis_start: np.datetime64 | None = None
    crisis_end: np.datetime64 | None = None
    n_folds: int = 5
    shuffled_folds: bool = False
    jobs: int = 1
    out_dir: str = "results"
    seed: int = 0

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        sources = [s is not None for s in (self.tick_csv, self.matrix_csv, self.synthetic)]
        if sum(sources) != 1:
            raise ConfigError("exactly one data source (ticks, matrix, synthetic) is required")
        if self.step_size < 2:
            raise ConfigError("step_size must be >= 2")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.mode == "bottleneck_sweep" and not self.bottleneck_widths:
            raise ConfigError("bottleneck_sweep needs a non-empty width list")
        bad = set(self.network) - set(neural.NetworkConfig.__dataclass_fields__)
        if bad:
            raise ConfigError(f"unknown network setting(s): {', '.join(sorted(bad))}")
        if "input_dim" in self.network or "rng_seed" in self.network:
            raise ConfigError("input_dim and rng_seed are derived, not configurable")
        if self.mode == "crisis":
            if (self.crisis_start is None or self.crisis_end is None) and not (
                self.synthetic is not None and self.synthetic.regime_switch is not None
            ):
                raise ConfigError("crisis mode requires crisis_start and crisis_end")

    def resolved_crisis_window(self) -> tuple[np.datetime64, np.datetime64]:
        if self.crisis_start is not None and self.crisis_end is not None:
            return self.crisis_start, self.crisis_end
        assert self.synthetic is not None and self.synthetic.regime_switch is not None
        return synth.crisis_window(self.synthetic)

    def network_config(self, input_dim: int, rng_seed: int) -> neural.NetworkConfig:
        overrides = dict(self.network)
        if "hidden_layers" in overrides:
            overrides["hidden_layers"] = tuple(overrides["hidden_layers"])
        return neural.NetworkConfig(input_dim=input_dim, rng_seed=rng_seed, **overrides)


def load_price_matrix(config: ExperimentConfig) -> PriceMatrix:
    """Resolve the configured data source into a cleansed, aligned matrix."""
    if config.tick_csv is not None:
        table = parse_ticks(config.tick_csv)
        if not table.streams:
            raise DataError(f"{config.tick_csv}: no parseable tick rows")
        grid = _infer_grid(table, config.grid_step_seconds)
        matrix = fill_missing(table, grid, config.price_source)
    elif config.matrix_csv is not None:
        matrix = PriceMatrix.from_csv(config.matrix_csv)
    else:
        assert config.synthetic is not None
        matrix = synth.generate(config.synthetic)
    if config.stock_filter:
        matrix = matrix.restrict(config.stock_filter)
    return select_consistent_stocks(
        matrix, config.min_observed_fraction, config.step_size
    )


def _infer_grid(table: TickTable, step_seconds: float) -> TimeGrid:
    if step_seconds <= 0:
        raise ConfigError("grid_step_seconds must be positive")
    first = min(s[0].timestamp for s in table.streams.values())
    last = max(s[-1].timestamp for s in table.streams.values())
    step = np.timedelta64(int(round(step_seconds * 1000)), "ms")
    count = int((last - first) // step) + 1
    return TimeGrid.regular(first, timedelta(milliseconds=int(step / np.timedelta64(1, "ms"))), count)


@dataclass(frozen=True)
class StockResult:
    """Accuracies for one target stock (or the reason it was skipped)."""

    stock_id: str
    n_examples: int
    model_accuracy: float | None
    fold_accuracies: tuple[float, ...]
    randomized_accuracy: float | None
    class1_accuracy: float | None
    class2_accuracy: float | None
    bestof_accuracy: float | None
    skipped: bool = False
    skip_reason: str = ""

    def accuracy_for(self, series: str) -> float | None:
        return {
            "model": self.model_accuracy,
            "randomized": self.randomized_accuracy,
            "class1": self.class1_accuracy,
            "class2": self.class2_accuracy,
            "bestof": self.bestof_accuracy,
        }[series]


@dataclass
class ExperimentReport:
    """Everything one experiment produced, in JSON-serializable form."""

    mode: str
    step_size: int
    bottleneck: int | None
    stocks: tuple[StockResult, ...]
    mean_accuracies: dict[str, float]
    max_model_accuracy: float | None
    welch_tests: dict[str, stats.WelchResult | None]
    box_summaries: dict[str, stats.BoxStats | None]
    fold_hash: str
    provenance: dict[str, Any]

    def evaluated_stocks(self) -> tuple[StockResult, ...]:
        return tuple(r for r in self.stocks if not r.skipped)

    def accuracy_sample(self, series: str) -> np.ndarray:
        return np.array(
            [r.accuracy_for(series) for r in self.evaluated_stocks()], dtype=np.float64
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "step_size": self.step_size,
            "bottleneck": self.bottleneck,
            "stocks": [asdict(r) for r in self.stocks],
            "mean_accuracies": dict(self.mean_accuracies),
            "max_model_accuracy": self.max_model_accuracy,
            "welch_tests": {
                k: (asdict(v) if v is not None else None)
                for k, v in self.welch_tests.items()
            },
            "box_summaries": {
                k: (asdict(v) if v is not None else None)
                for k, v in self.box_summaries.items()
            },
            "fold_hash": self.fold_hash,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentReport":
        stocks = tuple(
            StockResult(**{**raw, "fold_accuracies": tuple(raw["fold_accuracies"])})
            for raw in data["stocks"]
        )
        welch = {
            k: (stats.WelchResult(**v) if v is not None else None)
            for k, v in data["welch_tests"].items()
        }
        box = {
            k: (
                stats.BoxStats(**{**v, "outliers": tuple(v["outliers"])})
                if v is not None
                else None
            )
            for k, v in data["box_summaries"].items()
        }
        return cls(
            mode=data["mode"],
            step_size=data["step_size"],
            bottleneck=data["bottleneck"],
            stocks=stocks,
            mean_accuracies=dict(data["mean_accuracies"]),
            max_model_accuracy=data["max_model_accuracy"],
            welch_tests=welch,
            box_summaries=box,
            fold_hash=data["fold_hash"],
            provenance=data["provenance"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))


def _contiguous_folds(
    n_examples: int, n_folds: int, shuffled: bool, seed: int
) -> list[np.ndarray]:
    """Disjoint covering folds; contiguous time blocks unless shuffled."""
    idx = np.arange(n_examples)
    if shuffled:
        idx = np.random.default_rng(seed).permutation(n_examples)
    return list(np.array_split(idx, n_folds))


def _fold_hash(folds: Sequence[np.ndarray], extra: str = "") -> str:
    h = hashlib.sha256()
    for f in folds:
        h.update(f.astype(np.int64).tobytes())
        h.update(b"|")
    h.update(extra.encode("utf-8"))
    return h.hexdigest()[:16]


def _train_and_predict(
    config: ExperimentConfig,
    x: np.ndarray,
    y: np.ndarray,
    train_idx: np.ndarray,
    val_idx: np.ndarray,
    test_idx: np.ndarray,
    rng_seed: int,
) -> np.ndarray:
    """Fit normalizer on the training split only, train, predict the test split."""
    params = features.fit_normalizer(x[train_idx])
    xn = features.apply_normalizer(params, x)
    net_config = config.network_config(input_dim=x.shape[1], rng_seed=rng_seed)
    model = neural.init(net_config)
    neural.train(model, (xn[train_idx], y[train_idx]), (xn[val_idx], y[val_idx]))
    return np.atleast_1d(neural.predict_class(model, xn[test_idx]))


def _batch_size(config: ExperimentConfig) -> int:
    return int(config.network.get("batch_size", neural.NetworkConfig.batch_size))


def _split_train_pool(pool: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Carve the validation quarter off the end of the (ordered) training pool."""
    n_val = pool.size // 4
    return pool[: pool.size - n_val], pool[pool.size - n_val :]


def _run_stock_cv(
    config: ExperimentConfig,
    stock_id: str,
    gradients: features.GradientMatrix,
    folds: list[np.ndarray],
    stock_seed: int,
) -> StockResult:
    x, y = features.dataset_arrays(gradients, stock_id)
    truth = features.truth_labels(y)
    n_examples = x.shape[0]
    batch = _batch_size(config)

    splits = []
    for f, test_idx in enumerate(folds):
        pool = np.concatenate([folds[g] for g in range(len(folds)) if g != f])
        train_idx, val_idx = _split_train_pool(pool)
        if test_idx.size == 0 or val_idx.size == 0:
            return _skipped(stock_id, n_examples, "too few examples for a 60-20-20 fold split")
        if train_idx.size < batch:
            return _skipped(
                stock_id,
                n_examples,
                f"fold training size {train_idx.size} below batch size {batch}",
            )
        splits.append((train_idx, val_idx, test_idx))

    oof = np.full(n_examples, -1, dtype=np.int64)
    fold_accs = []
    for f, (train_idx, val_idx, test_idx) in enumerate(splits):
        pred = _train_and_predict(
            config, x, y, train_idx, val_idx, test_idx, derive_seed(stock_seed, "fold", f)
        )
        oof[test_idx] = pred
        fold_accs.append(float(np.mean(pred == truth[test_idx])))

    model_set = baselines.PredictionSet(oof, truth, stock_id, "model")
    return _finish_stock(stock_id, model_set, tuple(fold_accs), float(np.mean(fold_accs)), stock_seed)


def _skipped(stock_id: str, n_examples: int, reason: str) -> StockResult:
    logger.info("skipping %s: %s", stock_id, reason)
    return StockResult(
        stock_id=stock_id,
        n_examples=n_examples,
        model_accuracy=None,
        fold_accuracies=(),
        randomized_accuracy=None,
        class1_accuracy=None,
        class2_accuracy=None,
        bestof_accuracy=None,
        skipped=True,
        skip_reason=reason,
    )


def _finish_stock(
    stock_id: str,
    model_set: baselines.PredictionSet,
    fold_accs: tuple[float, ...],
    model_accuracy: float,
    stock_seed: int,
) -> StockResult:
    randomized = baselines.randomized_baseline(model_set, derive_seed(stock_seed, "shuffle"))
    class1 = baselines.class_baseline(model_set.truth, 1, stock_id)
    class2 = baselines.class_baseline(model_set.truth, 2, stock_id)
    return StockResult(
        stock_id=stock_id,
        n_examples=int(model_set.truth.size),
        model_accuracy=model_accuracy,
        fold_accuracies=fold_accs,
        randomized_accuracy=baselines.accuracy(randomized),
        class1_accuracy=baselines.accuracy(class1),
        class2_accuracy=baselines.accuracy(class2),
        bestof_accuracy=baselines.bestof_accuracy(randomized, class1, class2),
    )


def _run_per_stock(config: ExperimentConfig, worker, stock_ids: Sequence[str]) -> list[StockResult]:
    """Run one task per stock, optionally in parallel; order is preserved.

    Each task owns its seed-derived generators, so the degree of
    parallelism cannot perturb results.
    """
    if config.jobs == 1:
        return [worker(s) for s in stock_ids]
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(worker, stock_ids))


def _config_snapshot(config: ExperimentConfig) -> dict[str, Any]:
    snap: dict[str, Any] = {
        "mode": config.mode,
        "tick_csv": config.tick_csv,
        "matrix_csv": config.matrix_csv,
        "step_size": config.step_size,
        "grid_step_seconds": config.grid_step_seconds,
        "price_source": config.price_source,
        "min_observed_fraction": config.min_observed_fraction,
        "stock_filter": list(config.stock_filter) if config.stock_filter else None,
        "network": dict(config.network),
        "bottleneck_widths": list(config.bottleneck_widths),
        "crisis_start": format_timestamp(config.crisis_start) if config.crisis_start is not None else None,
        "crisis_end": format_timestamp(config.crisis_end) if config.crisis_end is not None else None,
        "n_folds": config.n_folds,
        "shuffled_folds": config.shuffled_folds,
        "jobs": config.jobs,
        "seed": config.seed,
    }
    if config.synthetic is not None:
        syn = asdict(config.synthetic)
        if syn["coupling_matrix"] is not None:
            syn["coupling_matrix"] = np.asarray(syn["coupling_matrix"]).tolist()
        if syn["regime_switch"] is not None:
            syn["regime_switch"] = dict(syn["regime_switch"])
        snap["synthetic"] = syn
    else:
        snap["synthetic"] = None
    if "hidden_layers" in snap["network"]:
        snap["network"]["hidden_layers"] = list(snap["network"]["hidden_layers"])
    return snap


def _provenance(config: ExperimentConfig, stock_seeds: dict[str, int], t0: float) -> dict[str, Any]:
    from . import __version__

    return {
        "config": _config_snapshot(config),
        "master_seed": config.seed,
        "stock_seeds": stock_seeds,
        "library_version": __version__,
        "wall_clock_seconds": time_mod.perf_counter() - t0,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _assemble_report(
    config: ExperimentConfig,
    bottleneck: int | None,
    results: list[StockResult],
    fold_hash: str,
    stock_seeds: dict[str, int],
    t0: float,
) -> ExperimentReport:
    evaluated = [r for r in results if not r.skipped]
    mean_accuracies: dict[str, float] = {}
    welch_tests: dict[str, stats.WelchResult | None] = {}
    box_summaries: dict[str, stats.BoxStats | None] = {}
    max_model = None
    if evaluated:
        samples = {
            series: np.array([r.accuracy_for(series) for r in evaluated])
            for series in ALL_SERIES
        }
        mean_accuracies = {s: float(v.mean()) for s, v in samples.items()}
        max_model = float(samples["model"].max())
        for series in BASELINE_SERIES:
            if len(evaluated) >= 2:
                try:
                    welch_tests[series] = stats.welch_upper_tail(
                        samples["model"], samples[series], stats.DEFAULT_ALPHA
                    )
                except ValueError:
                    welch_tests[series] = None
            else:
                welch_tests[series] = None
        for series in ALL_SERIES:
            box_summaries[series] = (
                stats.box_stats(samples[series]) if len(evaluated) >= 5 else None
            )
    else:
        welch_tests = {series: None for series in BASELINE_SERIES}
        box_summaries = {series: None for series in ALL_SERIES}
    return ExperimentReport(
        mode=config.mode,
        step_size=config.step_size,
        bottleneck=bottleneck,
        stocks=tuple(results),
        mean_accuracies=mean_accuracies,
        max_model_accuracy=max_model,
        welch_tests=welch_tests,
        box_summaries=box_summaries,
        fold_hash=fold_hash,
        provenance=_provenance(config, stock_seeds, t0),
    )


def run_cross_validated(
    config: ExperimentConfig, matrix: PriceMatrix | None = None
) -> ExperimentReport:
    """Five-fold leave-target-out experiment over every stock in the panel."""
    t0 = time_mod.perf_counter()
    config.validate()
    if matrix is None:
        matrix = load_price_matrix(config)
    gradients = features.build_gradients(matrix, config.step_size)
    if gradients.n_intervals < 2:
        raise DataError("need at least 2 gradient intervals to build labels")
    n_examples = gradients.n_intervals - 1
    folds = _contiguous_folds(
        n_examples, config.n_folds, config.shuffled_folds, derive_seed(config.seed, "folds")
    )
    fold_hash = _fold_hash(folds, extra=f"n={n_examples}")
    stock_seeds = {s: derive_seed(config.seed, s) for s in gradients.stock_ids}

    def worker(stock_id: str) -> StockResult:
        return _run_stock_cv(config, stock_id, gradients, folds, stock_seeds[stock_id])

    results = _run_per_stock(config, worker, gradients.stock_ids)
    return _assemble_report(config, config.network.get("bottleneck"), results, fold_hash, stock_seeds, t0)


def run_crisis(config: ExperimentConfig, matrix: PriceMatrix | None = None) -> ExperimentReport:
    """Chronological split: train before the boundary, test inside it."""
    t0 = time_mod.perf_counter()
    config.validate()
    if config.mode != "crisis":
        config = replace(config, mode="crisis")
        config.validate()
    if matrix is None:
        matrix = load_price_matrix(config)
    gradients = features.build_gradients(matrix, config.step_size)
    if gradients.n_intervals < 2:
        raise DataError("need at least 2 gradient intervals to build labels")
    boundary_start, boundary_end = config.resolved_crisis_window()
    if boundary_end < boundary_start:
        raise DataError("crisis_end precedes crisis_start")
    # example i predicts interval i+1; it belongs to that interval's end time
    example_times = gradients.interval_timestamps[1:]
    train_idx = np.flatnonzero(example_times < boundary_start)
    test_idx = np.flatnonzero(
        (example_times >= boundary_start) & (example_times <= boundary_end)
    )
    if train_idx.size == 0 or test_idx.size == 0:
        raise DataError(
            f"crisis split [{format_timestamp(boundary_start)}, "
            f"{format_timestamp(boundary_end)}] leaves an empty side "
            f"(train={train_idx.size}, test={test_idx.size})"
        )
    fit_idx, val_idx = _split_train_pool(train_idx)
    fold_hash = _fold_hash([fit_idx, val_idx, test_idx], extra="crisis")
    stock_seeds = {s: derive_seed(config.seed, s) for s in gradients.stock_ids}
    batch = _batch_size(config)

    def worker(stock_id: str) -> StockResult:
        x, y = features.dataset_arrays(gradients, stock_id)
        truth = features.truth_labels(y)
        if val_idx.size == 0:
            return _skipped(stock_id, x.shape[0], "training side too small for a validation split")
        if fit_idx.size < batch:
            return _skipped(
                stock_id, x.shape[0],
                f"training size {fit_idx.size} below batch size {batch}",
            )
        pred = _train_and_predict(
            config, x, y, fit_idx, val_idx, test_idx,
            derive_seed(stock_seeds[stock_id], "crisis"),
        )
        test_truth = truth[test_idx]
        model_set = baselines.PredictionSet(pred, test_truth, stock_id, "model")
        accuracy = float(np.mean(pred == test_truth))
        return _finish_stock(stock_id, model_set, (accuracy,), accuracy, stock_seeds[stock_id])

    results = _run_per_stock(config, worker, gradients.stock_ids)
    return _assemble_report(config, config.network.get("bottleneck"), results, fold_hash, stock_seeds, t0)


def run_bottleneck_sweep(
    config: ExperimentConfig, matrix: PriceMatrix | None = None
) -> list[ExperimentReport]:
    """Cross-validated runs at each bottleneck width plus the unconstrained net.

    All runs share the data, folds, and per-stock seeds; only the
    architecture differs, so reports are directly comparable.
    """
    config.validate()
    if matrix is None:
        matrix = load_price_matrix(config)
    reports = []
    for width in tuple(config.bottleneck_widths) + (None,):
        run_cfg = replace(
            config,
            mode="cross_validated",
            network={**config.network, "bottleneck": width},
        )
        report = run_cross_validated(run_cfg, matrix=matrix)
        report.mode = "bottleneck_sweep"
        report.provenance["config"]["mode"] = "bottleneck_sweep"
        reports.append(report)
    return reports


def run(config: ExperimentConfig) -> ExperimentReport | list[ExperimentReport]:
    """Dispatch on config.mode."""
    config.validate()
    if config.mode == "cross_validated":
        return run_cross_validated(config)
    if config.mode == "crisis":
        return run_crisis(config)
    return run_bottleneck_sweep(config)


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def _stem(report: ExperimentReport) -> str:
    if report.mode == "bottleneck_sweep":
        width = "none" if report.bottleneck is None else str(report.bottleneck)
        return f"report_bottleneck_{width}"
    return f"report_{report.mode}"


def emit_report(
    report: ExperimentReport,
    out_dir: str | Path,
    formats: Sequence[str] = ("json", "csv"),
    stem: str | None = None,
) -> list[Path]:
    """Write the report as JSON and/or flat CSVs; returns the files written.

    The CSV flattening produces one row per stock and series; a companion
    ``*_box.csv`` carries the box-whisker numbers per series for external
    plotting.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or _stem(report)
    written: list[Path] = []
    for fmt in formats:
        if fmt == "json":
            path = out / f"{stem}.json"
            path.write_text(report.to_json())
            written.append(path)
        elif fmt == "csv":
            path = out / f"{stem}.csv"
            with open(path, "w") as fh:
                fh.write("stock_id,series,accuracy,n_examples,skipped,skip_reason\n")
                for r in report.stocks:
                    for series in ALL_SERIES:
                        acc = r.accuracy_for(series)
                        fh.write(
                            f"{r.stock_id},{series},"
                            f"{'' if acc is None else repr(acc)},"
                            f"{r.n_examples},{r.skipped},{r.skip_reason}\n"
                        )
            written.append(path)
            box_path = out / f"{stem}_box.csv"
            with open(box_path, "w") as fh:
                fh.write(
                    "series,median,q1,q3,whisker_low,whisker_high,"
                    "notch_half_width,outliers\n"
                )
                for series in ALL_SERIES:
                    b = report.box_summaries.get(series)
                    if b is None:
                        continue
                    outliers = ";".join(repr(v) for v in b.outliers)
                    fh.write(
                        f"{series},{b.median!r},{b.q1!r},{b.q3!r},"
                        f"{b.whisker_low!r},{b.whisker_high!r},"
                        f"{b.notch_half_width!r},{outliers}\n"
                    )
            written.append(box_path)
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
    return written


# ---------------------------------------------------------------------------
# Config file parsing (flat key-value INI with data/network/experiment/
# synthetic sections)
# ---------------------------------------------------------------------------

_DATA_KEYS = {
    "source", "tick_csv", "matrix_csv", "grid_step_seconds",
    "min_observed_fraction", "price_source", "stock_filter",
}
_NETWORK_KEYS = {
    "hidden_layers", "bottleneck", "output_dim", "learning_rate", "lr_decay",
    "momentum", "l2_lambda", "batch_size", "max_epochs",
    "early_stop_patience", "sigmoid_midpoint",
}
_EXPERIMENT_KEYS = {
    "mode", "step_size", "bottleneck_widths", "crisis_start", "crisis_end",
    "seed", "jobs", "out", "n_folds", "shuffled_folds",
}
_SYNTHETIC_KEYS = {
    "n_stocks", "n_steps", "ticks_per_step", "signal_strength", "noise_sigma",
    "drift", "micro_sigma", "signal_amplitude", "seed", "coupling_seed",
    "regime_switch_step", "crisis_drift", "crisis_sigma_multiplier",
    "start", "step_duration_seconds", "start_price",
}

_MODE_ALIASES = {
    "cross": "cross_validated",
    "cross_validated": "cross_validated",
    "crisis": "crisis",
    "bottleneck": "bottleneck_sweep",
    "bottleneck_sweep": "bottleneck_sweep",
}


def _check_keys(section: str, present, allowed: set[str]) -> None:
    unknown = set(present) - allowed
    if unknown:
        raise ConfigError(f"[{section}] has unknown key(s): {', '.join(sorted(unknown))}")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in text.split(",") if p.strip())


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Parse the flat key-value experiment config file."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    known_sections = {"data", "network", "experiment", "synthetic"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    config = ExperimentConfig()

    try:
        if parser.has_section("data"):
            sec = parser["data"]
            _check_keys("data", sec.keys(), _DATA_KEYS)
            source = sec.get("source", "").strip().lower()
            if source and source not in ("ticks", "matrix", "synthetic"):
                raise ConfigError(f"[data] source must be ticks, matrix, or synthetic, got {source!r}")
            if "tick_csv" in sec:
                config.tick_csv = sec["tick_csv"].strip()
            if "matrix_csv" in sec:
                config.matrix_csv = sec["matrix_csv"].strip()
            if "grid_step_seconds" in sec:
                config.grid_step_seconds = float(sec["grid_step_seconds"])
            if "min_observed_fraction" in sec:
                config.min_observed_fraction = float(sec["min_observed_fraction"])
            if "price_source" in sec:
                config.price_source = sec["price_source"].strip()
            if "stock_filter" in sec:
                names = tuple(p.strip() for p in sec["stock_filter"].split(",") if p.strip())
                config.stock_filter = names or None
            if source == "synthetic" and not parser.has_section("synthetic"):
                raise ConfigError("source=synthetic requires a [synthetic] section")
            if source == "ticks" and config.tick_csv is None:
                raise ConfigError("source=ticks requires tick_csv")
            if source == "matrix" and config.matrix_csv is None:
                raise ConfigError("source=matrix requires matrix_csv")

        if parser.has_section("synthetic"):
            sec = parser["synthetic"]
            _check_keys("synthetic", sec.keys(), _SYNTHETIC_KEYS)
            syn = synth.SyntheticConfig()
            if "n_stocks" in sec:
                syn.n_stocks = int(sec["n_stocks"])
            if "n_steps" in sec:
                syn.n_steps = int(sec["n_steps"])
            if "ticks_per_step" in sec:
                syn.ticks_per_step = int(sec["ticks_per_step"])
            if "signal_strength" in sec:
                syn.signal_strength = float(sec["signal_strength"])
            if "noise_sigma" in sec:
                syn.noise_sigma = float(sec["noise_sigma"])
            if "drift" in sec:
                syn.drift = float(sec["drift"])
            if "micro_sigma" in sec:
                syn.micro_sigma = float(sec["micro_sigma"])
            if "signal_amplitude" in sec:
                syn.signal_amplitude = float(sec["signal_amplitude"])
            if "seed" in sec:
                syn.seed = int(sec["seed"])
            if "coupling_seed" in sec:
                syn.coupling_matrix = synth.random_coupling(syn.n_stocks, int(sec["coupling_seed"]))
            if "regime_switch_step" in sec:
                syn.regime_switch = synth.RegimeSwitch(
                    switch_step=int(sec["regime_switch_step"]),
                    crisis_drift=float(sec.get("crisis_drift", "0")),
                    crisis_sigma_multiplier=float(sec.get("crisis_sigma_multiplier", "1")),
                )
            elif "crisis_drift" in sec or "crisis_sigma_multiplier" in sec:
                raise ConfigError("crisis_* settings require regime_switch_step")
            if "start" in sec:
                syn.start = sec["start"].strip()
            if "step_duration_seconds" in sec:
                syn.step_duration_seconds = float(sec["step_duration_seconds"])
            if "start_price" in sec:
                syn.start_price = float(sec["start_price"])
            config.synthetic = syn

        if parser.has_section("network"):
            sec = parser["network"]
            _check_keys("network", sec.keys(), _NETWORK_KEYS)
            net: dict[str, Any] = {}
            if "hidden_layers" in sec:
                net["hidden_layers"] = _parse_int_list(sec["hidden_layers"])
            if "bottleneck" in sec:
                raw = sec["bottleneck"].strip().lower()
                net["bottleneck"] = None if raw in ("", "none") else int(raw)
            for key, cast in (
                ("output_dim", int), ("learning_rate", float), ("lr_decay", float),
                ("momentum", float), ("l2_lambda", float), ("batch_size", int),
                ("max_epochs", int), ("early_stop_patience", int),
                ("sigmoid_midpoint", float),
            ):
                if key in sec:
                    net[key] = cast(sec[key])
            config.network = net

        if parser.has_section("experiment"):
            sec = parser["experiment"]
            _check_keys("experiment", sec.keys(), _EXPERIMENT_KEYS)
            if "mode" in sec:
                mode = sec["mode"].strip().lower()
                if mode not in _MODE_ALIASES:
                    raise ConfigError(f"unknown mode {mode!r}")
                config.mode = _MODE_ALIASES[mode]
            if "step_size" in sec:
                config.step_size = int(sec["step_size"])
            if "bottleneck_widths" in sec:
                config.bottleneck_widths = _parse_int_list(sec["bottleneck_widths"])
            if "crisis_start" in sec:
                config.crisis_start = parse_timestamp(sec["crisis_start"])
            if "crisis_end" in sec:
                config.crisis_end = parse_timestamp(sec["crisis_end"])
            if "seed" in sec:
                config.seed = int(sec["seed"])
            if "jobs" in sec:
                config.jobs = int(sec["jobs"])
            if "out" in sec:
                config.out_dir = sec["out"].strip()
            if "n_folds" in sec:
                config.n_folds = int(sec["n_folds"])
            if "shuffled_folds" in sec:
                config.shuffled_folds = _parse_bool(sec["shuffled_folds"])
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    config.validate()
    return config
