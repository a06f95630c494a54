"""Trend-gradient features, direction-change labels, and input normalization.

Each stock's price series is cut into disjoint windows of ``step_size``
consecutive rows; the least-squares slope over each window is that stock's
trend gradient for the interval.  Training examples pair all *other*
stocks' gradients at interval t-1 with a one-hot label saying whether the
target stock's gradient moved up or down from t-1 to t.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .market_data import PriceMatrix, format_timestamp

DOWN, UP = 0, 1  # one-hot component order: (down-change, up-change)


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares line over window-local abscissae 0..s-1."""

    intercept: float
    slope: float


def slope_weights(window: int) -> np.ndarray:
    """Weights w with slope = w @ y for the least-squares fit over x = 0..s-1."""
    if window < 2:
        raise ValueError(f"trend window must contain at least 2 prices, got {window}")
    x = np.arange(window, dtype=np.float64)
    dx = x - x.mean()
    return dx / (dx @ dx)


def fit_trend(prices: Sequence[float] | np.ndarray) -> RegressionFit:
    """Closed-form least-squares fit of one price window.

    Minimizes the squared residual sum over (intercept, slope); the slope
    is the trend gradient used throughout the pipeline.
    """
    y = np.asarray(prices, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("fit_trend expects a one-dimensional price window")
    s = y.size
    w = slope_weights(s)  # raises for s < 2
    slope = float(w @ y)
    intercept = float(y.mean() - slope * (s - 1) / 2.0)
    return RegressionFit(intercept=intercept, slope=slope)


@dataclass
class GradientMatrix:
    """Per-interval trend gradients: rows = N/s intervals, columns = stocks."""

    step_size: int
    stock_ids: tuple[str, ...]
    values: np.ndarray
    interval_timestamps: np.ndarray  # instant of each interval's end

    def __post_init__(self) -> None:
        self.stock_ids = tuple(self.stock_ids)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.interval_timestamps = np.asarray(self.interval_timestamps, dtype="datetime64[ms]")
        if self.values.shape[0] != self.interval_timestamps.size:
            raise DataError("gradient rows do not match interval timestamps")
        if self.values.shape[1] != len(self.stock_ids):
            raise DataError("gradient columns do not match stock ids")

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.values.shape[1]

    def column(self, stock_id: str) -> np.ndarray:
        return self.values[:, self.stock_ids.index(stock_id)]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("timestamp",) + self.stock_ids)
            for i in range(self.n_intervals):
                writer.writerow(
                    [format_timestamp(self.interval_timestamps[i])]
                    + [repr(float(v)) for v in self.values[i]]
                )


def build_gradients(matrix: PriceMatrix, step_size: int) -> GradientMatrix:
    """Slice the price matrix into disjoint windows and fit each one.

    Row k, column j holds the slope of stock j over price rows
    [k*s, (k+1)*s); the row count must divide exactly (use
    select_consistent_stocks to truncate first).
    """
    if step_size < 2:
        raise DataError(f"gradient step size must be >= 2, got {step_size}")
    n_rows = matrix.n_rows
    if n_rows % step_size != 0:
        raise DataError(
            f"{n_rows} price rows are not divisible by step size {step_size}"
        )
    k = n_rows // step_size
    blocks = matrix.values.reshape(k, step_size, matrix.n_stocks)
    slopes = np.tensordot(blocks, slope_weights(step_size), axes=([1], [0]))
    ends = matrix.grid.instants[step_size - 1 :: step_size]
    return GradientMatrix(
        step_size=step_size,
        stock_ids=matrix.stock_ids,
        values=slopes,
        interval_timestamps=ends,
    )


@dataclass(frozen=True)
class LabeledExample:
    """One training example for one target stock.

    ``inputs`` holds the other stocks' gradients at interval t-1 (the
    target's own gradient is excluded); ``target`` is the one-hot
    (down-change, up-change) pair for the move from t-1 to t.
    """

    inputs: np.ndarray
    target: np.ndarray
    target_stock: str
    interval_index: int


def dataset_arrays(
    gradients: GradientMatrix, target_stock: str
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized leave-target-out dataset: (inputs, one-hot targets).

    Row i corresponds to predicted interval t = i+1.  An exact tie
    g(t) == g(t-1) is labeled as a down-change so labels always partition.
    """
    if gradients.n_intervals < 2:
        raise DataError("need at least 2 gradient rows to build labels")
    try:
        j = gradients.stock_ids.index(target_stock)
    except ValueError:
        raise DataError(f"unknown target stock {target_stock!r}") from None
    inputs = np.delete(gradients.values[:-1], j, axis=1)
    diff = np.diff(gradients.values[:, j])
    targets = np.zeros((diff.size, 2), dtype=np.float64)
    up = diff > 0
    targets[up, UP] = 1.0
    targets[~up, DOWN] = 1.0
    return inputs, targets


def build_labels(gradients: GradientMatrix, target_stock: str) -> list[LabeledExample]:
    """Per-interval LabeledExamples for one target stock (t = 1..rows-1)."""
    inputs, targets = dataset_arrays(gradients, target_stock)
    return [
        LabeledExample(
            inputs=inputs[i],
            target=targets[i],
            target_stock=target_stock,
            interval_index=i + 1,
        )
        for i in range(inputs.shape[0])
    ]


def truth_labels(targets: np.ndarray) -> np.ndarray:
    """Collapse one-hot targets to integer labels (DOWN=0, UP=1)."""
    return np.argmax(np.asarray(targets), axis=-1).astype(np.int64)


@dataclass(frozen=True)
class NormalizationParams:
    """Per-feature minimum and maximum from the fitted (training) inputs."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "minimum", np.asarray(self.minimum, dtype=np.float64))
        object.__setattr__(self, "maximum", np.asarray(self.maximum, dtype=np.float64))
        if self.minimum.shape != self.maximum.shape:
            raise DataError("normalization min/max shapes differ")
        if (self.maximum < self.minimum).any():
            raise DataError("normalization max must be >= min per feature")


def fit_normalizer(training_inputs: np.ndarray) -> NormalizationParams:
    """Column-wise min/max over the training inputs only (leak-free)."""
    x = np.atleast_2d(np.asarray(training_inputs, dtype=np.float64))
    if x.size == 0:
        raise DataError("cannot fit a normalizer on an empty training set")
    return NormalizationParams(minimum=x.min(axis=0), maximum=x.max(axis=0))


def apply_normalizer(params: NormalizationParams, inputs: np.ndarray) -> np.ndarray:
    """Map inputs through (x - min) / (max - min) per feature.

    Values from the fitted set land in [0, 1]; unseen values may fall
    outside and are deliberately not clipped.  A constant feature
    (max == min) maps to the neutral midpoint 0.5.
    """
    x = np.asarray(inputs, dtype=np.float64)
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    out = (x - params.minimum) / safe
    return np.where(span > 0, out, 0.5)
