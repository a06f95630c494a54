"""Tick ingestion, missing-value fill, and time alignment of stock price series.

Raw per-transaction records arrive as CSV with the header
``stock_id,timestamp,bid,ask,volume,avg_price`` (ISO-8601 millisecond UTC
timestamps, empty field = missing).  The pipeline here is:

    parse_ticks -> fill_missing -> select_consistent_stocks

producing a PriceMatrix: a dense matrix of strictly positive prices with
rows on one shared uniform time grid and one column per stock, plus a mask
distinguishing observed cells from forward/backward-filled ones.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from datetime import datetime, time, timedelta, timezone
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

TICK_HEADER = ("stock_id", "timestamp", "bid", "ask", "volume", "avg_price")

# Price used per tick: average transaction price when present, else the
# bid/ask midpoint, else whichever single side exists.
PRICE_SOURCES = ("auto", "avg", "mid", "bid", "ask")


def parse_timestamp(text: str) -> np.datetime64:
    """Parse an ISO-8601 timestamp into UTC datetime64[ms].

    Accepts a trailing 'Z' or an explicit offset; naive timestamps are
    taken as UTC.  Raises ValueError on anything unparseable.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(dt, "ms")


def format_timestamp(ts: np.datetime64) -> str:
    """Inverse of parse_timestamp: millisecond ISO-8601 with 'Z' suffix."""
    return f"{np.datetime64(ts, 'ms')}Z"


@dataclass(frozen=True)
class TickRecord:
    """One raw transaction row.  Present price fields are strictly positive."""

    stock_id: str
    timestamp: np.datetime64
    bid: float | None = None
    ask: float | None = None
    volume: float | None = None
    avg_price: float | None = None

    def price(self, source: str = "auto") -> float | None:
        """Extract the price this record contributes to the matrix."""
        if source == "avg":
            return self.avg_price
        if source == "bid":
            return self.bid
        if source == "ask":
            return self.ask
        if source == "mid":
            if self.bid is not None and self.ask is not None:
                return 0.5 * (self.bid + self.ask)
            return None
        # auto: avg price, then midpoint, then whichever side exists
        if self.avg_price is not None:
            return self.avg_price
        if self.bid is not None and self.ask is not None:
            return 0.5 * (self.bid + self.ask)
        if self.bid is not None:
            return self.bid
        return self.ask


@dataclass
class TickTable:
    """Per-stock tick streams, each sorted by timestamp (stable within ties)."""

    streams: dict[str, list[TickRecord]]
    skipped: int = 0

    @property
    def stock_ids(self) -> tuple[str, ...]:
        return tuple(self.streams)

    @property
    def n_records(self) -> int:
        return sum(len(v) for v in self.streams.values())

    def records(self, stock_id: str) -> list[TickRecord]:
        return self.streams[stock_id]


def _parse_price_field(text: str) -> float | None:
    s = text.strip()
    if not s:
        return None
    value = float(s)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"non-positive price {value!r}")
    return value


def _parse_volume_field(text: str) -> float | None:
    s = text.strip()
    if not s:
        return None
    value = float(s)
    if not np.isfinite(value) or value < 0.0:
        raise ValueError(f"negative volume {value!r}")
    return value


def parse_ticks(source: str | Path | bytes | IO) -> TickTable:
    """Read a tick CSV stream into per-stock, time-sorted streams.

    A malformed header is fatal; individual rows that cannot be parsed
    (bad timestamp, non-positive price, wrong field count) are skipped
    and counted in ``TickTable.skipped``.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return parse_ticks(fh)
    if isinstance(source, bytes):
        return parse_ticks(io.BytesIO(source))
    raw = source.read()
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"tick stream is not valid UTF-8: {exc}") from exc
    else:
        text = raw

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("tick stream is empty (missing header)") from None
    if tuple(h.strip().lower() for h in header) != TICK_HEADER:
        raise DataError(
            f"malformed tick header {header!r}; expected {','.join(TICK_HEADER)}"
        )

    streams: dict[str, list[TickRecord]] = {}
    skipped = 0
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line
        if len(row) != len(TICK_HEADER):
            skipped += 1
            continue
        try:
            record = TickRecord(
                stock_id=row[0].strip(),
                timestamp=parse_timestamp(row[1]),
                bid=_parse_price_field(row[2]),
                ask=_parse_price_field(row[3]),
                volume=_parse_volume_field(row[4]),
                avg_price=_parse_price_field(row[5]),
            )
        except ValueError:
            skipped += 1
            continue
        if not record.stock_id:
            skipped += 1
            continue
        streams.setdefault(record.stock_id, []).append(record)

    for records in streams.values():
        records.sort(key=lambda r: r.timestamp)  # stable: row order kept on ties
    if skipped:
        logger.info("parse_ticks: skipped %d unparseable row(s)", skipped)
    return TickTable(streams=streams, skipped=skipped)


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sampling instants, optionally confined to sessions.

    ``sessions`` is a tuple of (open, close) times of day applied to every
    calendar day; None means trading around the clock.
    """

    instants: np.ndarray
    step: np.timedelta64
    sessions: tuple[tuple[time, time], ...] | None = None

    def __post_init__(self) -> None:
        inst = np.asarray(self.instants, dtype="datetime64[ms]")
        object.__setattr__(self, "instants", inst)
        if inst.size == 0:
            raise DataError("time grid must contain at least one instant")
        if inst.size > 1 and not (np.diff(inst) > np.timedelta64(0, "ms")).all():
            raise DataError("time grid instants must be strictly increasing")
        if self.sessions is not None:
            for ts in inst:
                if not self._in_session(ts.astype(datetime)):
                    raise DataError(f"grid instant {ts} lies outside every session")

    def _in_session(self, dt: datetime) -> bool:
        assert self.sessions is not None
        tod = dt.time()
        return any(lo <= tod <= hi for lo, hi in self.sessions)

    @property
    def count(self) -> int:
        return int(self.instants.size)

    @property
    def start(self) -> np.datetime64:
        return self.instants[0]

    def truncated(self, keep_last: int) -> "TimeGrid":
        """Grid over the most recent ``keep_last`` instants."""
        if not 0 < keep_last <= self.count:
            raise DataError(f"cannot keep {keep_last} of {self.count} instants")
        return TimeGrid(self.instants[self.count - keep_last:], self.step, self.sessions)

    @classmethod
    def regular(
        cls,
        start: str | datetime | np.datetime64,
        step: timedelta | np.timedelta64,
        count: int,
        sessions: Iterable[tuple[time, time]] | None = None,
    ) -> "TimeGrid":
        """Build a uniform grid of ``count`` instants.

        With sessions, stepping that leaves the current window jumps to the
        next window's opening time, so spacing is uniform only in-session.
        """
        if count < 1:
            raise DataError("grid count must be positive")
        if isinstance(start, str):
            start = parse_timestamp(start)
        start64 = np.datetime64(start, "ms")
        step64 = np.timedelta64(step) if isinstance(step, timedelta) else step
        step64 = step64.astype("timedelta64[ms]")
        if step64 <= np.timedelta64(0, "ms"):
            raise DataError("grid step must be a positive duration")
        if sessions is None:
            instants = start64 + step64 * np.arange(count)
            return cls(instants, step64, None)

        windows = tuple(sorted(sessions))
        for lo, hi in windows:
            if lo > hi:
                raise DataError(f"session window {lo}-{hi} is inverted")
        out = []
        cur = start64.astype(datetime)
        step_td = timedelta(milliseconds=int(step64 / np.timedelta64(1, "ms")))
        while len(out) < count:
            tod = cur.time()
            inside = any(lo <= tod <= hi for lo, hi in windows)
            if inside:
                out.append(np.datetime64(cur, "ms"))
                cur = cur + step_td
                continue
            # jump to the next session opening at or after cur
            later = [lo for lo, _ in windows if lo > tod]
            if later:
                cur = datetime.combine(cur.date(), min(later))
            else:
                cur = datetime.combine(cur.date() + timedelta(days=1), windows[0][0])
        return cls(np.array(out, dtype="datetime64[ms]"), step64, windows)


@dataclass
class PriceMatrix:
    """Aligned prices: rows = grid instants, columns = stocks.

    ``fill_mask`` is True where the value was produced by forward/backward
    fill rather than direct observation.  ``dropped_stocks`` lists stocks
    removed in the step that produced this matrix.
    """

    grid: TimeGrid
    stock_ids: tuple[str, ...]
    values: np.ndarray
    fill_mask: np.ndarray
    dropped_stocks: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.stock_ids = tuple(self.stock_ids)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.fill_mask = np.asarray(self.fill_mask, dtype=bool)
        rows, cols = self.values.shape
        if rows != self.grid.count:
            raise DataError(f"{rows} price rows do not match {self.grid.count} grid instants")
        if cols != len(self.stock_ids):
            raise DataError(f"{cols} price columns do not match {len(self.stock_ids)} stock ids")
        if self.fill_mask.shape != self.values.shape:
            raise DataError("fill mask shape differs from price matrix shape")
        if not np.isfinite(self.values).all() or (self.values <= 0).any():
            raise DataError("price matrix must be finite and strictly positive")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.values.shape[1]

    def column(self, stock_id: str) -> np.ndarray:
        return self.values[:, self.stock_ids.index(stock_id)]

    def observed_fraction(self) -> np.ndarray:
        """Per-stock fraction of cells that were directly observed."""
        return 1.0 - self.fill_mask.mean(axis=0)

    def restrict(self, stock_ids: Iterable[str]) -> "PriceMatrix":
        """Sub-matrix over the given stocks, in the given order."""
        wanted = tuple(stock_ids)
        missing = [s for s in wanted if s not in self.stock_ids]
        if missing:
            raise DataError(f"unknown stock id(s): {', '.join(missing)}")
        cols = [self.stock_ids.index(s) for s in wanted]
        return PriceMatrix(
            grid=self.grid,
            stock_ids=wanted,
            values=self.values[:, cols],
            fill_mask=self.fill_mask[:, cols],
        )

    def to_csv(self, path: str | Path) -> None:
        """Write `timestamp,<stock>,...` rows with full float precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("timestamp",) + self.stock_ids)
            for i in range(self.n_rows):
                writer.writerow(
                    [format_timestamp(self.grid.instants[i])]
                    + [repr(float(v)) for v in self.values[i]]
                )

    @classmethod
    def from_csv(cls, path: str | Path) -> "PriceMatrix":
        """Load a matrix CSV.  Loaded cells count as observed (empty mask)."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty price matrix file") from None
            if len(header) < 2 or header[0].strip().lower() != "timestamp":
                raise DataError(f"{path}: malformed price matrix header {header!r}")
            ids = tuple(h.strip() for h in header[1:])
            instants, rows = [], []
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}: row with {len(row)} fields, expected {len(header)}")
                try:
                    instants.append(parse_timestamp(row[0]))
                    rows.append([float(v) for v in row[1:]])
                except ValueError as exc:
                    raise DataError(f"{path}: unparseable row {row!r}: {exc}") from exc
        if not rows:
            raise DataError(f"{path}: price matrix has no data rows")
        inst = np.array(instants, dtype="datetime64[ms]")
        step = inst[1] - inst[0] if inst.size > 1 else np.timedelta64(1, "ms")
        values = np.asarray(rows, dtype=np.float64)
        grid = TimeGrid(inst, step)
        return cls(grid, ids, values, np.zeros_like(values, dtype=bool))


def _ffill_bfill(column: np.ndarray) -> np.ndarray:
    """Fill NaNs from the previous value, then leading gaps from the next one."""
    n = column.size
    present = ~np.isnan(column)
    idx = np.where(present, np.arange(n), -1)
    np.maximum.accumulate(idx, out=idx)
    out = column[np.maximum(idx, 0)].copy()
    if idx[0] == -1:  # leading gap: backward fill from first observation
        first = np.argmax(present)
        lead = idx == -1
        out[lead] = column[first]
    return out


def fill_missing(
    table: TickTable, grid: TimeGrid, price_source: str = "auto"
) -> PriceMatrix:
    """Sample each stock onto the grid and fill gaps.

    Cell i takes the last tick price at or before instant i; a cell with no
    fresh tick since the previous instant is a forward fill of its
    predecessor (leading gaps are backward-filled from the first
    observation) and is flagged in the fill mask.  Stocks with no priced
    tick at or before the final instant are dropped and reported.
    """
    if price_source not in PRICE_SOURCES:
        raise DataError(f"unknown price source {price_source!r}; use one of {PRICE_SOURCES}")
    instants = grid.instants
    n = grid.count
    kept_ids: list[str] = []
    columns: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    dropped: list[str] = []
    for stock_id, records in table.streams.items():
        prices, times = [], []
        for rec in records:
            p = rec.price(price_source)
            if p is not None:
                prices.append(p)
                times.append(rec.timestamp)
        if not prices:
            dropped.append(stock_id)
            continue
        t = np.array(times, dtype="datetime64[ms]")
        p = np.array(prices, dtype=np.float64)
        # bucket index: tick belongs to the first grid instant at or after it
        cell = np.searchsorted(instants, t, side="left")
        in_window = cell < n
        if not in_window.any():
            dropped.append(stock_id)
            continue
        cell, p = cell[in_window], p[in_window]
        observed = np.full(n, np.nan)
        uniq, first_rev = np.unique(cell[::-1], return_index=True)
        observed[uniq] = p[cell.size - 1 - first_rev]  # last tick per bucket wins
        kept_ids.append(stock_id)
        masks.append(np.isnan(observed))
        columns.append(_ffill_bfill(observed))
    if dropped:
        logger.warning(
            "fill_missing: dropped %d stock(s) with no observation in window: %s",
            len(dropped), ", ".join(dropped),
        )
    if not kept_ids:
        raise DataError("no stock has any observation inside the grid window")
    return PriceMatrix(
        grid=grid,
        stock_ids=tuple(kept_ids),
        values=np.column_stack(columns),
        fill_mask=np.column_stack(masks),
        dropped_stocks=tuple(dropped),
    )


def select_consistent_stocks(
    matrix: PriceMatrix, min_observed_fraction: float = 0.9, step_size: int = 1
) -> PriceMatrix:
    """Keep consistently observed stocks and truncate rows for gradient windows.

    Stocks whose observed (non-filled) fraction is below the threshold are
    excluded; the row count is cut down to the largest multiple of
    ``step_size`` by removing the oldest rows, keeping the most recent
    window intact.
    """
    if not 0.0 < min_observed_fraction <= 1.0:
        raise DataError("min_observed_fraction must lie in (0, 1]")
    if step_size < 1:
        raise DataError("step_size must be a positive integer")
    frac = matrix.observed_fraction()
    keep = frac >= min_observed_fraction
    if not keep.any():
        raise DataError(
            f"no stock meets the presence threshold {min_observed_fraction:g} "
            f"(best observed fraction: {frac.max():.3f})"
        )
    excluded = tuple(s for s, ok in zip(matrix.stock_ids, keep) if not ok)
    if excluded:
        logger.info("select_consistent_stocks: excluded %s", ", ".join(excluded))
    rows_kept = (matrix.n_rows // step_size) * step_size
    if rows_kept == 0:
        raise DataError(f"only {matrix.n_rows} rows available for step size {step_size}")
    start = matrix.n_rows - rows_kept
    return PriceMatrix(
        grid=matrix.grid.truncated(rows_kept),
        stock_ids=tuple(s for s, ok in zip(matrix.stock_ids, keep) if ok),
        values=matrix.values[start:, keep],
        fill_mask=matrix.fill_mask[start:, keep],
        dropped_stocks=excluded,
    )
