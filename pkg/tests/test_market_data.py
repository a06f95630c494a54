"""Ingestion, fill, and alignment tests, with brute-force reference oracles."""

from datetime import time

import numpy as np
import pytest

from trendlag.errors import DataError
from trendlag.market_data import (
    PriceMatrix,
    TimeGrid,
    fill_missing,
    format_timestamp,
    parse_ticks,
    parse_timestamp,
    select_consistent_stocks,
)

HEADER = "stock_id,timestamp,bid,ask,volume,avg_price\n"
T0 = "2011-04-01T09:30:00.000Z"


def _grid(count, start=T0, step_seconds=60):
    from datetime import timedelta

    return TimeGrid.regular(start, timedelta(seconds=step_seconds), count)


def _iso(grid, i):
    return format_timestamp(grid.instants[i])


def _tick_csv(rows):
    return (HEADER + "\n".join(rows) + "\n").encode()


def _table_from_cells(cells_per_stock, grid):
    """Build a tick stream with one avg-price tick per non-None grid cell."""
    rows = []
    for stock, cells in cells_per_stock.items():
        for i, price in enumerate(cells):
            if price is not None:
                rows.append(f"{stock},{_iso(grid, i)},,,100,{price}")
    return parse_ticks(_tick_csv(rows))


class TestParseTicks:
    def test_garbage_timestamp_row_is_skipped(self):
        table = parse_ticks(_tick_csv([
            f"AAA,{T0},10.0,10.2,5,10.1",
            "AAA,2011-04-01T09:31:00.000Z,10.1,10.3,5,10.2",
            "AAA,not-a-timestamp,10.1,10.3,5,10.2",
            "AAA,2011-04-01T09:32:00.000Z,10.2,10.4,5,10.3",
        ]))
        assert table.n_records == 3
        assert table.skipped == 1

    def test_empty_file_with_valid_header(self):
        table = parse_ticks(HEADER.encode())
        assert table.n_records == 0
        assert table.skipped == 0

    def test_malformed_header_is_fatal(self):
        with pytest.raises(DataError, match="header"):
            parse_ticks(b"stock,when,price\nAAA,2011-04-01T09:30:00.000Z,10\n")
        with pytest.raises(DataError, match="empty"):
            parse_ticks(b"")

    def test_non_positive_prices_and_bad_volume_are_skipped(self):
        table = parse_ticks(_tick_csv([
            f"AAA,{T0},0.0,10.2,5,10.1",      # zero bid
            f"AAA,{T0},10.0,10.2,-1,10.1",    # negative volume
            f"AAA,{T0},-3,10.2,5,10.1",       # negative bid
            f"AAA,{T0},10.0,10.2,5,10.1",     # fine
        ]))
        assert table.n_records == 1
        assert table.skipped == 3

    def test_empty_fields_parse_as_missing(self):
        table = parse_ticks(_tick_csv([f"AAA,{T0},,,,10.1", f"BBB,{T0},9.0,9.2,,"]))
        rec_a = table.records("AAA")[0]
        assert rec_a.bid is None and rec_a.ask is None and rec_a.volume is None
        assert rec_a.price() == 10.1
        rec_b = table.records("BBB")[0]
        assert rec_b.avg_price is None
        assert rec_b.price() == pytest.approx(9.1)  # bid/ask midpoint fallback

    def test_interleaved_stocks_match_sort_then_group_reference(self):
        rng = np.random.default_rng(7)
        grid = _grid(50)
        rows, reference = [], {}
        for i in rng.permutation(100):
            stock = f"S{i % 4}"
            cell = int(i) // 4
            price = 10.0 + 0.01 * i
            rows.append(f"{stock},{_iso(grid, cell)},,,1,{price}")
            reference.setdefault(stock, []).append((grid.instants[cell], price))
        table = parse_ticks(_tick_csv(rows))
        for stock, expected in reference.items():
            expected.sort(key=lambda p: p[0])  # naive sort-then-group oracle
            got = [(r.timestamp, r.avg_price) for r in table.records(stock)]
            assert got == expected

    def test_explicit_price_sources(self):
        table = parse_ticks(_tick_csv([f"AAA,{T0},9.0,11.0,5,10.5"]))
        rec = table.records("AAA")[0]
        assert rec.price("avg") == 10.5
        assert rec.price("bid") == 9.0
        assert rec.price("ask") == 11.0
        assert rec.price("mid") == pytest.approx(10.0)
        assert rec.price("auto") == 10.5  # avg wins when present

    def test_unknown_price_source_rejected(self):
        grid = _grid(2)
        table = _table_from_cells({"AAA": [10.0, 11.0]}, grid)
        with pytest.raises(DataError, match="price source"):
            fill_missing(table, grid, price_source="typo")

    def test_timestamp_offsets_normalize_to_utc(self):
        a = parse_timestamp("2011-04-01T09:30:00.000Z")
        b = parse_timestamp("2011-04-01T11:30:00.000+02:00")
        c = parse_timestamp("2011-04-01T09:30:00.000")  # naive = UTC
        assert a == b == c


class TestTimeGrid:
    def test_instants_strictly_increasing_required(self):
        inst = np.array(["2011-04-01T09:30", "2011-04-01T09:30"], dtype="datetime64[ms]")
        with pytest.raises(DataError, match="strictly increasing"):
            TimeGrid(inst, np.timedelta64(60_000, "ms"))

    def test_session_windows_confine_instants(self):
        grid = TimeGrid.regular(
            "2011-04-01T09:30:00.000Z",
            np.timedelta64(30, "m").astype("timedelta64[ms]"),
            16,
            sessions=[(time(9, 30), time(16, 0))],
        )
        assert grid.count == 16
        hours = grid.instants.astype("datetime64[s]").tolist()
        for dt in hours:
            assert time(9, 30) <= dt.time() <= time(16, 0)
        # 14 half-hour slots fit on day one; the rest roll to the next session
        assert str(grid.instants[-2]).startswith("2011-04-02")

    def test_truncated_keeps_most_recent(self):
        grid = _grid(10)
        cut = grid.truncated(4)
        assert cut.count == 4
        assert (cut.instants == grid.instants[6:]).all()


class TestFillMissing:
    def test_forward_fill(self):
        grid = _grid(4)
        table = _table_from_cells({"AAA": [10.0, None, None, 12.0]}, grid)
        matrix = fill_missing(table, grid)
        np.testing.assert_array_equal(matrix.values[:, 0], [10.0, 10.0, 10.0, 12.0])
        np.testing.assert_array_equal(matrix.fill_mask[:, 0], [False, True, True, False])

    def test_backward_fill_of_leading_gap(self):
        grid = _grid(4)
        table = _table_from_cells({"AAA": [None, None, 8.0, 9.0]}, grid)
        matrix = fill_missing(table, grid)
        np.testing.assert_array_equal(matrix.values[:, 0], [8.0, 8.0, 8.0, 9.0])
        np.testing.assert_array_equal(matrix.fill_mask[:, 0], [True, True, False, False])

    def test_random_gaps_match_per_cell_scan_oracle(self):
        rng = np.random.default_rng(11)
        grid = _grid(100)
        cells = [
            float(p) if keep else None
            for p, keep in zip(rng.uniform(5, 15, 100), rng.random(100) > 0.4)
        ]
        if not any(c is not None for c in cells):
            cells[50] = 7.0
        table = _table_from_cells({"AAA": cells}, grid)
        matrix = fill_missing(table, grid)

        def scan_oracle(i):
            for j in range(i, -1, -1):  # scan backward first
                if cells[j] is not None:
                    return cells[j]
            for j in range(i + 1, len(cells)):  # then forward
                if cells[j] is not None:
                    return cells[j]
            raise AssertionError("no observation at all")

        expected = [scan_oracle(i) for i in range(100)]
        np.testing.assert_array_equal(matrix.values[:, 0], expected)
        np.testing.assert_array_equal(matrix.fill_mask[:, 0], [c is None for c in cells])

    def test_idempotent_on_complete_matrix(self):
        grid = _grid(6)
        cells = {"AAA": [10, 11, 12, 13, 14, 15], "BBB": [20, 21, 22, 23, 24, 25]}
        table = _table_from_cells({k: [float(v) for v in vs] for k, vs in cells.items()}, grid)
        first = fill_missing(table, grid)
        assert not first.fill_mask.any()
        again = fill_missing(table, grid)
        np.testing.assert_array_equal(first.values, again.values)

    def test_columns_share_one_timestamp_vector(self):
        grid = _grid(5)
        table = _table_from_cells(
            {"AAA": [1.0, None, 2.0, None, 3.0], "BBB": [None, 5.0, None, 6.0, None]},
            grid,
        )
        matrix = fill_missing(table, grid)
        assert matrix.values.shape == (5, 2)
        assert matrix.grid.count == 5
        assert (matrix.grid.instants == grid.instants).all()

    def test_input_row_order_is_irrelevant(self):
        rng = np.random.default_rng(3)
        grid = _grid(30)
        cells = [float(p) if keep else None
                 for p, keep in zip(rng.uniform(5, 15, 30), rng.random(30) > 0.3)]
        rows = [f"AAA,{_iso(grid, i)},,,1,{p}" for i, p in enumerate(cells) if p is not None]
        shuffled = [rows[i] for i in rng.permutation(len(rows))]
        a = fill_missing(parse_ticks(_tick_csv(rows)), grid)
        b = fill_missing(parse_ticks(_tick_csv(shuffled)), grid)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.fill_mask, b.fill_mask)

    def test_observed_values_never_altered(self):
        rng = np.random.default_rng(5)
        grid = _grid(40)
        cells = [float(p) if keep else None
                 for p, keep in zip(rng.uniform(5, 15, 40), rng.random(40) > 0.5)]
        if not any(c is not None for c in cells):
            cells[0] = 9.0
        matrix = fill_missing(_table_from_cells({"AAA": cells}, grid), grid)
        for i, price in enumerate(cells):
            if price is not None:
                assert matrix.values[i, 0] == price
                assert not matrix.fill_mask[i, 0]

    def test_last_tick_in_bucket_wins(self):
        grid = _grid(2)
        rows = [
            f"AAA,2011-04-01T09:30:20.000Z,,,1,10.0",
            f"AAA,2011-04-01T09:30:40.000Z,,,1,11.0",  # later tick, same bucket
        ]
        matrix = fill_missing(parse_ticks(_tick_csv(rows)), grid)
        assert matrix.values[1, 0] == 11.0

    def test_stock_with_no_observation_is_dropped(self):
        grid = _grid(3)
        rows = [f"AAA,{_iso(grid, 0)},,,1,10.0", "BBB,2011-04-05T00:00:00.000Z,,,1,9.0"]
        matrix = fill_missing(parse_ticks(_tick_csv(rows)), grid)
        assert matrix.stock_ids == ("AAA",)
        assert matrix.dropped_stocks == ("BBB",)

    def test_all_stocks_unobservable_is_fatal(self):
        grid = _grid(3)
        rows = ["BBB,2011-04-05T00:00:00.000Z,,,1,9.0"]
        with pytest.raises(DataError, match="no stock"):
            fill_missing(parse_ticks(_tick_csv(rows)), grid)


class TestSelectConsistentStocks:
    def _matrix_with_fractions(self, fractions, rows=100):
        grid = _grid(rows)
        rng = np.random.default_rng(2)
        values = rng.uniform(5, 15, (rows, len(fractions)))
        mask = np.zeros_like(values, dtype=bool)
        for j, frac in enumerate(fractions):
            n_filled = rows - int(round(frac * rows))
            mask[:n_filled, j] = True
        ids = tuple(f"S{j}" for j in range(len(fractions)))
        return PriceMatrix(grid, ids, values, mask)

    def test_presence_threshold(self):
        matrix = self._matrix_with_fractions([0.99, 0.95, 0.40])
        kept = select_consistent_stocks(matrix, 0.9, 1)
        assert kept.stock_ids == ("S0", "S1")
        assert kept.dropped_stocks == ("S2",)

    def test_truncates_to_multiple_of_step_size(self):
        matrix = self._matrix_with_fractions([1.0], rows=1005)
        kept = select_consistent_stocks(matrix, 0.5, 10)
        assert kept.n_rows == 1000
        # oldest rows removed: surviving instants are the most recent 1000
        assert (kept.grid.instants == matrix.grid.instants[5:]).all()
        np.testing.assert_array_equal(kept.values, matrix.values[5:])

    def test_threshold_boundaries(self):
        matrix = self._matrix_with_fractions([1.0, 0.97])
        with pytest.raises(DataError, match="min_observed_fraction"):
            select_consistent_stocks(matrix, 0.0, 1)
        only_full = select_consistent_stocks(matrix, 1.0, 1)
        assert only_full.stock_ids == ("S0",)

    def test_empty_universe_is_fatal(self):
        matrix = self._matrix_with_fractions([0.2, 0.3])
        with pytest.raises(DataError, match="threshold"):
            select_consistent_stocks(matrix, 0.9, 1)


class TestPriceMatrixCsv:
    def test_round_trip_preserves_values_exactly(self, tmp_path):
        rng = np.random.default_rng(9)
        grid = _grid(7)
        matrix = PriceMatrix(
            grid, ("AAA", "BBB"), rng.uniform(1, 500, (7, 2)),
            np.zeros((7, 2), dtype=bool),
        )
        path = tmp_path / "panel.csv"
        matrix.to_csv(path)
        loaded = PriceMatrix.from_csv(path)
        assert loaded.stock_ids == matrix.stock_ids
        np.testing.assert_array_equal(loaded.values, matrix.values)
        assert (loaded.grid.instants == matrix.grid.instants).all()

    def test_rejects_malformed_matrix_file(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n1,2\n")
        with pytest.raises(DataError):
            PriceMatrix.from_csv(path)
