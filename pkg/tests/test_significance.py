import math

import pytest

from eberhard.counting import ReducedCounts
from eberhard.errors import ParameterError
from eberhard.significance import (
    BlockSeries,
    SignificanceReport,
    blocked_significance,
    blocks_from_counts,
    read_block_csv,
    write_block_csv,
)

TABLE_1 = ReducedCounts(1069306, 1522865, 1152595, 1693718, 1191146, 69749, duration_s=300.0)


class TestBlockedSignificance:
    def test_reference_ratio(self):
        report = SignificanceReport.from_totals(-126715, 1837.0)
        assert 68.9 <= report.n_sigma <= 69.1

    def test_hand_computed_two_blocks(self):
        report = blocked_significance(BlockSeries(10.0, (0, -2)))
        assert report.j_total == -2
        assert report.sigma_total == pytest.approx(2.0, abs=1e-12)
        assert report.n_sigma == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_spread_is_flagged_not_infinite(self):
        report = blocked_significance(BlockSeries(10.0, (-5, -5, -5)))
        assert report.j_total == -15
        assert report.sigma_total == 0.0
        assert report.n_sigma is None

    def test_requires_two_blocks(self):
        with pytest.raises(ParameterError):
            blocked_significance(BlockSeries(10.0, (-126715,)))

    def test_sigma_uses_sample_stdev_times_sqrt_k(self):
        values = (3, -1, 4, -1, -5, 9, 2, -6)
        k = len(values)
        mean = sum(values) / k
        s = math.sqrt(sum((v - mean) ** 2 for v in values) / (k - 1))
        report = blocked_significance(BlockSeries(1.0, values))
        assert report.sigma_total == pytest.approx(s * math.sqrt(k), abs=1e-12)

    def test_duplication_scaling(self):
        # with the (k-1) denominator the sqrt(2) duplication rule is exact
        # only in the large-k limit: the exact factor is sqrt(4(k-1)/(2k-1))
        values = tuple(range(-7, 23))
        k = len(values)
        single = blocked_significance(BlockSeries(1.0, values))
        doubled = blocked_significance(BlockSeries(1.0, values * 2))
        assert doubled.j_total == 2 * single.j_total
        factor = math.sqrt(4 * (k - 1) / (2 * k - 1))
        assert doubled.sigma_total == pytest.approx(factor * single.sigma_total, rel=1e-12)
        assert factor == pytest.approx(math.sqrt(2), rel=0.01)
        mean_single = single.j_total / k
        mean_doubled = doubled.j_total / (2 * k)
        assert mean_doubled == pytest.approx(mean_single, rel=1e-12)


class TestBlocksFromCounts:
    def test_table_1_single_block(self):
        series = blocks_from_counts([TABLE_1])
        assert series.j_values == (-126715,)
        assert series.block_duration_s == 300.0

    def test_zero_blocks_give_zero_series(self):
        zeros = ReducedCounts(0, 0, 0, 0, 0, 0, duration_s=1.0)
        series = blocks_from_counts([zeros] * 4)
        assert series.j_values == (0, 0, 0, 0)

    def test_partition_sums_to_whole(self):
        import numpy as np

        rng = np.random.default_rng(9)
        blocks = []
        for _ in range(12):
            c11, c12, c21, c22 = (int(v) for v in rng.integers(0, 50, size=4))
            sa = c12 + int(rng.integers(0, 60))
            sb = c21 + int(rng.integers(0, 60))
            blocks.append(ReducedCounts(c11, sa, c12, sb, c21, c22, duration_s=10.0))
        series = blocks_from_counts(blocks)
        total = blocks[0]
        for b in blocks[1:]:
            total = total + b
        from eberhard.counting import eberhard_j_reduced

        assert sum(series.j_values) == eberhard_j_reduced(total)

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            blocks_from_counts([])


class TestBlockCsv:
    def test_round_trip_and_columns(self, tmp_path):
        blocks = [
            ReducedCounts(1, 5, 2, 6, 3, 4, duration_s=10.0),
            ReducedCounts(0, 9, 1, 8, 0, 2, duration_s=10.0),
        ]
        path = tmp_path / "blocks.csv"
        write_block_csv(blocks, path)
        header = path.read_text().splitlines()[0]
        assert header == "block_index,c_oo_11,s_a_1,c_oo_12,s_b_1,c_oo_21,c_oo_22,j"
        loaded = read_block_csv(path)
        assert [b.c_oo_11 for b in loaded] == [1, 0]
        assert [b.s_b_1 for b in loaded] == [6, 8]


class TestNullCalibration:
    def test_no_spurious_violation_below_threshold(self):
        # eta = 0.5 cannot violate; expected J is strictly positive there, so
        # the calibration asserts the analyzer never reports a significant
        # violation (negative J at > 4 sigma) across 100 seeded runs.
        from eberhard.events import blocked_counts, simulate_run
        from eberhard.events import RunConfig
        from eberhard.model import ArmParams, SettingsQuad, SourceParams

        src = SourceParams(0.297, 1.0, pair_rate_hz=2000.0)
        quad = SettingsQuad(85.6, 118.0, -5.4, 25.9)
        spurious = 0
        positive = 0
        for seed in range(100):
            cfg = RunConfig(
                src,
                ArmParams(0.5),
                ArmParams(0.5),
                quad,
                duration_s=5.0,
                seed=seed,
                window_ns=500,
            )
            blocks = blocked_counts(simulate_run(cfg), cfg.window_ns, 10)
            report = blocked_significance(blocks_from_counts(blocks))
            if report.j_total > 0:
                positive += 1
            if report.j_total < 0 and report.n_sigma is not None and report.n_sigma > 4:
                spurious += 1
        assert spurious <= 5
        assert positive >= 95
