"""
Test delay binning, summary statistics and log ingestion
"""

from fractions import Fraction

import numpy as np
import pytest

from conftest import DELAY_BINS, DELAY_MODE_BIN, DELAY_TOTAL
from src.delay import (
    HEADER,
    DelaySamples,
    bin_delays,
    load_delay_log,
    percent_text,
    summarize,
    to_empirical,
    write_delay_log,
)
from src.errors import EmptySamples, InvalidSamples


class TestDelaySamples:
    """Test suite for DelaySamples"""

    def test_empty(self):
        """Test that no samples is an error"""
        with pytest.raises(EmptySamples):
            DelaySamples(())

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_invalid(self, bad):
        """Test that delays must be positive and finite"""
        with pytest.raises(InvalidSamples):
            DelaySamples.from_values([12.0, bad])


class TestBinDelays:
    """Test suite for bin_delays"""

    def test_small_example(self):
        """Test half-open bins with the maximum in the last bin"""
        hist = bin_delays(DelaySamples.from_values([1, 1, 2, 3]), 2)
        assert hist.counts == (2, 2)
        assert hist.rel_prob == (0.5, 0.5)
        assert hist.edges(1) == (2.0, 3.0)

    def test_edges_match_counting(self):
        """Test that a sample on a bin boundary lies inside the printed bounds of its bin"""
        hist = bin_delays(DelaySamples.from_values([0.5, 0.8, 1.5]), 10)
        assert hist.counts[3] == 1
        assert hist.edges(3) == (0.8, 0.9)
        assert hist.edges(0)[0] == 0.5
        assert hist.edges(9)[1] == 1.5

    def test_all_equal(self):
        """Test that identical samples give one bin"""
        hist = bin_delays(DelaySamples.from_values([5.0, 5.0, 5.0]), 10)
        assert hist.n_bins == 1
        assert hist.counts == (3,)
        assert hist.rel_prob == (1.0,)

    def test_invalid_bin_count(self):
        """Test that at least one bin is required"""
        with pytest.raises(ValueError):
            bin_delays(DelaySamples.from_values([1.0, 2.0]), 0)

    def test_histogram_invariants(self):
        """Test sums, permutation invariance and the maximum on random sample sets"""
        rng = np.random.default_rng(12)
        for _ in range(1000):
            size = int(rng.integers(1, 400))
            values = rng.gamma(2.0, 1.5, size) + 10.0
            n_bins = int(rng.integers(1, 60))
            hist = bin_delays(DelaySamples.from_values(values), n_bins)
            assert sum(hist.counts) == size
            assert abs(sum(hist.rel_prob) - 1.0) < 1e-12
            shuffled = bin_delays(DelaySamples.from_values(rng.permutation(values)), n_bins)
            assert shuffled.counts == hist.counts
            if hist.n_bins > 1:
                top = int(np.sum(values == values.max()))
                assert hist.counts[-1] >= top

    def test_merging_bins(self):
        """Test that 2k bins merge pairwise into the k-bin histogram"""
        rng = np.random.default_rng(4)
        for _ in range(200):
            values = rng.uniform(1.0, 50.0, int(rng.integers(2, 300)))
            k = int(rng.integers(1, 30))
            coarse = bin_delays(DelaySamples.from_values(values), k)
            fine = bin_delays(DelaySamples.from_values(values), 2 * k)
            merged = tuple(fine.counts[2 * i] + fine.counts[2 * i + 1] for i in range(k))
            assert merged == coarse.counts


class TestSummarize:
    """Test suite for summarize"""

    def test_published_shape(self, delay_values):
        """Test exact mode and edge-bin percentages for the constructed 100 000 sample log"""
        samples = DelaySamples.from_values(delay_values)
        hist = bin_delays(samples, DELAY_BINS)
        summary = summarize(hist, samples)
        assert summary.total == DELAY_TOTAL
        assert summary.mode_bin.index == DELAY_MODE_BIN
        assert summary.mode_bin.rel_prob == Fraction(6460, 100_000)
        assert percent_text(summary.mode_bin.rel_prob) == "6.46"
        assert percent_text(summary.first_bin_prob) == "0.001"
        assert percent_text(summary.last_bin_prob) == "0.003"
        assert summary.min == 12.18
        assert summary.max == 13.2
        assert summary.mode_bin.edges == pytest.approx((12.5982, 12.6084))

    def test_mode_tie_lowest_index(self):
        """Test that ties resolve to the lowest bin index"""
        samples = DelaySamples.from_values([1.0, 1.1, 3.9, 4.0])
        summary = summarize(bin_delays(samples, 3), samples)
        assert summary.mode_bin.index == 0

    def test_statistics(self):
        """Test the descriptive statistics"""
        samples = DelaySamples.from_values([1.0, 2.0, 3.0, 4.0])
        summary = summarize(bin_delays(samples, 2), samples)
        assert summary.mean == 2.5
        assert summary.median == 2.5
        assert summary.std == pytest.approx(np.std([1, 2, 3, 4]))
        assert summary.p05 < summary.median < summary.p95

    def test_to_empirical(self):
        """Test conversion to a sorted empirical distribution"""
        dist = to_empirical(DelaySamples.from_values([3.0, 1.0, 2.0], source="lab.csv"))
        assert dist.samples == (1.0, 2.0, 3.0)
        assert dist.provenance == "lab.csv"


class TestPercentText:
    """Test suite for percent_text"""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (Fraction(6460, 100_000), "6.46"),
            (Fraction(1, 100_000), "0.001"),
            (Fraction(1, 1), "100"),
            (Fraction(1, 3), "33.333333"),
            (Fraction(0, 5), "0"),
        ],
    )
    def test_exact_percentages(self, value, expected):
        """Test exact decimal rendering"""
        assert percent_text(value) == expected


class TestLoadDelayLog:
    """Test suite for load_delay_log"""

    def test_header_and_values(self, delay_log):
        """Test a single-column log with header"""
        samples = load_delay_log(delay_log)
        assert len(samples.values) == DELAY_TOTAL
        assert samples.source == str(delay_log)

    def test_two_columns(self, tmp_path):
        """Test timestamp/delay pairs with comments"""
        path = tmp_path / "log.csv"
        path.write_text("# capture 1\ntimestamp,delay_ms\n0.0,12.5\n0.1,12.7  # spike\n\n0.2,12.6\n")
        assert load_delay_log(path).values == (12.5, 12.7, 12.6)

    def test_empty_file(self, tmp_path):
        """Test that a log without values raises EmptySamples"""
        path = tmp_path / "empty.csv"
        path.write_text("delay_ms\n")
        with pytest.raises(EmptySamples):
            load_delay_log(path)

    def test_garbage(self, tmp_path):
        """Test that non-numeric rows raise InvalidSamples"""
        path = tmp_path / "bad.csv"
        path.write_text("delay_ms\n12.5\nlate\n")
        with pytest.raises(InvalidSamples):
            load_delay_log(path)

    def test_not_utf8(self, tmp_path):
        """Test that undecodable bytes raise InvalidSamples"""
        path = tmp_path / "binary.csv"
        path.write_bytes(b"delay_ms\n12.5\n\xff\xfe\n")
        with pytest.raises(InvalidSamples):
            load_delay_log(path)

    def test_missing_file(self, tmp_path):
        """Test that an unreadable path raises OSError"""
        with pytest.raises(OSError):
            load_delay_log(tmp_path / "missing.csv")

    def test_written_log_reads_back(self, tmp_path):
        """Test that a written log starts with the header and reloads exactly"""
        path = tmp_path / "out.csv"
        write_delay_log([12.5, 12.625, 13.0], path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == HEADER
        assert load_delay_log(path).values == (12.5, 12.625, 13.0)
