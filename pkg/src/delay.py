"""
Empirical characterization of recorded loop delays

Delays are grouped into evenly spaced bins between the smallest and largest
observation; the relative probability of bin i is c_i / N.
"""

import logging
from collections.abc import Iterable
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from src.errors import EmptySamples, InvalidSamples
from src.uncertainty import EmpiricalDistribution

logger = logging.getLogger(__name__)

HEADER = "delay_ms"


@dataclass(frozen=True)
class DelaySamples:
    """Recorded delays in milliseconds"""

    values: tuple[float, ...]
    source: str = ""

    def __post_init__(self):
        if not self.values:
            raise EmptySamples("no delay samples")
        values = np.asarray(self.values, dtype=float)
        bad = ~(np.isfinite(values) & (values > 0))
        if bad.any():
            first = values[np.argmax(bad)]
            raise InvalidSamples(f"delays must be positive and finite, got {first!r}")

    @classmethod
    def from_values(cls, values, source: str = "") -> "DelaySamples":
        return cls(tuple(float(v) for v in values), source)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class DelayHistogram:
    n_bins: int
    lo: float
    hi: float
    bin_width: float
    counts: tuple[int, ...]
    rel_prob: tuple[float, ...]
    total: int

    def edges(self, i: int) -> tuple[float, float]:
        """Bounds of bin i, computed from the same normalized position the counting uses"""
        span = self.hi - self.lo
        return self.lo + span * i / self.n_bins, self.lo + span * (i + 1) / self.n_bins

    def rel_prob_exact(self, i: int) -> Fraction:
        return Fraction(self.counts[i], self.total)


@dataclass(frozen=True)
class ModeBin:
    index: int
    edges: tuple[float, float]
    rel_prob: Fraction


@dataclass(frozen=True)
class DelaySummary:
    min: float
    max: float
    mean: float
    median: float
    std: float
    p05: float
    p95: float
    mode_bin: ModeBin
    first_bin_prob: Fraction
    last_bin_prob: Fraction
    n_bins: int
    total: int


def bin_delays(samples: DelaySamples, n_bins: int) -> DelayHistogram:
    """
    Count samples into evenly spaced bins over [min, max]

    Bin i holds [lo + (hi-lo)*i/n, lo + (hi-lo)*(i+1)/n); the last bin is closed on the right
    so the maximum is counted. When all samples are equal there is one bin.

    Raises:
        EmptySamples: If there are no samples
    """
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    if not samples.values:
        raise EmptySamples("no delay samples")
    values = samples.as_array()
    lo = float(values.min())
    hi = float(values.max())
    total = int(values.size)
    if hi == lo:
        return DelayHistogram(1, lo, hi, 0.0, (total,), (1.0,), total)
    position = (values - lo) / (hi - lo)
    index = np.minimum(np.floor(position * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(index, minlength=n_bins)
    return DelayHistogram(
        n_bins=n_bins,
        lo=lo,
        hi=hi,
        bin_width=(hi - lo) / n_bins,
        counts=tuple(int(c) for c in counts),
        rel_prob=tuple(int(c) / total for c in counts),
        total=total,
    )


def summarize(hist: DelayHistogram, samples: DelaySamples) -> DelaySummary:
    """Summary statistics; the mode bin is the lowest-index bin with the largest count"""
    values = samples.as_array()
    mode = int(np.argmax(hist.counts))
    return DelaySummary(
        min=float(values.min()),
        max=float(values.max()),
        mean=float(values.mean()),
        median=float(np.median(values)),
        std=float(values.std()),
        p05=float(np.percentile(values, 5)),
        p95=float(np.percentile(values, 95)),
        mode_bin=ModeBin(mode, hist.edges(mode), hist.rel_prob_exact(mode)),
        first_bin_prob=hist.rel_prob_exact(0),
        last_bin_prob=hist.rel_prob_exact(hist.n_bins - 1),
        n_bins=hist.n_bins,
        total=hist.total,
    )


def to_empirical(samples: DelaySamples) -> EmpiricalDistribution:
    """Measured delays as a sorted empirical distribution for propagation"""
    return EmpiricalDistribution.from_values(samples.values, provenance=samples.source)


def percent_text(value: Fraction, places: int = 6) -> str:
    """Exact percentage text for a probability, e.g. Fraction(6460, 100000) -> '6.46'"""
    scaled = Decimal(value.numerator * 100) / Decimal(value.denominator)
    quantized = scaled.quantize(Decimal(1).scaleb(-places)).normalize()
    return format(quantized, "f")


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_delay_log(path: str | Path) -> DelaySamples:
    """
    Read a delay log: one delay per line (optional 'delay_ms' header) or
    whitespace-separated (timestamp, delay_ms) pairs

    Raises:
        OSError: If the file cannot be read
        EmptySamples / InvalidSamples: If the content is not text or holds no usable delays
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as err:
        raise InvalidSamples(f"{path}: not UTF-8 text at byte {err.start}") from err
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if line:
            lines.append(line)
    if lines and not all(_is_number(token) for token in lines[0].split()):
        logger.debug("skipping header line %r in %s", lines[0], path)
        lines = lines[1:]
    if not lines:
        raise EmptySamples(f"{path} holds no delay samples")
    try:
        table = np.loadtxt(lines, ndmin=2, dtype=float)
    except ValueError as err:
        raise InvalidSamples(f"{path}: {err}") from err
    return DelaySamples.from_values(table[:, -1], source=str(path))


def write_delay_log(values: Iterable[float], path: str | Path) -> None:
    """Write delays one per line under the standard header"""
    lines = [HEADER] + [repr(float(value)) for value in values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
