"""Regular-interval traffic series: aggregation, sampling, splitting.

A :class:`TimeSeries` has two channels per bin -- request count ("packets")
and summed reply bytes -- over a contiguous, zero-filled bin range. Series
serialize to CSV with header ``bin_start,count,bytes``, the interchange
format between CLI stages.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Union

import numpy as np

from .errors import FlowcastError
from .rng import make_rng
from .trace import TraceRecord

__all__ = [
    "TimeSeries",
    "Stratum",
    "StratumKind",
    "aggregate",
    "stratified_sample",
    "train_test_split",
    "concat",
    "write_csv",
    "read_csv",
]

CSV_HEADER = "bin_start,count,bytes"


@dataclass(frozen=True)
class TimeSeries:
    """Two-channel binned series; bin i covers [start + i*interval, start + (i+1)*interval)."""

    start: int
    interval: int
    counts: np.ndarray
    bytes: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        byts = np.ascontiguousarray(self.bytes, dtype=np.int64)
        if counts.shape != byts.shape or counts.ndim != 1:
            raise FlowcastError("bad-dimension", "channel lengths differ")
        if self.interval <= 0:
            raise FlowcastError("bad-parameter", "interval must be positive")
        if np.any(counts < 0) or np.any(byts < 0):
            raise FlowcastError("bad-parameter", "negative channel values")
        counts.setflags(write=False)
        byts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "bytes", byts)

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def end(self) -> int:
        """Exclusive end of the covered range in epoch seconds."""
        return self.start + self.n_bins * self.interval

    def bin_starts(self) -> np.ndarray:
        return self.start + np.arange(self.n_bins, dtype=np.int64) * self.interval

    def slice(self, lo: int, hi: int) -> "TimeSeries":
        """Contiguous sub-series over bins [lo, hi)."""
        if not (0 <= lo < hi <= self.n_bins):
            raise FlowcastError("bad-parameter", f"bad slice [{lo}, {hi})")
        return TimeSeries(
            start=self.start + lo * self.interval,
            interval=self.interval,
            counts=self.counts[lo:hi],
            bytes=self.bytes[lo:hi],
        )

    def channel(self, name: str) -> np.ndarray:
        if name == "count":
            return self.counts
        if name == "bytes":
            return self.bytes
        raise FlowcastError("bad-parameter", f"unknown channel {name!r}")


class StratumKind(enum.Enum):
    DAY = "day"
    WEEK = "week"
    MONTH = "month"

    @property
    def span_seconds(self) -> int:
        return {
            StratumKind.DAY: 24 * 3600,
            StratumKind.WEEK: 7 * 24 * 3600,
            StratumKind.MONTH: 30 * 24 * 3600,  # fixed 30-day month
        }[self]


@dataclass(frozen=True)
class Stratum:
    """A homogeneous window kind (day/week/month) plus the seed picking one."""

    kind: StratumKind
    seed: int


def aggregate(records: Iterable[TraceRecord], interval: int) -> TimeSeries:
    """Bin a record stream into counts and byte sums.

    The range spans the first to the last record timestamp; interior gaps
    are zero-filled. Order within a bin does not matter.
    """
    if interval <= 0:
        raise FlowcastError("bad-parameter", "interval must be positive")
    count_acc: dict = {}
    byte_acc: dict = {}
    t_min = None
    t_max = None
    for rec in records:
        t = rec.timestamp
        if t_min is None or t < t_min:
            t_min = t
        if t_max is None or t > t_max:
            t_max = t
        key = t // interval
        count_acc[key] = count_acc.get(key, 0) + 1
        byte_acc[key] = byte_acc.get(key, 0) + rec.bytes
    if t_min is None:
        raise FlowcastError("empty-input", "no records to aggregate")

    first_bin = t_min // interval
    last_bin = t_max // interval
    n = last_bin - first_bin + 1
    counts = np.zeros(n, dtype=np.int64)
    byts = np.zeros(n, dtype=np.int64)
    for key, c in count_acc.items():
        counts[key - first_bin] = c
    for key, b in byte_acc.items():
        byts[key - first_bin] = b
    return TimeSeries(start=int(first_bin * interval), interval=int(interval),
                      counts=counts, bytes=byts)


def stratified_sample(ts: TimeSeries, stratum: Stratum) -> TimeSeries:
    """Pick one aligned window of the stratum's span, uniformly by seed.

    Candidates are the disjoint windows starting at bin 0, W, 2W, ... where
    W is the stratum span in bins; the seeded generator picks one. The
    output bins are the identical slice of the input.
    """
    span = stratum.kind.span_seconds
    if span % ts.interval != 0:
        raise FlowcastError(
            "bad-parameter",
            f"interval {ts.interval} does not divide the {stratum.kind.value} span",
        )
    window = span // ts.interval
    n_candidates = ts.n_bins // window
    if n_candidates < 1:
        raise FlowcastError(
            "insufficient-span",
            f"series has {ts.n_bins} bins, window needs {window}",
        )
    rng = make_rng(stratum.seed)
    pick = int(rng.integers(0, n_candidates))
    lo = pick * window
    return ts.slice(lo, lo + window)


def train_test_split(ts: TimeSeries, train_fraction: float):
    """Chronological prefix/suffix split at floor(n * train_fraction)."""
    if not (0.0 < train_fraction < 1.0):
        raise FlowcastError("bad-parameter", "train_fraction must be in (0,1)")
    n = ts.n_bins
    if n < 2:
        raise FlowcastError("insufficient-data", "need at least 2 bins to split")
    cut = int(n * train_fraction)
    if cut < 1 or cut >= n:
        raise FlowcastError(
            "degenerate-split",
            f"fraction {train_fraction} leaves an empty part for n={n}",
        )
    return ts.slice(0, cut), ts.slice(cut, n)


def concat(a: TimeSeries, b: TimeSeries) -> TimeSeries:
    """Join two adjacent series (b must start where a ends)."""
    if a.interval != b.interval:
        raise FlowcastError("bad-parameter", "interval mismatch")
    if b.start != a.end:
        raise FlowcastError("bad-parameter", "series are not adjacent")
    return TimeSeries(
        start=a.start,
        interval=a.interval,
        counts=np.concatenate([a.counts, b.counts]),
        bytes=np.concatenate([a.bytes, b.bytes]),
    )


def write_csv(ts: TimeSeries, out: Union[str, IO]) -> None:
    close = False
    if isinstance(out, str):
        out = open(out, "w", encoding="ascii")
        close = True
    try:
        out.write(CSV_HEADER + "\n")
        start, interval = ts.start, ts.interval
        for i in range(ts.n_bins):
            out.write(f"{start + i * interval},{ts.counts[i]},{ts.bytes[i]}\n")
    finally:
        if close:
            out.close()


def read_csv(src: Union[str, IO], interval: Optional[int] = None) -> TimeSeries:
    """Read the ``bin_start,count,bytes`` format back into a series.

    ``interval`` is only needed for single-row files, where the bin width
    cannot be inferred.
    """
    close = False
    if isinstance(src, str):
        src = open(src, "r", encoding="ascii")
        close = True
    try:
        header = src.readline().strip()
        if header != CSV_HEADER:
            raise FlowcastError("bad-structure", f"expected header {CSV_HEADER!r}")
        starts, counts, byts = [], [], []
        for line in src:
            line = line.strip()
            if not line:
                continue
            try:
                s, c, b = line.split(",")
                starts.append(int(s))
                counts.append(int(c))
                byts.append(int(b))
            except ValueError:
                raise FlowcastError("bad-structure", f"bad CSV row {line!r}") from None
    finally:
        if close:
            src.close()
    if not starts:
        raise FlowcastError("empty-input", "CSV has no data rows")
    if len(starts) >= 2:
        inferred = starts[1] - starts[0]
        if inferred <= 0 or any(
            starts[i + 1] - starts[i] != inferred for i in range(len(starts) - 1)
        ):
            raise FlowcastError("bad-structure", "bin starts are not equally spaced")
        if interval is not None and interval != inferred:
            raise FlowcastError("bad-parameter", "interval does not match file spacing")
        interval = inferred
    elif interval is None:
        raise FlowcastError("bad-parameter", "single-row CSV needs an explicit interval")
    return TimeSeries(start=starts[0], interval=int(interval),
                      counts=np.array(counts, dtype=np.int64),
                      bytes=np.array(byts, dtype=np.int64))
