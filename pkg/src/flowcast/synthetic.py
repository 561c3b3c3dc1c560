"""Seeded synthetic traffic generators for demos, tests, and hermetic runs."""

from __future__ import annotations

import numpy as np

from .errors import FlowcastError
from .rng import make_rng
from .series import TimeSeries
from .trace import TraceRecord, format_line

__all__ = ["poisson_records", "seasonal_series", "sample_log_lines"]


def poisson_records(rate: float, seconds: int, seed: int,
                    start: int = 800_000_000, mean_bytes: int = 500) -> list:
    """Poisson arrivals at ``rate`` per second for ``seconds`` seconds."""
    if rate <= 0 or seconds <= 0:
        raise FlowcastError("bad-parameter", "rate and seconds must be positive")
    rng = make_rng(seed)
    counts = rng.poisson(rate, seconds)
    records = []
    for offset, k in enumerate(counts):
        t = start + offset
        for _ in range(int(k)):
            records.append(TraceRecord(
                host="synth", timestamp=t, path="/",
                status=200, bytes=int(rng.integers(1, 2 * mean_bytes)),
            ))
    return records


def seasonal_series(
    n_bins: int,
    seed: int,
    interval: int = 3600,
    level: float = 1000.0,
    trend: float = 0.0,
    season_amplitude: float = 200.0,
    period: int = 24,
    noise: float = 20.0,
    bytes_per_packet: float = 700.0,
    start: int = 800_000_000,
) -> TimeSeries:
    """Level + trend + sinusoidal season + Gaussian noise, both channels."""
    if n_bins < 1:
        raise FlowcastError("bad-parameter", "n_bins must be >= 1")
    rng = make_rng(seed)
    i = np.arange(n_bins)
    base = (level + trend * i
            + season_amplitude * np.sin(2 * np.pi * i / period)
            + noise * rng.standard_normal(n_bins))
    counts = np.maximum(0, np.rint(base)).astype(np.int64)
    byts = np.maximum(
        0, np.rint(counts * bytes_per_packet
                   + noise * bytes_per_packet * 0.1 * rng.standard_normal(n_bins))
    ).astype(np.int64)
    return TimeSeries(start=start, interval=interval, counts=counts, bytes=byts)


def sample_log_lines(n_lines: int, seed: int, start: int = 804571201) -> list:
    """Plausible CLF lines (with a few malformed ones) for parser demos."""
    rng = make_rng(seed)
    hosts = ["alpha.example.com", "beta.example.com", "10.0.0.7", "remote"]
    paths = ["/", "/index.html", "/images/logo.gif", "/cgi-bin/query", "/docs/a.txt"]
    statuses = [200, 200, 200, 304, 404, 500]
    lines = []
    t = start
    for i in range(n_lines):
        t += int(rng.integers(0, 3))
        if i % 97 == 13:
            lines.append("corrupt line with no timestamp")
            continue
        host = hosts[int(rng.integers(0, len(hosts)))]
        path = paths[int(rng.integers(0, len(paths)))]
        status = statuses[int(rng.integers(0, len(statuses)))]
        nbytes = "-" if status == 304 else str(int(rng.integers(64, 40960)))
        rec = TraceRecord(host=host, timestamp=t, path=path,
                          status=status, bytes=0)
        base = format_line(rec)
        lines.append(base[: base.rfind(" ")] + " " + nbytes)
    return lines
