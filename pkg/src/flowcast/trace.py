"""HTTP access-log trace parsing.

Handles the classic public server traces (Calgary, ClarkNet, NASA,
Saskatchewan): one request per line with five fields -- requesting host,
timestamp, requested filename, reply status, reply bytes. Two timestamp
dialects are accepted inside the brackets:

* Common Log Format, ``[24/Oct/1994:13:41:41 -0600]`` -- the form the
  published trace files actually use; the zone offset is applied so the
  record carries true epoch seconds.
* ``[Mon Oct 24 13:41:41 1994]`` -- day-name prose form, read as UTC since
  it carries no offset.

Malformed lines never abort a file; they are counted and sampled in the
ingest report with a reason code (``bad-structure``, ``bad-timestamp``,
``bad-status``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, IO, Iterable, Iterator, Optional, Union

from .errors import FlowcastError

__all__ = [
    "TraceRecord",
    "IngestReport",
    "LineRejected",
    "parse_line",
    "format_line",
    "ingest_file",
    "iter_records",
]


_LINE_RE = re.compile(
    r'^(?P<host>\S+)\s+\S+\s+\S+\s+\[(?P<time>[^\]]*)\]\s+'
    r'"(?P<request>[^"]*)"\s+(?P<status>\S+)\s+(?P<bytes>\S+)\s*$'
)

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}
_MONTH_NAMES = ["Jan", "Feb", "Mar", "Apr", "May", "Jun",
                "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]

_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """One parsed request: host, epoch-second timestamp, path, status, bytes."""

    host: str
    timestamp: int
    path: str
    status: int
    bytes: int


@dataclass
class IngestReport:
    """Counters for one ingest pass; lines_total = lines_ok + lines_rejected."""

    lines_total: int = 0
    lines_ok: int = 0
    lines_rejected: int = 0
    reject_samples: list = field(default_factory=list)  # (reason, raw line)


class LineRejected(Exception):
    """A single unparseable line; ``reason`` is one of the reject codes."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class IngestAborted(FlowcastError):
    """I/O failure mid-stream; carries the partial report."""

    def __init__(self, message: str, report: IngestReport):
        super().__init__("io", message)
        self.report = report


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def _days_from_civil(year: int, month: int, day: int) -> int:
    """Days since 1970-01-01 for a proleptic-Gregorian date."""
    year -= month <= 2
    era = (year if year >= 0 else year - 399) // 400
    yoe = year - era * 400
    doy = (153 * (month + (-3 if month > 2 else 9)) + 2) // 5 + day - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def _civil_from_days(days: int) -> tuple:
    days += 719468
    era = (days if days >= 0 else days - 146096) // 146097
    doe = days - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    year = yoe + era * 400
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    day = doy - (153 * mp + 2) // 5 + 1
    month = mp + (3 if mp < 10 else -9)
    return year + (month <= 2), month, day


def _epoch(year, month, day, hour, minute, second, offset_seconds):
    if not (1 <= month <= 12):
        raise LineRejected("bad-timestamp", "month out of range")
    max_day = _DAYS_IN_MONTH[month - 1] + (1 if month == 2 and _is_leap(year) else 0)
    if not (1 <= day <= max_day):
        raise LineRejected("bad-timestamp", "day out of range")
    if not (0 <= hour <= 23 and 0 <= minute <= 59 and 0 <= second <= 60):
        raise LineRejected("bad-timestamp", "time out of range")
    return (_days_from_civil(year, month, day) * 86400
            + hour * 3600 + minute * 60 + second - offset_seconds)


# Timestamp strings repeat heavily (1-second resolution, bursty traffic),
# so a string->epoch cache removes most of the parsing cost.
_ts_cache: dict = {}
_TS_CACHE_MAX = 1 << 16


def _parse_timestamp(text: str) -> int:
    cached = _ts_cache.get(text)
    if cached is not None:
        return cached
    try:
        epoch = _parse_timestamp_uncached(text)
    except LineRejected:
        raise
    except (ValueError, KeyError, IndexError):
        raise LineRejected("bad-timestamp", text) from None
    if len(_ts_cache) >= _TS_CACHE_MAX:
        _ts_cache.clear()
    _ts_cache[text] = epoch
    return epoch


def _parse_timestamp_uncached(text: str) -> int:
    # CLF: DD/Mon/YYYY:HH:MM:SS +ZZZZ
    if len(text) >= 20 and text[2] == "/" and text[6] == "/":
        day = int(text[0:2])
        month = _MONTHS[text[3:6]]
        year = int(text[7:11])
        hour = int(text[12:14])
        minute = int(text[15:17])
        second = int(text[18:20])
        rest = text[20:].strip()
        offset = 0
        if rest:
            sign = 1 if rest[0] == "+" else -1 if rest[0] == "-" else None
            if sign is None or len(rest) != 5:
                raise LineRejected("bad-timestamp", f"bad zone {rest!r}")
            offset = sign * (int(rest[1:3]) * 3600 + int(rest[3:5]) * 60)
        return _epoch(year, month, day, hour, minute, second, offset)

    # Prose: DAY MON DD HH:MM:SS YYYY (no zone; read as UTC)
    parts = text.split()
    if len(parts) == 5:
        _dayname, mon, dd, clock, yyyy = parts
        hh, mm, ss = clock.split(":")
        return _epoch(int(yyyy), _MONTHS[mon], int(dd),
                      int(hh), int(mm), int(ss), 0)
    raise LineRejected("bad-timestamp", text)


def _parse_request_path(request: str) -> str:
    parts = request.split()
    if len(parts) >= 2:
        return parts[1]
    if len(parts) == 1:
        return parts[0]
    return ""


def parse_line(line: str) -> TraceRecord:
    """Parse one log line; raises :class:`LineRejected` on malformed input.

    The five fields of an accepted record satisfy the record invariants:
    positive timestamp, status in 100..599, bytes >= 0 (a ``-`` bytes field
    means a body-less reply and maps to 0).
    """
    m = _LINE_RE.match(line)
    if m is None:
        raise LineRejected("bad-structure", line[:120])

    timestamp = _parse_timestamp(m.group("time"))
    if timestamp <= 0:
        raise LineRejected("bad-timestamp", "non-positive epoch")

    status_raw = m.group("status")
    try:
        status = int(status_raw)
    except ValueError:
        raise LineRejected("bad-status", status_raw) from None
    if not (100 <= status <= 599):
        raise LineRejected("bad-status", status_raw)

    bytes_raw = m.group("bytes")
    if bytes_raw == "-":
        nbytes = 0
    else:
        try:
            nbytes = int(bytes_raw)
        except ValueError:
            raise LineRejected("bad-structure", f"bad bytes {bytes_raw!r}") from None
        if nbytes < 0:
            raise LineRejected("bad-structure", "negative bytes")

    return TraceRecord(
        host=m.group("host"),
        timestamp=timestamp,
        path=_parse_request_path(m.group("request")),
        status=status,
        bytes=nbytes,
    )


def format_line(record: TraceRecord) -> str:
    """Serialize the canonical field subset back to a CLF line (UTC zone).

    ``parse_line(format_line(r)) == r`` for any record whose path contains
    no whitespace.
    """
    days, rem = divmod(record.timestamp, 86400)
    year, month, day = _civil_from_days(days)
    hour, rem = divmod(rem, 3600)
    minute, second = divmod(rem, 60)
    stamp = (f"{day:02d}/{_MONTH_NAMES[month - 1]}/{year:04d}"
             f":{hour:02d}:{minute:02d}:{second:02d} +0000")
    return (f'{record.host} - - [{stamp}] "GET {record.path} HTTP/1.0" '
            f"{record.status} {record.bytes}")


LineSource = Union[IO, Iterable[str]]


def _iter_lines(source: LineSource) -> Iterator[str]:
    # Binary streams are decoded latin-1: lossless for the 90s traces,
    # which predate consistent UTF-8.
    for line in source:
        if isinstance(line, bytes):
            yield line.decode("latin-1").rstrip("\r\n")
        else:
            yield line.rstrip("\r\n")


def ingest_file(
    source: LineSource,
    on_record: Callable[[TraceRecord], None],
    max_reject_samples: int = 10,
) -> IngestReport:
    """Stream ``source`` line by line, delivering records in file order.

    Memory use is independent of file size. Rejected lines are counted and
    the first ``max_reject_samples`` are kept verbatim. An I/O failure
    raises :class:`IngestAborted` carrying the partial report.
    """
    report = IngestReport()
    lines = _iter_lines(source)
    while True:
        try:
            line = next(lines)
        except StopIteration:
            break
        except OSError as exc:
            raise IngestAborted(str(exc), report) from exc
        if not line:
            continue
        report.lines_total += 1
        try:
            record = parse_line(line)
        except LineRejected as rej:
            report.lines_rejected += 1
            if len(report.reject_samples) < max_reject_samples:
                report.reject_samples.append((rej.reason, line))
            continue
        report.lines_ok += 1
        on_record(record)
    return report


def iter_records(
    source: LineSource,
    report: Optional[IngestReport] = None,
    max_reject_samples: int = 10,
) -> Iterator[TraceRecord]:
    """Generator form of :func:`ingest_file` for pipelining into aggregation.

    If ``report`` is given its counters are filled in as the stream advances.
    """
    if report is None:
        report = IngestReport()
    lines = _iter_lines(source)
    while True:
        try:
            line = next(lines)
        except StopIteration:
            return
        except OSError as exc:
            raise IngestAborted(str(exc), report) from exc
        if not line:
            continue
        report.lines_total += 1
        try:
            record = parse_line(line)
        except LineRejected as rej:
            report.lines_rejected += 1
            if len(report.reject_samples) < max_reject_samples:
                report.reject_samples.append((rej.reason, line))
            continue
        report.lines_ok += 1
        yield record
