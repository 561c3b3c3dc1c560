"""Access-log parsing: field extraction, reject reasons, streaming ingest."""

import io
from datetime import datetime, timezone, timedelta

import pytest

from flowcast.trace import (
    IngestAborted,
    LineRejected,
    TraceRecord,
    format_line,
    ingest_file,
    iter_records,
    parse_line,
)
from flowcast.rng import make_rng


class TestParseLine:
    def test_clf_line_with_zone_offset(self):
        # Epoch pinned by an independent calendar oracle (datetime, see below).
        rec = parse_line('local - - [24/Oct/1994:13:41:41 -0600] "GET index.html HTTP/1.0" 200 150')
        assert rec.host == "local"
        assert rec.status == 200
        assert rec.bytes == 150
        assert rec.path == "index.html"
        assert rec.timestamp == 783027701
        oracle = datetime(1994, 10, 24, 13, 41, 41,
                          tzinfo=timezone(timedelta(hours=-6)))
        assert rec.timestamp == int(oracle.timestamp())

    def test_dash_bytes_maps_to_zero(self):
        rec = parse_line('remote - - [01/Jul/1995:00:00:01 -0400] "GET /x HTTP/1.0" 304 -')
        assert rec.bytes == 0
        assert rec.status == 304
        oracle = datetime(1995, 7, 1, 0, 0, 1, tzinfo=timezone(timedelta(hours=-4)))
        assert rec.timestamp == int(oracle.timestamp()) == 804571201

    def test_garbage_is_bad_structure(self):
        with pytest.raises(LineRejected) as err:
            parse_line("garbage line with no timestamp")
        assert err.value.reason == "bad-structure"

    def test_prose_timestamp_fallback_is_utc(self):
        rec = parse_line('local - - [Mon Oct 24 13:41:41 1994] "GET index.html HTTP/1.0" 200 150')
        oracle = datetime(1994, 10, 24, 13, 41, 41, tzinfo=timezone.utc)
        assert rec.timestamp == int(oracle.timestamp()) == 783006101

    @pytest.mark.parametrize("status", ["999", "42", "600", "99", "20x"])
    def test_out_of_range_status_rejected_not_clamped(self, status):
        line = f'h - - [01/Jul/1995:00:00:01 -0400] "GET / HTTP/1.0" {status} 10'
        with pytest.raises(LineRejected) as err:
            parse_line(line)
        assert err.value.reason == "bad-status"

    @pytest.mark.parametrize("stamp", [
        "35/Oct/1994:13:41:41 -0600",
        "24/Oct/1994:25:41:41 -0600",
        "24/Xxx/1994:13:41:41 -0600",
        "24/Oct/1994:13:41:41 0600",
    ])
    def test_bad_timestamps(self, stamp):
        line = f'h - - [{stamp}] "GET / HTTP/1.0" 200 10'
        with pytest.raises(LineRejected) as err:
            parse_line(line)
        assert err.value.reason == "bad-timestamp"

    def test_leap_day_and_zone_arithmetic(self):
        rec = parse_line('h - - [29/Feb/1996:23:30:00 +0530] "GET / HTTP/1.0" 200 1')
        oracle = datetime(1996, 2, 29, 23, 30, 0,
                          tzinfo=timezone(timedelta(hours=5, minutes=30)))
        assert rec.timestamp == int(oracle.timestamp())

    def test_roundtrip_on_canonical_subset(self):
        rng = make_rng(17)
        for _ in range(200):
            rec = TraceRecord(
                host=f"host{int(rng.integers(0, 99))}",
                timestamp=int(rng.integers(1, 2_000_000_000)),
                path=f"/p/{int(rng.integers(0, 10_000))}.html",
                status=int(rng.integers(100, 600)),
                bytes=int(rng.integers(0, 1 << 30)),
            )
            assert parse_line(format_line(rec)) == rec


class TestIngest:
    def test_empty_file(self):
        report = ingest_file(io.StringIO(""), lambda r: None)
        assert (report.lines_total, report.lines_ok, report.lines_rejected) == (0, 0, 0)

    def test_counts_and_reject_sample(self):
        lines = [
            'a - - [01/Jul/1995:00:00:01 -0400] "GET / HTTP/1.0" 200 1',
            'b - - [01/Jul/1995:00:00:02 -0400] "GET / HTTP/1.0" 200 2',
            "not a log line",
            'c - - [01/Jul/1995:00:00:03 -0400] "GET / HTTP/1.0" 200 3',
        ]
        got = []
        report = ingest_file(iter(lines), got.append)
        assert (report.lines_total, report.lines_ok, report.lines_rejected) == (4, 3, 1)
        assert len(report.reject_samples) == 1
        assert report.reject_samples[0][0] == "bad-structure"
        assert report.lines_total == report.lines_ok + report.lines_rejected
        # records delivered in file order
        assert [r.host for r in got] == ["a", "b", "c"]

    def test_concatenation_equals_per_file_ingests(self):
        part1 = ['x - - [01/Jul/1995:00:00:01 -0400] "GET /a HTTP/1.0" 200 1',
                 "junk"]
        part2 = ['y - - [01/Jul/1995:00:00:05 -0400] "GET /b HTTP/1.0" 200 2']
        both, first, second = [], [], []
        r_both = ingest_file(iter(part1 + part2), both.append)
        r1 = ingest_file(iter(part1), first.append)
        r2 = ingest_file(iter(part2), second.append)
        assert both == first + second
        assert r_both.lines_total == r1.lines_total + r2.lines_total
        assert r_both.lines_ok == r1.lines_ok + r2.lines_ok
        assert r_both.lines_rejected == r1.lines_rejected + r2.lines_rejected

    def test_io_failure_carries_partial_report(self):
        def broken():
            yield 'a - - [01/Jul/1995:00:00:01 -0400] "GET / HTTP/1.0" 200 1'
            raise OSError("disk gone")

        with pytest.raises(IngestAborted) as err:
            ingest_file(broken(), lambda r: None)
        assert err.value.report.lines_ok == 1

    def test_binary_stream_decoding(self):
        raw = io.BytesIO(
            b'h - - [01/Jul/1995:00:00:01 -0400] "GET /\xe9 HTTP/1.0" 200 7\n'
        )
        got = []
        report = ingest_file(raw, got.append)
        assert report.lines_ok == 1
        assert got[0].bytes == 7

    def test_iter_records_matches_ingest_file(self):
        lines = ['a - - [01/Jul/1995:00:00:01 -0400] "GET / HTTP/1.0" 200 1',
                 "junk", ""]
        from flowcast.trace import IngestReport
        report = IngestReport()
        recs = list(iter_records(iter(lines), report))
        assert len(recs) == 1
        assert (report.lines_total, report.lines_ok, report.lines_rejected) == (2, 1, 1)
