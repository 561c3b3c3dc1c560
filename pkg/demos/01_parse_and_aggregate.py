"""Parse an access log into records, then bin it into a two-channel series.

Walks the first pipeline stage end to end: a synthetic Common-Log-Format
file (with a few deliberately corrupt lines), the ingest report that
accounts for every line, and the aggregated packets/bytes series.
"""

import os
import tempfile

from flowcast.series import aggregate, write_csv
from flowcast.synthetic import sample_log_lines
from flowcast.trace import iter_records, parse_line, IngestReport

workdir = tempfile.mkdtemp(prefix="flowcast-demo01-")
log_path = os.path.join(workdir, "access.log")

# --- write a small synthetic trace -----------------------------------------
lines = sample_log_lines(2000, seed=101)
with open(log_path, "w") as fh:
    fh.write("\n".join(lines) + "\n")
print(f"wrote {len(lines)} log lines to {log_path}")
print("a typical line:")
print(" ", lines[0])

# --- one line, parsed --------------------------------------------------------
record = parse_line(lines[0])
print("\nparsed fields:")
print(f"  host={record.host} epoch={record.timestamp} path={record.path} "
      f"status={record.status} bytes={record.bytes}")

# --- the whole file, streamed ------------------------------------------------
report = IngestReport()
with open(log_path, "rb") as fh:
    series = aggregate(iter_records(fh, report), interval=60)

print("\ningest report:")
print(f"  lines_total={report.lines_total} lines_ok={report.lines_ok} "
      f"lines_rejected={report.lines_rejected}")
for reason, raw in report.reject_samples[:3]:
    print(f"  sample reject [{reason}]: {raw[:60]}")

print("\naggregated series (60 s bins):")
print(f"  bins={series.n_bins} start={series.start} interval={series.interval}s")
print(f"  total requests={int(series.counts.sum())} "
      f"total bytes={int(series.bytes.sum())}")
print(f"  first five count bins: {series.counts[:5].tolist()}")

csv_path = os.path.join(workdir, "series.csv")
write_csv(series, csv_path)
print(f"\nseries saved to {csv_path} (header: bin_start,count,bytes)")
