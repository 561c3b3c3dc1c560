"""Locate (or fetch) the public NASA-HTTP trace for the dataset criteria.

Search order: $FLOWCAST_NASA_DIR, ~/.cache/flowcast, then a download
attempt. Returns None when the trace is unreachable so callers can skip;
every other acceptance criterion runs hermetically.
"""

import os
import socket
import urllib.request

NASA_TOTAL_REQUESTS = 3_461_612
FILE_NAMES = ("NASA_access_log_Jul95.gz", "NASA_access_log_Aug95.gz")
URL_BASES = (
    "ftp://ita.ee.lbl.gov/traces/",
    "https://ita.ee.lbl.gov/traces/",
)


def _cache_dir() -> str:
    return os.path.join(os.path.expanduser("~"), ".cache", "flowcast")


def nasa_gz_paths():
    """Paths of the two gzipped month files, or None if unavailable."""
    for base in (os.environ.get("FLOWCAST_NASA_DIR"), _cache_dir()):
        if not base:
            continue
        paths = [os.path.join(base, name) for name in FILE_NAMES]
        if all(os.path.isfile(p) for p in paths):
            return paths

    cache = _cache_dir()
    os.makedirs(cache, exist_ok=True)
    socket.setdefaulttimeout(30)
    paths = []
    for name in FILE_NAMES:
        dest = os.path.join(cache, name)
        if os.path.isfile(dest):
            paths.append(dest)
            continue
        fetched = False
        for base in URL_BASES:
            try:
                urllib.request.urlretrieve(base + name, dest)
                fetched = True
                break
            except Exception:
                if os.path.exists(dest):
                    os.remove(dest)
        if not fetched:
            return None
        paths.append(dest)
    return paths
