"""Forecaster contract and the canonical binary model framing.

A serialized model is a sequence of length-prefixed sections::

    u32le length | payload bytes     (repeated)

Section 0 is the model kind (UTF-8), section 1 the format version (u16le),
and the rest are model parameters encoded as little-endian IEEE-754 doubles
or unsigned integers. The framing is deterministic: serialize ->
deserialize -> serialize yields identical bytes.
"""

from __future__ import annotations

import struct
from abc import ABC, abstractmethod
from typing import List, Tuple

from ..errors import FlowcastError

FORMAT_VERSION = 1


def pack_sections(sections: List[bytes]) -> bytes:
    return b"".join(struct.pack("<I", len(s)) + s for s in sections)


def unpack_sections(data: bytes) -> List[bytes]:
    sections = []
    pos = 0
    n = len(data)
    while pos < n:
        if pos + 4 > n:
            raise FlowcastError("bad-structure", "truncated section header")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length > n:
            raise FlowcastError("bad-structure", "truncated section payload")
        sections.append(data[pos:pos + length])
        pos += length
    return sections


def pack_model(kind: str, param_sections: List[bytes]) -> bytes:
    head = [kind.encode("utf-8"), struct.pack("<H", FORMAT_VERSION)]
    return pack_sections(head + list(param_sections))


def unpack_model(data: bytes) -> Tuple[str, int, List[bytes]]:
    sections = unpack_sections(data)
    if len(sections) < 2:
        raise FlowcastError("bad-structure", "missing model header")
    kind = sections[0].decode("utf-8")
    (version,) = struct.unpack("<H", sections[1])
    return kind, version, sections[2:]


class Forecaster(ABC):
    """fit / predict / size_bytes contract shared by all model wrappers."""

    kind: str = "?"

    def __init__(self):
        self._fitted = False

    def _require_fitted(self):
        if not self._fitted:
            raise FlowcastError("unfitted", f"{self.kind} model is not fitted")

    @abstractmethod
    def fit(self, *args, **kwargs) -> "Forecaster":
        """Train on a series or feature matrix; returns self."""

    @abstractmethod
    def predict(self, *args, **kwargs):
        """Forecast a horizon or predict a feature row."""

    @abstractmethod
    def to_bytes(self) -> bytes:
        """Canonical serialization (see module docstring)."""

    def size_bytes(self) -> int:
        """Measured byte length of the canonical serialization."""
        self._require_fitted()
        return len(self.to_bytes())


def load_model(data: bytes):
    """Deserialize any model produced by a Forecaster's ``to_bytes``."""
    kind, version, _ = unpack_model(data)
    if version != FORMAT_VERSION:
        raise FlowcastError("bad-structure", f"unsupported model version {version}")
    from . import var, holtwinters, rrp, bdt

    loaders = {
        "var": var.VarForecaster.from_bytes,
        "hw": holtwinters.HwForecaster.from_bytes,
        "rrp": rrp.RrpForecaster.from_bytes,
        "bdt": bdt.BdtForecaster.from_bytes,
    }
    if kind not in loaders:
        raise FlowcastError("bad-structure", f"unknown model kind {kind!r}")
    return loaders[kind](data)
