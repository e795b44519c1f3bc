"""Safetensors header parsing and serialization (no tensor payload access).

A safetensors file starts with an 8-byte little-endian unsigned header
length N, followed by N bytes of UTF-8 JSON mapping tensor names to
``{"dtype", "shape", "data_offsets"}``, plus an optional ``__metadata__``
string map.  Only the header is read here; byte ranges are validated for
internal consistency but the data blob itself is never touched.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

__all__ = [
    "DTYPE_SIZES",
    "SafetensorsError",
    "TensorEntry",
    "TensorIndex",
    "parse_safetensors_header",
    "serialize_header",
]

# Element sizes in bytes for the safetensors dtype tags.
DTYPE_SIZES: dict[str, int] = {
    "F64": 8,
    "F32": 4,
    "F16": 2,
    "BF16": 2,
    "I64": 8,
    "I32": 4,
    "I16": 2,
    "I8": 1,
    "U64": 8,
    "U32": 4,
    "U16": 2,
    "U8": 1,
    "BOOL": 1,
    "F8_E4M3": 1,
    "F8_E5M2": 1,
}


class SafetensorsError(Exception):
    """Raised when a safetensors header is malformed or inconsistent."""


def _shape_numel(shape: tuple[int, ...]) -> int:
    n = 1
    for dim in shape:
        n *= dim
    return n


@dataclass(frozen=True)
class TensorEntry:
    """One tensor record from a safetensors header."""

    name: str
    dtype: str
    shape: tuple[int, ...]
    byte_range: tuple[int, int]

    def __post_init__(self) -> None:
        if self.dtype not in DTYPE_SIZES:
            raise SafetensorsError(f"unknown dtype {self.dtype!r} for tensor {self.name!r}")
        if any(d < 0 for d in self.shape):
            raise SafetensorsError(f"negative dimension in shape of tensor {self.name!r}")
        start, end = self.byte_range
        if start > end:
            raise SafetensorsError(f"inverted byte range for tensor {self.name!r}")
        expected = _shape_numel(self.shape) * DTYPE_SIZES[self.dtype]
        if end - start != expected:
            raise SafetensorsError(
                f"byte range of tensor {self.name!r} spans {end - start} bytes, "
                f"expected {expected} for shape {list(self.shape)} {self.dtype}"
            )

    @property
    def numel(self) -> int:
        return _shape_numel(self.shape)


@dataclass(frozen=True)
class TensorIndex:
    """All tensor records of one checkpoint header plus its metadata map."""

    entries: tuple[TensorEntry, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for e in self.entries:
            if e.name in seen:
                raise SafetensorsError(f"duplicate tensor name {e.name!r}")
            seen.add(e.name)
        ranked = sorted(
            (e for e in self.entries if e.byte_range[0] != e.byte_range[1]),
            key=lambda e: e.byte_range,
        )
        for prev, cur in zip(ranked, ranked[1:]):
            if cur.byte_range[0] < prev.byte_range[1]:
                raise SafetensorsError(
                    f"byte range of tensor {cur.name!r} overlaps {prev.name!r}"
                )

    @property
    def total_elements(self) -> int:
        return sum(e.numel for e in self.entries)


def _reject_duplicate_keys(pairs: list[tuple[str, object]]) -> dict[str, object]:
    out: dict[str, object] = {}
    for key, value in pairs:
        if key in out:
            raise SafetensorsError(f"duplicate tensor name {key!r} in header")
        out[key] = value
    return out


def parse_safetensors_header(raw: bytes) -> TensorIndex:
    """Parse the leading header of a safetensors byte sequence.

    Returns one :class:`TensorEntry` per non-metadata key with names,
    dtypes, shapes and offsets preserved exactly; ``__metadata__`` is
    copied verbatim.  Raises :class:`SafetensorsError` on truncation,
    malformed JSON, unknown dtypes, inconsistent or overlapping offsets.
    """
    if len(raw) < 8:
        raise SafetensorsError("truncated input: 8-byte header length missing")
    (header_len,) = struct.unpack_from("<Q", raw, 0)
    if len(raw) < 8 + header_len:
        raise SafetensorsError(
            f"truncated input: header claims {header_len} bytes, "
            f"only {len(raw) - 8} available"
        )
    try:
        doc = json.loads(
            raw[8 : 8 + header_len].decode("utf-8"),
            object_pairs_hook=_reject_duplicate_keys,
        )
    except SafetensorsError:
        raise
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SafetensorsError(f"malformed header JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SafetensorsError("header JSON must be an object")

    metadata: dict[str, str] = {}
    entries: list[TensorEntry] = []
    for name, meta in doc.items():
        if name == "__metadata__":
            if not isinstance(meta, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
            ):
                raise SafetensorsError("__metadata__ must be a string-to-string map")
            metadata = dict(meta)
            continue
        if not isinstance(meta, dict):
            raise SafetensorsError(f"entry for tensor {name!r} is not an object")
        dtype = meta.get("dtype")
        shape = meta.get("shape")
        offsets = meta.get("data_offsets")
        if not isinstance(dtype, str):
            raise SafetensorsError(f"missing or invalid dtype for tensor {name!r}")
        if not isinstance(shape, list) or not all(
            isinstance(d, int) and not isinstance(d, bool) for d in shape
        ):
            raise SafetensorsError(f"missing or invalid shape for tensor {name!r}")
        if (
            not isinstance(offsets, (list, tuple))
            or len(offsets) != 2
            or not all(isinstance(o, int) and not isinstance(o, bool) and o >= 0 for o in offsets)
        ):
            raise SafetensorsError(f"missing or invalid data_offsets for tensor {name!r}")
        entries.append(
            TensorEntry(
                name=name,
                dtype=dtype,
                shape=tuple(shape),
                byte_range=(offsets[0], offsets[1]),
            )
        )
    return TensorIndex(entries=tuple(entries), metadata=metadata)


def serialize_header(index: TensorIndex) -> bytes:
    """Serialize a :class:`TensorIndex` back to safetensors header bytes.

    Inverse of :func:`parse_safetensors_header` (the result carries no
    data blob, only the 8-byte length prefix and the JSON header).
    """
    doc: dict[str, object] = {}
    if index.metadata:
        doc["__metadata__"] = dict(sorted(index.metadata.items()))
    for e in index.entries:
        doc[e.name] = {
            "dtype": e.dtype,
            "shape": list(e.shape),
            "data_offsets": list(e.byte_range),
        }
    payload = json.dumps(doc, separators=(",", ":"), sort_keys=False).encode("utf-8")
    return struct.pack("<Q", len(payload)) + payload
