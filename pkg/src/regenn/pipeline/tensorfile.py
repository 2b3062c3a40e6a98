"""MMTS binary format for series tensors.

``b"MMTS0001"``, a big-endian uint32 header length, a UTF-8 JSON header
(dims, axis labels, endianness tag) and then ``s*t*v`` little-endian
float64 values in sample, timestamp, variable order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from regenn.errors import DataError
from regenn.pipeline.series import SeriesTensor

MAGIC = b"MMTS0001"


class BadMagicError(DataError):
    pass


class TruncatedPayloadError(DataError):
    pass


class HeaderMismatchError(DataError):
    pass


def encode_tensor(series: SeriesTensor) -> bytes:
    header = {
        "dims": list(series.shape),
        "sample_ids": series.sample_ids,
        "variable_names": series.variable_names,
        "timestamp_labels": series.timestamp_labels,
        "endianness": "little",
        "dtype": "float64",
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack(">I", len(blob)) + blob + series.values.astype("<f8").tobytes(order="C")


def decode_tensor(raw: bytes, source: str = "<bytes>") -> SeriesTensor:
    if raw[:8] != MAGIC:
        raise BadMagicError(f"{source}: bad magic {raw[:8]!r}, expected {MAGIC!r}")
    if len(raw) < 12:
        raise TruncatedPayloadError(f"{source}: file ends inside the header length")
    (hlen,) = struct.unpack(">I", raw[8:12])
    if len(raw) < 12 + hlen:
        raise TruncatedPayloadError(f"{source}: file ends inside the JSON header")
    try:
        header = json.loads(raw[12:12 + hlen].decode("utf-8"))
        dims = [int(d) for d in header["dims"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise HeaderMismatchError(f"{source}: unreadable header ({exc})") from None
    if len(dims) != 3 or min(dims) < 0:
        raise HeaderMismatchError(f"{source}: header dims {dims} are not s x t x v")
    if header.get("endianness", "little") != "little":
        raise HeaderMismatchError(f"{source}: unsupported endianness {header.get('endianness')!r}")
    payload = raw[12 + hlen:]
    expected = dims[0] * dims[1] * dims[2] * 8
    if len(payload) < expected:
        raise TruncatedPayloadError(f"{source}: payload has {len(payload)} bytes, header dims need {expected}")
    if len(payload) > expected:
        raise HeaderMismatchError(f"{source}: payload has {len(payload)} bytes, header dims {dims} need {expected}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
    try:
        return SeriesTensor(values, header.get("sample_ids", []), header.get("variable_names", []),
                            header.get("timestamp_labels", []))
    except DataError as exc:
        raise HeaderMismatchError(f"{source}: {exc}") from None


def write_tensor(path, series: SeriesTensor) -> None:
    Path(path).write_bytes(encode_tensor(series))


def read_tensor(path) -> SeriesTensor:
    return decode_tensor(Path(path).read_bytes(), str(path))
