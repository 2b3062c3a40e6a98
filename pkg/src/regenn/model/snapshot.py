"""Model snapshots: JSON manifest followed by raw little-endian float64 blocks.

Layout::

    b"RGNSNAP1" | uint32 big-endian manifest length | UTF-8 JSON manifest | blocks

The manifest names every block with its shape and float offset, in the
model's parameter order; the co-occurrence graph, when present, is the
final block.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from regenn.errors import DataError
from regenn.model.forecaster import Dims, Forecaster
from regenn.model.variants import parse_tag

MAGIC = b"RGNSNAP1"


class SnapshotError(DataError):
    pass


def snapshot_bytes(model: Forecaster, epoch: int | None = None, extra: dict | None = None) -> bytes:
    blocks, arrays, offset = [], [], 0
    named = list(model.named_parameters())
    if model.adjacency is not None:
        named.append(("graph.adjacency", model.adjacency))
    for name, value in named:
        arr = np.asarray(getattr(value, "data", value), dtype="<f8")
        blocks.append({"name": name, "shape": list(arr.shape), "offset": offset})
        arrays.append(arr.ravel())
        offset += arr.size
    manifest = {
        "format": "regenn-snapshot",
        "version": 1,
        "variant": model.tag,
        "cell": model.cell,
        "dims": model.dims.to_dict(),
        "dropout_p": model.dropout_p,
        "seed": model.seed,
        "epoch": epoch,
        "endianness": "little",
        "blocks": blocks,
        "extra": extra or {},
    }
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    payload = np.concatenate(arrays).astype("<f8").tobytes() if arrays else b""
    return MAGIC + struct.pack(">I", len(header)) + header + payload


def save_snapshot(path, model: Forecaster, epoch: int | None = None, extra: dict | None = None) -> None:
    Path(path).write_bytes(snapshot_bytes(model, epoch, extra))


def load_snapshot(path) -> tuple[Forecaster, dict]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise SnapshotError(f"{path}: not a model snapshot (bad magic)")
    try:
        (hlen,) = struct.unpack(">I", raw[8:12])
        manifest = json.loads(raw[12:12 + hlen].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: unreadable snapshot manifest ({exc})") from None
    values = np.frombuffer(raw[12 + hlen:], dtype="<f8")
    dims = Dims(**manifest["dims"])
    spec = parse_tag(manifest["variant"], manifest["cell"] or "lstm")
    model = Forecaster(spec, dims, manifest["dropout_p"], manifest["seed"])
    state = {}
    for block in manifest["blocks"]:
        count = int(np.prod(block["shape"], dtype=np.int64))
        chunk = values[block["offset"]:block["offset"] + count]
        if chunk.size != count:
            raise SnapshotError(f"{path}: block {block['name']} is truncated")
        state[block["name"]] = chunk.reshape(block["shape"]).astype(np.float64)
    adjacency = state.pop("graph.adjacency", None)
    model.load_state_dict(state)
    if adjacency is not None:
        model.set_graph(adjacency)
    return model, manifest
