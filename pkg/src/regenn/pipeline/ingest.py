"""Load a JSON manifest of per-sample CSV matrices into a series tensor."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from regenn.errors import DataError
from regenn.pipeline.series import SeriesTensor


class InconsistentDimensionsError(DataError):
    pass


class CellParseError(DataError):
    pass


def _read_sample(path: Path, label_column: str | None):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    label_idx = header.index(label_column) if label_column and label_column in header else None
    names = [h for i, h in enumerate(header) if i != label_idx]
    labels, matrix = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) > len(header):
            raise InconsistentDimensionsError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        row = row + [""] * (len(header) - len(row))
        values = []
        for c, cell in enumerate(row):
            if c == label_idx:
                labels.append(cell.strip())
                continue
            text = cell.strip()
            if not text:
                values.append(0.0)  # missing observation == no occurrence
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise CellParseError(f"{path}: cannot parse {text!r} at row {r}, column {c + 1}") from None
        matrix.append(values)
    return names, labels, np.array(matrix, dtype=np.float64).reshape(len(matrix), len(names))


def ingest(manifest_path, workers: int = 1) -> SeriesTensor:
    """Stack the manifest's samples into an ``s x t x v`` tensor.

    The manifest is ``{"samples": [{"id": ..., "path": ...}, ...]}`` with
    paths relative to the manifest; an optional ``"timestamp_column"`` names
    a CSV column holding timestamp labels instead of values. Empty cells
    become 0.0.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    entries = manifest.get("samples") if isinstance(manifest, dict) else manifest
    if not entries:
        raise DataError(f"{manifest_path}: manifest lists no samples")
    label_column = manifest.get("timestamp_column") if isinstance(manifest, dict) else None
    samples = []
    for k, entry in enumerate(entries):
        if isinstance(entry, str):
            entry = {"path": entry}
        samples.append((str(entry.get("id", Path(entry["path"]).stem)), manifest_path.parent / entry["path"]))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parsed = list(pool.map(lambda item: _read_sample(item[1], label_column), samples))

    ref_names, ref_labels, ref = parsed[0]
    for (sid, path), (names, _, matrix) in zip(samples, parsed):
        if names != ref_names:
            raise InconsistentDimensionsError(f"sample {sid!r} ({path}): variable headers {names} differ from {ref_names}")
        if matrix.shape != ref.shape:
            raise InconsistentDimensionsError(
                f"sample {sid!r} ({path}): shape {matrix.shape[0]}x{matrix.shape[1]} "
                f"differs from {ref.shape[0]}x{ref.shape[1]}")
    values = np.stack([m for _, _, m in parsed])
    return SeriesTensor(values, [sid for sid, _ in samples], ref_names, ref_labels or [])
