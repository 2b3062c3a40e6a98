"""Ingestion, tensor files, normalisation, splitting and windowing."""

from regenn.pipeline.ingest import CellParseError, InconsistentDimensionsError, ingest
from regenn.pipeline.normalize import NormStats, apply_stats, denormalize, fit_stats, normalize
from regenn.pipeline.series import SeriesTensor
from regenn.pipeline.tensorfile import (
    BadMagicError,
    HeaderMismatchError,
    TruncatedPayloadError,
    decode_tensor,
    encode_tensor,
    read_tensor,
    write_tensor,
)
from regenn.pipeline.windows import (
    PlanError,
    RegionTooShortError,
    SplitPlan,
    WindowBatch,
    make_windows,
    split,
    window_starts,
)

__all__ = [
    "BadMagicError", "CellParseError", "HeaderMismatchError", "InconsistentDimensionsError",
    "NormStats", "PlanError", "RegionTooShortError", "SeriesTensor", "SplitPlan",
    "TruncatedPayloadError", "WindowBatch", "apply_stats", "decode_tensor", "denormalize",
    "encode_tensor", "fit_stats", "ingest", "make_windows", "normalize", "read_tensor",
    "split", "window_starts", "write_tensor",
]
