"""Encoder, recurrent decoders, linear shortcut and model assembly."""

from regenn.model.autoregression import Autoregression, autoregression
from regenn.model.encoder import Encoder, encoder_forward, self_attention
from regenn.model.forecaster import Dims, Forecaster, ForwardResult, build_variant, regenn_forward
from regenn.model.recurrent import (
    CellState,
    RecurrentUnit,
    UnknownCellError,
    decode_time_axis,
    decode_variable_axis,
    recurrent_cell_step,
    rnn_sequence,
)
from regenn.model.snapshot import SnapshotError, load_snapshot, save_snapshot, snapshot_bytes
from regenn.model.variants import (
    ABLATION_CELLS,
    ABLATION_TAGS,
    FULL_MODEL_TAG,
    RecurrentSpec,
    TagParseError,
    VariantSpec,
    format_tag,
    parse_tag,
)

__all__ = [
    "ABLATION_CELLS", "ABLATION_TAGS", "Autoregression", "CellState", "Dims", "Encoder",
    "FULL_MODEL_TAG", "Forecaster", "ForwardResult", "RecurrentSpec", "RecurrentUnit",
    "SnapshotError", "TagParseError", "UnknownCellError", "VariantSpec", "autoregression",
    "build_variant", "decode_time_axis", "decode_variable_axis", "encoder_forward",
    "format_tag", "load_snapshot", "parse_tag", "recurrent_cell_step", "regenn_forward",
    "rnn_sequence", "save_snapshot", "self_attention", "snapshot_bytes",
]
