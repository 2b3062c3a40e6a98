"""Architecture tags such as ``(E → URU + BRU) + AR`` and their parser."""

from __future__ import annotations

import re
from dataclasses import dataclass

from regenn.errors import ConfigError


class TagParseError(ConfigError):
    pass


@dataclass(frozen=True)
class RecurrentSpec:
    cell: str
    bidirectional: bool

    @property
    def token(self) -> str:
        return "BRU" if self.bidirectional else "URU"


@dataclass(frozen=True)
class VariantSpec:
    use_encoder: bool
    ru1: RecurrentSpec | None
    ru2: RecurrentSpec | None
    use_ar: bool
    use_gse: bool = False

    def __post_init__(self):
        if self.ru2 is not None and self.ru1 is None:
            raise ValueError("a variable-axis decoder needs a time-axis decoder before it")
        if self.use_gse and (self.ru1 is None or not self.use_encoder):
            raise ValueError("the graph-evolution model needs the encoder and a time-axis decoder")
        if self.ru1 is None and not self.use_ar:
            raise ValueError("variant has no output path")

    @property
    def tag(self) -> str:
        return format_tag(self)


# row order of the ablation summary table
ABLATION_TAGS = (
    "BRU",
    "E → BRU",
    "(E → BRU + BRU) + AR",
    "(E → BRU + URU) + AR",
    "(E → BRU) + AR",
    "E → URU",
    "(E → URU + BRU) + AR",
    "(E → URU + URU) + AR",
    "(E → URU) + AR",
    "URU",
)
ABLATION_CELLS = ("elman", "gru", "lstm")
FULL_MODEL_TAG = "regenn"

_TOKEN = re.compile(r"\s*(->|→|\(|\)|\+|[^\s()+]+)")


def _tokenize(tag: str) -> list[str]:
    tokens, pos = [], 0
    tag = tag.strip()
    while pos < len(tag):
        m = _TOKEN.match(tag, pos)
        if m is None:
            raise TagParseError(f"cannot tokenize {tag[pos:]!r}")
        tokens.append("→" if m.group(1) == "->" else m.group(1))
        pos = m.end()
    return tokens


def parse_tag(tag: str, cell: str = "lstm") -> VariantSpec:
    """Parse an architecture tag; ``regenn`` names the full graph-evolution model."""
    if tag.strip().lower() == FULL_MODEL_TAG:
        ru = RecurrentSpec(cell, False)
        return VariantSpec(True, ru, ru, True, use_gse=True)
    tokens = _tokenize(tag)
    if not tokens:
        raise TagParseError("empty architecture tag")
    for tok in tokens:
        if tok not in {"(", ")", "→", "+", "E", "URU", "BRU", "AR"}:
            raise TagParseError(f"unexpected token {tok!r} in tag {tag!r}")
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise TagParseError(f"expected {expected or 'a token'} at position {pos} in {tag!r}, got {tok!r}")
        pos += 1
        return tok

    if tokens == ["AR"]:
        return VariantSpec(False, None, None, True)
    paren = peek() == "("
    if paren:
        take("(")
    use_encoder = peek() == "E"
    if use_encoder:
        take("E")
        take("→")
    first = take()
    if first not in ("URU", "BRU"):
        raise TagParseError(f"expected URU or BRU, got {first!r} in {tag!r}")
    ru1 = RecurrentSpec(cell, first == "BRU")
    ru2 = None
    if peek() == "+" and pos + 1 < len(tokens) and tokens[pos + 1] in ("URU", "BRU"):
        take("+")
        ru2 = RecurrentSpec(cell, take() == "BRU")
    if paren:
        take(")")
    use_ar = False
    if peek() == "+":
        take("+")
        take("AR")
        use_ar = True
    if peek() is not None:
        raise TagParseError(f"unexpected token {peek()!r} at the end of {tag!r}")
    return VariantSpec(use_encoder, ru1, ru2, use_ar)


def format_tag(spec: VariantSpec) -> str:
    if spec.use_gse:
        return FULL_MODEL_TAG
    if spec.ru1 is None:
        return "AR"
    core = spec.ru1.token
    if spec.ru2 is not None:
        core += f" + {spec.ru2.token}"
    if spec.use_encoder:
        core = f"E → {core}"
    if spec.use_ar:
        return f"({core}) + AR"
    return core
