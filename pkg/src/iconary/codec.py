"""Quantized drawing codec: six tokens per icon plus a terminator.

A drawing serializes as, for each placement in creation order,
[icon name, x bucket, y bucket, scale bucket, rotation bucket, flip bit]
followed by an end-of-drawing token. Bucketing is linear for x/y,
logarithmic for scale, and circular (45-degree sectors centered on
multiples of 45) for rotation, so sequence length is always 6n+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol, Sequence

import numpy as np

from .core import Drawing, IconLibrary, IconPlacement, UnknownIconError


class TokenKind(str, Enum):
    ICON_NAME = "icon_name"
    X = "x"
    Y = "y"
    SCALE = "scale"
    ROTATION = "rotation"
    FLIP = "flip"
    END_OF_DRAWING = "end_of_drawing"


# Kinds in the order they appear within one icon group.
ICON_FIELD_KINDS = (
    TokenKind.ICON_NAME,
    TokenKind.X,
    TokenKind.Y,
    TokenKind.SCALE,
    TokenKind.ROTATION,
    TokenKind.FLIP,
)

_KIND_PREFIX = {
    TokenKind.X: "x",
    TokenKind.Y: "y",
    TokenKind.SCALE: "s",
    TokenKind.ROTATION: "r",
    TokenKind.FLIP: "f",
}
_PREFIX_KIND = {v: k for k, v in _KIND_PREFIX.items()}

EOD_TOKEN = "<eod>"


@dataclass(frozen=True)
class QuantizationSpec:
    x_buckets: int = 32
    y_buckets: int = 16
    scale_buckets: int = 11
    rotation_buckets: int = 8
    flip_buckets: int = 2
    scale_range: tuple[float, float] = (0.125, 8.0)

    def __post_init__(self) -> None:
        for name in ("x_buckets", "y_buckets", "scale_buckets", "rotation_buckets", "flip_buckets"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        lo, hi = self.scale_range
        if not (0 < lo < 1.0 < hi):
            raise ValueError(f"scale_range must straddle 1.0 with lo > 0, got {self.scale_range}")

    def buckets(self, kind: TokenKind) -> int:
        return {
            TokenKind.X: self.x_buckets,
            TokenKind.Y: self.y_buckets,
            TokenKind.SCALE: self.scale_buckets,
            TokenKind.ROTATION: self.rotation_buckets,
            TokenKind.FLIP: self.flip_buckets,
        }[kind]


@dataclass(frozen=True)
class DrawingToken:
    kind: TokenKind
    value: str | int

    def __post_init__(self) -> None:
        if self.kind is TokenKind.ICON_NAME:
            if not isinstance(self.value, str) or not self.value:
                raise ValueError("icon_name token needs a non-empty icon id")
        elif self.kind is TokenKind.END_OF_DRAWING:
            if self.value != 0:
                raise ValueError("end_of_drawing token carries no value")
        else:
            if not isinstance(self.value, int) or isinstance(self.value, bool) or self.value < 0:
                raise ValueError(f"{self.kind.value} token needs a non-negative bucket index")

    def to_string(self) -> str:
        if self.kind is TokenKind.ICON_NAME:
            return f"<icon:{self.value}>"
        if self.kind is TokenKind.END_OF_DRAWING:
            return EOD_TOKEN
        return f"<{_KIND_PREFIX[self.kind]}_{self.value}>"

    @classmethod
    def from_string(cls, text: str) -> DrawingToken:
        if text == EOD_TOKEN:
            return cls(TokenKind.END_OF_DRAWING, 0)
        if text.startswith("<icon:") and text.endswith(">"):
            return cls(TokenKind.ICON_NAME, text[len("<icon:"):-1])
        if text.startswith("<") and text.endswith(">") and "_" in text:
            prefix, _, idx = text[1:-1].partition("_")
            if prefix in _PREFIX_KIND and idx.isdigit():
                return cls(_PREFIX_KIND[prefix], int(idx))
        raise ValueError(f"unrecognized drawing token {text!r}")


class DrawingParseError(ValueError):
    """Token sequence violates the drawing grammar; position is 0-based."""

    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"position {position}: {message}")


def quantize(
    value: float,
    buckets: int,
    value_range: tuple[float, float],
    transform: str = "linear",
) -> int:
    """Bucket a continuous value; out-of-range values clamp to the edge buckets."""
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    if buckets < 2:
        raise ValueError("buckets must be >= 2")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"invalid range {value_range}")
    t = _transform_fn(transform)
    u = (t(value) - t(lo)) / (t(hi) - t(lo))
    u = 0.0 if u < 0.0 else 1.0 if u > 1.0 else u
    return min(int(u * buckets), buckets - 1)


def dequantize(
    index: int,
    buckets: int,
    value_range: tuple[float, float],
    transform: str = "linear",
) -> float:
    """Bucket-center value for a bucket index."""
    if not 0 <= index < buckets:
        raise ValueError(f"bucket index {index} out of range for {buckets} buckets")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"invalid range {value_range}")
    t = _transform_fn(transform)
    inv = _inverse_fn(transform)
    return inv(t(lo) + (index + 0.5) / buckets * (t(hi) - t(lo)))


def _transform_fn(transform: str) -> Callable[[float], float]:
    if transform == "linear":
        return lambda v: v
    if transform == "log":
        return math.log
    raise ValueError(f"unknown transform {transform!r}")


def _inverse_fn(transform: str) -> Callable[[float], float]:
    if transform == "linear":
        return lambda v: v
    if transform == "log":
        return math.exp
    raise ValueError(f"unknown transform {transform!r}")


def quantize_rotation(degrees: float, buckets: int = 8) -> int:
    """Circular bucketing into sectors centered on multiples of 360/buckets."""
    if not math.isfinite(degrees):
        raise ValueError(f"cannot quantize non-finite rotation {degrees!r}")
    width = 360.0 / buckets
    return int(math.floor((degrees % 360.0) / width + 0.5)) % buckets


def dequantize_rotation(index: int, buckets: int = 8) -> float:
    if not 0 <= index < buckets:
        raise ValueError(f"rotation bucket {index} out of range")
    return index * (360.0 / buckets)


def quantize_pose(p: IconPlacement, spec: QuantizationSpec) -> tuple[int, int, int, int, int]:
    return (
        quantize(p.x, spec.x_buckets, (0.0, 1.0)),
        quantize(p.y, spec.y_buckets, (0.0, 1.0)),
        quantize(p.scale, spec.scale_buckets, spec.scale_range, "log"),
        quantize_rotation(p.rotation, spec.rotation_buckets),
        1 if p.flipped else 0,
    )


def encode_drawing(drawing: Drawing, library: IconLibrary, spec: QuantizationSpec) -> list[DrawingToken]:
    """Serialize a drawing to tokens in the placements' creation order."""
    if not drawing.placements:
        raise ValueError("cannot encode an empty drawing")
    tokens: list[DrawingToken] = []
    for p in drawing.placements:
        if p.icon_id not in library:
            raise UnknownIconError(p.icon_id)
        xb, yb, sb, rb, fb = quantize_pose(p, spec)
        tokens.extend(
            [
                DrawingToken(TokenKind.ICON_NAME, p.icon_id),
                DrawingToken(TokenKind.X, xb),
                DrawingToken(TokenKind.Y, yb),
                DrawingToken(TokenKind.SCALE, sb),
                DrawingToken(TokenKind.ROTATION, rb),
                DrawingToken(TokenKind.FLIP, fb),
            ]
        )
    tokens.append(DrawingToken(TokenKind.END_OF_DRAWING, 0))
    return tokens


def decode_drawing(
    tokens: Sequence[DrawingToken],
    library: IconLibrary,
    spec: QuantizationSpec,
    round_index: int = 0,
) -> Drawing:
    """Parse tokens back into a drawing with bucket-center poses.

    Raises DrawingParseError naming the first offending position for any
    grammar violation (wrong kind, bucket overflow, unknown icon, missing
    or trailing terminator).
    """
    placements: list[IconPlacement] = []
    fields: list[int | str] = []
    terminated = False
    for pos, tok in enumerate(tokens):
        if terminated:
            raise DrawingParseError(pos, "token after end_of_drawing")
        slot = len(fields)
        if tok.kind is TokenKind.END_OF_DRAWING:
            if slot != 0:
                raise DrawingParseError(pos, f"expected {ICON_FIELD_KINDS[slot].value}, got end_of_drawing")
            if not placements:
                raise DrawingParseError(pos, "drawing must contain at least one icon")
            terminated = True
            continue
        expected = ICON_FIELD_KINDS[slot]
        if tok.kind is not expected:
            raise DrawingParseError(pos, f"expected {expected.value}, got {tok.kind.value}")
        if tok.kind is TokenKind.ICON_NAME:
            if tok.value not in library:
                raise DrawingParseError(pos, f"unknown icon id {tok.value!r}")
        else:
            if tok.value >= spec.buckets(tok.kind):
                raise DrawingParseError(pos, f"{tok.kind.value} bucket {tok.value} out of range")
        fields.append(tok.value)
        if len(fields) == 6:
            icon_id, xb, yb, sb, rb, fb = fields
            placements.append(
                IconPlacement(
                    icon_id=str(icon_id),
                    x=dequantize(int(xb), spec.x_buckets, (0.0, 1.0)),
                    y=dequantize(int(yb), spec.y_buckets, (0.0, 1.0)),
                    scale=dequantize(int(sb), spec.scale_buckets, spec.scale_range, "log"),
                    rotation=dequantize_rotation(int(rb), spec.rotation_buckets),
                    flipped=bool(fb),
                )
            )
            fields = []
    if not terminated:
        raise DrawingParseError(len(tokens), "sequence ended without end_of_drawing")
    return Drawing(tuple(placements), round_index=round_index)


@dataclass(frozen=True)
class DrawingGrammarState:
    """Cursor within the 6-token icon cycle plus a completed-icon count."""

    position_in_icon: int = 0
    icons_emitted: int = 0
    terminated: bool = False

    def advance(self, kind: TokenKind) -> DrawingGrammarState:
        if self.terminated:
            raise ValueError("grammar state already terminated")
        if kind is TokenKind.END_OF_DRAWING:
            if self.position_in_icon != 0 or self.icons_emitted == 0:
                raise ValueError("end_of_drawing not allowed here")
            return DrawingGrammarState(self.position_in_icon, self.icons_emitted, True)
        if kind is not ICON_FIELD_KINDS[self.position_in_icon]:
            raise ValueError(f"token kind {kind.value} not allowed at slot {self.position_in_icon}")
        nxt = (self.position_in_icon + 1) % 6
        emitted = self.icons_emitted + (1 if nxt == 0 else 0)
        return DrawingGrammarState(nxt, emitted)


@dataclass(frozen=True)
class DrawingVocab:
    """Fixed token inventory for one library + quantization spec."""

    tokens: tuple[DrawingToken, ...]
    kinds: tuple[TokenKind, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def build(cls, library: IconLibrary, spec: QuantizationSpec) -> DrawingVocab:
        toks: list[DrawingToken] = [
            DrawingToken(TokenKind.ICON_NAME, icon.id) for icon in library.icons
        ]
        for kind in (TokenKind.X, TokenKind.Y, TokenKind.SCALE, TokenKind.ROTATION, TokenKind.FLIP):
            toks.extend(DrawingToken(kind, i) for i in range(spec.buckets(kind)))
        toks.append(DrawingToken(TokenKind.END_OF_DRAWING, 0))
        return cls(tuple(toks), tuple(t.kind for t in toks))

    def __len__(self) -> int:
        return len(self.tokens)

    def index_of(self, token: DrawingToken) -> int:
        try:
            return self._index[token]  # type: ignore[attr-defined]
        except KeyError:
            raise KeyError(f"token {token} not in vocab") from None


def grammar_mask(state: DrawingGrammarState, vocab: DrawingVocab) -> np.ndarray:
    """Admissible-token mask guaranteeing any mask-following rollout decodes.

    Slot 0 admits icon names, plus the terminator once at least one icon
    is complete; slots 1-5 admit only their matching coordinate kind. The
    mask is never all-false.
    """
    if state.terminated:
        raise ValueError("no tokens may follow end_of_drawing")
    mask = np.zeros(len(vocab), dtype=bool)
    if state.position_in_icon == 0:
        for i, kind in enumerate(vocab.kinds):
            if kind is TokenKind.ICON_NAME:
                mask[i] = True
            elif kind is TokenKind.END_OF_DRAWING and state.icons_emitted >= 1:
                mask[i] = True
    else:
        expected = ICON_FIELD_KINDS[state.position_in_icon]
        for i, kind in enumerate(vocab.kinds):
            if kind is expected:
                mask[i] = True
    return mask


class WordpieceEmbedder(Protocol):
    """Embedding oracle over wordpieces, e.g. a pretrained model's table."""

    dim: int

    def wordpieces(self, text: str) -> list[str]: ...

    def __call__(self, piece: str) -> np.ndarray: ...


def init_token_embeddings(
    library: IconLibrary,
    spec: QuantizationSpec,
    embedder: WordpieceEmbedder,
) -> dict[str, np.ndarray]:
    """Warm-start embeddings for every drawing token.

    Icon tokens average the wordpiece embeddings of the icon's name; the
    k-th bucket token of each coordinate kind copies the embedding of the
    numeral string for k+1, giving the buckets a numeric ordering prior.
    The terminator has no linguistic anchor and starts at zero.
    """
    out: dict[str, np.ndarray] = {}
    for icon in library.icons:
        pieces = embedder.wordpieces(icon.name)
        if not pieces:
            raise ValueError(f"icon {icon.id!r} has a name with no wordpieces")
        out[DrawingToken(TokenKind.ICON_NAME, icon.id).to_string()] = np.mean(
            [np.asarray(embedder(p), dtype=np.float64) for p in pieces], axis=0
        )
    for kind in (TokenKind.X, TokenKind.Y, TokenKind.SCALE, TokenKind.ROTATION, TokenKind.FLIP):
        for k in range(spec.buckets(kind)):
            out[DrawingToken(kind, k).to_string()] = np.asarray(
                embedder(str(k + 1)), dtype=np.float64
            )
    out[EOD_TOKEN] = np.zeros(embedder.dim, dtype=np.float64)
    return out


class HashEmbedder:
    """Deterministic stand-in embedder: one fixed Gaussian vector per piece.

    Splits text on whitespace into 4-character chunks as its wordpieces.
    Useful wherever a real pretrained table is not available.
    """

    def __init__(self, dim: int = 16, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def wordpieces(self, text: str) -> list[str]:
        pieces = []
        for word in text.split():
            pieces.extend(word[i : i + 4] for i in range(0, len(word), 4))
        return pieces

    def __call__(self, piece: str) -> np.ndarray:
        import zlib

        key = zlib.crc32(piece.encode("utf-8")) ^ self.seed
        return np.random.default_rng(key).standard_normal(self.dim)
