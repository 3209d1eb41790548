"""Canonical game-record JSON schema: serialization, parsing, validation.

The on-disk format is documented field by field in docs/game-schema.md.
Export is byte-stable: keys are sorted and separators fixed, so a
round-trip through import/export reproduces identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

from .core import (
    Drawing,
    GameRecord,
    Guess,
    IconPlacement,
    Outcome,
    Phrase,
    PhraseWord,
    PlayerInfo,
    Round,
    normalize_word,
)

SPLIT_TAGS = ("train", "ind_valid", "ind_test", "ood_valid", "ood_test")


class SchemaError(ValueError):
    """Record does not conform to the canonical game schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Violation:
    game_id: str | None
    path: str
    message: str


def placement_to_dict(p: IconPlacement) -> dict[str, Any]:
    return {
        "icon_id": p.icon_id,
        "x": p.x,
        "y": p.y,
        "scale": p.scale,
        "rotation": p.rotation,
        "flipped": p.flipped,
    }


def drawing_to_dict(d: Drawing) -> dict[str, Any]:
    return {
        "round_index": d.round_index,
        "placements": [placement_to_dict(p) for p in d.placements],
    }


def phrase_to_dict(phrase: Phrase) -> dict[str, Any]:
    return {
        "words": [
            {
                "text": w.text,
                "is_stopword": w.is_stopword,
                "is_oov": w.is_oov,
                "guessed": w.guessed,
            }
            for w in phrase.words
        ]
    }


def guess_to_dict(g: Guess) -> dict[str, Any]:
    out: dict[str, Any] = {"words": list(g.words)}
    if g.correctness is not None:
        out["correctness"] = list(g.correctness)
    return out


def game_to_dict(record: GameRecord) -> dict[str, Any]:
    return {
        "game_id": record.game_id,
        "phrase": phrase_to_dict(record.phrase),
        "rounds": [
            {
                "drawing": drawing_to_dict(r.drawing),
                "guesses": [guess_to_dict(g) for g in r.guesses],
            }
            for r in record.rounds
        ],
        "outcome": record.outcome.value,
        "elapsed_seconds": record.elapsed_seconds,
        "split_tag": record.split_tag,
        "players": {
            "drawer": {"id": record.drawer.id, "is_human": record.drawer.is_human},
            "guesser": {"id": record.guesser.id, "is_human": record.guesser.is_human},
        },
    }


def dumps_game(record: GameRecord) -> str:
    return json.dumps(game_to_dict(record), sort_keys=True, separators=(",", ":"))


def _require(obj: dict, key: str, typ: type | tuple, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    v = obj[key]
    if not isinstance(v, typ):
        raise SchemaError(f"{path}.{key}", f"expected {typ}, got {type(v).__name__}")
    return v


def _number(obj: dict, key: str, path: str) -> float:
    v = _require(obj, key, (int, float), path)
    if isinstance(v, bool) or not math.isfinite(v):
        raise SchemaError(f"{path}.{key}", f"expected a finite number, got {v!r}")
    return float(v)


def placement_from_dict(obj: dict, path: str = "placement") -> IconPlacement:
    icon_id = _require(obj, "icon_id", str, path)
    x = _number(obj, "x", path)
    y = _number(obj, "y", path)
    scale = _number(obj, "scale", path)
    rotation = _number(obj, "rotation", path)
    flipped = _require(obj, "flipped", bool, path)
    if not 0.0 <= x <= 1.0:
        raise SchemaError(f"{path}.x", f"out of [0,1]: {x}")
    if not 0.0 <= y <= 1.0:
        raise SchemaError(f"{path}.y", f"out of [0,1]: {y}")
    if scale <= 0:
        raise SchemaError(f"{path}.scale", f"must be positive: {scale}")
    if not 0.0 <= rotation < 360.0:
        raise SchemaError(f"{path}.rotation", f"out of [0,360): {rotation}")
    return IconPlacement(icon_id, x, y, scale, rotation, flipped)


def drawing_from_dict(obj: dict, path: str = "drawing") -> Drawing:
    round_index = _require(obj, "round_index", int, path)
    if isinstance(round_index, bool) or round_index < 0:
        raise SchemaError(f"{path}.round_index", f"must be a non-negative int: {round_index!r}")
    placements = _require(obj, "placements", list, path)
    if not placements:
        raise SchemaError(f"{path}.placements", "submitted drawing must be non-empty")
    parsed = [
        placement_from_dict(p, f"{path}.placements[{i}]") for i, p in enumerate(placements)
    ]
    return Drawing(tuple(parsed), round_index=round_index)


def phrase_from_dict(obj: dict, path: str = "phrase") -> Phrase:
    words = _require(obj, "words", list, path)
    if not words:
        raise SchemaError(f"{path}.words", "phrase must be non-empty")
    parsed = []
    for i, w in enumerate(words):
        wp = f"{path}.words[{i}]"
        text = _require(w, "text", str, wp)
        if not text or any(c.isspace() for c in text):
            raise SchemaError(f"{wp}.text", f"must be non-empty without whitespace: {text!r}")
        parsed.append(
            PhraseWord(
                text=normalize_word(text),
                is_stopword=_require(w, "is_stopword", bool, wp),
                is_oov=_require(w, "is_oov", bool, wp),
                guessed=_require(w, "guessed", bool, wp),
            )
        )
    if not any(not w.is_stopword for w in parsed):
        raise SchemaError(f"{path}.words", "phrase needs at least one content word")
    return Phrase(tuple(parsed))


def guess_from_dict(obj: dict, phrase_len: int, path: str = "guess") -> Guess:
    words = _require(obj, "words", list, path)
    if len(words) != phrase_len:
        raise SchemaError(f"{path}.words", f"length {len(words)} != phrase length {phrase_len}")
    for i, w in enumerate(words):
        if not isinstance(w, str) or not w:
            raise SchemaError(f"{path}.words[{i}]", f"expected non-empty string, got {w!r}")
    correctness = None
    if "correctness" in obj:
        raw = _require(obj, "correctness", list, path)
        if len(raw) != phrase_len or not all(isinstance(c, bool) for c in raw):
            raise SchemaError(f"{path}.correctness", "must be booleans matching phrase length")
        correctness = tuple(raw)
    return Guess(tuple(words), correctness)


def _player_from_dict(obj: dict, path: str) -> PlayerInfo:
    return PlayerInfo(
        id=_require(obj, "id", str, path),
        is_human=_require(obj, "is_human", bool, path),
    )


def game_from_dict(obj: dict) -> GameRecord:
    game_id = _require(obj, "game_id", str, "game")
    phrase = phrase_from_dict(_require(obj, "phrase", dict, "game"))
    raw_rounds = _require(obj, "rounds", list, "game")
    rounds = []
    for i, r in enumerate(raw_rounds):
        rp = f"game.rounds[{i}]"
        if not isinstance(r, dict):
            raise SchemaError(rp, "expected object")
        drawing = drawing_from_dict(_require(r, "drawing", dict, rp), f"{rp}.drawing")
        if drawing.round_index != i:
            raise SchemaError(f"{rp}.drawing.round_index", f"expected {i}, got {drawing.round_index}")
        guesses = tuple(
            guess_from_dict(g, len(phrase.words), f"{rp}.guesses[{j}]")
            for j, g in enumerate(_require(r, "guesses", list, rp))
        )
        rounds.append(Round(drawing, guesses))
    outcome_raw = _require(obj, "outcome", str, "game")
    try:
        outcome = Outcome(outcome_raw)
    except ValueError:
        raise SchemaError("game.outcome", f"unknown outcome {outcome_raw!r}") from None
    if outcome is Outcome.WON:
        if not rounds or not rounds[-1].guesses:
            raise SchemaError("game.rounds", "won game must end with a guess")
        final = rounds[-1].guesses[-1]
        ok = tuple(
            normalize_word(g) == w.text for g, w in zip(final.words, phrase.words)
        )
        if not all(ok):
            raise SchemaError("game.outcome", "won requires an all-correct final guess")
    split_tag = _require(obj, "split_tag", str, "game")
    if split_tag not in SPLIT_TAGS:
        raise SchemaError("game.split_tag", f"unknown split {split_tag!r}")
    players = _require(obj, "players", dict, "game")
    elapsed = _number(obj, "elapsed_seconds", "game")
    if elapsed < 0:
        raise SchemaError("game.elapsed_seconds", f"must be >= 0: {elapsed}")
    return GameRecord(
        game_id=game_id,
        phrase=phrase,
        rounds=tuple(rounds),
        outcome=outcome,
        elapsed_seconds=elapsed,
        split_tag=split_tag,
        drawer=_player_from_dict(_require(players, "drawer", dict, "game.players"), "game.players.drawer"),
        guesser=_player_from_dict(_require(players, "guesser", dict, "game.players"), "game.players.guesser"),
    )


def loads_game(text: str) -> GameRecord:
    return game_from_dict(json.loads(text))


def validate_game_dict(obj: dict) -> list[Violation]:
    """Collect schema violations without raising; empty list means valid."""
    game_id = obj.get("game_id") if isinstance(obj, dict) else None
    try:
        game_from_dict(obj)
    except SchemaError as e:
        return [Violation(game_id, e.path, e.message)]
    except (TypeError, ValueError, AttributeError) as e:
        return [Violation(game_id, "game", str(e))]
    return []
