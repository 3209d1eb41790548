"""Deterministic text rendering of game state for guesser and drawer agents.

Rendering is byte-stable: ordering, grouping, and modifier placement are
all fixed so equal states produce identical strings (frozen by golden
tests). The guesser rendering is built from the masked view only and can
never contain an unguessed content word.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Literal, Sequence

from .codec import quantize_rotation
from .core import Drawing, GameState, IconLibrary, Phrase, VisibleWord

Style = Literal["underscore", "fill_in_the_blank"]

DEFAULT_SENTINEL = "<extra_id_{}>"

# Scale-ratio bands relative to the drawing's median scale.
HUGE_RATIO = 2.5
LARGE_RATIO = 1.5
SMALL_RATIO = 2.0 / 3.0
TINY_RATIO = 0.4

_CARDINALS = ("right", "down", "left", "up")


@dataclass(frozen=True)
class IconDescription:
    """One merged description group, pre-rendering."""

    count: int
    modifiers: tuple[str, ...]
    base: str
    anchor_x: float

    def render(self) -> str:
        parts = ([str(self.count)] if self.count > 1 else []) + list(self.modifiers) + [self.base]
        return " ".join(parts)


def _size_modifier(scale: float, median_scale: float) -> str | None:
    r = scale / median_scale
    if r >= HUGE_RATIO:
        return "huge"
    if r >= LARGE_RATIO:
        return "large"
    if r <= TINY_RATIO:
        return "tiny"
    if r <= SMALL_RATIO:
        return "small"
    return None


def arrow_direction(rotation: float) -> str:
    """Nearest cardinal for arrow art that points right at rotation zero;
    exact diagonals resolve clockwise."""
    return _CARDINALS[int(math.floor((rotation % 360.0) / 90.0 + 0.5)) % 4]


def describe_drawing(drawing: Drawing, library: IconLibrary) -> str:
    """Left-to-right textual inventory of a drawing.

    Each icon renders as [count] [size] [rotated] [flipped] name, with
    arrows special-cased to "left/right/up/down arrow". Identical
    descriptions merge into one entry with a count prefix; groups sort by
    their leftmost member's x, ties by creation order.
    """
    if not drawing.placements:
        raise ValueError("cannot describe an empty drawing")
    scales = [p.scale for p in drawing.placements]
    median_scale = statistics.median(scales)
    single = len(drawing.placements) == 1

    groups: dict[str, IconDescription] = {}
    order: list[str] = []
    for p in drawing.placements:
        icon = library.get(p.icon_id)
        modifiers: list[str] = []
        if not single:
            size = _size_modifier(p.scale, median_scale)
            if size:
                modifiers.append(size)
        if library.is_arrow(p.icon_id):
            base = f"{arrow_direction(p.rotation)} arrow"
        else:
            if quantize_rotation(p.rotation) != 0:
                modifiers.append("rotated")
            if p.flipped:
                modifiers.append("flipped")
            base = icon.name
        key = " ".join(modifiers + [base])
        if key in groups:
            g = groups[key]
            groups[key] = IconDescription(g.count + 1, g.modifiers, g.base, min(g.anchor_x, p.x))
        else:
            groups[key] = IconDescription(1, tuple(modifiers), base, p.x)
            order.append(key)
    ranked = sorted(order, key=lambda k: (groups[k].anchor_x, order.index(k)))
    return ", ".join(groups[k].render() for k in ranked)


@dataclass(frozen=True)
class Slot:
    """One rendered phrase position: a visible word, a blank, or a sentinel id."""

    kind: Literal["word", "blank", "sentinel"]
    text: str = ""
    sentinel_id: int = -1


@dataclass(frozen=True)
class PhraseTemplate:
    slots: tuple[Slot, ...]
    style: Style

    def render(self, sentinel_format: str = DEFAULT_SENTINEL) -> str:
        parts = []
        for s in self.slots:
            if s.kind == "word":
                parts.append(s.text)
            elif s.kind == "blank":
                parts.append("_")
            else:
                parts.append(sentinel_format.format(s.sentinel_id))
        return " ".join(parts)


def phrase_template(view: Sequence[VisibleWord], style: Style) -> PhraseTemplate:
    """Slot layout for a masked phrase view.

    Underscore style emits one blank per hidden word; fill-in-the-blank
    collapses each maximal run of hidden words into a single sentinel with
    ids increasing left to right.
    """
    slots: list[Slot] = []
    sentinel = 0
    in_run = False
    for w in view:
        if w.text is not None:
            slots.append(Slot("word", text=w.text))
            in_run = False
        elif style == "underscore":
            slots.append(Slot("blank"))
        else:
            if not in_run:
                slots.append(Slot("sentinel", sentinel_id=sentinel))
                sentinel += 1
                in_run = True
    return PhraseTemplate(tuple(slots), style)


def render_guesser_input(
    state: GameState,
    style: Style = "underscore",
    sentinel_format: str = DEFAULT_SENTINEL,
    library: IconLibrary | None = None,
) -> str:
    """Guesser-side model input: latest drawing description, then the
    phrase slots. Earlier drawings are deliberately not encoded."""
    drawing = state.latest_drawing()
    if drawing is None:
        raise ValueError("no drawing submitted yet")
    if library is None:
        raise ValueError("an icon library is required to describe the drawing")
    template = phrase_template(state.guesser_view(), style)
    return f"{describe_drawing(drawing, library)} phrase: {template.render(sentinel_format)}"


def render_drawer_input(phrase: Phrase) -> str:
    """Drawer-side model input: the phrase with guessed words starred."""
    return " ".join(f"*{w.text}*" if w.guessed else w.text for w in phrase.words)


def fill_in_the_blank_target(
    phrase: Phrase,
    sentinel_format: str = DEFAULT_SENTINEL,
) -> str:
    """Training target paired with the fill-in-the-blank encoding: each
    sentinel followed by the words of its hidden run, then a final
    terminating sentinel."""
    parts: list[str] = []
    sentinel = 0
    in_run = False
    for w in phrase.words:
        hidden = not (w.is_stopword or w.guessed)
        if hidden:
            if not in_run:
                parts.append(sentinel_format.format(sentinel))
                sentinel += 1
                in_run = True
            parts.append(w.text)
        else:
            in_run = False
    parts.append(sentinel_format.format(sentinel))
    return " ".join(parts)
