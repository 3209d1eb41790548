"""Core domain types: icons, drawings, phrases, guesses, game records.

Everything here is an immutable value; the operations are pure functions,
so callers may share instances freely across threads.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources


class GuessLengthError(ValueError):
    """Guess word count does not match the phrase."""


class UnknownIconError(KeyError):
    """Icon id not present in the library."""


def normalize_word(text: str) -> str:
    """Canonical form used for word matching: NFC, trimmed, casefolded."""
    return unicodedata.normalize("NFC", text.strip()).casefold()


def load_stopwords() -> frozenset[str]:
    """Bundled function-word list used to flag new phrases."""
    raw = resources.files("iconary.data").joinpath("stopwords.txt").read_text("utf-8")
    words = (line.strip() for line in raw.splitlines())
    return frozenset(w for w in words if w and not w.startswith("#"))


def load_icon_library(path: str | None = None) -> "IconLibrary":
    """Icon library from a manifest file (id, name, tags, art path); the
    bundled manifest is used when no path is given."""
    import json

    if path is None:
        raw = resources.files("iconary.data").joinpath("icons.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as f:
            raw = f.read()
    manifest = json.loads(raw)
    icons = tuple(
        Icon(
            id=entry["id"],
            name=entry["name"],
            tags=tuple(entry.get("tags", ())),
            art=entry.get("art"),
        )
        for entry in manifest["icons"]
    )
    return IconLibrary(icons, arrow_icon_ids=frozenset(manifest.get("arrow_icon_ids", ())))


@dataclass(frozen=True)
class Icon:
    id: str
    name: str
    tags: tuple[str, ...] = ()
    art: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("icon id must be non-empty")
        if not self.name.strip():
            raise ValueError(f"icon {self.id!r} has an empty name")


@dataclass(frozen=True)
class IconLibrary:
    icons: tuple[Icon, ...]
    arrow_icon_ids: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        ids = [icon.id for icon in self.icons]
        if len(set(ids)) != len(ids):
            dupes = sorted(i for i, n in Counter(ids).items() if n > 1)
            raise ValueError(f"duplicate icon ids: {dupes}")
        unknown_arrows = self.arrow_icon_ids - set(ids)
        if unknown_arrows:
            raise ValueError(f"arrow ids not in library: {sorted(unknown_arrows)}")
        object.__setattr__(self, "_by_id", {icon.id: icon for icon in self.icons})

    def get(self, icon_id: str) -> Icon:
        try:
            return self._by_id[icon_id]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownIconError(icon_id) from None

    def __contains__(self, icon_id: str) -> bool:
        return icon_id in self._by_id  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.icons)

    def is_arrow(self, icon_id: str) -> bool:
        return icon_id in self.arrow_icon_ids


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


@dataclass(frozen=True)
class IconPlacement:
    """One icon instance on the canvas.

    Coordinates are normalized to the unit square (the display stretches it
    to a 2:1 canvas). Out-of-range x/y are clamped so that UI drags which
    overshoot the edge stay legal; scale and rotation are validated.
    """

    icon_id: str
    x: float
    y: float
    scale: float = 1.0
    rotation: float = 0.0
    flipped: bool = False

    def __post_init__(self) -> None:
        for name in ("x", "y", "scale", "rotation"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "x", _clamp01(float(self.x)))
        object.__setattr__(self, "y", _clamp01(float(self.y)))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "rotation", float(self.rotation) % 360.0)


@dataclass(frozen=True)
class Drawing:
    """Ordered icon placements for one round, in creation order."""

    placements: tuple[IconPlacement, ...]
    round_index: int = 0

    def __post_init__(self) -> None:
        if self.round_index < 0:
            raise ValueError("round_index must be >= 0")
        object.__setattr__(self, "placements", tuple(self.placements))

    def icon_counts(self) -> Counter[str]:
        return Counter(p.icon_id for p in self.placements)

    def __len__(self) -> int:
        return len(self.placements)


@dataclass(frozen=True)
class PhraseWord:
    text: str
    is_stopword: bool = False
    is_oov: bool = False
    guessed: bool = False

    def __post_init__(self) -> None:
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"word text must be non-empty without whitespace: {self.text!r}")


@dataclass(frozen=True)
class Phrase:
    words: tuple[PhraseWord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if not any(not w.is_stopword for w in self.words):
            raise ValueError("phrase needs at least one content word")

    def __len__(self) -> int:
        return len(self.words)

    def text(self) -> str:
        return " ".join(w.text for w in self.words)

    def content_positions(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.words) if not w.is_stopword)

    def guessed_flags(self) -> tuple[bool, ...]:
        """Per-position visibility; stopwords are always revealed."""
        return tuple(w.is_stopword or w.guessed for w in self.words)

    def all_guessed(self) -> bool:
        return all(self.guessed_flags())

    def with_guessed(self, positions: set[int] | frozenset[int]) -> Phrase:
        if not positions:
            return self
        new = tuple(
            replace(w, guessed=True) if i in positions and not w.guessed else w
            for i, w in enumerate(self.words)
        )
        return Phrase(new)


def make_phrase(
    text: str,
    stopwords: frozenset[str] | None = None,
    oov_words: frozenset[str] | set[str] = frozenset(),
) -> Phrase:
    """Build a phrase from raw text, flagging stopwords from the shipped list.

    Ingested records carry their own per-word flags and bypass this helper.
    """
    stopwords = load_stopwords() if stopwords is None else stopwords
    oov = {normalize_word(w) for w in oov_words}
    words = []
    for token in text.split():
        w = normalize_word(token)
        words.append(PhraseWord(text=w, is_stopword=w in stopwords, is_oov=w in oov))
    return Phrase(tuple(words))


@dataclass(frozen=True)
class Guess:
    words: tuple[str, ...]
    correctness: tuple[bool, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if self.correctness is not None:
            object.__setattr__(self, "correctness", tuple(self.correctness))
            if len(self.correctness) != len(self.words):
                raise ValueError("correctness length must match words")

    def __len__(self) -> int:
        return len(self.words)


def evaluate_guess(phrase: Phrase, guess: Guess) -> tuple[Guess, Phrase]:
    """Score a guess against the phrase.

    Position i is correct iff the guess word equals the phrase word under
    case-insensitive exact matching (no stemming). Returns the guess with
    correctness filled plus the phrase with `guessed` flags raised; flags
    are monotone, so re-evaluating the same guess changes nothing.
    """
    if len(guess.words) != len(phrase.words):
        raise GuessLengthError(
            f"guess has {len(guess.words)} words, phrase has {len(phrase.words)}"
        )
    correctness = tuple(
        normalize_word(g) == w.text for g, w in zip(guess.words, phrase.words)
    )
    # Stopwords are prefilled in the UI; the guessed flag tracks content only.
    newly = {
        i for i, ok in enumerate(correctness) if ok and not phrase.words[i].is_stopword
    }
    return Guess(guess.words, correctness), phrase.with_guessed(newly)


class Outcome(str, Enum):
    WON = "won"
    LOST_TIMEOUT = "lost_timeout"


@dataclass(frozen=True)
class PlayerInfo:
    id: str
    is_human: bool = True


@dataclass(frozen=True)
class Round:
    """One drawing and the guesses made against it."""

    drawing: Drawing
    guesses: tuple[Guess, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "guesses", tuple(self.guesses))


@dataclass(frozen=True)
class GameRecord:
    """Full transcript of one game."""

    game_id: str
    phrase: Phrase
    rounds: tuple[Round, ...]
    outcome: Outcome
    elapsed_seconds: float = 0.0
    split_tag: str = "train"
    drawer: PlayerInfo = PlayerInfo("anon-drawer")
    guesser: PlayerInfo = PlayerInfo("anon-guesser")

    def __post_init__(self) -> None:
        object.__setattr__(self, "rounds", tuple(self.rounds))

    def all_guesses(self) -> tuple[Guess, ...]:
        return tuple(g for r in self.rounds for g in r.guesses)


@dataclass(frozen=True)
class OutcomeSummary:
    won: bool
    off_by_one: bool
    missed_words: int


def guessed_positions(record: GameRecord) -> frozenset[int]:
    """Positions ever guessed correctly, recomputed from the guess words."""
    hit: set[int] = set()
    for guess in record.all_guesses():
        if len(guess.words) != len(record.phrase.words):
            continue
        for i, (g, w) in enumerate(zip(guess.words, record.phrase.words)):
            if normalize_word(g) == w.text:
                hit.add(i)
    return frozenset(hit)


def game_outcome(record: GameRecord) -> OutcomeSummary:
    """Derive win / off-by-one / missed-word count from the transcript.

    A game is won when every word was eventually guessed (stopwords are
    revealed up front and count as guessed); off-by-one allows at most one
    content word to have never been guessed.
    """
    hit = guessed_positions(record)
    missed = sum(1 for i in record.phrase.content_positions() if i not in hit)
    return OutcomeSummary(won=missed == 0, off_by_one=missed <= 1, missed_words=missed)


class RevisionKind(str, Enum):
    EDIT = "edit"
    ADD = "add"
    REDRAW = "redraw"


class GameRevision(str, Enum):
    EDIT = "edit"
    ADD = "add"
    REDRAW = "redraw"
    SINGLE_DRAWING = "single_drawing"


_REVISION_RANK = {RevisionKind.EDIT: 0, RevisionKind.ADD: 1, RevisionKind.REDRAW: 2}


def classify_revision(prev: Drawing, next_: Drawing) -> RevisionKind:
    """Label one drawing revision by comparing icon-id multisets.

    A strict superset is an `add`; an equal multiset or a strict subset
    (poses changed, or icons only removed) is an `edit`; anything else
    replaced icons and is a `redraw`.
    """
    a, b = prev.icon_counts(), next_.icon_counts()
    if a == b:
        return RevisionKind.EDIT
    a_sub_b = all(a[k] <= b[k] for k in a)
    b_sub_a = all(b[k] <= a[k] for k in b)
    if a_sub_b:
        return RevisionKind.ADD
    if b_sub_a:
        return RevisionKind.EDIT
    return RevisionKind.REDRAW


def classify_game_revision(record: GameRecord) -> GameRevision:
    """Game-level revision strategy: the latter-most label under
    edit < add < redraw across all consecutive drawing pairs."""
    drawings = [r.drawing for r in record.rounds]
    if len(drawings) < 2:
        return GameRevision.SINGLE_DRAWING
    labels = [classify_revision(a, b) for a, b in zip(drawings, drawings[1:])]
    top = max(labels, key=_REVISION_RANK.__getitem__)
    return GameRevision(top.value)


@dataclass(frozen=True)
class VisibleWord:
    """One phrase slot as a given player may see it; text is None when hidden."""

    text: str | None
    is_stopword: bool
    guessed: bool


@dataclass(frozen=True)
class GameState:
    """Authoritative in-progress game state; role views are projections."""

    phrase: Phrase
    rounds: tuple[Round, ...] = ()
    turn: str = "drawer"
    remaining_seconds: float = 240.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if self.turn not in ("drawer", "guesser"):
            raise ValueError(f"turn must be drawer or guesser, got {self.turn!r}")

    def latest_drawing(self) -> Drawing | None:
        return self.rounds[-1].drawing if self.rounds else None

    def drawer_view(self) -> tuple[VisibleWord, ...]:
        return tuple(
            VisibleWord(w.text, w.is_stopword, w.is_stopword or w.guessed)
            for w in self.phrase.words
        )

    def guesser_view(self) -> tuple[VisibleWord, ...]:
        """Phrase as the guesser sees it: unguessed content words are hidden,
        stopwords are always visible."""
        out = []
        for w in self.phrase.words:
            visible = w.is_stopword or w.guessed
            out.append(VisibleWord(w.text if visible else None, w.is_stopword, visible))
        return tuple(out)
