"""Evaluation: win metrics with cutoffs, icon F1, drawing perplexity,
replay-based guesser evaluation, and dataset statistics."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .core import (
    Drawing,
    GameRecord,
    Outcome,
    Phrase,
    classify_game_revision,
    normalize_word,
)

GUESS_CUTOFFS = (5, 10, 15, 20)
DRAWING_CUTOFFS = (1, 2, 3, 4)


@dataclass(frozen=True)
class EvalConfig:
    guesses_per_drawing: int = 5
    guess_cutoff: int = 20
    drawing_cutoff: int = 4
    exact_max_len: int = 2          # phrases this short must be fully guessed
    one_miss_max_len: int = 5       # 3..this length may miss one word
    long_phrase_misses: int = 2     # longer phrases may miss this many
    ood_mode: bool = False

    def __post_init__(self) -> None:
        for name in ("guesses_per_drawing", "guess_cutoff", "drawing_cutoff"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


def soft_win(
    phrase: Phrase,
    guessed: Sequence[bool],
    ood_mode: bool = False,
    config: EvalConfig | None = None,
) -> bool:
    """Length-banded near-miss win criterion.

    Phrases of up to two words need an exact match, lengths 3-5 may miss
    one word, longer phrases may miss two. Stopwords are revealed up
    front, so they never count as misses. With ood_mode set, at least one
    out-of-vocabulary word must additionally be among the guessed words.
    """
    cfg = config or EvalConfig()
    if len(guessed) != len(phrase.words):
        raise ValueError("guessed flags must match phrase length")
    n = len(phrase.words)
    misses = sum(
        1 for w, g in zip(phrase.words, guessed) if not w.is_stopword and not g
    )
    if n <= cfg.exact_max_len:
        ok = misses == 0
    elif n <= cfg.one_miss_max_len:
        ok = misses <= 1
    else:
        ok = misses <= cfg.long_phrase_misses
    if ok and ood_mode:
        oov = [(w, g) for w, g in zip(phrase.words, guessed) if w.is_oov]
        if oov and not any(g for _, g in oov):
            ok = False
    return ok


def icon_f1(model: Drawing, human_drawings: Sequence[Drawing]) -> float:
    """Best bag-of-icons F1 between a model drawing and the initial human
    drawings for the same phrase."""
    if not model.placements:
        raise ValueError("model drawing must be non-empty")
    if not human_drawings:
        raise ValueError("at least one human drawing is required")
    m = model.icon_counts()
    m_total = sum(m.values())
    best = 0.0
    for human in human_drawings:
        h = human.icon_counts()
        h_total = sum(h.values())
        overlap = sum((m & h).values())
        if h_total == 0:
            continue
        precision = overlap / m_total
        recall = overlap / h_total
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        best = max(best, f1)
    return best


class DrawingLikelihood(Protocol):
    """Per-token log-likelihood of a human drawing's token sequence given
    the game state the drawer saw."""

    def token_log_likelihoods(
        self, record: GameRecord, round_index: int
    ) -> Sequence[float]: ...


@dataclass(frozen=True)
class PerplexityReport:
    value: float | None
    games_scored: int
    games_excluded: tuple[str, ...]


def drawing_perplexity(agent: DrawingLikelihood, corpus: Sequence[GameRecord]) -> PerplexityReport:
    """Two-level average: per-drawing perplexity, averaged over a game's
    drawings, then averaged across games. Games yielding a non-finite
    likelihood are excluded and reported."""
    per_game: list[float] = []
    excluded: list[str] = []
    for record in corpus:
        drawing_ppls: list[float] = []
        bad = False
        for i in range(len(record.rounds)):
            lls = list(agent.token_log_likelihoods(record, i))
            if not lls or not all(math.isfinite(v) for v in lls):
                bad = True
                break
            drawing_ppls.append(math.exp(-math.fsum(lls) / len(lls)))
        if bad or not drawing_ppls:
            excluded.append(record.game_id)
            continue
        per_game.append(math.fsum(drawing_ppls) / len(drawing_ppls))
    value = math.fsum(per_game) / len(per_game) if per_game else None
    return PerplexityReport(value, len(per_game), tuple(excluded))


@dataclass
class MetricsReport:
    """Aggregate results of one evaluation run."""

    label: str
    games: int = 0
    win_rate: float | None = None
    soft_win_rate: float | None = None
    off_by_one_rate: float | None = None
    icon_f1: float | None = None
    drawing_perplexity: float | None = None
    curves: dict[int, tuple[float, float]] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "games": self.games,
            "win_rate": self.win_rate,
            "soft_win_rate": self.soft_win_rate,
            "off_by_one_rate": self.off_by_one_rate,
            "icon_f1": self.icon_f1,
            "drawing_perplexity": self.drawing_perplexity,
            "curves": {str(k): list(v) for k, v in sorted(self.curves.items())},
            "skipped": list(self.skipped),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["metric", "value"])
        for key in ("games", "win_rate", "soft_win_rate", "off_by_one_rate", "icon_f1", "drawing_perplexity"):
            writer.writerow([key, getattr(self, key)])
        for cutoff, (win, soft) in sorted(self.curves.items()):
            writer.writerow([f"win@{cutoff}", win])
            writer.writerow([f"soft_win@{cutoff}", soft])
        return buf.getvalue()

    def table(self) -> str:
        rows = [f"{self.label}: {self.games} games"]
        for key in ("win_rate", "soft_win_rate", "off_by_one_rate", "icon_f1", "drawing_perplexity"):
            v = getattr(self, key)
            if v is not None:
                rows.append(f"  {key:<20} {v:.4f}")
        for cutoff, (win, soft) in sorted(self.curves.items()):
            rows.append(f"  @{cutoff:<3} win {win:.4f}  soft {soft:.4f}")
        return "\n".join(rows)


class ReplayGuesser(Protocol):
    """Agent surface used by replay evaluation: produce up to k guesses
    for the current replay state."""

    def guess(
        self,
        drawing: Drawing,
        known: Sequence[str | None],
        incorrect: Sequence[frozenset[str]],
        prior_guesses: Sequence[tuple[str, ...]],
        phrase_meta: Phrase,
        k: int,
    ) -> list[tuple[str, ...]]: ...


def replay_eval_guesser(
    agent: ReplayGuesser,
    corpus: Sequence[GameRecord],
    config: EvalConfig | None = None,
) -> MetricsReport:
    """Evaluate a guesser against recorded human/human games.

    For each drawing, the agent sees the words the human had locked in by
    then plus its own earlier guesses. A phrase word the agent produces at
    the right position counts as guessed only if it never appeared in the
    human's guesses for earlier drawings; once earned, credit persists.
    """
    cfg = config or EvalConfig()
    report = MetricsReport(label="replay-guesser")
    wins = softs = played = 0
    for record in corpus:
        try:
            outcome = _replay_single_game(agent, record, cfg)
        except Exception as e:  # malformed record; skip but report
            report.skipped.append(f"{record.game_id}: {e}")
            continue
        played += 1
        wins += outcome[0]
        softs += outcome[1]
    report.games = played
    if played:
        report.win_rate = wins / played
        report.soft_win_rate = softs / played
    return report


def _replay_single_game(
    agent: ReplayGuesser, record: GameRecord, cfg: EvalConfig
) -> tuple[bool, bool]:
    phrase = record.phrase
    n = len(phrase.words)
    credited: set[int] = set()       # positions earned by the agent
    human_prior_words: set[str] = set()   # words in human guesses before this drawing
    human_known: list[str | None] = [
        w.text if w.is_stopword else None for w in phrase.words
    ]
    agent_incorrect: list[set[str]] = [set() for _ in range(n)]
    prior_guesses: list[tuple[str, ...]] = []

    for round_ in record.rounds:
        known_now: list[str | None] = [
            human_known[i] or (phrase.words[i].text if i in credited else None)
            for i in range(n)
        ]
        guesses = agent.guess(
            round_.drawing,
            known_now,
            [frozenset(s) for s in agent_incorrect],
            tuple(prior_guesses),
            phrase,
            cfg.guesses_per_drawing,
        )
        for words in guesses[: cfg.guesses_per_drawing]:
            if len(words) != n:
                continue
            prior_guesses.append(tuple(words))
            for i, w in enumerate(words):
                nw = normalize_word(w)
                if nw == phrase.words[i].text:
                    if nw not in human_prior_words:
                        credited.add(i)
                else:
                    agent_incorrect[i].add(nw)
        # Advance the human transcript: words the human locked in during
        # this round become visible (and uncreditable) from the next one.
        for guess in round_.guesses:
            for i, w in enumerate(guess.words[:n]):
                nw = normalize_word(w)
                human_prior_words.add(nw)
                if nw == phrase.words[i].text:
                    human_known[i] = phrase.words[i].text

    guessed_flags = tuple(
        w.is_stopword or i in credited for i, w in enumerate(phrase.words)
    )
    won = all(guessed_flags)
    soft = soft_win(phrase, guessed_flags, cfg.ood_mode, cfg)
    return won, soft


def eval_drawer(agent, corpus: Sequence[GameRecord], label: str = "replay-drawer") -> MetricsReport:
    """Drawer-side automatic metrics over human/human games.

    Icon F1 compares the agent's initial drawing for each phrase with the
    best-matching initial human drawing; perplexity runs when the agent
    exposes token likelihoods in the shared drawing-token format.
    """
    from .core import GameState

    report = MetricsReport(label=label)
    by_phrase: dict[str, list[GameRecord]] = {}
    for record in corpus:
        by_phrase.setdefault(record.phrase.text(), []).append(record)
    f1s: list[float] = []
    for _, records in sorted(by_phrase.items()):
        humans = [r.rounds[0].drawing for r in records if r.rounds]
        if not humans:
            continue
        state = GameState(phrase=records[0].phrase.with_guessed(set()))
        try:
            model_drawing = agent.draw(state)
        except Exception as e:
            report.skipped.append(f"{records[0].game_id}: {e}")
            continue
        f1s.append(icon_f1(model_drawing, humans))
    report.games = len(f1s)
    if f1s:
        report.icon_f1 = math.fsum(f1s) / len(f1s)
    if hasattr(agent, "token_log_likelihoods"):
        ppl = drawing_perplexity(agent, corpus)
        report.drawing_perplexity = ppl.value
        report.skipped.extend(f"perplexity: {g}" for g in ppl.games_excluded)
    else:
        report.notes.append("agent exposes no drawing likelihood; perplexity skipped")
    return report


def _winning_guess_number(record: GameRecord) -> int | None:
    """1-based cumulative index of the guess that completed the phrase."""
    needed = set(record.phrase.content_positions())
    hit: set[int] = set()
    count = 0
    for round_ in record.rounds:
        for guess in round_.guesses:
            count += 1
            for i, w in enumerate(guess.words[: len(record.phrase.words)]):
                if normalize_word(w) == record.phrase.words[i].text:
                    hit.add(i)
            if needed <= hit:
                return count
    return None


def _flags_after_guesses(record: GameRecord, limit: int) -> tuple[bool, ...]:
    hit: set[int] = set()
    count = 0
    for round_ in record.rounds:
        for guess in round_.guesses:
            if count >= limit:
                break
            count += 1
            for i, w in enumerate(guess.words[: len(record.phrase.words)]):
                if normalize_word(w) == record.phrase.words[i].text:
                    hit.add(i)
    return tuple(
        w.is_stopword or i in hit for i, w in enumerate(record.phrase.words)
    )


def _flags_after_drawings(record: GameRecord, limit: int) -> tuple[bool, ...]:
    hit: set[int] = set()
    for round_ in record.rounds[:limit]:
        for guess in round_.guesses:
            for i, w in enumerate(guess.words[: len(record.phrase.words)]):
                if normalize_word(w) == record.phrase.words[i].text:
                    hit.add(i)
    return tuple(
        w.is_stopword or i in hit for i, w in enumerate(record.phrase.words)
    )


def human_ai_scoring(
    games: Sequence[GameRecord],
    config: EvalConfig | None = None,
    ai_role: str = "guesser",
) -> MetricsReport:
    """Win / soft-win curves at fixed guess or drawing budgets for live
    games, so fast AI players are compared at matched effort."""
    cfg = config or EvalConfig()
    if ai_role not in ("guesser", "drawer"):
        raise ValueError("ai_role must be guesser or drawer")
    cutoffs = GUESS_CUTOFFS if ai_role == "guesser" else DRAWING_CUTOFFS
    report = MetricsReport(label=f"human-ai-{ai_role}")
    report.games = len(games)
    if not games:
        return report
    for cutoff in cutoffs:
        wins = softs = 0
        for record in games:
            if ai_role == "guesser":
                flags = _flags_after_guesses(record, cutoff)
            else:
                flags = _flags_after_drawings(record, cutoff)
            won = all(flags)
            wins += won
            softs += soft_win(record.phrase, flags, cfg.ood_mode, cfg)
        report.curves[cutoff] = (wins / len(games), softs / len(games))
    final = report.curves[cutoffs[-1]]
    report.win_rate, report.soft_win_rate = final
    return report


@dataclass(frozen=True)
class SplitStats:
    split_tag: str
    games: int
    unique_phrases: int
    win_pct: float | None
    off_by_one_pct: float | None
    rounds_ge2_pct: float | None
    rounds_ge3_pct: float | None
    rounds_ge4_pct: float | None
    revision_pct: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "split_tag": self.split_tag,
            "games": self.games,
            "unique_phrases": self.unique_phrases,
            "win_pct": self.win_pct,
            "off_by_one_pct": self.off_by_one_pct,
            "rounds_ge2_pct": self.rounds_ge2_pct,
            "rounds_ge3_pct": self.rounds_ge3_pct,
            "rounds_ge4_pct": self.rounds_ge4_pct,
            "revision_pct": dict(sorted(self.revision_pct.items())),
        }


def dataset_stats(corpus: Iterable[GameRecord]) -> dict[str, SplitStats]:
    """Per-split corpus summary: game and unique-phrase counts, win and
    off-by-one percentages, multi-round shares, and the revision-strategy
    distribution over multi-drawing games."""
    by_split: dict[str, list[GameRecord]] = {}
    for record in corpus:
        by_split.setdefault(record.split_tag, []).append(record)
    out: dict[str, SplitStats] = {}
    for split, records in sorted(by_split.items()):
        n = len(records)
        phrases = len({r.phrase.text() for r in records})
        wins = sum(1 for r in records if r.outcome is Outcome.WON)
        off = sum(
            1
            for r in records
            if sum(
                1
                for i in r.phrase.content_positions()
                if i not in _hit_positions(r)
            )
            <= 1
        )
        ge = {k: sum(1 for r in records if len(r.rounds) >= k) for k in (2, 3, 4)}
        revisions = Counter(
            classify_game_revision(r).value
            for r in records
            if len(r.rounds) >= 2
        )
        multi = sum(revisions.values())
        revision_pct = (
            {k: 100.0 * v / multi for k, v in revisions.items()} if multi else {}
        )
        out[split] = SplitStats(
            split_tag=split,
            games=n,
            unique_phrases=phrases,
            win_pct=100.0 * wins / n,
            off_by_one_pct=100.0 * off / n,
            rounds_ge2_pct=100.0 * ge[2] / n,
            rounds_ge3_pct=100.0 * ge[3] / n,
            rounds_ge4_pct=100.0 * ge[4] / n,
            revision_pct=revision_pct,
        )
    return out


def _hit_positions(record: GameRecord) -> set[int]:
    hit: set[int] = set()
    for guess in record.all_guesses():
        for i, w in enumerate(guess.words[: len(record.phrase.words)]):
            if normalize_word(w) == record.phrase.words[i].text:
                hit.add(i)
    return hit


def stats_table(stats: dict[str, SplitStats]) -> str:
    header = f"{'split':<10} {'games':>7} {'phrases':>8} {'win%':>6} {'oby1%':>6} {'>=2':>6} {'>=3':>6} {'>=4':>6}  revisions"
    lines = [header, "-" * len(header)]
    for split, s in stats.items():
        rev = " ".join(f"{k}={v:.1f}" for k, v in sorted(s.revision_pct.items()))
        lines.append(
            f"{split:<10} {s.games:>7} {s.unique_phrases:>8} "
            f"{_fmt(s.win_pct):>6} {_fmt(s.off_by_one_pct):>6} "
            f"{_fmt(s.rounds_ge2_pct):>6} {_fmt(s.rounds_ge3_pct):>6} {_fmt(s.rounds_ge4_pct):>6}  {rev}"
        )
    return "\n".join(lines)


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.1f}"
