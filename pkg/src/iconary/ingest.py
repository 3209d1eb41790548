"""Dataset ingestion: canonical-schema files in, validated corpus out.

Accepts a directory tree of one-game-per-file `*.json` documents and/or
`*.jsonl` files with one game per line. Records in a known foreign layout
are converted first (see `convert_foreign_game`). Ingestion tolerates a
small fraction of bad records but refuses a corpus where more than 5%
fail validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from . import schema
from .core import GameRecord, Outcome, game_outcome, normalize_word

HARD_FAILURE_VIOLATION_SHARE = 0.05


class IngestError(RuntimeError):
    pass


@dataclass
class IngestReport:
    files_read: int = 0
    games_loaded: int = 0
    per_split: dict[str, int] = field(default_factory=dict)
    violations: list[schema.Violation] = field(default_factory=list)
    unparseable_files: list[str] = field(default_factory=list)
    converted: int = 0
    # Cross-check of the recorded outcome against two win definitions.
    outcome_all_content_agree: int = 0
    outcome_exact_final_agree: int = 0

    def summary(self) -> str:
        lines = [
            f"files read: {self.files_read}",
            f"games loaded: {self.games_loaded}",
            f"converted from foreign layout: {self.converted}",
            f"violations: {len(self.violations)}",
            f"unparseable files: {len(self.unparseable_files)}",
        ]
        for split, n in sorted(self.per_split.items()):
            lines.append(f"  {split}: {n}")
        if self.games_loaded:
            lines.append(
                "outcome agreement: "
                f"all-content-guessed {100.0 * self.outcome_all_content_agree / self.games_loaded:.1f}%, "
                f"exact-final-guess {100.0 * self.outcome_exact_final_agree / self.games_loaded:.1f}%"
            )
        return "\n".join(lines)


_FOREIGN_SPLIT_NAMES = {
    "train": "train",
    "ind_valid": "ind_valid",
    "ind-valid": "ind_valid",
    "ind_dev": "ind_valid",
    "ind-dev": "ind_valid",
    "dev": "ind_valid",
    "valid": "ind_valid",
    "ind_test": "ind_test",
    "ind-test": "ind_test",
    "test": "ind_test",
    "ood_valid": "ood_valid",
    "ood-valid": "ood_valid",
    "ood_dev": "ood_valid",
    "ood-dev": "ood_valid",
    "ood_test": "ood_test",
    "ood-test": "ood_test",
}


def convert_foreign_game(obj: dict[str, Any], split_hint: str | None = None) -> dict[str, Any]:
    """Best-effort conversion of a released-dataset game into the canonical
    layout. Handles the common alternative spellings: a flat `phrase`
    string plus stopword/OOV word lists, `game_states` instead of
    `rounds`, and camelCase pose fields."""
    out: dict[str, Any] = {}
    out["game_id"] = str(obj.get("game_id") or obj.get("id") or obj.get("gameId") or "")

    phrase = obj.get("phrase")
    if isinstance(phrase, dict) and "words" in phrase:
        out["phrase"] = phrase
    else:
        if isinstance(phrase, str):
            tokens = phrase.split()
        elif isinstance(phrase, list):
            tokens = [str(t) for t in phrase]
        else:
            raise IngestError("no phrase field")
        stop = {normalize_word(w) for w in obj.get("stopwords", [])}
        oov = {normalize_word(w) for w in obj.get("oov_words", obj.get("unseen_words", []))}
        guessed = obj.get("guessed_words", [])
        guessed_set = {normalize_word(w) for w in guessed} if isinstance(guessed, list) else set()
        out["phrase"] = {
            "words": [
                {
                    "text": normalize_word(t),
                    "is_stopword": normalize_word(t) in stop,
                    "is_oov": normalize_word(t) in oov,
                    "guessed": normalize_word(t) in guessed_set,
                }
                for t in tokens
            ]
        }

    raw_rounds = obj.get("rounds", obj.get("game_states"))
    if not isinstance(raw_rounds, list):
        raise IngestError("no rounds field")
    rounds = []
    for i, r in enumerate(raw_rounds):
        drawing = r.get("drawing", r)
        placements = drawing.get("placements", drawing.get("icons", []))
        converted_placements = []
        for p in placements:
            converted_placements.append(
                {
                    "icon_id": str(p.get("icon_id") or p.get("name") or p.get("icon") or ""),
                    "x": float(p.get("x", 0.5)),
                    "y": float(p.get("y", 0.5)),
                    "scale": float(p.get("scale", 1.0)),
                    "rotation": float(p.get("rotation", 0.0)) % 360.0,
                    "flipped": bool(p.get("flipped", p.get("reflected", False))),
                }
            )
        guesses = []
        for g in r.get("guesses", []):
            if isinstance(g, dict):
                words = g.get("words", [])
                entry: dict[str, Any] = {"words": [str(w) for w in words]}
                if "correctness" in g:
                    entry["correctness"] = [bool(c) for c in g["correctness"]]
            else:
                entry = {"words": [str(w) for w in g]}
            guesses.append(entry)
        rounds.append(
            {
                "drawing": {"round_index": i, "placements": converted_placements},
                "guesses": guesses,
            }
        )
    out["rounds"] = rounds

    outcome = obj.get("outcome", obj.get("status"))
    if outcome in ("won", "win", True):
        out["outcome"] = "won"
    else:
        out["outcome"] = "lost_timeout"
    out["elapsed_seconds"] = float(obj.get("elapsed_seconds", obj.get("duration", 0.0)))
    split = str(obj.get("split_tag", obj.get("split", split_hint or "train"))).lower()
    out["split_tag"] = _FOREIGN_SPLIT_NAMES.get(split, split)
    players = obj.get("players", {})
    out["players"] = {
        "drawer": {
            "id": str(players.get("drawer", {}).get("id", "unknown-drawer")),
            "is_human": bool(players.get("drawer", {}).get("is_human", True)),
        },
        "guesser": {
            "id": str(players.get("guesser", {}).get("id", "unknown-guesser")),
            "is_human": bool(players.get("guesser", {}).get("is_human", True)),
        },
    }
    return out


def _iter_game_dicts(path: Path) -> Iterator[tuple[str, dict]]:
    if path.is_file():
        files = [path]
    else:
        files = sorted(p for p in path.rglob("*") if p.suffix in (".json", ".jsonl"))
    for f in files:
        if f.suffix == ".jsonl":
            with open(f, "r", encoding="utf-8") as fh:
                for ln, line in enumerate(fh):
                    line = line.strip()
                    if line:
                        yield f"{f}:{ln + 1}", json.loads(line)
        else:
            with open(f, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            if isinstance(data, list):
                for i, obj in enumerate(data):
                    yield f"{f}[{i}]", obj
            else:
                yield str(f), data


def _split_hint(source: str) -> str | None:
    lowered = source.lower()
    for name, canonical in _FOREIGN_SPLIT_NAMES.items():
        if name in lowered:
            return canonical
    return None


def ingest_dataset(path: str | Path) -> tuple[list[GameRecord], IngestReport]:
    """Load, convert if needed, and validate a corpus.

    Unparseable files are listed and skipped; per-record violations are
    collected. More than 5% violating records is a hard failure.
    """
    root = Path(path)
    if not root.exists():
        raise IngestError(f"dataset path does not exist: {root}")
    report = IngestReport()
    corpus: list[GameRecord] = []
    seen_files: set[str] = set()
    attempted = 0

    try:
        entries = list(_iter_game_dicts(root))
    except (OSError, json.JSONDecodeError) as e:
        raise IngestError(f"cannot read dataset: {e}") from e

    for source, obj in entries:
        file_part = source.split(":")[0].split("[")[0]
        seen_files.add(file_part)
        attempted += 1
        canonical = obj
        is_foreign = not (
            isinstance(obj, dict)
            and isinstance(obj.get("phrase"), dict)
            and "rounds" in obj
            and "split_tag" in obj
        )
        if is_foreign:
            try:
                canonical = convert_foreign_game(obj, _split_hint(source))
                report.converted += 1
            except (IngestError, TypeError, ValueError, AttributeError, KeyError) as e:
                report.violations.append(schema.Violation(None, source, f"conversion failed: {e}"))
                continue
        problems = schema.validate_game_dict(canonical)
        if problems:
            report.violations.extend(problems)
            continue
        record = schema.game_from_dict(canonical)
        corpus.append(record)
        report.per_split[record.split_tag] = report.per_split.get(record.split_tag, 0) + 1

        summary = game_outcome(record)
        recorded_win = record.outcome is Outcome.WON
        if summary.won == recorded_win:
            report.outcome_all_content_agree += 1
        exact_final = bool(record.rounds and record.rounds[-1].guesses) and all(
            normalize_word(g) == w.text
            for g, w in zip(record.rounds[-1].guesses[-1].words, record.phrase.words)
        )
        if exact_final == recorded_win:
            report.outcome_exact_final_agree += 1

    report.files_read = len(seen_files)
    report.games_loaded = len(corpus)
    if attempted and len(report.violations) / attempted > HARD_FAILURE_VIOLATION_SHARE:
        raise IngestError(
            f"{len(report.violations)} of {attempted} records failed validation "
            f"(> {HARD_FAILURE_VIOLATION_SHARE:.0%}); refusing the corpus"
        )
    return corpus, report


def export_corpus(corpus: list[GameRecord], path: str | Path) -> None:
    """Write a corpus as one-game-per-line JSONL with stable bytes."""
    with open(path, "w", encoding="utf-8") as f:
        for record in corpus:
            f.write(schema.dumps_game(record) + "\n")
