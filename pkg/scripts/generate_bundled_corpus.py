"""Regenerate the bundled 50-game synthetic corpus and its golden stats.

The golden numbers are computed here with straightforward standalone code
(not the metrics module) so the shipped pipeline is checked against an
independent calculation. Run from the repo root:

    python3 scripts/generate_bundled_corpus.py
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

from iconary.schema import dumps_game, game_to_dict
from iconary.synthetic import synthetic_corpus

SEED = 20240501
N_GAMES = 50
OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "iconary" / "data" / "synthetic"


def simple_split_stats(games: list[dict]) -> dict:
    """Golden-stat oracle: plain dict walking, no package machinery."""
    by_split: dict[str, list[dict]] = {}
    for g in games:
        by_split.setdefault(g["split_tag"], []).append(g)
    out = {}
    for split, rows in sorted(by_split.items()):
        n = len(rows)
        phrases = len({" ".join(w["text"] for w in g["phrase"]["words"]) for g in rows})
        wins = sum(1 for g in rows if g["outcome"] == "won")

        def missed(g):
            content = [
                i for i, w in enumerate(g["phrase"]["words"]) if not w["is_stopword"]
            ]
            hit = set()
            for r in g["rounds"]:
                for guess in r["guesses"]:
                    for i, w in enumerate(guess["words"]):
                        if w == g["phrase"]["words"][i]["text"]:
                            hit.add(i)
            return sum(1 for i in content if i not in hit)

        off = sum(1 for g in rows if missed(g) <= 1)
        ge = {k: sum(1 for g in rows if len(g["rounds"]) >= k) for k in (2, 3, 4)}

        def pair_label(prev, nxt):
            a = Counter(p["icon_id"] for p in prev["drawing"]["placements"])
            b = Counter(p["icon_id"] for p in nxt["drawing"]["placements"])
            if a == b:
                return "edit"
            if all(a[k] <= b[k] for k in a):
                return "add"
            if all(b[k] <= a[k] for k in b):
                return "edit"
            return "redraw"

        rank = {"edit": 0, "add": 1, "redraw": 2}
        revisions: Counter[str] = Counter()
        for g in rows:
            if len(g["rounds"]) < 2:
                continue
            labels = [
                pair_label(a, b) for a, b in zip(g["rounds"], g["rounds"][1:])
            ]
            revisions[max(labels, key=rank.__getitem__)] += 1
        multi = sum(revisions.values())
        out[split] = {
            "games": n,
            "unique_phrases": phrases,
            "win_pct": 100.0 * wins / n,
            "off_by_one_pct": 100.0 * off / n,
            "rounds_ge2_pct": 100.0 * ge[2] / n,
            "rounds_ge3_pct": 100.0 * ge[3] / n,
            "rounds_ge4_pct": 100.0 * ge[4] / n,
            "revision_pct": {
                k: 100.0 * v / multi for k, v in sorted(revisions.items())
            }
            if multi
            else {},
        }
    return out


def main() -> None:
    corpus = synthetic_corpus(N_GAMES, seed=SEED, split_tag=None)
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    games_path = OUT_DIR / "games.jsonl"
    with open(games_path, "w", encoding="utf-8") as f:
        for record in corpus:
            f.write(dumps_game(record) + "\n")

    golden = simple_split_stats([game_to_dict(r) for r in corpus])
    golden_path = OUT_DIR / "golden_stats.json"
    golden_path.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"wrote {games_path} ({len(corpus)} games) and {golden_path}")


if __name__ == "__main__":
    main()
