import json
from pathlib import Path

import pytest

from iconary import schema
from iconary.ingest import IngestError, convert_foreign_game, export_corpus, ingest_dataset
from iconary.synthetic import synthetic_corpus

BUNDLED = Path(__file__).resolve().parent.parent / "src" / "iconary" / "data" / "synthetic"


class TestIngest:
    def test_bundled_corpus_loads_clean(self):
        corpus, report = ingest_dataset(BUNDLED / "games.jsonl")
        assert report.games_loaded == 50
        assert not report.violations
        assert set(report.per_split) == {
            "train", "ind_valid", "ind_test", "ood_valid", "ood_test",
        }

    def test_export_import_byte_stable(self, tmp_path):
        corpus, _ = ingest_dataset(BUNDLED / "games.jsonl")
        out = tmp_path / "again.jsonl"
        export_corpus(corpus, out)
        assert out.read_bytes() == (BUNDLED / "games.jsonl").read_bytes()

    def test_directory_of_single_game_files(self, tmp_path):
        corpus = synthetic_corpus(6, seed=3)
        for record in corpus:
            (tmp_path / f"{record.game_id}.json").write_text(
                schema.dumps_game(record), encoding="utf-8"
            )
        loaded, report = ingest_dataset(tmp_path)
        assert report.games_loaded == 6
        assert {r.game_id for r in loaded} == {r.game_id for r in corpus}

    def test_violating_record_listed(self, tmp_path):
        corpus = synthetic_corpus(30, seed=4)
        rows = [json.loads(schema.dumps_game(r)) for r in corpus]
        rows[0]["rounds"][0]["guesses"] = [{"words": ["too", "short", "or", "long", "x", "y", "z", "w"]}]
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        loaded, report = ingest_dataset(path)
        assert report.games_loaded == 29
        assert len(report.violations) == 1

    def test_too_many_violations_hard_failure(self, tmp_path):
        corpus = synthetic_corpus(10, seed=5)
        rows = [json.loads(schema.dumps_game(r)) for r in corpus]
        for r in rows[:3]:
            del r["outcome"]
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        with pytest.raises(IngestError):
            ingest_dataset(path)

    def test_missing_path(self):
        with pytest.raises(IngestError):
            ingest_dataset("/nonexistent/dataset")

    def test_outcome_cross_check_reported(self):
        _, report = ingest_dataset(BUNDLED / "games.jsonl")
        assert report.outcome_all_content_agree == 50  # synthetic games are consistent
        assert 0 <= report.outcome_exact_final_agree <= 50
        assert "outcome agreement" in report.summary()


class TestForeignConversion:
    def test_flat_phrase_layout(self):
        foreign = {
            "id": "x1",
            "phrase": "a dog barking",
            "stopwords": ["a"],
            "oov_words": ["barking"],
            "guessed_words": ["dog"],
            "game_states": [
                {
                    "icons": [
                        {"name": "dog", "x": 0.4, "y": 0.6, "scale": 2.0, "rotation": 90.0, "reflected": True}
                    ],
                    "guesses": [["a", "dog", "howling"]],
                }
            ],
            "status": "lost_timeout",
            "duration": 240,
            "split": "ood-dev",
        }
        canonical = convert_foreign_game(foreign)
        assert schema.validate_game_dict(canonical) == []
        record = schema.game_from_dict(canonical)
        assert record.split_tag == "ood_valid"
        assert record.phrase.words[2].is_oov
        assert record.rounds[0].drawing.placements[0].flipped

    def test_mixed_corpus_counts_conversions(self, tmp_path):
        corpus = synthetic_corpus(4, seed=6)
        rows = [json.loads(schema.dumps_game(r)) for r in corpus]
        rows.append(
            {
                "id": "f1",
                "phrase": "a cat",
                "stopwords": ["a"],
                "rounds": [
                    {
                        "drawing": {
                            "placements": [
                                {"icon_id": "cat", "x": 0.5, "y": 0.5, "scale": 1.0, "rotation": 0.0, "flipped": False}
                            ]
                        },
                        "guesses": [],
                    }
                ],
                "outcome": "lost_timeout",
            }
        )
        path = tmp_path / "mixed.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        loaded, report = ingest_dataset(path)
        assert report.games_loaded == 5
        assert report.converted == 1
