from iconary.core import Outcome, game_outcome
from iconary.schema import dumps_game, game_to_dict, validate_game_dict
from iconary.synthetic import default_world, synthetic_corpus


class TestSyntheticCorpus:
    def test_deterministic(self):
        a = synthetic_corpus(20, seed=42)
        b = synthetic_corpus(20, seed=42)
        assert [dumps_game(x) for x in a] == [dumps_game(x) for x in b]

    def test_all_records_schema_valid(self):
        for record in synthetic_corpus(40, seed=1, split_tag=None):
            assert validate_game_dict(game_to_dict(record)) == []

    def test_outcomes_consistent_with_transcripts(self):
        for record in synthetic_corpus(60, seed=2):
            summary = game_outcome(record)
            assert summary.won == (record.outcome is Outcome.WON)

    def test_ood_games_carry_oov_words(self):
        corpus = synthetic_corpus(30, seed=3, split_tag="ood_valid")
        assert all(any(w.is_oov for w in r.phrase.words) for r in corpus)
        train = synthetic_corpus(30, seed=3, split_tag="train")
        assert not any(any(w.is_oov for w in r.phrase.words) for r in train)

    def test_drawings_use_planted_icons(self):
        world = default_world()
        for record in synthetic_corpus(25, seed=4):
            content = {w.text for w in record.phrase.words if not w.is_stopword}
            first = record.rounds[0].drawing
            planted = {p.icon_id for p in first.placements if p.icon_id in content}
            assert planted, f"{record.game_id} has no planted icon"
            for p in first.placements:
                assert p.icon_id in world.library

    def test_win_rate_tracks_parameter(self):
        corpus = synthetic_corpus(300, seed=5, win_rate=0.7)
        wins = sum(1 for r in corpus if r.outcome is Outcome.WON)
        assert 0.6 <= wins / len(corpus) <= 0.8
