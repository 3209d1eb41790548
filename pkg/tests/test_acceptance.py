"""Acceptance suite: one test per release criterion, at its stated
tolerance. Each test prints a PASS line on success so a plain
`pytest -s tests/test_acceptance.py` reads as a checklist."""

import itertools
import json
import math
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from iconary.agents import BaselineDrawer, BaselineGuesser, train_alignment
from iconary.codec import (
    DrawingGrammarState,
    DrawingParseError,
    DrawingToken,
    DrawingVocab,
    QuantizationSpec,
    TokenKind,
    decode_drawing,
    encode_drawing,
    grammar_mask,
)
from iconary.core import Outcome, make_phrase
from iconary.decoding import (
    GuessConstraints,
    boost_rare,
    constrained_beam_search,
    update_constraints,
)
from iconary.ingest import ingest_dataset
from iconary.metrics import dataset_stats, drawing_perplexity, icon_f1, soft_win
from iconary.session import Phase, new_session, replay_session, session_step
from iconary.synthetic import default_world, synthetic_corpus

from test_codec import random_drawing
from test_decoding import TOY_PIECES, battery, oracle_enumerate
from test_metrics import (
    SOFT_WIN_TABLE,
    UniformDrawingOracle,
    brute_force_f1,
    bag_drawing,
    flags,
    one_round_record,
    phrase_of,
)

SPEC = QuantizationSpec()
DATASET_ENV = "ICONARY_DATASET"
BUNDLED = Path(__file__).resolve().parent.parent / "src" / "iconary" / "data" / "synthetic"


def report(name: str) -> None:
    print(f"\n[acceptance] {name}: PASS", flush=True)


@pytest.fixture(scope="module")
def world():
    return default_world()


@pytest.fixture(scope="module")
def vocab(world):
    return DrawingVocab.build(world.library, SPEC)


def test_codec_round_trip(world):
    rng = random.Random(2024)
    start = time.monotonic()
    for _ in range(10_000):
        d = random_drawing(rng, world.library, max_icons=5)
        out = decode_drawing(encode_drawing(d, world.library, SPEC), world.library, SPEC)
        assert [p.icon_id for p in out.placements] == [p.icon_id for p in d.placements]
        assert [p.flipped for p in out.placements] == [p.flipped for p in d.placements]
        for a, b in zip(d.placements, out.placements):
            assert abs(a.x - b.x) <= 0.5 / SPEC.x_buckets
            assert abs(a.y - b.y) <= 0.5 / SPEC.y_buckets
            log_w = (math.log(SPEC.scale_range[1]) - math.log(SPEC.scale_range[0])) / SPEC.scale_buckets
            assert abs(math.log(a.scale) - math.log(b.scale)) <= 0.5 * log_w + 1e-12
            circ = min(abs(a.rotation - b.rotation), 360.0 - abs(a.rotation - b.rotation))
            assert circ <= 180.0 / SPEC.rotation_buckets

    vocab = DrawingVocab.build(world.library, SPEC)
    for _ in range(10_000):
        tokens = _sample_grammar_sequence(rng, vocab)
        decoded = decode_drawing(tokens, world.library, SPEC)
        assert encode_drawing(decoded, world.library, SPEC) == tokens
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"round-trip suite took {elapsed:.2f}s"
    report(f"codec round-trip (20,000 cases in {elapsed:.2f}s)")


def _sample_grammar_sequence(rng, vocab):
    state = DrawingGrammarState()
    tokens = []
    while True:
        mask = grammar_mask(state, vocab)
        if state.icons_emitted >= 1 and state.position_in_icon == 0 and rng.random() < 0.55:
            tok = DrawingToken(TokenKind.END_OF_DRAWING, 0)
        else:
            tok = vocab.tokens[rng.choice(np.flatnonzero(mask).tolist())]
        tokens.append(tok)
        if tok.kind is TokenKind.END_OF_DRAWING:
            return tokens
        state = state.advance(tok.kind)


def test_grammar_mask_soundness(world, vocab):
    rng = random.Random(77)
    for _ in range(10_000):
        tokens = _sample_grammar_sequence(rng, vocab)
        decode_drawing(tokens, world.library, SPEC)  # must not raise

    # every mutation class must be rejected with a positioned error
    rejected = 0
    total = 0
    for i in range(2_000):
        tokens = _sample_grammar_sequence(rng, vocab)
        mutated, wrong_at = _mutate(rng, tokens, vocab)
        total += 1
        with pytest.raises(DrawingParseError) as e:
            decode_drawing(mutated, world.library, SPEC)
        assert e.value.position == wrong_at, (mutated, e.value)
        rejected += 1
    assert rejected == total
    report("grammar-mask soundness (10,000 rollouts decodable, 2,000 mutations rejected)")


_WRONG_KIND = {
    TokenKind.ICON_NAME: DrawingToken(TokenKind.X, 0),
    TokenKind.X: DrawingToken(TokenKind.Y, 0),
    TokenKind.Y: DrawingToken(TokenKind.X, 0),
    TokenKind.SCALE: DrawingToken(TokenKind.X, 0),
    TokenKind.ROTATION: DrawingToken(TokenKind.X, 0),
    TokenKind.FLIP: DrawingToken(TokenKind.X, 0),
}


def _mutate(rng, tokens, vocab):
    """Break a well-formed sequence; returns (sequence, offending position)."""
    kind = rng.randrange(5)
    tokens = list(tokens)
    if kind == 0:  # wrong token kind for its slot
        pos = rng.randrange(len(tokens) - 1)
        tokens[pos] = _WRONG_KIND[tokens[pos].kind]
        return tokens, pos
    if kind == 1:  # truncate before the terminator
        cut = rng.randrange(1, len(tokens))
        return tokens[:cut], cut
    if kind == 2:  # bucket overflow
        pos = 1 + 6 * rng.randrange(len(tokens) // 6)  # an x slot
        tokens[pos] = DrawingToken(TokenKind.X, SPEC.x_buckets)
        return tokens, pos
    if kind == 3:  # unknown icon id
        pos = 6 * rng.randrange(len(tokens) // 6)
        tokens[pos] = DrawingToken(TokenKind.ICON_NAME, "no-such-icon")
        return tokens, pos
    # trailing token after the terminator
    tokens.append(DrawingToken(TokenKind.ICON_NAME, "dog"))
    return tokens, len(tokens) - 1


def test_constraint_engine_matches_brute_force():
    from iconary.decoding import StubLM, WordpieceTokenizer

    tok = WordpieceTokenizer(TOY_PIECES)
    checked = 0
    for n in (1, 2, 3):
        lm = StubLM(len(tok.vocab), seed=1000 + n)
        max_len = n + 2
        for cons in battery(n):
            expected = oracle_enumerate(lm, cons, tok, max_len)
            got = constrained_beam_search(lm, cons, tok, beams=4096, max_len=max_len, boost=0.0)
            assert [g.words for g in got] == [g.words for g in expected], cons
            for a, b in zip(got, expected):
                assert abs(a.normalized_score - b.normalized_score) <= 1e-9
            # compliance: exact word count and known words, always
            for g in got:
                assert len(g.words) == n
                for i, w in enumerate(cons.known):
                    if w is not None:
                        assert g.words[i] == w
                for i, bad in enumerate(cons.incorrect):
                    assert g.words[i] not in bad
            checked += 1
    report(f"constraint engine equals brute force ({checked} constraint combinations)")


def test_boost_rare_tolerances():
    rng = np.random.default_rng(8)
    for _ in range(500):
        logits = rng.normal(size=int(rng.integers(2, 64)))
        unseen = [int(i) for i in rng.choice(len(logits), size=len(logits) // 4, replace=False)]
        p = boost_rare(logits, unseen, b=float(rng.uniform(0, 4)))
        assert abs(p.sum() - 1.0) <= 1e-9

    logits = rng.normal(size=32)
    z = np.exp(logits - logits.max())
    np.testing.assert_array_equal(boost_rare(logits, [], b=0.0), z / z.sum())

    p = boost_rare(np.zeros(4), [1], b=math.log(3))
    assert abs(p[1] - 0.5) <= 1e-12
    report("rare-piece boosting (normalization 1e-9, softmax identity, closed form 1e-12)")


def test_metric_oracles():
    # bag F1 against the exhaustive element-matching oracle
    types = ("a", "b", "c")
    bags = []
    for size in range(1, 6):
        bags.extend(
            sorted(c)
            for c in set(tuple(sorted(t)) for t in itertools.product(types, repeat=size))
        )
    assert len(bags) == 55
    for m in bags:
        for h in bags:
            assert icon_f1(bag_drawing(*m), [bag_drawing(*h)]) == pytest.approx(
                brute_force_f1(m, h)
            )

    for n, missed, ood, oov, expected in SOFT_WIN_TABLE:
        assert soft_win(phrase_of(n, oov), flags(n, missed), ood_mode=ood) is expected

    corpus = [one_round_record(game_id=f"g{i}") for i in range(5)]
    ppl = drawing_perplexity(UniformDrawingOracle(997), corpus)
    assert ppl.value == pytest.approx(997.0, abs=1e-9)
    report("metric oracles (3,025 bag pairs, 12 soft-win cases, uniform perplexity)")


def test_dataset_stats_pipeline():
    start = time.monotonic()
    dataset_path = os.environ.get(DATASET_ENV)
    if dataset_path and Path(dataset_path).exists():
        corpus, ingest_report = ingest_dataset(dataset_path)
        stats = dataset_stats(corpus)
        expected = {
            "train": (56_000, 34_000, 71.1, 83.9),
            "ind_valid": (5_100, 3_100, 75.1, 87.5),
            "ind_test": (4_700, 2_900, 76.8, 88.3),
            "ood_valid": (1_000, 800, 54.4, 75.8),
            "ood_test": (3_000, 2_300, 54.1, 75.5),
        }
        for split, (games, phrases, win, oby1) in expected.items():
            s = stats[split]
            assert abs(s.win_pct - win) <= 0.1, split
            assert abs(s.off_by_one_pct - oby1) <= 0.1, split
        assert abs(stats["ind_valid"].rounds_ge2_pct - 33.3) <= 0.5
        assert abs(stats["ood_valid"].rounds_ge2_pct - 65.6) <= 0.5
        label = f"released dataset ({ingest_report.games_loaded} games)"
    else:
        corpus, ingest_report = ingest_dataset(BUNDLED / "games.jsonl")
        assert ingest_report.games_loaded == 50
        stats = dataset_stats(corpus)
        golden = json.loads((BUNDLED / "golden_stats.json").read_text())
        assert set(stats) == set(golden)
        for split, g in golden.items():
            s = stats[split]
            assert s.games == g["games"]
            assert s.unique_phrases == g["unique_phrases"]
            for key in ("win_pct", "off_by_one_pct", "rounds_ge2_pct", "rounds_ge3_pct", "rounds_ge4_pct"):
                assert abs(getattr(s, key) - g[key]) <= 0.1, (split, key)
            assert set(s.revision_pct) == set(g["revision_pct"])
            for k, v in g["revision_pct"].items():
                assert abs(s.revision_pct[k] - v) <= 0.1, (split, k)
        label = "bundled synthetic corpus vs golden stats"
    elapsed = time.monotonic() - start
    assert elapsed < 120.0
    report(f"dataset statistics pipeline, {label} ({elapsed:.2f}s)")


def _self_play_game(session_id, phrase, library, drawer, guesser, seed):
    """Drive one full game through the session state machine; returns
    (session, error payload count)."""
    s = new_session(session_id, phrase, library)
    t = [0.0]
    errors = [0]

    def step(message):
        t[0] += 1.0
        nonlocal s
        s, out = session_step(s, message, t[0])
        errors[0] += sum(1 for o in out if o.payload.get("type") == "error")
        return out

    step({"type": "join", "role": "drawer", "name": "bot-d", "is_human": False})
    step({"type": "join", "role": "guesser", "name": "bot-g", "is_human": False})
    step({"type": "start", "role": "drawer"})

    view = s.game_state(t[0]).guesser_view()
    constraints = GuessConstraints(
        length=len(view),
        known=tuple(w.text for w in view),
        incorrect=tuple(frozenset() for _ in view),
    )
    for round_no in range(4):
        if s.phase is not Phase.DRAWER_TURN:
            break
        state = s.game_state(t[0])
        from iconary.agents import diversify_drawing

        drawing = diversify_drawing(
            drawer, state, [r.drawing for r in s.rounds], seed=seed + round_no
        )
        from iconary import schema as _schema

        step(
            {
                "type": "submit_drawing",
                "role": "drawer",
                "drawing": _schema.drawing_to_dict(drawing),
            }
        )
        for _ in range(5):
            if s.phase is not Phase.GUESSER_TURN:
                break
            results = guesser.guess_constrained(s.rounds[-1].drawing, constraints)
            if not results:
                break
            words = results[0].words
            out = step({"type": "submit_guess", "role": "guesser", "words": list(words)})
            feedback = next(o.payload for o in out if o.payload["type"] == "feedback")
            constraints = update_constraints(constraints, words, feedback["correct"])
            view = s.game_state(t[0]).guesser_view()
            for i, w in enumerate(view):
                if w.text is not None and constraints.known[i] is None:
                    constraints = constraints.with_known(i, w.text)
        if s.phase is Phase.GUESSER_TURN:
            step({"type": "pass_turn", "role": "guesser"})
    if s.phase is not Phase.FINISHED:
        s, out = session_step(s, {"type": "timeout", "role": "server"}, 1.0 + 240.0)
    return s, errors[0]


def test_end_to_end_self_play(world):
    start = time.monotonic()
    train = synthetic_corpus(200, seed=1001, split_tag="train")
    model = train_alignment(train, dim=32, epochs=8, seed=0)
    drawer = BaselineDrawer(model, world.library)
    guesser = BaselineGuesser(model)

    eval_games = synthetic_corpus(100, seed=2002, split_tag="train")
    wins = 0
    violations = 0
    for i, record in enumerate(eval_games):
        fresh = record.phrase.with_guessed(set())
        fresh = make_phrase(fresh.text())
        session, errors = _self_play_game(
            f"selfplay-{i}", fresh, world.library, drawer, guesser, seed=i
        )
        violations += errors
        assert session.phase is Phase.FINISHED
        wins += session.outcome is Outcome.WON
    elapsed = time.monotonic() - start
    assert violations == 0, f"{violations} protocol violations"
    assert wins / len(eval_games) > 0.5, f"win rate {wins}/{len(eval_games)}"
    assert elapsed < 60.0, f"self-play took {elapsed:.1f}s"
    report(
        f"end-to-end self-play (100 games, win rate {wins / 100:.2f}, "
        f"0 violations, {elapsed:.1f}s)"
    )


def test_replay_determinism(world):
    from test_session import _random_message

    rng = random.Random(424242)
    for trial in range(1_000):
        phrase = make_phrase("a dog barking")
        initial = new_session(f"fz-{trial}", phrase, world.library)
        s = initial
        t = 0.0
        for _ in range(rng.randint(2, 14)):
            t += rng.choice([0.25, 1.0, 10.0, 61.0])
            s, _ = session_step(s, _random_message(rng), t)
        replayed = replay_session(
            new_session(f"fz-{trial}", phrase, world.library), s.event_log
        )
        assert replayed.fingerprint() == s.fingerprint()
    report("replay determinism (1,000 fuzzed transcripts byte-identical)")
