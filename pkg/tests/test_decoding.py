import math

import numpy as np
import pytest

from iconary.decoding import (
    ConstraintState,
    GuessConstraints,
    ScoredGuess,
    StubLM,
    UniformLM,
    UnigramLM,
    WordpieceTokenizer,
    allowed_mask,
    boost_rare,
    constrained_beam_search,
    guess_round,
    masked_boosted_probs,
    update_constraints,
    whole_word_tokenizer,
)

# 10-piece toy vocabulary: 5 word starts, 4 continuations, EOS.
TOY_PIECES = [
    ("run", True),
    ("cat", True),
    ("dog", True),
    ("sun", True),
    ("a", True),
    ("ner", False),
    ("s", False),
    ("ny", False),
    ("er", False),
]


@pytest.fixture(scope="module")
def toy():
    return WordpieceTokenizer(TOY_PIECES)


# ---------------------------------------------------------------------------
# Independent oracle: legality recomputed from scratch per prefix, then
# exhaustive enumeration of word-path compositions.
# ---------------------------------------------------------------------------

def _oracle_words_partial(pieces, tok):
    words, partial = [], []
    for pid in pieces:
        if tok.is_word_start(pid):
            if partial:
                words.append(partial)
            partial = [pid]
        else:
            partial.append(pid)
    return words, partial


def _surface(path, tok):
    return "".join(tok.surface(p) for p in path)


def oracle_mask(pieces, tok, cons):
    """Rule-by-rule legality of each next piece, written independently of
    the engine's incremental state tracking."""
    words, partial = _oracle_words_partial(pieces, tok)
    n_closed = len(words)
    mask = np.zeros(len(tok.vocab), dtype=bool)
    for pid in range(len(tok.vocab)):
        if pid == tok.eos_id:
            if not partial:
                continue  # no words at all yet
            if n_closed + 1 != cons.length:
                continue  # would not yield exactly N words
            if _surface(partial, tok) in cons.incorrect[n_closed]:
                continue  # completion of an excluded word
            mask[pid] = True
        elif tok.is_word_start(pid):
            if not partial:
                # starting word 0
                known = cons.known[0]
                if known is not None and pid != tok.tokenize_word(known)[0]:
                    continue
                mask[pid] = True
            else:
                # closes the current word, starts word n_closed + 1
                if n_closed + 1 >= cons.length:
                    continue
                if _surface(partial, tok) in cons.incorrect[n_closed]:
                    continue
                known_next = cons.known[n_closed + 1]
                if known_next is not None and pid != tok.tokenize_word(known_next)[0]:
                    continue
                mask[pid] = True
        else:
            if not partial:
                continue  # a continuation cannot open the sequence
            known = cons.known[n_closed]
            if known is not None:
                canon = tok.tokenize_word(known)
                k = len(partial)
                if tuple(partial) != canon[:k] or k >= len(canon) or pid != canon[k]:
                    continue
            mask[pid] = True
    return mask


def _oracle_word_paths(tok, max_pieces):
    """Every (surface, piece path) a single word can take, up to a length cap."""
    out = []

    def extend(path):
        out.append((_surface(path, tok), tuple(path)))
        if len(path) >= max_pieces:
            return
        for pid in range(len(tok.vocab)):
            if pid != tok.eos_id and not tok.is_word_start(pid):
                extend(path + [pid])

    for pid in range(len(tok.vocab)):
        if pid != tok.eos_id and tok.is_word_start(pid):
            extend([pid])
    return out


def oracle_enumerate(lm, cons, tok, max_len, unseen=(), boost=0.0):
    """All compliant word sequences with their best path scores, ranked the
    same way the engine ranks: by normalized score, then words."""
    n = cons.length
    word_paths = _oracle_word_paths(tok, max_pieces=max_len - n)
    best: dict[tuple[str, ...], ScoredGuess] = {}

    def assemble(prefix_words, prefix_paths, total_pieces):
        i = len(prefix_words)
        if i == n:
            if tuple(prefix_words) in cons.banned_sequences:
                return
            pieces = [pid for path in prefix_paths for pid in path]
            logp = _score_path(pieces, lm, tok, cons, unseen, boost)
            if logp is None:
                return
            guess = ScoredGuess(tuple(prefix_words), logp, len(pieces) + 1)
            prev = best.get(guess.words)
            if prev is None or guess.normalized_score > prev.normalized_score:
                best[guess.words] = guess
            return
        for surface, path in word_paths:
            if total_pieces + len(path) > max_len - 1:
                continue
            if cons.known[i] is not None:
                if surface != cons.known[i] or path != tok.tokenize_word(cons.known[i]):
                    continue
            if surface in cons.incorrect[i]:
                continue
            assemble(prefix_words + [surface], prefix_paths + [path], total_pieces + len(path))

    assemble([], [], 0)
    return sorted(best.values(), key=lambda g: (-g.normalized_score, g.words))


def _score_path(pieces, lm, tok, cons, unseen, boost):
    """Replay one piece path (plus EOS) through the oracle's own masks."""
    logp = 0.0
    prefix: list[int] = []
    for pid in pieces + [tok.eos_id]:
        mask = oracle_mask(prefix, tok, cons)
        probs = masked_boosted_probs(lm.score(prefix), mask, unseen, boost)
        if probs[pid] <= 0.0:
            raise AssertionError(
                f"oracle believes piece {tok.surface(pid)!r} is unreachable after "
                f"{[tok.surface(p) for p in prefix]}"
            )
        logp += math.log(probs[pid])
        prefix.append(pid)
    return logp


def battery(n):
    """Constraint combinations: a known word at each position crossed with
    zero, one, or two excluded words."""
    known_configs = [GuessConstraints.empty(n)]
    known_words = ["runner", "dog", "sunny"]
    for pos in range(n):
        known_configs.append(GuessConstraints.empty(n).with_known(pos, known_words[pos]))
    out = []
    for base in known_configs:
        out.append(base)
        if base.known[0] is None:
            out.append(base.with_incorrect(0, "run"))
            two = base.with_incorrect(0, "run")
            two = two.with_incorrect(min(1, n - 1), "dog") if base.known[min(1, n - 1)] is None else two
            out.append(two)
    return out


class TestEngineMatchesOracle:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exhaustive_equality(self, toy, n):
        lm = StubLM(len(toy.vocab), seed=41 + n)
        max_len = n + 2
        for cons in battery(n):
            expected = oracle_enumerate(lm, cons, toy, max_len)
            got = constrained_beam_search(
                lm, cons, toy, beams=4096, max_len=max_len, boost=0.0
            )
            assert [g.words for g in got] == [g.words for g in expected], cons
            for a, b in zip(got, expected):
                assert a.normalized_score == pytest.approx(b.normalized_score, abs=1e-9)

    def test_boosted_run_matches_oracle(self, toy):
        lm = StubLM(len(toy.vocab), seed=7)
        cons = GuessConstraints.empty(2)
        unseen = (1, 5)  # "cat" and "ner"
        expected = oracle_enumerate(lm, cons, toy, 4, unseen=unseen, boost=2.0)
        got = constrained_beam_search(lm, cons, toy, beams=4096, max_len=4, unseen=unseen, boost=2.0)
        assert [g.words for g in got] == [g.words for g in expected]
        for a, b in zip(got, expected):
            assert a.normalized_score == pytest.approx(b.normalized_score, abs=1e-9)


class TestMaskRules:
    def test_last_word_allows_only_eos(self, toy):
        cons = GuessConstraints.empty(1)
        state = ConstraintState(cons).advance(toy.tokenize_word("dog")[0], toy)
        mask = allowed_mask(state, toy)
        assert mask[toy.eos_id]
        for pid in range(len(toy.vocab)):
            if toy.is_word_start(pid):
                assert not mask[pid]

    def test_known_next_word_restricts_starts(self, toy):
        cons = GuessConstraints.empty(3).with_known(1, "dog")
        state = ConstraintState(cons).advance(toy.tokenize_word("run")[0], toy)
        mask = allowed_mask(state, toy)
        dog_start = toy.tokenize_word("dog")[0]
        for pid in range(len(toy.vocab)):
            if toy.is_word_start(pid):
                assert mask[pid] == (pid == dog_start)
        # continuations of the unknown current word stay open
        assert mask[5]  # "ner"

    def test_incorrect_word_forces_continuation(self, toy):
        cons = GuessConstraints.empty(1).with_incorrect(0, "run")
        state = ConstraintState(cons).advance(toy.tokenize_word("run")[0], toy)
        mask = allowed_mask(state, toy)
        assert not mask[toy.eos_id]
        for pid in range(len(toy.vocab)):
            if toy.is_word_start(pid):
                assert not mask[pid]
            elif pid != toy.eos_id:
                assert mask[pid]  # "er" and friends stay legal

    def test_incorrect_longer_word_still_reachable(self, toy):
        # "run" excluded but "runner" must remain generable
        cons = GuessConstraints.empty(1).with_incorrect(0, "run")
        lm = UniformLM(len(toy.vocab))
        results = constrained_beam_search(lm, cons, toy, beams=256, max_len=3, boost=0.0)
        words = {g.words for g in results}
        assert ("runner",) in words
        assert ("run",) not in words

    def test_inside_known_word_only_canonical_continuation(self, toy):
        cons = GuessConstraints.empty(1).with_known(0, "runner")
        canon = toy.tokenize_word("runner")
        state = ConstraintState(cons).advance(canon[0], toy)
        mask = allowed_mask(state, toy)
        for pid in range(len(toy.vocab)):
            if not toy.is_word_start(pid) and pid != toy.eos_id:
                assert mask[pid] == (pid == canon[1])

    def test_all_dead_is_no_guess(self, toy):
        cons = GuessConstraints.empty(1).with_known(0, "dog").with_incorrect(0, "dog")
        lm = UniformLM(len(toy.vocab))
        assert constrained_beam_search(lm, cons, toy, beams=64, max_len=4, boost=0.0) == []


class TestBoostRare:
    def test_b0_is_plain_softmax(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=12)
        p = boost_rare(logits, [3, 4], b=0.0)
        z = np.exp(logits - logits.max())
        np.testing.assert_allclose(p, z / z.sum(), atol=1e-12)

    def test_sums_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            logits = rng.normal(size=rng.integers(2, 40))
            unseen = [int(i) for i in rng.choice(len(logits), size=len(logits) // 3, replace=False)]
            p = boost_rare(logits, unseen, b=float(rng.uniform(0, 4)))
            assert abs(p.sum() - 1.0) < 1e-9
            assert (p >= 0).all()

    def test_unseen_ratio_invariant(self):
        logits = np.array([0.3, -1.2, 0.9, 2.0])
        for b in (0.0, 0.5, 2.0, 3.5):
            p = boost_rare(logits, [1, 3], b=b)
            assert p[1] / p[3] == pytest.approx(
                math.exp(logits[1] - logits[3]), rel=1e-12
            )

    def test_uniform_closed_form(self):
        # 4 uniform logits, one unseen piece boosted by ln 3: e^ln3/(e^ln3+3) = 1/2
        p = boost_rare(np.zeros(4), [2], b=math.log(3))
        assert abs(p[2] - 0.5) < 1e-12

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            boost_rare(np.array([0.0, float("inf")]), [], 1.0)
        with pytest.raises(ValueError):
            boost_rare(np.array([0.0, float("nan")]), [], 1.0)

    def test_mask_commutes_with_boost(self):
        rng = np.random.default_rng(5)
        logits = rng.normal(size=10)
        mask = np.zeros(10, dtype=bool)
        mask[[1, 4, 7]] = True
        p = masked_boosted_probs(logits, mask, unseen=[0, 2, 4], b=3.0)
        assert (p[~mask] == 0).all()
        assert abs(p.sum() - 1.0) < 1e-9


class TestSearchBehaviors:
    def test_one_hot_lm_returns_unique_sequence(self, toy):
        # deterministic scorer: overwhelming weight on dog then eos
        logits = np.full(len(toy.vocab), -30.0)
        logits[2] = 30.0  # "dog" start piece
        logits[toy.eos_id] = 29.0
        lm = UnigramLM(logits)
        cons = GuessConstraints.empty(1)
        results = constrained_beam_search(lm, cons, toy, beams=8, max_len=3, boost=0.0)
        assert results[0].words == ("dog",)

    def test_priors_never_repeat(self, toy):
        lm = StubLM(len(toy.vocab), seed=3)
        cons = GuessConstraints.empty(2)
        first = constrained_beam_search(lm, cons, toy, beams=64, max_len=4, boost=0.0)
        banned = cons
        for g in first[:3]:
            banned = banned.with_banned(g.words)
        second = constrained_beam_search(lm, banned, toy, beams=64, max_len=4, boost=0.0)
        out = {g.words for g in second}
        assert out.isdisjoint({g.words for g in first[:3]})

    def test_always_exact_word_count(self, toy):
        lm = StubLM(len(toy.vocab), seed=9)
        for n in (1, 2, 3):
            for cons in battery(n):
                for g in constrained_beam_search(lm, cons, toy, beams=32, max_len=n + 2):
                    assert len(g.words) == n
                    for i, w in enumerate(cons.known):
                        if w is not None:
                            assert g.words[i] == w


class TestGuessRound:
    def _judge(self, truth):
        def judge(words):
            return [w == t for w, t in zip(words, truth)]

        return judge

    def test_round_reveals_and_uses_constraints(self, toy):
        truth = ("dog", "runner")
        lm = StubLM(len(toy.vocab), seed=11)

        def searcher(cons):
            return constrained_beam_search(lm, cons, toy, beams=64, max_len=5, boost=0.0)

        made, cons = guess_round(searcher, GuessConstraints.empty(2), self._judge(truth), k=8)
        assert made, "expected at least one guess"
        # every correct hit becomes a known word afterwards
        for words, verdict in made:
            for i, ok in enumerate(verdict):
                if ok:
                    assert any(
                        later_words[i] == words[i] for later_words, _ in made[made.index((words, verdict)) :]
                    )
        # no guess repeats an earlier one
        seqs = [w for w, _ in made]
        assert len(seqs) == len(set(seqs))

    def test_exhausted_candidates_mean_fewer_guesses(self):
        tok = whole_word_tokenizer(["alpha", "beta", "gamma"])
        lm = UniformLM(len(tok.vocab))

        def searcher(cons):
            return constrained_beam_search(lm, cons, tok, beams=16, max_len=2, boost=0.0)

        made, _ = guess_round(
            searcher, GuessConstraints.empty(1), self._judge(("omega",)), k=5
        )
        assert len(made) == 3  # vocabulary only admits three distinct guesses

    def test_all_known_single_confirming_guess(self, toy):
        truth = ("dog", "runner")
        cons = GuessConstraints.empty(2).with_known(0, "dog").with_known(1, "runner")
        lm = UniformLM(len(toy.vocab))

        def searcher(c):
            return constrained_beam_search(lm, c, toy, beams=16, max_len=5, boost=0.0)

        made, _ = guess_round(searcher, cons, self._judge(truth), k=5)
        assert len(made) == 1
        assert made[0][0] == truth
        assert all(made[0][1])


class TestTokenizer:
    def test_greedy_longest_match(self, toy):
        assert [toy.surface(p) for p in toy.tokenize_word("runner")] == ["run", "ner"]
        assert [toy.surface(p) for p in toy.tokenize_word("sunny")] == ["sun", "ny"]

    def test_unrepresentable_word(self, toy):
        with pytest.raises(ValueError):
            toy.tokenize_word("xyzzy")

    def test_whole_word(self):
        tok = whole_word_tokenizer(["Cat", "dog", "cat"])
        assert tok.vocab[:2] == ("cat", "dog")
        assert tok.tokenize_word("cat") == (0,)

    def test_update_constraints_folds_verdict(self):
        cons = GuessConstraints.empty(2)
        cons = update_constraints(cons, ("dog", "cat"), (True, False))
        assert cons.known == ("dog", None)
        assert "cat" in cons.incorrect[1]
        assert ("dog", "cat") in cons.banned_sequences
