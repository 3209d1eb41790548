"""Lexically constrained guess generation over a wordpiece vocabulary.

The engine is model-agnostic: any scorer mapping a piece prefix to a
logit vector can drive it. Per-step masks enforce three rules: inside a
known word only that word's own pieces (or a new word start) may follow;
a word start entering a known position must begin that word; word starts
are forbidden at the final position, where EOS becomes legal. A word
known to be wrong at its position additionally blocks word starts and
EOS once it stands complete, forcing the beam to continue the word.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from .core import normalize_word


class TokenizerView(Protocol):
    """What the engine needs to know about a wordpiece vocabulary."""

    @property
    def vocab(self) -> tuple[str, ...]: ...

    @property
    def eos_id(self) -> int: ...

    def is_word_start(self, piece_id: int) -> bool: ...

    def surface(self, piece_id: int) -> str: ...

    def tokenize_word(self, word: str) -> tuple[int, ...]: ...


class WordpieceTokenizer:
    """Explicit wordpiece inventory with greedy longest-match tokenization.

    Pieces are (surface, word_start) pairs; EOS is appended automatically.
    """

    def __init__(self, pieces: Sequence[tuple[str, bool]], eos: str = "</s>"):
        self._surfaces = tuple(s for s, _ in pieces) + (eos,)
        self._word_start = tuple(ws for _, ws in pieces) + (False,)
        self._eos_id = len(self._surfaces) - 1
        self._cache: dict[str, tuple[int, ...]] = {}

    @property
    def vocab(self) -> tuple[str, ...]:
        return self._surfaces

    @property
    def eos_id(self) -> int:
        return self._eos_id

    def is_word_start(self, piece_id: int) -> bool:
        return self._word_start[piece_id]

    def surface(self, piece_id: int) -> str:
        return self._surfaces[piece_id]

    def piece_ids(self) -> range:
        return range(len(self._surfaces))

    def tokenize_word(self, word: str) -> tuple[int, ...]:
        """Canonical segmentation: greedy longest match, word-start first."""
        if word in self._cache:
            return self._cache[word]
        out: list[int] = []
        pos = 0
        while pos < len(word):
            want_start = pos == 0
            best: int | None = None
            best_len = 0
            for pid in range(len(self._surfaces)):
                if pid == self._eos_id or self._word_start[pid] != want_start:
                    continue
                s = self._surfaces[pid]
                if len(s) > best_len and word.startswith(s, pos):
                    best, best_len = pid, len(s)
            if best is None:
                raise ValueError(f"word {word!r} is not representable by this vocabulary")
            out.append(best)
            pos += best_len
        result = tuple(out)
        self._cache[word] = result
        return result


def whole_word_tokenizer(words: Sequence[str]) -> WordpieceTokenizer:
    """Vocabulary where every piece is a complete word."""
    seen: list[tuple[str, bool]] = []
    used = set()
    for w in words:
        nw = normalize_word(w)
        if nw and nw not in used:
            seen.append((nw, True))
            used.add(nw)
    return WordpieceTokenizer(seen)


@dataclass(frozen=True)
class GuessConstraints:
    """Fixed constraints for one guess generation."""

    length: int
    known: tuple[str | None, ...]
    incorrect: tuple[frozenset[str], ...]
    banned_sequences: frozenset[tuple[str, ...]] = frozenset()

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("phrase length must be >= 1")
        if len(self.known) != self.length or len(self.incorrect) != self.length:
            raise ValueError("known/incorrect must have one entry per position")

    @classmethod
    def empty(cls, length: int) -> GuessConstraints:
        return cls(length, (None,) * length, (frozenset(),) * length)

    def with_known(self, position: int, word: str) -> GuessConstraints:
        known = list(self.known)
        known[position] = normalize_word(word)
        return replace(self, known=tuple(known))

    def with_incorrect(self, position: int, word: str) -> GuessConstraints:
        inc = list(self.incorrect)
        inc[position] = inc[position] | {normalize_word(word)}
        return replace(self, incorrect=tuple(inc))

    def with_banned(self, words: Sequence[str]) -> GuessConstraints:
        return replace(
            self,
            banned_sequences=self.banned_sequences | {tuple(normalize_word(w) for w in words)},
        )


@dataclass(frozen=True)
class ConstraintState:
    """Per-beam decoding state: emitted pieces and word-boundary bookkeeping."""

    constraints: GuessConstraints
    pieces: tuple[int, ...] = ()
    completed: tuple[str, ...] = ()
    partial: str = ""
    partial_pieces: tuple[int, ...] = ()
    finished: bool = False

    @property
    def word_index(self) -> int:
        """Index of the word currently being emitted."""
        return len(self.completed)

    def words(self) -> tuple[str, ...]:
        return self.completed

    def advance(self, piece_id: int, tok: TokenizerView) -> ConstraintState:
        if self.finished:
            raise ValueError("sequence already finished")
        if piece_id == tok.eos_id:
            completed = self.completed + ((self.partial,) if self.partial else ())
            return replace(
                self,
                pieces=self.pieces + (piece_id,),
                completed=completed,
                partial="",
                partial_pieces=(),
                finished=True,
            )
        surface = tok.surface(piece_id)
        if tok.is_word_start(piece_id):
            completed = self.completed + ((self.partial,) if self.partial else ())
            return replace(
                self,
                pieces=self.pieces + (piece_id,),
                completed=completed,
                partial=surface,
                partial_pieces=(piece_id,),
            )
        return replace(
            self,
            pieces=self.pieces + (piece_id,),
            partial=self.partial + surface,
            partial_pieces=self.partial_pieces + (piece_id,),
        )


def allowed_mask(state: ConstraintState, tok: TokenizerView) -> np.ndarray:
    """Admissible next pieces for a beam; an all-false result means the
    beam is dead and relies on the rest of the beam pool."""
    c = state.constraints
    n_vocab = len(tok.vocab)
    mask = np.zeros(n_vocab, dtype=bool)
    if state.finished:
        return mask
    i = state.word_index

    if not state.partial:
        # Nothing emitted yet: must start word 0.
        first = c.known[0]
        target = tok.tokenize_word(first)[0] if first is not None else None
        for pid in range(n_vocab):
            if pid == tok.eos_id or not tok.is_word_start(pid):
                continue
            if target is None or pid == target:
                mask[pid] = True
        return mask

    known_here = c.known[i] if i < c.length else None
    if known_here is not None:
        canon = tok.tokenize_word(known_here)
        k = len(state.partial_pieces)
        if state.partial_pieces == canon[:k] and k < len(canon):
            mask[canon[k]] = True
    else:
        for pid in range(n_vocab):
            if pid != tok.eos_id and not tok.is_word_start(pid):
                mask[pid] = True

    # Completing the current word: blocked entirely while it matches a word
    # known to be wrong at this position.
    completion_blocked = i < c.length and normalize_word(state.partial) in c.incorrect[i]
    if not completion_blocked:
        if i + 1 < c.length:
            nxt = c.known[i + 1]
            target = tok.tokenize_word(nxt)[0] if nxt is not None else None
            for pid in range(n_vocab):
                if pid == tok.eos_id or not tok.is_word_start(pid):
                    continue
                if target is None or pid == target:
                    mask[pid] = True
        if i == c.length - 1:
            mask[tok.eos_id] = True
    return mask


def boost_rare(logits: Sequence[float] | np.ndarray, unseen: Sequence[int], b: float = 2.0) -> np.ndarray:
    """Probability vector with a fixed additive bonus on unseen pieces.

    Adds b to the logits of every piece in `unseen`, then re-applies the
    softmax; b=0 reproduces the plain softmax exactly.
    """
    if b < 0:
        raise ValueError(f"boost must be >= 0, got {b}")
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or not np.all(np.isfinite(z)):
        raise ValueError("logits must be a finite 1-d vector")
    z = z.copy()
    idx = list(unseen)
    if idx:
        z[idx] += b
    z -= z.max()
    p = np.exp(z)
    return p / p.sum()


def masked_boosted_probs(
    logits: np.ndarray,
    mask: np.ndarray,
    unseen: Sequence[int],
    b: float,
) -> np.ndarray:
    """Step distribution over admissible pieces: boost, zero the masked
    entries, renormalize. Boosting never resurrects a masked piece."""
    p = boost_rare(logits, unseen, b)
    p = np.where(mask, p, 0.0)
    total = p.sum()
    if total <= 0.0:
        return p
    return p / total


class SequenceScorer(Protocol):
    """Model contract: logits over the vocabulary for a piece prefix."""

    concurrent_safe: bool

    def score(self, prefix: Sequence[int]) -> np.ndarray: ...


class UniformLM:
    """Scores every piece equally; useful as a null model."""

    concurrent_safe = True

    def __init__(self, vocab_size: int):
        self.vocab_size = vocab_size

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        return np.zeros(self.vocab_size)


class UnigramLM:
    """Context-free scorer from fixed per-piece log weights."""

    concurrent_safe = True

    def __init__(self, log_weights: Sequence[float]):
        self.log_weights = np.asarray(log_weights, dtype=np.float64)

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        return self.log_weights


class StubLM:
    """Deterministic pseudo-random scorer keyed on the prefix; stable
    across runs, so brute-force oracles can replay identical scores."""

    concurrent_safe = True

    def __init__(self, vocab_size: int, seed: int = 0):
        self.vocab_size = vocab_size
        self.seed = seed

    def score(self, prefix: Sequence[int]) -> np.ndarray:
        key = zlib.crc32(np.asarray(list(prefix), dtype=np.int64).tobytes()) ^ self.seed
        return np.random.default_rng(key).standard_normal(self.vocab_size)


@dataclass(frozen=True)
class ScoredGuess:
    words: tuple[str, ...]
    log_prob: float
    n_pieces: int

    @property
    def normalized_score(self) -> float:
        """Mean log-probability per emitted piece, EOS step included."""
        return self.log_prob / self.n_pieces


def _has_position_incorrect(words: tuple[str, ...], c: GuessConstraints) -> bool:
    return any(i < c.length and w in c.incorrect[i] for i, w in enumerate(words))


def _complies(words: tuple[str, ...], c: GuessConstraints) -> bool:
    if len(words) != c.length:
        return False
    for i, known in enumerate(c.known):
        if known is not None and words[i] != known:
            return False
    return words not in c.banned_sequences


def rank_key(guess: ScoredGuess, c: GuessConstraints) -> tuple:
    """Deterministic ranking: clean beams first, then by score, then
    lexicographically so ties are stable."""
    return (_has_position_incorrect(guess.words, c), -guess.normalized_score, guess.words)


def constrained_beam_search(
    lm: SequenceScorer,
    constraints: GuessConstraints,
    tok: TokenizerView,
    beams: int = 20,
    max_len: int = 32,
    unseen: Sequence[int] = (),
    boost: float = 2.0,
) -> list[ScoredGuess]:
    """Beam search under the lexical constraint mask and rare-piece boost.

    Returns compliant finished sequences (exact word count, known words in
    place, prior guesses excluded), best first. An empty list means every
    beam died or nothing compliant finished within max_len.
    """
    unseen = tuple(unseen)
    live: list[tuple[ConstraintState, float]] = [(ConstraintState(constraints), 0.0)]
    finished: list[ScoredGuess] = []
    for _ in range(max_len):
        if not live:
            break
        candidates: list[tuple[ConstraintState, float]] = []
        for state, logp in live:
            mask = allowed_mask(state, tok)
            if not mask.any():
                continue  # dead beam; others may still succeed
            probs = masked_boosted_probs(lm.score(state.pieces), mask, unseen, boost)
            for pid in np.flatnonzero(probs):
                candidates.append((state.advance(int(pid), tok), logp + math.log(probs[pid])))
        candidates.sort(key=lambda c: -c[1])
        live = []
        for state, logp in candidates:
            if state.finished:
                finished.append(ScoredGuess(state.words(), logp, len(state.pieces)))
            elif len(live) < beams:
                live.append((state, logp))

    best: dict[tuple[str, ...], ScoredGuess] = {}
    for g in finished:
        if _complies(g.words, constraints):
            prev = best.get(g.words)
            if prev is None or g.normalized_score > prev.normalized_score:
                best[g.words] = g
    return sorted(best.values(), key=lambda g: rank_key(g, constraints))


def update_constraints(
    constraints: GuessConstraints,
    words: Sequence[str],
    correctness: Sequence[bool],
) -> GuessConstraints:
    """Fold one evaluated guess back into the constraints."""
    c = constraints.with_banned(words)
    for i, (w, ok) in enumerate(zip(words, correctness)):
        c = c.with_known(i, w) if ok else c.with_incorrect(i, w)
    return c


def guess_round(
    searcher: Callable[[GuessConstraints], list[ScoredGuess]],
    constraints: GuessConstraints,
    judge: Callable[[tuple[str, ...]], Sequence[bool]],
    k: int = 5,
) -> tuple[list[tuple[tuple[str, ...], tuple[bool, ...]]], GuessConstraints]:
    """Make up to k guesses against one drawing, re-searching after each
    verdict so later guesses exploit newly known or excluded words.

    Stops early when the searcher runs out of candidates or a guess is
    fully correct. Returns (guess, verdict) pairs plus the updated
    constraints.
    """
    made: list[tuple[tuple[str, ...], tuple[bool, ...]]] = []
    c = constraints
    for _ in range(k):
        results = searcher(c)
        if not results:
            break
        words = results[0].words
        verdict = tuple(judge(words))
        made.append((words, verdict))
        c = update_constraints(c, words, verdict)
        if all(verdict):
            break
    return made, c
