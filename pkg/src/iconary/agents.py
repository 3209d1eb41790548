"""Baseline agents: a contrastive icon/word alignment model learned from
game co-occurrence, a data-augmentation generator built on it, and
non-neural drawer/guesser agents that plug into the agent contract."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

import numpy as np

from .codec import DrawingVocab, QuantizationSpec, encode_drawing, grammar_mask, DrawingGrammarState
from .core import (
    Drawing,
    GameRecord,
    GameState,
    Guess,
    IconLibrary,
    IconPlacement,
    Phrase,
    Round,
    normalize_word,
)
from .decoding import (
    GuessConstraints,
    ScoredGuess,
    UnigramLM,
    constrained_beam_search,
    whole_word_tokenizer,
)

ALIGN_MAGIC = b"ALIGN1\n"


class AgentError(RuntimeError):
    pass


@dataclass(frozen=True)
class AlignmentModel:
    """Icon and word embeddings trained so dot products score icon/word
    affinity; includes unigram counts of content words for priors."""

    dim: int
    words: tuple[str, ...]
    icons: tuple[str, ...]
    word_vecs: np.ndarray  # (n_words, dim)
    icon_vecs: np.ndarray  # (n_icons, dim)
    word_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_word_index", {w: i for i, w in enumerate(self.words)})
        object.__setattr__(self, "_icon_index", {c: i for i, c in enumerate(self.icons)})

    def has_word(self, word: str) -> bool:
        return word in self._word_index  # type: ignore[attr-defined]

    def has_icon(self, icon_id: str) -> bool:
        return icon_id in self._icon_index  # type: ignore[attr-defined]

    def word_vec(self, word: str) -> np.ndarray:
        return self.word_vecs[self._word_index[word]]  # type: ignore[attr-defined]

    def icon_vec(self, icon_id: str) -> np.ndarray:
        return self.icon_vecs[self._icon_index[icon_id]]  # type: ignore[attr-defined]

    def similarity(self, icon_id: str, word: str) -> float:
        return float(self.icon_vec(icon_id) @ self.word_vec(word))

    def word_cosine(self, a: str, b: str) -> float | None:
        if not (self.has_word(a) and self.has_word(b)):
            return None
        va, vb = self.word_vec(a), self.word_vec(b)
        denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
        if denom == 0.0:
            return None
        return float(va @ vb) / denom

    def top_words(self, icon_id: str, k: int = 5) -> list[tuple[str, float]]:
        scores = self.icon_vecs[self._icon_index[icon_id]] @ self.word_vecs.T  # type: ignore[attr-defined]
        order = np.argsort(-scores)
        return [(self.words[i], float(scores[i])) for i in order[:k]]

    def log_prior(self, word: str) -> float:
        total = sum(self.word_counts)
        i = self._word_index.get(word)  # type: ignore[attr-defined]
        count = self.word_counts[i] if i is not None else 0
        return math.log((count + 1) / (total + len(self.words)))


def _game_pairs(corpus: Sequence[GameRecord]) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """(icon ids, content words) per game, icons pooled over all drawings."""
    pairs = []
    for record in corpus:
        icons = tuple(
            p.icon_id for r in record.rounds for p in r.drawing.placements
        )
        words = tuple(w.text for w in record.phrase.words if not w.is_stopword)
        if icons and words:
            pairs.append((icons, words))
    return pairs


def train_alignment(
    corpus: Sequence[GameRecord],
    dim: int = 64,
    epochs: int = 10,
    negatives_per_positive: int = 5,
    lr: float = 0.05,
    margin: float = 1.0,
    seed: int = 0,
) -> AlignmentModel:
    """Learn icon/word embeddings by contrastive ranking.

    A game scores as the mean dot product over its icon/word pairs; each
    true (drawing, phrase) pair is pushed above sampled random phrases by
    a margin. Plain SGD, deterministic in the seed.
    """
    pairs = _game_pairs(corpus)
    if not pairs:
        raise AgentError("cannot train an alignment on an empty corpus")
    rng = np.random.default_rng(seed)

    word_counts: Counter[str] = Counter()
    icon_ids: set[str] = set()
    for icons, words in pairs:
        word_counts.update(words)
        icon_ids.update(icons)
    words = tuple(sorted(word_counts))
    icons = tuple(sorted(icon_ids))
    w_index = {w: i for i, w in enumerate(words)}
    i_index = {c: i for i, c in enumerate(icons)}

    scale = 1.0 / math.sqrt(dim)
    word_vecs = rng.normal(0.0, scale, (len(words), dim))
    icon_vecs = rng.normal(0.0, scale, (len(icons), dim))

    def mean_vec(mat: np.ndarray, idx: list[int]) -> np.ndarray:
        return mat[idx].mean(axis=0)

    for _ in range(epochs):
        order = rng.permutation(len(pairs))
        for pi in order:
            game_icons, game_words = pairs[pi]
            ic = [i_index[c] for c in game_icons]
            wp = [w_index[w] for w in game_words]
            icon_mean = mean_vec(icon_vecs, ic)
            pos_mean = mean_vec(word_vecs, wp)
            s_pos = float(icon_mean @ pos_mean)
            for _ in range(negatives_per_positive):
                neg_words = pairs[int(rng.integers(len(pairs)))][1]
                wn = [w_index[w] for w in neg_words]
                neg_mean = mean_vec(word_vecs, wn)
                s_neg = float(icon_mean @ neg_mean)
                if margin - s_pos + s_neg <= 0:
                    continue
                g_icon = (neg_mean - pos_mean) / len(ic)
                for i in ic:
                    icon_vecs[i] -= lr * g_icon
                for i in wp:
                    word_vecs[i] += lr * icon_mean / len(wp)
                for i in wn:
                    word_vecs[i] -= lr * icon_mean / len(wn)
                icon_mean = mean_vec(icon_vecs, ic)
                pos_mean = mean_vec(word_vecs, wp)
                s_pos = float(icon_mean @ pos_mean)

    return AlignmentModel(
        dim=dim,
        words=words,
        icons=icons,
        word_vecs=word_vecs,
        icon_vecs=icon_vecs,
        word_counts=tuple(word_counts[w] for w in words),
    )


def alignment_ranking_loss(model: AlignmentModel, corpus: Sequence[GameRecord],
                           negatives_per_positive: int = 5, margin: float = 1.0,
                           seed: int = 1234) -> float:
    """Mean hinge loss of a model over a corpus with a fixed negative draw."""
    pairs = _game_pairs(corpus)
    rng = np.random.default_rng(seed)
    total = 0.0
    n = 0
    for icons, pos_words in pairs:
        ic = [i for i in icons if model.has_icon(i)]
        wp = [w for w in pos_words if model.has_word(w)]
        if not ic or not wp:
            continue
        icon_mean = np.mean([model.icon_vec(i) for i in ic], axis=0)
        s_pos = float(icon_mean @ np.mean([model.word_vec(w) for w in wp], axis=0))
        for _ in range(negatives_per_positive):
            neg = pairs[int(rng.integers(len(pairs)))][1]
            wn = [w for w in neg if model.has_word(w)]
            if not wn:
                continue
            s_neg = float(icon_mean @ np.mean([model.word_vec(w) for w in wn], axis=0))
            total += max(0.0, margin - s_pos + s_neg)
            n += 1
    return total / n if n else 0.0


def save_alignment(model: AlignmentModel, path: str) -> None:
    """Versioned hybrid file: magic, JSON header line, raw float32 arrays."""
    header = {
        "version": 1,
        "dim": model.dim,
        "words": list(model.words),
        "icons": list(model.icons),
        "word_counts": list(model.word_counts),
    }
    with open(path, "wb") as f:
        f.write(ALIGN_MAGIC)
        f.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        f.write(model.word_vecs.astype("<f4").tobytes())
        f.write(model.icon_vecs.astype("<f4").tobytes())


def load_alignment(path: str) -> AlignmentModel:
    with open(path, "rb") as f:
        magic = f.read(len(ALIGN_MAGIC))
        if magic != ALIGN_MAGIC:
            raise AgentError(f"{path}: not an alignment file")
        header = json.loads(f.readline().decode("utf-8"))
        if header.get("version") != 1:
            raise AgentError(f"{path}: unsupported alignment version {header.get('version')}")
        dim = header["dim"]
        words = tuple(header["words"])
        icons = tuple(header["icons"])
        blob = f.read()
    need = (len(words) + len(icons)) * dim * 4
    if len(blob) != need:
        raise AgentError(f"{path}: truncated embedding data")
    word_vecs = np.frombuffer(blob[: len(words) * dim * 4], dtype="<f4").reshape(len(words), dim).astype(np.float64)
    icon_vecs = np.frombuffer(blob[len(words) * dim * 4 :], dtype="<f4").reshape(len(icons), dim).astype(np.float64)
    return AlignmentModel(
        dim=dim,
        words=words,
        icons=icons,
        word_vecs=word_vecs,
        icon_vecs=icon_vecs,
        word_counts=tuple(header["word_counts"]),
    )


def align_game(model: AlignmentModel, record: GameRecord) -> dict[int, dict[int, str]]:
    """Per round, per placement index: the phrase content word that best
    matches the icon; ties resolve to the earlier word position."""
    candidates = [
        (i, w.text)
        for i, w in enumerate(record.phrase.words)
        if not w.is_stopword and model.has_word(w.text)
    ]
    out: dict[int, dict[int, str]] = {}
    for ri, round_ in enumerate(record.rounds):
        assignment: dict[int, str] = {}
        for pi, placement in enumerate(round_.drawing.placements):
            if not model.has_icon(placement.icon_id) or not candidates:
                continue
            best_word = None
            best_score = -math.inf
            for _, word in candidates:
                s = model.similarity(placement.icon_id, word)
                if s > best_score:  # strict: earlier position wins ties
                    best_word, best_score = word, s
            if best_word is not None:
                assignment[pi] = best_word
        out[ri] = assignment
    return out


@dataclass(frozen=True)
class AugmentResult:
    record: GameRecord
    removed_words: tuple[str, ...]
    changed: bool


def augment(
    record: GameRecord,
    model: AlignmentModel,
    seed: int = 0,
    include_leading_stopwords: bool = True,
) -> AugmentResult:
    """Pseudo-game built by deleting one content span and its aligned icons.

    The span is a sampled content word plus the run of stopwords directly
    before it. Icons assigned to the removed word are dropped from every
    drawing; guesses are filtered positionally so the result stays
    schema-valid. Games with no removable word pass through flagged.
    """
    import random as _random

    rng = _random.Random(seed)
    phrase = record.phrase
    content = [i for i, w in enumerate(phrase.words) if not w.is_stopword]
    removable = [i for i in content if len(content) > 1]
    if not removable:
        return AugmentResult(record, (), changed=False)
    target = rng.choice(removable)
    target_word = phrase.words[target].text

    drop = {target}
    if include_leading_stopwords:
        j = target - 1
        while j >= 0 and phrase.words[j].is_stopword:
            drop.add(j)
            j -= 1
    keep = [i for i in range(len(phrase.words)) if i not in drop]

    alignment = align_game(model, record)
    new_rounds: list[Round] = []
    for ri, round_ in enumerate(record.rounds):
        assigned = alignment.get(ri, {})
        kept_placements = tuple(
            p
            for pi, p in enumerate(round_.drawing.placements)
            if assigned.get(pi) != target_word
        )
        if not kept_placements:  # removal would empty the canvas: skip
            return AugmentResult(record, (), changed=False)
        new_drawing = Drawing(kept_placements, round_index=round_.drawing.round_index)
        new_guesses = tuple(
            Guess(
                tuple(g.words[i] for i in keep),
                tuple(g.correctness[i] for i in keep) if g.correctness else None,
            )
            for g in round_.guesses
        )
        new_rounds.append(Round(new_drawing, new_guesses))

    new_phrase = Phrase(tuple(phrase.words[i] for i in keep))
    removed = tuple(phrase.words[i].text for i in sorted(drop))
    new_record = replace(
        record,
        game_id=f"{record.game_id}-aug{seed}",
        phrase=new_phrase,
        rounds=tuple(new_rounds),
    )
    return AugmentResult(new_record, removed, changed=True)


class DrawerAgent(Protocol):
    def draw(self, state: GameState, sample: bool = False, seed: int = 0) -> Drawing: ...


class GuesserAgent(Protocol):
    def guess_batch(self, state: GameState, k: int) -> list[tuple[str, ...]]: ...


@dataclass
class BaselineDrawer:
    """Places the top aligned icons for each unguessed content word,
    left to right in word order."""

    model: AlignmentModel
    library: IconLibrary
    k_icons_per_word: int = 1
    similarity_floor: float = 0.0
    spec: QuantizationSpec = QuantizationSpec()

    def _icons_for(self, word: str, k: int, sample: bool, rng) -> list[str]:
        if not self.model.has_word(word):
            return []
        ranked = [
            (icon_id, s)
            for icon_id, s in (
                (icon_id, self.model.similarity(icon_id, word))
                for icon_id in self.model.icons
                if icon_id in self.library and not self.library.is_arrow(icon_id)
            )
            if s > self.similarity_floor
        ]
        ranked.sort(key=lambda t: (-t[1], t[0]))
        if not ranked:
            return []
        if sample:
            pool = ranked[: max(3, k)]
            weights = np.array([s for _, s in pool])
            weights = np.exp(weights - weights.max())
            probs = weights / weights.sum()
            picks = rng.choice(len(pool), size=min(k, len(pool)), replace=False, p=probs)
            return [pool[int(i)][0] for i in picks]
        return [icon_id for icon_id, _ in ranked[:k]]

    def draw(self, state: GameState, sample: bool = False, seed: int = 0) -> Drawing:
        rng = np.random.default_rng(seed)
        pending = [
            w.text
            for w in state.phrase.words
            if not w.is_stopword and not w.guessed
        ]
        confirming = not pending
        if confirming:
            pending = [
                next(w.text for w in state.phrase.words if not w.is_stopword)
            ]
        chosen: list[tuple[str, str]] = []  # (word, icon)
        for word in pending:
            icons = self._icons_for(word, 1 if confirming else self.k_icons_per_word, sample, rng)
            for icon_id in icons:
                chosen.append((word, icon_id))
        if not chosen:
            raise AgentError("no icon cleared the similarity floor for any pending word")
        n = len(chosen)
        placements = [
            IconPlacement(icon_id, x=(i + 0.5) / n, y=0.5)
            for i, (_, icon_id) in enumerate(chosen)
        ]
        round_index = len(state.rounds)
        if round_index > 0 and not confirming:
            arrows = sorted(self.library.arrow_icon_ids)
            if arrows:
                placements.append(
                    IconPlacement(arrows[0], x=placements[0].x, y=0.2, scale=0.5)
                )
        return Drawing(tuple(placements), round_index=round_index)

    def token_log_likelihoods(self, record: GameRecord, round_index: int) -> list[float]:
        """Mask-aware uniform likelihood over admissible tokens; shares the
        drawing token format, so perplexities are comparable."""
        if not hasattr(self, "_vocab"):
            self._vocab = DrawingVocab.build(self.library, self.spec)
        vocab = self._vocab
        tokens = encode_drawing(record.rounds[round_index].drawing, self.library, self.spec)
        state = DrawingGrammarState()
        out = []
        for tok in tokens:
            mask = grammar_mask(state, vocab)
            out.append(-math.log(float(mask.sum())))
            state = state.advance(tok.kind)
        return out


def diversify_drawing(
    agent: DrawerAgent,
    state: GameState,
    prior_drawings: Sequence[Drawing],
    seed: int = 0,
) -> Drawing:
    """Avoid repeating a prior drawing's icon multiset: if the agent's
    argmax drawing repeats one, take a single sampled drawing instead and
    keep it even if it also repeats."""
    best = agent.draw(state, sample=False, seed=seed)
    priors = {frozenset(d.icon_counts().items()) for d in prior_drawings}
    if frozenset(best.icon_counts().items()) in priors:
        return agent.draw(state, sample=True, seed=seed)
    return best


@dataclass
class BaselineGuesser:
    """Ranks candidate words by summed icon similarity plus a unigram
    prior, then assembles full guesses through the constraint engine."""

    model: AlignmentModel
    beams: int = 20
    candidate_limit: int = 50

    def _blank_scores(self, drawing: Drawing) -> dict[str, float]:
        scores: dict[str, float] = {}
        icon_ids = [p.icon_id for p in drawing.placements if self.model.has_icon(p.icon_id)]
        for word in self.model.words:
            s = sum(self.model.similarity(i, word) for i in icon_ids)
            scores[word] = s + self.model.log_prior(word)
        return scores

    def guess_constrained(
        self,
        drawing: Drawing,
        constraints: GuessConstraints,
    ) -> list[ScoredGuess]:
        scores = self._blank_scores(drawing)
        ranked = sorted(scores.items(), key=lambda t: (-t[1], t[0]))[: self.candidate_limit]
        vocab_words = [w for w, _ in ranked]
        for w in constraints.known:
            if w is not None and w not in vocab_words:
                vocab_words.append(w)
        tok = whole_word_tokenizer(vocab_words)
        logit_by_word = {w: s for w, s in scores.items()}
        logits = np.array(
            [logit_by_word.get(tok.surface(pid), -30.0) for pid in range(len(tok.vocab))]
        )
        logits[tok.eos_id] = 0.0
        lm = UnigramLM(logits)
        max_len = constraints.length + 1
        return constrained_beam_search(
            lm, constraints, tok, beams=self.beams, max_len=max_len, boost=0.0
        )

    def guess_batch(self, state: GameState, k: int = 5) -> list[tuple[str, ...]]:
        drawing = state.latest_drawing()
        if drawing is None:
            raise AgentError("guesser asked to guess before any drawing exists")
        view = state.guesser_view()
        constraints = GuessConstraints(
            length=len(view),
            known=tuple(w.text for w in view),
            incorrect=tuple(frozenset() for _ in view),
        )
        results = self.guess_constrained(drawing, constraints)
        return [g.words for g in results[:k]]

    def guess(self, drawing, known, incorrect, prior_guesses, phrase_meta, k):
        """Replay-evaluation surface: one constrained batch per drawing."""
        constraints = GuessConstraints(
            length=len(known),
            known=tuple(known),
            incorrect=tuple(incorrect),
            banned_sequences=frozenset(tuple(g) for g in prior_guesses),
        )
        results = self.guess_constrained(drawing, constraints)
        return [g.words for g in results[:k]]
