"""Seeded synthetic game generation with a planted icon/word mapping.

Games produced here are schema-valid end to end: guesses carry real
correctness bits, outcomes agree with the transcript, and drawings use
icons named after the phrase's content words (so alignment learners have
a recoverable ground truth). Everything is deterministic in the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import (
    Drawing,
    GameRecord,
    Guess,
    Icon,
    IconLibrary,
    IconPlacement,
    Outcome,
    Phrase,
    PhraseWord,
    PlayerInfo,
    Round,
    evaluate_guess,
    load_stopwords,
)

CONTENT_WORDS = (
    "dog", "cat", "tree", "house", "car", "boat", "fish", "bird",
    "person", "baby", "book", "phone", "chair", "table", "sun", "moon",
    "cloud", "rain", "fire", "water", "mountain", "flower", "bread",
    "apple", "guitar", "drum", "ball", "shoe", "hat", "clock",
    "running", "jumping", "eating", "sleeping", "reading", "singing",
)

OOV_WORDS = (
    "kayak", "lantern", "anchor", "cactus", "violin", "igloo", "magnet", "parachute",
)

ARROW_ICON = Icon(id="arrow", name="arrow", tags=("annotation", "direction"))

_FILLERS = ("a", "the", "in", "on", "with")


def synthetic_library() -> IconLibrary:
    """One icon per known content word, a few noise icons, and an arrow."""
    icons = [Icon(id=w, name=w, tags=(w,)) for w in CONTENT_WORDS + OOV_WORDS]
    icons += [
        Icon(id="circle", name="circle", tags=("shape",)),
        Icon(id="square", name="square", tags=("shape",)),
        ARROW_ICON,
    ]
    return IconLibrary(tuple(icons), arrow_icon_ids=frozenset({"arrow"}))


@dataclass(frozen=True)
class SyntheticWorld:
    library: IconLibrary
    content_words: tuple[str, ...]
    oov_words: tuple[str, ...]

    def icon_for(self, word: str) -> str:
        return word  # planted mapping: the icon id is the word itself


def default_world() -> SyntheticWorld:
    return SyntheticWorld(synthetic_library(), CONTENT_WORDS, OOV_WORDS)


def _random_phrase(rng: random.Random, world: SyntheticWorld, ood: bool) -> Phrase:
    stopwords = load_stopwords()
    n_content = rng.choices((1, 2, 3), weights=(2, 5, 3))[0]
    pool = list(world.content_words)
    content = rng.sample(pool, n_content)
    oov_set: set[str] = set()
    if ood:
        oov_word = rng.choice(world.oov_words)
        content[rng.randrange(n_content)] = oov_word
        oov_set.add(oov_word)
    words: list[PhraseWord] = []
    for i, w in enumerate(content):
        if rng.random() < 0.6:
            filler = rng.choice(_FILLERS)
            words.append(PhraseWord(filler, is_stopword=filler in stopwords))
        words.append(PhraseWord(w, is_oov=w in oov_set))
    return Phrase(tuple(words))


def _pose(rng: random.Random, x: float) -> dict:
    return {
        "x": x,
        "y": rng.uniform(0.2, 0.8),
        "scale": rng.choice((0.5, 1.0, 1.0, 1.0, 2.0)),
        "rotation": rng.choice((0.0, 0.0, 0.0, 90.0, 180.0, 270.0)),
        "flipped": rng.random() < 0.15,
    }


def _initial_drawing(rng: random.Random, world: SyntheticWorld, phrase: Phrase) -> Drawing:
    content = [w.text for w in phrase.words if not w.is_stopword]
    placements = []
    for i, word in enumerate(content):
        x = (i + 0.5) / len(content)
        placements.append(IconPlacement(world.icon_for(word), **_pose(rng, x)))
    if rng.random() < 0.1:
        placements.append(IconPlacement(rng.choice(("circle", "square")), **_pose(rng, rng.random())))
    return Drawing(tuple(placements), round_index=0)


def _revise_drawing(rng: random.Random, world: SyntheticWorld, prev: Drawing, round_index: int) -> Drawing:
    """Produce an edit, add, or redraw revision of the previous drawing."""
    kind = rng.choices(("edit", "add", "redraw"), weights=(3, 4, 3))[0]
    placements = list(prev.placements)
    if kind == "edit":
        i = rng.randrange(len(placements))
        p = placements[i]
        placements[i] = IconPlacement(p.icon_id, **_pose(rng, min(1.0, p.x + 0.05)))
        if len(placements) > 1 and rng.random() < 0.3:
            placements.pop(rng.randrange(len(placements)))
    elif kind == "add":
        placements.append(IconPlacement("arrow", **_pose(rng, rng.random())))
    else:
        i = rng.randrange(len(placements))
        old = placements[i]
        replacement = rng.choice(("circle", "square"))
        if replacement == old.icon_id:
            replacement = "cat" if old.icon_id != "cat" else "dog"
        placements[i] = IconPlacement(replacement, **_pose(rng, old.x))
    return Drawing(tuple(placements), round_index=round_index)


def _wrong_word(rng: random.Random, world: SyntheticWorld, avoid: set[str]) -> str:
    while True:
        w = rng.choice(world.content_words)
        if w not in avoid:
            return w


def generate_game(
    rng: random.Random,
    world: SyntheticWorld,
    game_id: str,
    split_tag: str = "train",
    win_rate: float = 0.7,
) -> GameRecord:
    ood = split_tag.startswith("ood")
    phrase = _random_phrase(rng, world, ood)
    target_won = rng.random() < win_rate
    content_positions = [i for i, w in enumerate(phrase.words) if not w.is_stopword]
    n_rounds = rng.choices((1, 2, 3, 4), weights=(55, 30, 10, 5))[0]

    # Positions revealed per round; losing games leave at least one out.
    reveal_order = content_positions[:]
    rng.shuffle(reveal_order)
    if not target_won:
        held_out = reveal_order[: rng.randint(1, len(reveal_order))]
        reveal_order = [p for p in reveal_order if p not in held_out]

    per_round: list[list[int]] = [[] for _ in range(n_rounds)]
    for j, pos in enumerate(reveal_order):
        per_round[min(j * n_rounds // max(len(reveal_order), 1), n_rounds - 1)].append(pos)
    if target_won and reveal_order:
        # Ensure the final round contains the last reveal so the win lands there.
        if not per_round[-1]:
            per_round[-1].append(reveal_order[-1])

    rounds: list[Round] = []
    current = phrase
    drawing = _initial_drawing(rng, world, phrase)
    known: set[int] = set()
    for r in range(n_rounds):
        if r > 0:
            drawing = _revise_drawing(rng, world, drawing, r)
        guesses: list[Guess] = []
        newly = per_round[r]
        n_guesses = max(len(newly), rng.randint(1, 3)) if (newly or not target_won or r < n_rounds - 1) else rng.randint(1, 2)
        for g in range(n_guesses):
            take = newly[: g + 1] if g < n_guesses - 1 else newly
            words = []
            for i, w in enumerate(phrase.words):
                if w.is_stopword or i in known or i in take:
                    words.append(phrase.words[i].text)
                else:
                    words.append(_wrong_word(rng, world, {phrase.words[i].text}))
            guess, current = evaluate_guess(current, Guess(tuple(words)))
            guesses.append(guess)
        known.update(newly)
        rounds.append(Round(drawing, tuple(guesses)))

    won = current.all_guessed()
    if won:
        final = rounds[-1]
        if not final.guesses or not all(final.guesses[-1].correctness):
            # Append the confirming guess if the schedule did not end on one.
            guess, current = evaluate_guess(current, Guess(tuple(w.text for w in phrase.words)))
            rounds[-1] = Round(final.drawing, final.guesses + (guess,))
    elapsed = rng.uniform(30.0, 230.0) if won else 240.0
    return GameRecord(
        game_id=game_id,
        phrase=current,
        rounds=tuple(rounds),
        outcome=Outcome.WON if won else Outcome.LOST_TIMEOUT,
        elapsed_seconds=round(elapsed, 1),
        split_tag=split_tag,
        drawer=PlayerInfo(f"drawer-{game_id}", is_human=True),
        guesser=PlayerInfo(f"guesser-{game_id}", is_human=True),
    )


def synthetic_corpus(
    n_games: int,
    seed: int = 0,
    split_tag: str | None = "train",
    world: SyntheticWorld | None = None,
    win_rate: float = 0.7,
) -> list[GameRecord]:
    """Generate a corpus; with split_tag None, games cycle through the
    five canonical splits."""
    rng = random.Random(seed)
    world = world or default_world()
    splits = ("train", "ind_valid", "ind_test", "ood_valid", "ood_test")
    out = []
    for i in range(n_games):
        tag = split_tag if split_tag is not None else splits[i % len(splits)]
        out.append(generate_game(rng, world, f"syn-{seed}-{i:05d}", tag, win_rate))
    return out
