"""Live game session state machine.

`session_step` is a pure function of (session, message, clock reading):
no I/O, no randomness. Every accepted message is appended to the event
log, so replaying a log from the same initial session reproduces the
terminal state bit for bit. Transports deliver the returned outbound
messages; the machine itself never talks to a socket.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Sequence

from . import schema
from .agents import AlignmentModel
from .core import (
    GameRecord,
    GameState,
    Guess,
    IconLibrary,
    Outcome,
    Phrase,
    PlayerInfo,
    Round,
    evaluate_guess,
    normalize_word,
)

TIME_BUDGET_SECONDS = 240.0

CLIENT_MESSAGE_TYPES = ("join", "start", "submit_drawing", "submit_guess", "pass_turn")
SERVER_MESSAGE_TYPES = ("feedback", "timeout", "game_over", "error")


class Phase(str, Enum):
    LOBBY = "lobby"
    DRAWER_TURN = "drawer_turn"
    GUESSER_TURN = "guesser_turn"
    FINISHED = "finished"


@dataclass(frozen=True)
class Outbound:
    """One message to deliver; audience is a role, "both", or "sender"."""

    audience: str
    payload: dict[str, Any]


@dataclass(frozen=True)
class Session:
    session_id: str
    phrase: Phrase
    library: IconLibrary
    phase: Phase = Phase.LOBBY
    rounds: tuple[Round, ...] = ()
    drawer: PlayerInfo | None = None
    guesser: PlayerInfo | None = None
    started_at: float | None = None
    deadline: float | None = None
    finished_at: float | None = None
    outcome: Outcome | None = None
    time_budget: float = TIME_BUDGET_SECONDS
    event_log: tuple[tuple[float, str], ...] = ()

    def remaining(self, now: float) -> float:
        if self.deadline is None:
            return self.time_budget
        return max(0.0, self.deadline - now)

    def game_state(self, now: float) -> GameState:
        turn = "guesser" if self.phase is Phase.GUESSER_TURN else "drawer"
        return GameState(
            phrase=self.phrase,
            rounds=self.rounds,
            turn=turn,
            remaining_seconds=self.remaining(now),
        )

    def to_dict(self) -> dict[str, Any]:
        """Canonical serialization used for replay comparison."""
        return {
            "session_id": self.session_id,
            "phase": self.phase.value,
            "phrase": schema.phrase_to_dict(self.phrase),
            "rounds": [
                {
                    "drawing": schema.drawing_to_dict(r.drawing),
                    "guesses": [schema.guess_to_dict(g) for g in r.guesses],
                }
                for r in self.rounds
            ],
            "drawer": None if self.drawer is None else {"id": self.drawer.id, "is_human": self.drawer.is_human},
            "guesser": None if self.guesser is None else {"id": self.guesser.id, "is_human": self.guesser.is_human},
            "started_at": self.started_at,
            "deadline": self.deadline,
            "finished_at": self.finished_at,
            "outcome": None if self.outcome is None else self.outcome.value,
            "time_budget": self.time_budget,
            "event_log": [[t, m] for t, m in self.event_log],
        }

    def fingerprint(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def new_session(
    session_id: str,
    phrase: Phrase,
    library: IconLibrary,
    time_budget: float = TIME_BUDGET_SECONDS,
) -> Session:
    return Session(session_id=session_id, phrase=phrase, library=library, time_budget=time_budget)


def masked_phrase_payload(phrase: Phrase, role: str) -> list[dict[str, Any]]:
    """Phrase as `role` may see it; unguessed content words are withheld
    from the guesser entirely."""
    out = []
    for w in phrase.words:
        visible = role == "drawer" or w.is_stopword or w.guessed
        out.append(
            {
                "text": w.text if visible else None,
                "is_stopword": w.is_stopword,
                "guessed": w.guessed,
            }
        )
    return out


def closeness(
    guess_word: str,
    phrase_word: str,
    alignment: AlignmentModel | None = None,
    threshold: float = 0.5,
) -> str:
    """Three-tier per-word verdict: correct, close (by word-vector cosine
    when an alignment model is loaded), or incorrect. Without a model the
    close tier degrades to incorrect and never blocks gameplay."""
    if normalize_word(guess_word) == normalize_word(phrase_word):
        return "correct"
    if alignment is not None:
        cos = alignment.word_cosine(normalize_word(guess_word), normalize_word(phrase_word))
        if cos is not None and cos >= threshold:
            return "close"
    return "incorrect"


def _error(message: str, offending: str | None = None) -> Outbound:
    payload: dict[str, Any] = {"type": "error", "message": message}
    if offending:
        payload["re"] = offending
    return Outbound("sender", payload)


def _finish(session: Session, outcome: Outcome, now: float) -> Session:
    return replace(session, phase=Phase.FINISHED, outcome=outcome, finished_at=now)


def _game_over_payload(session: Session, now: float) -> dict[str, Any]:
    assert session.outcome is not None
    elapsed = 0.0 if session.started_at is None else now - session.started_at
    return {
        "type": "game_over",
        "outcome": session.outcome.value,
        "elapsed_seconds": round(min(elapsed, session.time_budget), 3),
    }


def session_step(
    session: Session,
    message: dict[str, Any],
    now: float,
    alignment: AlignmentModel | None = None,
) -> tuple[Session, list[Outbound]]:
    """Apply one message. Illegal or malformed messages produce an error
    reply and leave the game state unchanged; every accepted or rejected
    client message is acknowledged one way or the other."""
    logged = replace(
        session,
        event_log=session.event_log + ((now, json.dumps(message, sort_keys=True)),),
    )
    session = logged

    mtype = message.get("type")
    role = message.get("role")
    if mtype not in CLIENT_MESSAGE_TYPES and mtype != "timeout":
        return session, [_error(f"unknown message type {mtype!r}", str(mtype))]

    # The server clock injects timeout; it also fires lazily if a client
    # message arrives past the deadline.
    if (
        session.phase in (Phase.DRAWER_TURN, Phase.GUESSER_TURN)
        and session.deadline is not None
        and now >= session.deadline
    ):
        session = _finish(session, Outcome.LOST_TIMEOUT, now)
        out = [
            Outbound("both", {"type": "timeout", "remaining_seconds": 0.0}),
            Outbound("both", _game_over_payload(session, now)),
        ]
        if mtype != "timeout":
            out.append(_error("game already finished", str(mtype)))
        return session, out

    if mtype == "timeout":
        if role != "server":
            return session, [_error("timeout is a server message", "timeout")]
        return session, []  # early tick: deadline not reached, nothing to do

    if mtype == "join":
        return _step_join(session, message, now)
    if mtype == "start":
        return _step_start(session, message, now)
    if mtype == "submit_drawing":
        return _step_drawing(session, message, now)
    if mtype == "submit_guess":
        return _step_guess(session, message, now, alignment)
    if mtype == "pass_turn":
        return _step_pass(session, message, now)
    return session, [_error(f"unhandled message type {mtype!r}", str(mtype))]


def _step_join(session: Session, message: dict, now: float) -> tuple[Session, list[Outbound]]:
    if session.phase is not Phase.LOBBY:
        return session, [_error("cannot join after the game started", "join")]
    role = message.get("role")
    if role not in ("drawer", "guesser"):
        return session, [_error(f"role must be drawer or guesser, got {role!r}", "join")]
    if getattr(session, role) is not None:
        return session, [_error(f"{role} seat is already taken", "join")]
    player = PlayerInfo(
        id=str(message.get("name", f"anon-{role}")),
        is_human=bool(message.get("is_human", True)),
    )
    session = replace(session, **{role: player})
    ack = {
        "type": "join",
        "ok": True,
        "role": role,
        "session": session.session_id,
        "phrase": masked_phrase_payload(session.phrase, role),
        "phase": session.phase.value,
        "remaining_seconds": session.time_budget,
    }
    return session, [Outbound("sender", ack)]


def _step_start(session: Session, message: dict, now: float) -> tuple[Session, list[Outbound]]:
    if session.phase is not Phase.LOBBY:
        return session, [_error("game already started", "start")]
    if session.drawer is None or session.guesser is None:
        return session, [_error("both seats must be filled before starting", "start")]
    session = replace(
        session,
        phase=Phase.DRAWER_TURN,
        started_at=now,
        deadline=now + session.time_budget,
    )
    out = [
        Outbound(
            role,
            {
                "type": "start",
                "session": session.session_id,
                "phase": session.phase.value,
                "role": role,
                "phrase": masked_phrase_payload(session.phrase, role),
                "remaining_seconds": session.remaining(now),
            },
        )
        for role in ("drawer", "guesser")
    ]
    return session, out


def _step_drawing(session: Session, message: dict, now: float) -> tuple[Session, list[Outbound]]:
    if session.phase is not Phase.DRAWER_TURN:
        return session, [_error(f"submit_drawing not allowed in {session.phase.value}", "submit_drawing")]
    if message.get("role") != "drawer":
        return session, [_error("only the drawer may submit a drawing", "submit_drawing")]
    raw = message.get("drawing")
    if not isinstance(raw, dict):
        return session, [_error("submit_drawing needs a drawing object", "submit_drawing")]
    try:
        payload = dict(raw)
        payload.setdefault("round_index", len(session.rounds))
        drawing = schema.drawing_from_dict(payload)
    except schema.SchemaError as e:
        return session, [_error(f"malformed drawing: {e}", "submit_drawing")]
    if drawing.round_index != len(session.rounds):
        return session, [_error(f"expected round_index {len(session.rounds)}", "submit_drawing")]
    for p in drawing.placements:
        if p.icon_id not in session.library:
            return session, [_error(f"unknown icon id {p.icon_id!r}", "submit_drawing")]
    session = replace(
        session,
        rounds=session.rounds + (Round(drawing, ()),),
        phase=Phase.GUESSER_TURN,
    )
    broadcast = {
        "type": "submit_drawing",
        "drawing": schema.drawing_to_dict(drawing),
        "phase": session.phase.value,
        "remaining_seconds": session.remaining(now),
    }
    return session, [Outbound("both", broadcast)]


def _step_guess(
    session: Session, message: dict, now: float, alignment: AlignmentModel | None
) -> tuple[Session, list[Outbound]]:
    if session.phase is not Phase.GUESSER_TURN:
        return session, [_error(f"submit_guess not allowed in {session.phase.value}", "submit_guess")]
    if message.get("role") != "guesser":
        return session, [_error("only the guesser may submit guesses", "submit_guess")]
    words = message.get("words")
    if (
        not isinstance(words, list)
        or not words
        or not all(isinstance(w, str) and w.strip() for w in words)
    ):
        return session, [_error("submit_guess needs a non-empty list of words", "submit_guess")]
    if len(words) != len(session.phrase.words):
        return session, [
            _error(
                f"guess has {len(words)} words, phrase has {len(session.phrase.words)}",
                "submit_guess",
            )
        ]
    guess, new_phrase = evaluate_guess(session.phrase, Guess(tuple(words)))
    last = session.rounds[-1]
    rounds = session.rounds[:-1] + (Round(last.drawing, last.guesses + (guess,)),)
    session = replace(session, phrase=new_phrase, rounds=rounds)
    assert guess.correctness is not None
    verdicts = [
        "correct" if ok else closeness(w, pw.text, alignment)
        for w, pw, ok in zip(words, session.phrase.words, guess.correctness)
    ]
    out = [
        Outbound(
            role,
            {
                "type": "feedback",
                "words": list(words),
                "correct": list(guess.correctness),
                "verdicts": verdicts,
                "phrase": masked_phrase_payload(session.phrase, role),
                "remaining_seconds": session.remaining(now),
            },
        )
        for role in ("drawer", "guesser")
    ]
    if session.phrase.all_guessed():
        session = _finish(session, Outcome.WON, now)
        out.append(Outbound("both", _game_over_payload(session, now)))
    return session, out


def _step_pass(session: Session, message: dict, now: float) -> tuple[Session, list[Outbound]]:
    if session.phase is not Phase.GUESSER_TURN:
        return session, [_error(f"pass_turn not allowed in {session.phase.value}", "pass_turn")]
    if message.get("role") != "guesser":
        return session, [_error("only the guesser may pass", "pass_turn")]
    session = replace(session, phase=Phase.DRAWER_TURN)
    broadcast = {
        "type": "pass_turn",
        "phase": session.phase.value,
        "remaining_seconds": session.remaining(now),
    }
    return session, [Outbound("both", broadcast)]


def replay_session(initial: Session, events: Sequence[tuple[float, str]],
                   alignment: AlignmentModel | None = None) -> Session:
    """Re-apply a recorded event log to a fresh copy of the session."""
    state = replace(initial, event_log=())
    for t, raw in events:
        state, _ = session_step(state, json.loads(raw), t, alignment)
    return state


def session_record(session: Session, split_tag: str = "train") -> GameRecord:
    """Export a finished session as a canonical game record."""
    if session.phase is not Phase.FINISHED or session.outcome is None:
        raise ValueError("session is not finished")
    elapsed = 0.0
    if session.started_at is not None and session.finished_at is not None:
        elapsed = min(session.finished_at - session.started_at, session.time_budget)
    return GameRecord(
        game_id=session.session_id,
        phrase=session.phrase,
        rounds=session.rounds,
        outcome=session.outcome,
        elapsed_seconds=round(elapsed, 3),
        split_tag=split_tag,
        drawer=session.drawer or PlayerInfo("unknown-drawer"),
        guesser=session.guesser or PlayerInfo("unknown-guesser"),
    )
