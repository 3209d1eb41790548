// Client-side mirror of the server's game state, restricted to this
// player's role. Updated only from server messages; every inbound
// message is checked against the information-hiding invariant before it
// can touch the view.

import type {
  DrawingPayload,
  MaskedWord,
  Phase,
  Role,
  ServerMessage,
  Verdict,
} from "./protocol.js";

export interface ClientGameView {
  session: string | null;
  role: Role | null;
  phase: Phase;
  phrase: MaskedWord[];
  drawings: DrawingPayload[];
  remainingSeconds: number;
  snapshotAtMs: number; // local clock when remainingSeconds was received
  outcome: "won" | "lost_timeout" | null;
  lastError: string | null;
  lastFeedback: { words: string[]; verdicts: Verdict[] } | null;
}

export function initialView(): ClientGameView {
  return {
    session: null,
    role: null,
    phase: "lobby",
    phrase: [],
    drawings: [],
    remainingSeconds: 240,
    snapshotAtMs: 0,
    outcome: null,
    lastError: null,
    lastFeedback: null,
  };
}

export class InformationLeakError extends Error {}

/** A guesser's phrase view may only carry text for stopwords and words
 * already guessed; anything else is a protocol violation. */
export function assertNoLeak(role: Role | null, phrase: MaskedWord[]): void {
  if (role !== "guesser") return;
  for (const w of phrase) {
    if (w.text !== null && !w.is_stopword && !w.guessed) {
      throw new InformationLeakError(
        `server revealed an unguessed content word: ${w.text}`,
      );
    }
  }
}

export function reduce(
  view: ClientGameView,
  message: ServerMessage,
  nowMs: number,
): ClientGameView {
  const next: ClientGameView = { ...view, lastError: null };
  const snap = (remaining: number) => {
    next.remainingSeconds = remaining;
    next.snapshotAtMs = nowMs;
  };
  switch (message.type) {
    case "join":
      if (message.ok) {
        next.session = message.session;
        next.role = message.role;
        assertNoLeak(next.role, message.phrase);
        next.phrase = message.phrase;
        next.phase = message.phase;
        snap(message.remaining_seconds);
      }
      return next;
    case "start":
      assertNoLeak(next.role, message.phrase);
      next.phrase = message.phrase;
      next.phase = message.phase;
      snap(message.remaining_seconds);
      return next;
    case "submit_drawing":
      next.drawings = [...view.drawings, message.drawing];
      next.phase = message.phase;
      snap(message.remaining_seconds);
      return next;
    case "feedback":
      assertNoLeak(next.role, message.phrase);
      next.phrase = message.phrase;
      next.lastFeedback = { words: message.words, verdicts: message.verdicts };
      snap(message.remaining_seconds);
      return next;
    case "pass_turn":
      next.phase = message.phase;
      snap(message.remaining_seconds);
      return next;
    case "timeout":
      snap(message.remaining_seconds);
      return next;
    case "game_over":
      next.phase = "finished";
      next.outcome = message.outcome;
      return next;
    case "error":
      next.lastError = message.message;
      return next;
  }
}

/** Countdown between server snapshots; the client only displays time and
 * never ends the game itself. */
export function displayRemaining(view: ClientGameView, nowMs: number): number {
  if (view.phase === "finished") return 0;
  const elapsed = Math.max(0, (nowMs - view.snapshotAtMs) / 1000);
  return Math.max(0, view.remainingSeconds - elapsed);
}

/** Pending local canvas edits are discarded whenever the drawer loses
 * the turn (drawing accepted, game over, or any phase change away from
 * drawer_turn). */
export function shouldResetLocalEdits(
  previous: ClientGameView,
  next: ClientGameView,
): boolean {
  return previous.phase === "drawer_turn" && next.phase !== "drawer_turn";
}

export function latestDrawing(view: ClientGameView): DrawingPayload | null {
  return view.drawings.length ? view.drawings[view.drawings.length - 1] : null;
}
