// Wire protocol types, mirroring docs/protocol.md. The client sends and
// receives exactly these shapes; anything else is surfaced as an error.

export type Role = "drawer" | "guesser";
export type Phase = "lobby" | "drawer_turn" | "guesser_turn" | "finished";
export type Verdict = "correct" | "close" | "incorrect";

export interface MaskedWord {
  text: string | null;
  is_stopword: boolean;
  guessed: boolean;
}

export interface PlacementPayload {
  icon_id: string;
  x: number;
  y: number;
  scale: number;
  rotation: number;
  flipped: boolean;
}

export interface DrawingPayload {
  placements: PlacementPayload[];
  round_index?: number;
}

export interface JoinAck {
  type: "join";
  ok: boolean;
  role: Role;
  session: string;
  phrase: MaskedWord[];
  phase: Phase;
  remaining_seconds: number;
}

export interface StartMsg {
  type: "start";
  session: string;
  phase: Phase;
  role: Role;
  phrase: MaskedWord[];
  remaining_seconds: number;
}

export interface DrawingMsg {
  type: "submit_drawing";
  drawing: DrawingPayload;
  phase: Phase;
  remaining_seconds: number;
}

export interface FeedbackMsg {
  type: "feedback";
  words: string[];
  correct: boolean[];
  verdicts: Verdict[];
  phrase: MaskedWord[];
  remaining_seconds: number;
}

export interface PassMsg {
  type: "pass_turn";
  phase: Phase;
  remaining_seconds: number;
}

export interface TimeoutMsg {
  type: "timeout";
  remaining_seconds: number;
}

export interface GameOverMsg {
  type: "game_over";
  outcome: "won" | "lost_timeout";
  elapsed_seconds: number;
}

export interface ErrorMsg {
  type: "error";
  message: string;
  re?: string;
}

export type ServerMessage =
  | JoinAck
  | StartMsg
  | DrawingMsg
  | FeedbackMsg
  | PassMsg
  | TimeoutMsg
  | GameOverMsg
  | ErrorMsg;

export interface IconEntry {
  id: string;
  name: string;
  tags: string[];
  art: string | null;
}

export interface IconManifest {
  icons: IconEntry[];
  arrow_icon_ids: string[];
}

export function parseServerMessage(raw: string): ServerMessage {
  const data = JSON.parse(raw);
  if (typeof data !== "object" || data === null || typeof data.type !== "string") {
    throw new Error("malformed server message");
  }
  return data as ServerMessage;
}

export function joinMessage(session: string, role: Role, name: string): string {
  return JSON.stringify({ type: "join", session, role, name, is_human: true });
}

export function startMessage(): string {
  return JSON.stringify({ type: "start" });
}

export function drawingMessage(drawing: DrawingPayload): string {
  return JSON.stringify({ type: "submit_drawing", drawing });
}

export function guessMessage(words: string[]): string {
  return JSON.stringify({ type: "submit_guess", words });
}

export function passMessage(): string {
  return JSON.stringify({ type: "pass_turn" });
}
