// Blank-filling model for the guesser: revealed words are locked, each
// verdict maps to a theme class, and correct words lock into their
// blanks for every later guess.

import type { FeedbackMsg, MaskedWord, Verdict } from "./protocol.js";

export const VERDICT_CLASS: Record<Verdict, string> = {
  correct: "verdict-cyan",
  close: "verdict-amber",
  incorrect: "verdict-magenta",
};

export interface BlankSlot {
  index: number;
  revealed: string | null; // server-visible text (stopword or guessed)
  entry: string; // player's current input
  locked: boolean;
}

export interface GuessHistoryEntry {
  words: string[];
  verdicts: Verdict[];
  classes: string[];
}

export function slotsFromPhrase(phrase: MaskedWord[], previous?: BlankSlot[]): BlankSlot[] {
  return phrase.map((w, i) => {
    const revealed = w.text;
    const prior = previous?.[i];
    return {
      index: i,
      revealed,
      entry: revealed ?? (prior && !prior.locked ? prior.entry : ""),
      locked: revealed !== null,
    };
  });
}

export function setEntry(slots: BlankSlot[], index: number, value: string): BlankSlot[] {
  return slots.map((s) =>
    s.index === index && !s.locked ? { ...s, entry: value } : s,
  );
}

export function readyToSubmit(slots: BlankSlot[]): boolean {
  return slots.every((s) => (s.locked ? true : s.entry.trim().length > 0));
}

export function wordsForSubmit(slots: BlankSlot[]): string[] {
  return slots.map((s) => (s.locked ? (s.revealed as string) : s.entry.trim()));
}

export function applyFeedback(
  slots: BlankSlot[],
  feedback: FeedbackMsg,
): { slots: BlankSlot[]; history: GuessHistoryEntry } {
  const next = slotsFromPhrase(feedback.phrase, slots);
  return {
    slots: next,
    history: {
      words: [...feedback.words],
      verdicts: [...feedback.verdicts],
      classes: feedback.verdicts.map((v) => VERDICT_CLASS[v]),
    },
  };
}

export function isVictory(feedback: FeedbackMsg): boolean {
  return feedback.correct.every(Boolean);
}
