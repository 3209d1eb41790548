import { describe, expect, it } from "vitest";

import {
  InformationLeakError,
  displayRemaining,
  initialView,
  latestDrawing,
  reduce,
  shouldResetLocalEdits,
} from "../src/gameView.js";
import type { FeedbackMsg, ServerMessage } from "../src/protocol.js";
import { loadFixture, messagesFor } from "./fixtures.js";

function playThrough(role: "drawer" | "guesser") {
  const fixture = loadFixture();
  let view = initialView();
  const seen: ServerMessage[] = [];
  for (const message of messagesFor(fixture, role)) {
    view = reduce(view, message, 1000);
    seen.push(message);
  }
  return { view, seen };
}

describe("client game view over the shared fixtures", () => {
  it("guesser plays the fixture game to a win without ever seeing a hidden word", () => {
    const { view } = playThrough("guesser");
    expect(view.role).toBe("guesser");
    expect(view.phase).toBe("finished");
    expect(view.outcome).toBe("won");
    expect(view.drawings).toHaveLength(2);
    // once won, every word is revealed
    expect(view.phrase.every((w) => w.text !== null)).toBe(true);
  });

  it("drawer sees the full phrase from the join ack", () => {
    const { view } = playThrough("drawer");
    expect(view.role).toBe("drawer");
    expect(view.phrase.map((w) => w.text)).toEqual(["a", "dog", "under", "a", "tree"]);
  });

  it("mid-game guesser views keep unguessed content words hidden", () => {
    const fixture = loadFixture();
    let view = initialView();
    const stream = messagesFor(fixture, "guesser");
    // stop before the winning feedback
    for (const message of stream.slice(0, 4)) {
      view = reduce(view, message, 0);
    }
    const hidden = view.phrase.filter((w) => !w.is_stopword && !w.guessed);
    expect(hidden.length).toBeGreaterThan(0);
    for (const w of hidden) expect(w.text).toBeNull();
  });

  it("a message leaking an unguessed word is rejected", () => {
    const fixture = loadFixture();
    let view = initialView();
    view = reduce(view, messagesFor(fixture, "guesser")[0], 0);
    const leak: FeedbackMsg = {
      type: "feedback",
      words: ["a", "dog", "under", "a", "tree"],
      correct: [true, false, true, true, false],
      verdicts: ["correct", "incorrect", "correct", "correct", "incorrect"],
      phrase: [
        { text: "a", is_stopword: true, guessed: false },
        { text: "dog", is_stopword: false, guessed: false }, // leaked!
        { text: "under", is_stopword: true, guessed: false },
        { text: "a", is_stopword: true, guessed: false },
        { text: null, is_stopword: false, guessed: false },
      ],
      remaining_seconds: 100,
    };
    expect(() => reduce(view, leak, 0)).toThrow(InformationLeakError);
  });

  it("errors surface without touching game state", () => {
    const { view } = playThrough("guesser");
    const errored = reduce(
      view,
      { type: "error", message: "nope", re: "submit_guess" },
      0,
    );
    expect(errored.lastError).toBe("nope");
    expect(errored.phase).toBe(view.phase);
    expect(errored.phrase).toEqual(view.phrase);
  });

  it("timer counts down from the latest server snapshot and never goes negative", () => {
    const fixture = loadFixture();
    let view = initialView();
    view = reduce(view, messagesFor(fixture, "guesser")[0], 10_000);
    const atSnapshot = displayRemaining(view, 10_000);
    expect(atSnapshot).toBeCloseTo(240, 5);
    expect(displayRemaining(view, 14_000)).toBeCloseTo(236, 5);
    expect(displayRemaining(view, 10_000 + 400_000)).toBe(0);
  });

  it("local drawer edits are discarded exactly when the turn is lost", () => {
    const fixture = loadFixture();
    let view = initialView();
    let resets = 0;
    for (const message of messagesFor(fixture, "drawer")) {
      const next = reduce(view, message, 0);
      if (shouldResetLocalEdits(view, next)) resets += 1;
      view = next;
    }
    // drawer_turn ended twice: both drawings were accepted
    expect(resets).toBe(2);
  });

  it("latestDrawing tracks the most recent broadcast", () => {
    const { view } = playThrough("guesser");
    const last = latestDrawing(view);
    expect(last?.placements.some((p) => p.icon_id === "arrow")).toBe(true);
  });
});
