// Application bootstrap: join form, then the role-specific board wired
// to one server connection. UI state changes only on server messages and
// local input events.

import * as canvas from "./canvas.js";
import { GameConnection, defaultServerUrl } from "./connection.js";
import {
  ClientGameView,
  displayRemaining,
  initialView,
  latestDrawing,
  reduce,
  shouldResetLocalEdits,
} from "./gameView.js";
import {
  applyFeedback,
  isVictory,
  readyToSubmit,
  setEntry,
  slotsFromPhrase,
  wordsForSubmit,
  type BlankSlot,
  type GuessHistoryEntry,
} from "./guessEntry.js";
import { searchIcons } from "./iconSearch.js";
import {
  drawingMessage,
  guessMessage,
  joinMessage,
  passMessage,
  startMessage,
  type IconEntry,
  type IconManifest,
  type ServerMessage,
} from "./protocol.js";
import * as render from "./render.js";

interface AppState {
  view: ClientGameView;
  draft: canvas.CanvasModel;
  slots: BlankSlot[];
  history: GuessHistoryEntry[];
  icons: IconEntry[];
  query: string;
}

const state: AppState = {
  view: initialView(),
  draft: canvas.emptyCanvas(),
  slots: [],
  history: [],
  icons: [],
  query: "",
};

const $ = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
};

let connection: GameConnection | null = null;

function send(payload: string): void {
  if (connection && !connection.send(payload)) {
    render.setStatus($("status"), "connection lost", true);
  }
}

function onServerMessage(message: ServerMessage): void {
  const previous = state.view;
  let next: ClientGameView;
  try {
    next = reduce(previous, message, Date.now());
  } catch (e) {
    render.setStatus($("status"), String(e), true);
    connection?.close();
    return;
  }
  state.view = next;
  if (shouldResetLocalEdits(previous, next)) {
    state.draft = canvas.emptyCanvas();
  }
  if (message.type === "join" && message.ok) {
    state.slots = slotsFromPhrase(next.phrase);
  }
  if (message.type === "start") {
    state.slots = slotsFromPhrase(next.phrase);
    state.history = [];
  }
  if (message.type === "feedback") {
    const result = applyFeedback(state.slots, message);
    state.slots = result.slots;
    state.history = [...state.history, result.history];
    if (isVictory(message)) {
      render.setStatus($("status"), "phrase solved!");
    }
  }
  if (message.type === "error") {
    render.setStatus($("status"), message.message, true);
  }
  redraw();
}

function redraw(): void {
  const view = state.view;
  $("join-panel").hidden = view.role !== null;
  $("board").hidden = view.role === null;
  if (view.role === null) return;

  $("role-label").textContent = `${view.role} | ${view.phase}`;
  const drawerSide = view.role === "drawer";
  $("drawer-panel").hidden = !drawerSide;
  $("guesser-panel").hidden = drawerSide;

  if (view.outcome) {
    render.setStatus(
      $("status"),
      view.outcome === "won" ? "game won!" : "time ran out",
      view.outcome !== "won",
    );
  }

  if (drawerSide) {
    render.renderPhraseForDrawer($("drawer-phrase"), view.phrase);
    render.renderEditableCanvas($("edit-canvas"), state.draft, (index) => {
      state.draft = canvas.select(state.draft, index);
      redraw();
    });
    render.renderIconResults($("icon-results"), searchIcons(state.icons, state.query), (icon) => {
      state.draft = canvas.place(state.draft, icon.id, 0.5, 0.5);
      redraw();
    });
    const canAct = view.phase === "drawer_turn";
    ($("submit-drawing") as HTMLButtonElement).disabled =
      !canAct || !canvas.canSubmit(state.draft);
    ($("edit-controls") as HTMLElement).hidden = state.draft.selected === null;
  } else {
    render.renderDrawing($("view-canvas"), latestDrawing(view));
    render.renderBlanks($("blanks"), state.slots, (index, value) => {
      state.slots = setEntry(state.slots, index, value);
      ($("submit-guess") as HTMLButtonElement).disabled = !readyToSubmit(state.slots);
    });
    render.renderHistory($("history"), state.history);
    const canAct = view.phase === "guesser_turn";
    ($("submit-guess") as HTMLButtonElement).disabled =
      !canAct || !readyToSubmit(state.slots);
    ($("give-up") as HTMLButtonElement).disabled = !canAct;
  }
}

function tickTimer(): void {
  const remaining = displayRemaining(state.view, Date.now());
  $("timer").textContent = `${Math.ceil(remaining)}s`;
  window.setTimeout(tickTimer, 250);
}

async function loadIcons(): Promise<void> {
  const response = await fetch("/icons");
  const manifest = (await response.json()) as IconManifest;
  state.icons = manifest.icons;
}

function wireControls(): void {
  $("join-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const session = ($("session-input") as HTMLInputElement).value.trim() || "lobby";
    const role = ($("role-select") as HTMLSelectElement).value as "drawer" | "guesser";
    const name = ($("name-input") as HTMLInputElement).value.trim() || "player";
    connection = new GameConnection(
      defaultServerUrl(window.location),
      onServerMessage,
      (status) => {
        if (status === "open") send(joinMessage(session, role, name));
        else render.setStatus($("status"), "disconnected", true);
      },
    );
    connection.connect();
  });

  $("start-game").addEventListener("click", () => send(startMessage()));
  $("submit-drawing").addEventListener("click", () => {
    send(drawingMessage(canvas.serializeDrawing(state.draft)));
  });
  $("submit-guess").addEventListener("click", () => {
    if (readyToSubmit(state.slots)) send(guessMessage(wordsForSubmit(state.slots)));
  });
  $("give-up").addEventListener("click", () => send(passMessage()));

  ($("icon-query") as HTMLInputElement).addEventListener("input", (ev) => {
    state.query = (ev.target as HTMLInputElement).value;
    redraw();
  });

  const withSelected = (fn: (m: canvas.CanvasModel, i: number) => canvas.CanvasModel) => {
    if (state.draft.selected !== null) {
      state.draft = fn(state.draft, state.draft.selected);
      redraw();
    }
  };
  $("btn-bigger").addEventListener("click", () => withSelected((m, i) => canvas.resize(m, i, 1.25)));
  $("btn-smaller").addEventListener("click", () => withSelected((m, i) => canvas.resize(m, i, 0.8)));
  $("btn-rotate").addEventListener("click", () => withSelected((m, i) => canvas.rotate(m, i, 45)));
  $("btn-flip").addEventListener("click", () => withSelected((m, i) => canvas.flip(m, i)));
  $("btn-duplicate").addEventListener("click", () => withSelected(canvas.duplicate));
  $("btn-delete").addEventListener("click", () => withSelected(canvas.remove));

  $("edit-canvas").addEventListener("pointermove", (ev) => {
    if (state.draft.selected === null || (ev as PointerEvent).buttons !== 1) return;
    const rect = ($("edit-canvas") as HTMLElement).getBoundingClientRect();
    const x = ((ev as PointerEvent).clientX - rect.left) / rect.width;
    const y = ((ev as PointerEvent).clientY - rect.top) / rect.height;
    state.draft = canvas.drag(state.draft, state.draft.selected, x, y);
    redraw();
  });
}

export function boot(): void {
  wireControls();
  tickTimer();
  void loadIcons();
  redraw();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
