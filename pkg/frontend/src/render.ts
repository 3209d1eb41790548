// DOM helpers: translate models into elements. No framework; containers
// are re-rendered wholesale on state changes, which is plenty for a
// two-player turn game.

import type { CanvasModel } from "./canvas.js";
import type { BlankSlot, GuessHistoryEntry } from "./guessEntry.js";
import type { DrawingPayload, IconEntry, MaskedWord } from "./protocol.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function iconArtUrl(iconId: string): string {
  return `/icons/${encodeURIComponent(iconId)}.svg`;
}

function placeIconElement(
  parent: HTMLElement,
  placement: DrawingPayload["placements"][number],
  extraClass = "",
): HTMLElement {
  const wrap = el("div", `canvas-icon ${extraClass}`.trim());
  wrap.style.left = `${placement.x * 100}%`;
  wrap.style.top = `${placement.y * 100}%`;
  const img = el("img");
  img.src = iconArtUrl(placement.icon_id);
  img.alt = placement.icon_id;
  img.draggable = false;
  const flipPart = placement.flipped ? " scaleX(-1)" : "";
  img.style.transform = `rotate(${placement.rotation}deg) scale(${placement.scale})${flipPart}`;
  wrap.appendChild(img);
  parent.appendChild(wrap);
  return wrap;
}

export function renderDrawing(container: HTMLElement, drawing: DrawingPayload | null): void {
  container.replaceChildren();
  if (!drawing) {
    container.appendChild(el("div", "canvas-empty", "waiting for a drawing"));
    return;
  }
  for (const placement of drawing.placements) {
    placeIconElement(container, placement);
  }
}

export function renderEditableCanvas(
  container: HTMLElement,
  model: CanvasModel,
  onSelect: (index: number) => void,
): void {
  container.replaceChildren();
  model.placements.forEach((placement, index) => {
    const node = placeIconElement(
      container,
      placement,
      index === model.selected ? "selected" : "",
    );
    node.addEventListener("pointerdown", (ev) => {
      ev.stopPropagation();
      onSelect(index);
    });
  });
}

export function renderIconResults(
  container: HTMLElement,
  icons: IconEntry[],
  onPick: (icon: IconEntry) => void,
): void {
  container.replaceChildren();
  if (!icons.length) {
    container.appendChild(el("div", "hint", "no icons match; try another word"));
    return;
  }
  for (const icon of icons) {
    const cell = el("button", "icon-cell");
    cell.type = "button";
    cell.title = icon.name;
    const img = el("img");
    img.src = iconArtUrl(icon.id);
    img.alt = icon.name;
    cell.append(img, el("span", "icon-name", icon.name));
    cell.addEventListener("click", () => onPick(icon));
    container.appendChild(cell);
  }
}

export function renderPhraseForDrawer(container: HTMLElement, phrase: MaskedWord[]): void {
  container.replaceChildren();
  for (const w of phrase) {
    const cls = w.guessed ? "word guessed" : w.is_stopword ? "word stopword" : "word";
    container.appendChild(el("span", cls, w.guessed ? `*${w.text}*` : w.text ?? "_"));
  }
}

export function renderBlanks(
  container: HTMLElement,
  slots: BlankSlot[],
  onInput: (index: number, value: string) => void,
): void {
  container.replaceChildren();
  for (const slot of slots) {
    if (slot.locked) {
      container.appendChild(el("span", "word locked", slot.revealed ?? ""));
      continue;
    }
    const input = el("input", "blank");
    input.value = slot.entry;
    input.placeholder = "_";
    input.autocomplete = "off";
    input.addEventListener("input", () => onInput(slot.index, input.value));
    container.appendChild(input);
  }
}

export function renderHistory(container: HTMLElement, history: GuessHistoryEntry[]): void {
  container.replaceChildren();
  for (const entry of history) {
    const row = el("div", "guess-row");
    entry.words.forEach((word, i) => {
      row.appendChild(el("span", `word ${entry.classes[i]}`, word));
    });
    container.prepend(row);
  }
}

export function setStatus(node: HTMLElement, text: string, isError = false): void {
  node.textContent = text;
  node.classList.toggle("error", isError);
}
