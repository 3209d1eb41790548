// Local drawing editor model: pure functions over an immutable draft.
// Geometry is normalized to the unit square (the canvas element renders
// it at 2:1); every edit clamps back inside, and serialization emits the
// canonical schema the server validates.

import type { DrawingPayload, PlacementPayload } from "./protocol.js";

export interface CanvasModel {
  placements: PlacementPayload[];
  selected: number | null;
}

export const MIN_SCALE = 0.125;
export const MAX_SCALE = 8.0;

export function emptyCanvas(): CanvasModel {
  return { placements: [], selected: null };
}

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

function normalizeRotation(deg: number): number {
  return ((deg % 360) + 360) % 360;
}

function withPlacement(
  model: CanvasModel,
  index: number,
  update: Partial<PlacementPayload>,
): CanvasModel {
  const placements = model.placements.map((p, i) =>
    i === index ? { ...p, ...update } : p,
  );
  return { ...model, placements };
}

export function place(model: CanvasModel, iconId: string, x: number, y: number): CanvasModel {
  const placement: PlacementPayload = {
    icon_id: iconId,
    x: clamp01(x),
    y: clamp01(y),
    scale: 1.0,
    rotation: 0.0,
    flipped: false,
  };
  return {
    placements: [...model.placements, placement],
    selected: model.placements.length,
  };
}

export function drag(model: CanvasModel, index: number, x: number, y: number): CanvasModel {
  return withPlacement(model, index, { x: clamp01(x), y: clamp01(y) });
}

export function resize(model: CanvasModel, index: number, factor: number): CanvasModel {
  const current = model.placements[index];
  const scale = Math.min(MAX_SCALE, Math.max(MIN_SCALE, current.scale * factor));
  return withPlacement(model, index, { scale });
}

export function rotate(model: CanvasModel, index: number, deltaDeg: number): CanvasModel {
  const current = model.placements[index];
  return withPlacement(model, index, {
    rotation: normalizeRotation(current.rotation + deltaDeg),
  });
}

export function flip(model: CanvasModel, index: number): CanvasModel {
  const current = model.placements[index];
  return withPlacement(model, index, { flipped: !current.flipped });
}

export function duplicate(model: CanvasModel, index: number): CanvasModel {
  const source = model.placements[index];
  const copy = {
    ...source,
    x: clamp01(source.x + 0.04),
    y: clamp01(source.y + 0.04),
  };
  return {
    placements: [...model.placements, copy],
    selected: model.placements.length,
  };
}

export function remove(model: CanvasModel, index: number): CanvasModel {
  const placements = model.placements.filter((_, i) => i !== index);
  return { placements, selected: null };
}

export function select(model: CanvasModel, index: number | null): CanvasModel {
  return { ...model, selected: index };
}

export function canSubmit(model: CanvasModel): boolean {
  return model.placements.length > 0;
}

export function serializeDrawing(model: CanvasModel): DrawingPayload {
  return { placements: model.placements.map((p) => ({ ...p })) };
}
