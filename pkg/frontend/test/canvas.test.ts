import { describe, expect, it } from "vitest";

import * as canvas from "../src/canvas.js";
import { loadFixture } from "./fixtures.js";

describe("canvas editing", () => {
  it("place then delete leaves an empty, unsubmittable drawing", () => {
    let m = canvas.emptyCanvas();
    m = canvas.place(m, "dog", 0.5, 0.5);
    expect(canvas.canSubmit(m)).toBe(true);
    m = canvas.remove(m, 0);
    expect(m.placements).toHaveLength(0);
    expect(canvas.canSubmit(m)).toBe(false);
  });

  it("duplicate yields two placements differing only in position", () => {
    let m = canvas.place(canvas.emptyCanvas(), "dog", 0.2, 0.3);
    m = canvas.rotate(m, 0, 90);
    m = canvas.flip(m, 0);
    m = canvas.duplicate(m, 0);
    expect(m.placements).toHaveLength(2);
    const [a, b] = m.placements;
    expect(b.icon_id).toBe(a.icon_id);
    expect(b.scale).toBe(a.scale);
    expect(b.rotation).toBe(a.rotation);
    expect(b.flipped).toBe(a.flipped);
    expect(b.x).not.toBe(a.x);
  });

  it("edits outside the canvas clamp to the unit square", () => {
    let m = canvas.place(canvas.emptyCanvas(), "dog", 1.7, -0.4);
    expect(m.placements[0].x).toBe(1);
    expect(m.placements[0].y).toBe(0);
    m = canvas.drag(m, 0, -3, 2);
    expect(m.placements[0]).toMatchObject({ x: 0, y: 1 });
  });

  it("resize clamps to the supported scale range", () => {
    let m = canvas.place(canvas.emptyCanvas(), "dog", 0.5, 0.5);
    for (let i = 0; i < 40; i++) m = canvas.resize(m, 0, 2);
    expect(m.placements[0].scale).toBe(canvas.MAX_SCALE);
    for (let i = 0; i < 80; i++) m = canvas.resize(m, 0, 0.5);
    expect(m.placements[0].scale).toBe(canvas.MIN_SCALE);
  });

  it("rotation stays in [0, 360)", () => {
    let m = canvas.place(canvas.emptyCanvas(), "dog", 0.5, 0.5);
    m = canvas.rotate(m, 0, -45);
    expect(m.placements[0].rotation).toBe(315);
    m = canvas.rotate(m, 0, 90);
    expect(m.placements[0].rotation).toBe(45);
  });

  it("serializes exactly the drawing the server fixture accepted and echoed", () => {
    const fixture = loadFixture();
    const submitted = fixture.exchanges[3].inbound as {
      drawing: { placements: canvas.CanvasModel["placements"] };
    };
    let m = canvas.emptyCanvas();
    m = canvas.place(m, "dog", 0.3, 0.5);
    m = canvas.place(m, "tree", 0.7, 0.5);
    m = canvas.resize(m, 1, 2.0);
    expect(canvas.serializeDrawing(m)).toEqual(submitted.drawing);

    // the server broadcast the identical placements back (round_index added)
    const echoed = fixture.exchanges[3].outbound[0].payload as {
      type: string;
      drawing: { placements: unknown; round_index: number };
    };
    expect(echoed.type).toBe("submit_drawing");
    expect(echoed.drawing.placements).toEqual(submitted.drawing.placements);
    expect(echoed.drawing.round_index).toBe(0);
  });
});
