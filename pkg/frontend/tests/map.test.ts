import { beforeEach, describe, expect, it } from "vitest";
import { Geometry } from "../src/geo.js";
import { VectorCanvas } from "../src/map.js";
import { LayerModel } from "../src/state.js";

// happy-dom reports a zero-sized rect for unlaid-out SVG, so client
// coordinates in these tests are canvas pixels — the canvas's documented
// fallback.
function pointer(canvas: VectorCanvas, type: string, x: number, y: number): void {
  canvas.svg.dispatchEvent(new MouseEvent(type, { clientX: x, clientY: y, button: 0 }));
}

function makeCanvas(onSketch?: (g: Geometry) => void): VectorCanvas {
  const host = document.createElement("div");
  document.body.appendChild(host);
  return new VectorCanvas(host, { width: 400, height: 300, onSketch });
}

describe("projection", () => {
  let canvas: VectorCanvas;
  beforeEach(() => {
    canvas = makeCanvas();
    canvas.setView({ centerX: 5, centerY: 5, scale: 20 });
  });

  it("puts the view center mid-canvas and flips the y axis", () => {
    expect(canvas.worldToScreen(5, 5)).toEqual([200, 150]);
    const [, northY] = canvas.worldToScreen(5, 6);
    expect(northY).toBeLessThan(150);
  });

  it("round-trips world through screen and back", () => {
    for (const [x, y] of [[0, 0], [5, 5], [-3.25, 7.5], [12.125, -2]] as const) {
      const [px, py] = canvas.worldToScreen(x, y);
      const [bx, by] = canvas.screenToWorld(px, py);
      expect(bx).toBeCloseTo(x, 9);
      expect(by).toBeCloseTo(y, 9);
    }
  });

  it("zoomToFit centers the bounds and fills most of the viewport", () => {
    canvas.zoomToFit({ minX: 0, minY: 0, maxX: 10, maxY: 10 });
    const view = canvas.getView();
    expect(view.centerX).toBeCloseTo(5, 9);
    expect(view.centerY).toBeCloseTo(5, 9);
    // limiting dimension is height: 300px * (1 - 2*0.12) / 10 units
    expect(view.scale).toBeCloseTo(300 * 0.76 / 10, 9);
  });
});

describe("draw tool", () => {
  it("collects clicked vertices into a LineString on double-click", () => {
    let sketched: Geometry | null = null;
    const canvas = makeCanvas((g) => (sketched = g));
    canvas.setView({ centerX: 0, centerY: 0, scale: 40 });
    canvas.beginDraw("line");
    expect(canvas.isDrawing()).toBe(true);

    pointer(canvas, "pointerdown", 200, 150); // world (0, 0)
    pointer(canvas, "pointerdown", 280, 150); // world (2, 0)
    pointer(canvas, "pointerdown", 280, 110); // world (2, 1)
    expect(canvas.pendingVertices()).toEqual([[0, 0], [2, 0], [2, 1]]);

    canvas.svg.dispatchEvent(new MouseEvent("dblclick"));
    expect(canvas.isDrawing()).toBe(false);
    expect(sketched).toEqual({ type: "LineString", coordinates: [[0, 0], [2, 0], [2, 1]] });
  });

  it("collapses the double-click's duplicate vertex and closes polygons", () => {
    let sketched: Geometry | null = null;
    const canvas = makeCanvas((g) => (sketched = g));
    canvas.setView({ centerX: 0, centerY: 0, scale: 40 });
    canvas.beginDraw("polygon");

    pointer(canvas, "pointerdown", 200, 150); // (0, 0)
    pointer(canvas, "pointerdown", 240, 150); // (1, 0)
    pointer(canvas, "pointerdown", 240, 110); // (1, 1)
    pointer(canvas, "pointerdown", 240, 110); // double-click's extra press
    canvas.svg.dispatchEvent(new MouseEvent("dblclick"));

    expect(sketched).toEqual({
      type: "Polygon",
      coordinates: [[[0, 0], [1, 0], [1, 1], [0, 0]]],
    });
  });

  it("needs two distinct vertices for a line and three for a polygon", () => {
    let sketched: Geometry | null = null;
    const canvas = makeCanvas((g) => (sketched = g));
    canvas.beginDraw("line");
    pointer(canvas, "pointerdown", 100, 100);
    pointer(canvas, "pointerdown", 100, 100);
    canvas.svg.dispatchEvent(new MouseEvent("dblclick"));
    expect(sketched).toBeNull();
    expect(canvas.isDrawing()).toBe(false);
  });

  it("cancelDraw throws the pending vertices away", () => {
    let sketched: Geometry | null = null;
    const canvas = makeCanvas((g) => (sketched = g));
    canvas.beginDraw("line");
    pointer(canvas, "pointerdown", 100, 100);
    canvas.cancelDraw();
    expect(canvas.pendingVertices()).toEqual([]);
    canvas.svg.dispatchEvent(new MouseEvent("dblclick"));
    expect(sketched).toBeNull();
  });
});

describe("pan and zoom", () => {
  it("drags the view by the pointer delta", () => {
    const canvas = makeCanvas();
    canvas.setView({ centerX: 0, centerY: 0, scale: 40 });
    pointer(canvas, "pointerdown", 200, 150);
    pointer(canvas, "pointermove", 240, 130); // 40px east, 20px north on screen
    pointer(canvas, "pointerup", 240, 130);
    const view = canvas.getView();
    expect(view.centerX).toBeCloseTo(-1, 9); // content follows the pointer
    expect(view.centerY).toBeCloseTo(-0.5, 9);
  });

  it("does not pan while a sketch is active", () => {
    const canvas = makeCanvas();
    canvas.setView({ centerX: 0, centerY: 0, scale: 40 });
    canvas.beginDraw("line");
    pointer(canvas, "pointerdown", 100, 100);
    pointer(canvas, "pointermove", 300, 250);
    expect(canvas.getView()).toEqual({ centerX: 0, centerY: 0, scale: 40 });
  });

  it("wheel zoom keeps the world point under the cursor fixed", () => {
    const canvas = makeCanvas();
    canvas.setView({ centerX: 3, centerY: 4, scale: 40 });
    const [ax, ay] = canvas.screenToWorld(280, 110);
    const ev = new MouseEvent("wheel", { clientX: 280, clientY: 110 });
    Object.defineProperty(ev, "deltaY", { value: -200 });
    canvas.svg.dispatchEvent(ev);
    const view = canvas.getView();
    expect(view.scale).toBeGreaterThan(40);
    const [bx, by] = canvas.screenToWorld(280, 110);
    expect(bx).toBeCloseTo(ax, 9);
    expect(by).toBeCloseTo(ay, 9);
  });
});

describe("layer rendering", () => {
  function layer(id: string, geometry: Geometry, visible = true): LayerModel {
    return {
      id,
      name: id,
      kind: "result",
      visible,
      features: {
        type: "FeatureCollection",
        features: [{ type: "Feature", geometry, properties: {} }],
      },
    };
  }

  it("draws polygons, lines and points into per-layer groups", () => {
    const canvas = makeCanvas();
    canvas.setLayers([
      layer("a", { type: "Polygon", coordinates: [[[0, 0], [1, 0], [1, 1], [0, 0]]] }),
      layer("b", { type: "LineString", coordinates: [[0, 0], [5, 5]] }),
      layer("c", { type: "Point", coordinates: [2, 2] }),
    ]);
    const svg = canvas.svg;
    expect(svg.querySelectorAll("[data-layer=a] [data-shape=polygon]").length).toBe(1);
    expect(svg.querySelectorAll("[data-layer=b] polyline").length).toBe(1);
    expect(svg.querySelectorAll("[data-layer=c] [data-shape=point]").length).toBe(1);
  });

  it("skips hidden layers and multi-part geometries keep their part count", () => {
    const canvas = makeCanvas();
    canvas.setLayers([
      layer("hidden", { type: "Point", coordinates: [0, 0] }, false),
      layer("multi", {
        type: "MultiPolygon",
        coordinates: [
          [[[0, 0], [1, 0], [1, 1], [0, 0]]],
          [[[3, 3], [4, 3], [4, 4], [3, 3]]],
        ],
      }),
    ]);
    expect(canvas.svg.querySelector("[data-layer=hidden]")).toBeNull();
    expect(canvas.svg.querySelectorAll("[data-layer=multi] [data-shape=polygon]").length).toBe(2);
  });

  it("keeps a grid backdrop underneath", () => {
    const canvas = makeCanvas();
    const grid = canvas.svg.querySelector("[data-role=grid]")!;
    expect(grid.querySelectorAll("line").length).toBeGreaterThan(4);
  });
});
