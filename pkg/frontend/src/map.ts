// A small self-contained vector canvas: SVG, planar coordinates, a grid
// backdrop, wheel zoom, drag pan, and a two-click-minimum draw tool. No tiles,
// no projections — the services this talks to live in planar space anyway.

import {
  Bounds,
  FeatureCollection,
  Geometry,
  Position,
  collectionBounds,
  emptyBounds,
  geometryBounds,
  boundsValid,
} from "./geo.js";
import { LayerKind, LayerModel, ViewState } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export type DrawMode = "line" | "polygon";

export interface CanvasOptions {
  width: number;
  height: number;
  onViewChange?: (view: ViewState) => void;
  onSketch?: (geometry: Geometry) => void;
}

interface LayerStyle {
  stroke: string;
  fill: string;
}

const LAYER_STYLES: Record<LayerKind, LayerStyle> = {
  sketch: { stroke: "#2b6cb0", fill: "rgba(43, 108, 176, 0.18)" },
  preview: { stroke: "#c05621", fill: "rgba(192, 86, 33, 0.18)" },
  result: { stroke: "#2f855a", fill: "rgba(47, 133, 90, 0.22)" },
};

export class VectorCanvas {
  readonly svg: SVGSVGElement;
  private readonly width: number;
  private readonly height: number;
  private readonly onViewChange?: (view: ViewState) => void;
  private readonly onSketch?: (geometry: Geometry) => void;

  private view: ViewState = { centerX: 0, centerY: 0, scale: 40 };
  private layers: LayerModel[] = [];

  private gridGroup: SVGGElement;
  private layersGroup: SVGGElement;
  private sketchGroup: SVGGElement;

  private drawing: { mode: DrawMode; vertices: Position[] } | null = null;
  private panning: { fromX: number; fromY: number; center: [number, number] } | null = null;

  constructor(container: HTMLElement, options: CanvasOptions) {
    this.width = options.width;
    this.height = options.height;
    this.onViewChange = options.onViewChange;
    this.onSketch = options.onSketch;

    const doc = container.ownerDocument;
    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("width", String(this.width));
    this.svg.setAttribute("height", String(this.height));
    this.svg.setAttribute("viewBox", `0 0 ${this.width} ${this.height}`);
    this.svg.setAttribute("class", "vector-canvas");
    this.svg.setAttribute("data-role", "map");

    this.gridGroup = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    this.layersGroup = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    this.sketchGroup = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    this.gridGroup.setAttribute("data-role", "grid");
    this.layersGroup.setAttribute("data-role", "layers");
    this.sketchGroup.setAttribute("data-role", "sketch");
    this.svg.append(this.gridGroup, this.layersGroup, this.sketchGroup);
    container.appendChild(this.svg);

    this.svg.addEventListener("pointerdown", (ev) => this.pointerDown(ev as PointerEvent));
    this.svg.addEventListener("pointermove", (ev) => this.pointerMove(ev as PointerEvent));
    this.svg.addEventListener("pointerup", () => this.pointerUp());
    this.svg.addEventListener("dblclick", () => this.finishDraw());
    this.svg.addEventListener("wheel", (ev) => this.wheel(ev as WheelEvent));

    this.render();
  }

  // ---- projection ------------------------------------------------------------

  worldToScreen(x: number, y: number): [number, number] {
    return [
      this.width / 2 + (x - this.view.centerX) * this.view.scale,
      this.height / 2 - (y - this.view.centerY) * this.view.scale,
    ];
  }

  screenToWorld(px: number, py: number): [number, number] {
    return [
      this.view.centerX + (px - this.width / 2) / this.view.scale,
      this.view.centerY - (py - this.height / 2) / this.view.scale,
    ];
  }

  // client coordinates → canvas pixels; a detached or unlaid-out SVG reports a
  // zero rect, in which case client coordinates already are canvas pixels
  private clientToCanvas(ev: { clientX: number; clientY: number }): [number, number] {
    const rect = this.svg.getBoundingClientRect();
    if (rect.width > 0 || rect.height > 0) {
      return [ev.clientX - rect.left, ev.clientY - rect.top];
    }
    return [ev.clientX, ev.clientY];
  }

  getView(): ViewState {
    return { ...this.view };
  }

  setView(view: ViewState): void {
    this.view = { ...view };
    this.render();
  }

  zoomToFit(bounds: Bounds, paddingRatio = 0.12): void {
    if (!boundsValid(bounds)) return;
    const spanX = Math.max(bounds.maxX - bounds.minX, 1e-9);
    const spanY = Math.max(bounds.maxY - bounds.minY, 1e-9);
    const scale = Math.min(
      (this.width * (1 - 2 * paddingRatio)) / spanX,
      (this.height * (1 - 2 * paddingRatio)) / spanY,
    );
    this.view = {
      centerX: (bounds.minX + bounds.maxX) / 2,
      centerY: (bounds.minY + bounds.maxY) / 2,
      scale: clampScale(scale),
    };
    this.render();
    this.onViewChange?.(this.getView());
  }

  zoomToLayers(): void {
    const b = emptyBounds();
    for (const layer of this.layers) {
      if (!layer.visible) continue;
      const lb = collectionBounds(layer.features);
      if (lb) {
        b.minX = Math.min(b.minX, lb.minX);
        b.minY = Math.min(b.minY, lb.minY);
        b.maxX = Math.max(b.maxX, lb.maxX);
        b.maxY = Math.max(b.maxY, lb.maxY);
      }
    }
    this.zoomToFit(b);
  }

  // ---- layers ----------------------------------------------------------------

  setLayers(layers: LayerModel[]): void {
    this.layers = layers;
    this.render();
  }

  // ---- drawing ---------------------------------------------------------------

  beginDraw(mode: DrawMode): void {
    this.drawing = { mode, vertices: [] };
    this.panning = null;
    this.renderSketch();
  }

  cancelDraw(): void {
    this.drawing = null;
    this.renderSketch();
  }

  isDrawing(): boolean {
    return this.drawing !== null;
  }

  pendingVertices(): Position[] {
    return this.drawing ? this.drawing.vertices.map((v) => [...v] as Position) : [];
  }

  // Close out the active sketch. A double-click both places a vertex and ends
  // the shape, so consecutive duplicates are collapsed before judging length.
  finishDraw(): void {
    if (!this.drawing) return;
    const { mode, vertices } = this.drawing;
    const distinct: Position[] = [];
    for (const v of vertices) {
      const last = distinct[distinct.length - 1];
      if (!last || last[0] !== v[0] || last[1] !== v[1]) distinct.push(v);
    }
    this.drawing = null;
    this.renderSketch();
    if (mode === "line" && distinct.length >= 2) {
      this.onSketch?.({ type: "LineString", coordinates: distinct });
    } else if (mode === "polygon" && distinct.length >= 3) {
      const first = distinct[0]!;
      this.onSketch?.({ type: "Polygon", coordinates: [[...distinct, [...first] as Position]] });
    }
  }

  // ---- events ----------------------------------------------------------------

  private pointerDown(ev: PointerEvent): void {
    if (ev.button !== undefined && ev.button !== 0) return;
    const [px, py] = this.clientToCanvas(ev);
    if (this.drawing) {
      this.drawing.vertices.push(this.screenToWorld(px, py));
      this.renderSketch();
      return;
    }
    this.panning = { fromX: px, fromY: py, center: [this.view.centerX, this.view.centerY] };
    try {
      this.svg.setPointerCapture?.(ev.pointerId);
    } catch {
      // not every DOM implements pointer capture; panning works regardless
    }
  }

  private pointerMove(ev: PointerEvent): void {
    if (!this.panning) return;
    const [px, py] = this.clientToCanvas(ev);
    this.view = {
      ...this.view,
      centerX: this.panning.center[0] - (px - this.panning.fromX) / this.view.scale,
      centerY: this.panning.center[1] + (py - this.panning.fromY) / this.view.scale,
    };
    this.render();
  }

  private pointerUp(): void {
    if (!this.panning) return;
    this.panning = null;
    this.onViewChange?.(this.getView());
  }

  private wheel(ev: WheelEvent): void {
    ev.preventDefault?.();
    let [px, py] = this.clientToCanvas(ev);
    if (!Number.isFinite(px) || !Number.isFinite(py)) {
      // synthetic wheel events may carry no position; zoom on the center
      [px, py] = [this.width / 2, this.height / 2];
    }
    const [anchorX, anchorY] = this.screenToWorld(px, py);
    const factor = Math.exp(-(ev.deltaY ?? 0) * 0.0015);
    const scale = clampScale(this.view.scale * factor);
    // keep the world point under the cursor fixed while the scale changes
    this.view = {
      scale,
      centerX: anchorX - (px - this.width / 2) / scale,
      centerY: anchorY + (py - this.height / 2) / scale,
    };
    this.render();
    this.onViewChange?.(this.getView());
  }

  // ---- rendering ---------------------------------------------------------------

  private render(): void {
    this.renderGrid();
    this.renderLayers();
    this.renderSketch();
  }

  private renderGrid(): void {
    const doc = this.svg.ownerDocument;
    this.gridGroup.textContent = "";
    const step = gridStep(this.view.scale);
    const [minX, maxY] = this.screenToWorld(0, 0);
    const [maxX, minY] = this.screenToWorld(this.width, this.height);

    for (let x = Math.ceil(minX / step) * step; x <= maxX; x += step) {
      const [px] = this.worldToScreen(x, 0);
      const line = doc.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", fmt(px));
      line.setAttribute("x2", fmt(px));
      line.setAttribute("y1", "0");
      line.setAttribute("y2", String(this.height));
      line.setAttribute("stroke", Math.abs(x) < step / 2 ? "#9aa5b1" : "#e2e8f0");
      this.gridGroup.appendChild(line);
    }
    for (let y = Math.ceil(minY / step) * step; y <= maxY; y += step) {
      const [, py] = this.worldToScreen(0, y);
      const line = doc.createElementNS(SVG_NS, "line");
      line.setAttribute("y1", fmt(py));
      line.setAttribute("y2", fmt(py));
      line.setAttribute("x1", "0");
      line.setAttribute("x2", String(this.width));
      line.setAttribute("stroke", Math.abs(y) < step / 2 ? "#9aa5b1" : "#e2e8f0");
      this.gridGroup.appendChild(line);
    }

    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "6");
    label.setAttribute("y", String(this.height - 6));
    label.setAttribute("class", "grid-step");
    label.textContent = `grid ${step}`;
    this.gridGroup.appendChild(label);
  }

  private renderLayers(): void {
    this.layersGroup.textContent = "";
    for (const layer of this.layers) {
      if (!layer.visible) continue;
      const group = this.svg.ownerDocument.createElementNS(SVG_NS, "g") as SVGGElement;
      group.setAttribute("data-layer", layer.id);
      const style = LAYER_STYLES[layer.kind];
      for (const feature of layer.features.features) {
        if (!feature.geometry) continue;
        this.appendGeometry(group, feature.geometry, style);
      }
      this.layersGroup.appendChild(group);
    }
  }

  private renderSketch(): void {
    this.sketchGroup.textContent = "";
    if (!this.drawing) return;
    const doc = this.svg.ownerDocument;
    const pts = this.drawing.vertices.map(([x, y]) => this.worldToScreen(x, y));
    if (pts.length >= 2) {
      const line = doc.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" "));
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", LAYER_STYLES.sketch.stroke);
      line.setAttribute("stroke-dasharray", "5 4");
      this.sketchGroup.appendChild(line);
    }
    for (const [x, y] of pts) {
      const dot = doc.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", fmt(x));
      dot.setAttribute("cy", fmt(y));
      dot.setAttribute("r", "3.5");
      dot.setAttribute("fill", LAYER_STYLES.sketch.stroke);
      this.sketchGroup.appendChild(dot);
    }
  }

  private appendGeometry(group: SVGGElement, geometry: Geometry, style: LayerStyle): void {
    const doc = this.svg.ownerDocument;
    const project = (ring: Position[]) =>
      ring.map(([x, y]) => this.worldToScreen(x, y).map(fmt).join(",")).join(" ");

    switch (geometry.type) {
      case "Point":
        this.appendPoint(group, geometry.coordinates, style);
        break;
      case "MultiPoint":
        for (const p of geometry.coordinates) this.appendPoint(group, p, style);
        break;
      case "LineString":
      case "MultiLineString": {
        const lines =
          geometry.type === "LineString" ? [geometry.coordinates] : geometry.coordinates;
        for (const coords of lines) {
          const node = doc.createElementNS(SVG_NS, "polyline");
          node.setAttribute("points", project(coords));
          node.setAttribute("fill", "none");
          node.setAttribute("stroke", style.stroke);
          node.setAttribute("stroke-width", "2");
          group.appendChild(node);
        }
        break;
      }
      case "Polygon":
      case "MultiPolygon": {
        const polygons =
          geometry.type === "Polygon" ? [geometry.coordinates] : geometry.coordinates;
        for (const rings of polygons) {
          const d = rings
            .map((ring) => {
              const pts = ring.map(([x, y]) => this.worldToScreen(x, y));
              return (
                "M" +
                pts.map(([x, y]) => `${fmt(x)} ${fmt(y)}`).join("L") +
                "Z"
              );
            })
            .join(" ");
          const node = doc.createElementNS(SVG_NS, "path");
          node.setAttribute("d", d);
          node.setAttribute("data-shape", "polygon");
          node.setAttribute("fill", style.fill);
          node.setAttribute("fill-rule", "evenodd");
          node.setAttribute("stroke", style.stroke);
          node.setAttribute("stroke-width", "2");
          group.appendChild(node);
        }
        break;
      }
    }
  }

  private appendPoint(group: SVGGElement, position: Position, style: LayerStyle): void {
    const [px, py] = this.worldToScreen(position[0], position[1]);
    const dot = this.svg.ownerDocument.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", fmt(px));
    dot.setAttribute("cy", fmt(py));
    dot.setAttribute("r", "4");
    dot.setAttribute("data-shape", "point");
    dot.setAttribute("fill", style.stroke);
    group.appendChild(dot);
  }
}

function clampScale(scale: number): number {
  return Math.min(Math.max(scale, 1e-6), 1e6);
}

// 1/2/5 ladder, aiming for grid cells around 80 px
function gridStep(scale: number): number {
  const target = 80 / scale;
  const power = Math.pow(10, Math.floor(Math.log10(target)));
  for (const m of [1, 2, 5]) {
    if (m * power >= target) return m * power;
  }
  return 10 * power;
}

function fmt(n: number): string {
  return Number.isInteger(n) ? String(n) : n.toFixed(2);
}

export function boundsOfGeometry(geometry: Geometry): Bounds {
  return geometryBounds(geometry);
}
