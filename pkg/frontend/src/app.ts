// The shell: one AppState value, one render pass over it, and a handful of
// async entry points that talk to the bridge. Field keystrokes take a light
// update path (problem note, run button, stage chip) so the form is not
// rebuilt under the user's cursor; everything structural re-renders wholesale.

import {
  BridgeClient,
  BridgeError,
  ExecuteOutput,
  ProcessDetail,
} from "./api.js";
import {
  attachViolations,
  buildFields,
  executeInputs,
  fieldProblem,
  filterFamilyProblem,
  formProblems,
  pickFromRows,
  renderForm,
} from "./forms.js";
import { Geometry, asCollection } from "./geo.js";
import { DrawMode, VectorCanvas } from "./map.js";
import {
  AppState,
  FieldState,
  LayerModel,
  ResultPanel,
  initialState,
  transition,
} from "./state.js";

export interface AppOptions {
  bridgeBase?: string;
  mapWidth?: number;
  mapHeight?: number;
}

const LIGHT_PATCH_KEYS = new Set(["text", "corners", "problem"]);

export class App {
  state: AppState = initialState();
  readonly client: BridgeClient;
  readonly canvas: VectorCanvas;

  private root: HTMLElement;
  private doc: Document;
  private pendingSketchInput: string | null = null;
  private runCounter = 0;
  private inFlight = 0;

  private urlInput!: HTMLInputElement;
  private defaultsSelect!: HTMLSelectElement;
  private bannerEl!: HTMLElement;
  private servicePanel!: HTMLElement;
  private processSelect!: HTMLSelectElement;
  private formPanel!: HTMLElement;
  private formEl!: HTMLElement;
  private runButton!: HTMLButtonElement;
  private stageChip!: HTMLElement;
  private resultsPanel!: HTMLElement;
  private layersList!: HTMLElement;

  constructor(root: HTMLElement, options: AppOptions = {}) {
    this.root = root;
    this.doc = root.ownerDocument;
    this.client = new BridgeClient(options.bridgeBase ?? "");
    this.buildSkeleton();

    const mapPane = this.root.querySelector<HTMLElement>("[data-role=map-pane]")!;
    this.canvas = new VectorCanvas(mapPane, {
      width: options.mapWidth ?? 800,
      height: options.mapHeight ?? 600,
      onViewChange: (view) => {
        this.state.view = view;
      },
      onSketch: (geometry) => this.acceptSketch(geometry),
    });

    this.track(this.loadDefaults());
    this.renderAll();
  }

  // resolves once every tracked bridge call has finished — scripted tests
  // click a control, then await settled()
  async settled(): Promise<void> {
    while (this.inFlight > 0) {
      await new Promise((r) => setTimeout(r, 10));
    }
  }

  private track<T>(work: Promise<T>): Promise<T> {
    this.inFlight += 1;
    return work.finally(() => {
      this.inFlight -= 1;
    });
  }

  // ---- async entry points ------------------------------------------------------

  async loadDefaults(): Promise<void> {
    try {
      this.state.defaults = await this.client.defaults();
    } catch {
      this.state.defaults = []; // a bare URL field still works
    }
    this.renderAll();
  }

  // On failure nothing moves: the old service, form and stage stay on screen
  // and the problem is shown inline next to the URL field.
  async connect(): Promise<void> {
    const url = this.state.endpointUrl.trim();
    if (!url) {
      this.state.banner = "enter a service URL first";
      this.renderAll();
      return;
    }
    try {
      const summary = await this.track(this.client.capabilities(url));
      let stage = transition(this.state.stage, { kind: "editEndpoint" });
      stage = transition(stage, { kind: "capabilitiesLoaded" });
      this.state = {
        ...this.state,
        stage,
        connectedUrl: url,
        service: summary,
        banner: null,
        selectedProcess: null,
        detail: null,
        fields: [],
        results: null,
        layers: this.state.layers.filter((l) => l.kind === "result"),
      };
      this.canvas.cancelDraw();
    } catch (err) {
      this.state.banner = describeError(err);
    }
    this.renderAll();
  }

  async choose(processId: string): Promise<void> {
    if (!this.state.service || !this.state.connectedUrl || !processId) return;
    try {
      const detail = await this.track(this.client.process(this.state.connectedUrl, processId));
      this.state = {
        ...this.state,
        stage: transition(this.state.stage, { kind: "processSelected" }),
        selectedProcess: processId,
        detail,
        fields: buildFields(detail),
        results: null,
        banner: null,
        layers: this.state.layers.filter((l) => l.kind === "result"),
      };
      this.canvas.cancelDraw();
      this.pendingSketchInput = null;
    } catch (err) {
      this.state.banner = describeError(err);
    }
    this.renderAll();
  }

  async run(): Promise<void> {
    const { detail, fields, connectedUrl, selectedProcess } = this.state;
    if (!detail || !connectedUrl || !selectedProcess) return;

    const problems = formProblems(detail, fields);
    if (problems.length > 0) {
      // the run button is only live in ready, so normally unreachable; keep
      // the guard anyway and light the fields up
      this.state.fields = fields.map((f) => ({
        ...f,
        problem: problems.find((p) => p.input === f.inputId)?.problem ?? null,
      }));
      this.renderAll();
      return;
    }

    try {
      const result = await this.track(
        this.client.execute({
          url: connectedUrl,
          process: selectedProcess,
          inputs: executeInputs(detail, fields),
        }),
      );
      this.acceptOutputs(detail, result.outputs);
      this.state.stage = transition(this.state.stage, {
        kind: "resultAccepted",
        succeeded: true,
      });
    } catch (err) {
      if (err instanceof BridgeError && err.body.violations) {
        // rejected before anything ran: not a result, so the stage holds
        this.state.fields = attachViolations(this.state.fields, err.body.violations);
        this.state.results = emptyResults({ violations: err.body.violations });
      } else if (err instanceof BridgeError && err.body.remote) {
        this.state.results = emptyResults({ remote: err.body.remote });
        this.state.stage = transition(this.state.stage, {
          kind: "resultAccepted",
          succeeded: false,
        });
      } else {
        this.state.results = emptyResults({});
        this.state.banner = describeError(err);
      }
    }
    this.renderAll();
  }

  async loadWfsLayers(inputId: string): Promise<void> {
    const field = this.findField(inputId);
    if (!field) return;
    const url = field.wfs.url.trim();
    if (!url) {
      this.patchField(inputId, { wfs: { ...field.wfs, error: "enter a feature service URL" } });
      return;
    }
    try {
      const layers = await this.track(this.client.wfsLayers(url));
      const typeName = layers.some((l) => l.name === field.wfs.typeName)
        ? field.wfs.typeName
        : (layers[0]?.name ?? "");
      this.patchField(inputId, { wfs: { ...field.wfs, layers, typeName, error: null } });
    } catch (err) {
      this.patchField(inputId, { wfs: { ...field.wfs, error: describeError(err) } });
    }
  }

  async previewWfs(inputId: string): Promise<void> {
    const field = this.findField(inputId);
    if (!field) return;
    const conflict = filterFamilyProblem(field.wfs.rows);
    if (conflict || !field.wfs.typeName || !field.wfs.url.trim()) {
      this.patchField(inputId, {
        wfs: { ...field.wfs, error: conflict ?? "pick a layer first" },
      });
      return;
    }
    const pick = pickFromRows(field.wfs.url.trim(), field.wfs.typeName, field.wfs.rows);
    try {
      const collection = await this.track(
        this.client.wfsFeatures({
          url: pick.url,
          typeName: pick.typeName,
          maxFeatures: pick.maxFeatures,
          featureIds: pick.featureIds,
          attributeFilters: pick.attributes?.map(([property, value]) => ({ property, value })),
        }),
      );
      this.upsertLayer({
        id: `preview:${inputId}`,
        name: `${pick.typeName} preview`,
        kind: "preview",
        features: collection,
        visible: true,
      });
      this.patchField(inputId, {
        wfs: { ...field.wfs, previewCount: collection.features.length, error: null },
      });
      this.canvas.zoomToLayers();
    } catch (err) {
      this.patchField(inputId, { wfs: { ...field.wfs, error: describeError(err) } });
    }
  }

  // ---- field edits ---------------------------------------------------------------

  // Every field edit lands here. After a completed or failed run an edit
  // means "same process again, new inputs": rewind to the retained
  // capabilities snapshot, re-select, and carry the draft over — then let the
  // usual recompute decide between described and ready.
  patchField(inputId: string, patch: Partial<FieldState>): void {
    let rewound = false;
    if (this.state.stage === "completed" || this.state.stage === "failed") {
      this.state.stage = transition(this.state.stage, { kind: "processSelected" });
      this.state.results = null;
      rewound = true;
    }
    this.state.fields = this.state.fields.map((f) =>
      f.inputId === inputId ? { ...f, ...patch } : f,
    );
    const descriptor = this.state.detail?.inputs.find((d) => d.id === inputId);
    if (descriptor && typeof patch.problem !== "string") {
      // live verdict on every edit; an explicit message in the patch wins
      const field = this.findField(inputId)!;
      const live = fieldProblem(descriptor, field);
      if (live !== field.problem) {
        this.state.fields = this.state.fields.map((f) =>
          f.inputId === inputId ? { ...f, problem: live } : f,
        );
      }
    }
    if (this.state.detail) {
      const satisfied = formProblems(this.state.detail, this.state.fields).length === 0;
      this.state.stage = transition(this.state.stage, { kind: "bindingsChanged", satisfied });
    }
    if (patch.sketch !== undefined || patch.source !== undefined) {
      this.syncSketchLayer(inputId);
    }
    const structural = Object.keys(patch).some((k) => !LIGHT_PATCH_KEYS.has(k));
    if (structural || rewound) {
      // the rewind clears the results panel, which the light path never touches
      this.renderAll();
    } else {
      this.renderLight(inputId);
    }
  }

  requestDraw(inputId: string, mode: DrawMode): void {
    this.pendingSketchInput = inputId;
    this.canvas.beginDraw(mode);
    this.renderAll();
  }

  private acceptSketch(geometry: Geometry): void {
    const inputId = this.pendingSketchInput;
    this.pendingSketchInput = null;
    if (!inputId) return;
    this.patchField(inputId, { sketch: geometry, source: "sketch", problem: null });
  }

  private syncSketchLayer(inputId: string): void {
    const field = this.findField(inputId);
    const id = `sketch:${inputId}`;
    if (field && field.source === "sketch" && field.sketch) {
      this.upsertLayer({
        id,
        name: `${inputId} sketch`,
        kind: "sketch",
        features: asCollection(field.sketch),
        visible: true,
      });
    } else {
      this.state.layers = this.state.layers.filter((l) => l.id !== id);
    }
  }

  private findField(inputId: string): FieldState | undefined {
    return this.state.fields.find((f) => f.inputId === inputId);
  }

  private upsertLayer(layer: LayerModel): void {
    const existing = this.state.layers.findIndex((l) => l.id === layer.id);
    if (existing >= 0) {
      this.state.layers = this.state.layers.map((l, i) => (i === existing ? layer : l));
    } else {
      this.state.layers = [...this.state.layers, layer];
    }
  }

  // ---- results -------------------------------------------------------------------

  private acceptOutputs(detail: ProcessDetail, outputs: ExecuteOutput[]): void {
    this.runCounter += 1;
    const results = emptyResults({});
    let addedLayer = false;

    for (const output of outputs) {
      if (output.geojson !== undefined) {
        const collection = asCollection(output.geojson);
        this.upsertLayer({
          id: `result:${this.runCounter}:${output.id}`,
          name: `${detail.id} ${output.id} #${this.runCounter}`,
          kind: "result",
          features: collection,
          visible: true,
        });
        addedLayer = true;
        results.downloads.push({
          filename: `${detail.id}-${output.id}.geojson`,
          text: JSON.stringify(output.geojson),
        });
      } else if (output.literal !== undefined) {
        results.literals.push({ id: output.id, value: output.literal });
        const point = coordinatePair(output.literal);
        if (point) {
          // a bare coordinate pair is worth a marker as well as a label
          this.upsertLayer({
            id: `result:${this.runCounter}:${output.id}`,
            name: `${detail.id} ${output.id} #${this.runCounter}`,
            kind: "result",
            features: asCollection({ type: "Point", coordinates: point }),
            visible: true,
          });
          addedLayer = true;
        }
      } else if (output.bbox !== undefined) {
        const [minX, minY, maxX, maxY] = output.bbox;
        this.upsertLayer({
          id: `result:${this.runCounter}:${output.id}`,
          name: `${detail.id} ${output.id} #${this.runCounter}`,
          kind: "result",
          features: asCollection({
            type: "Polygon",
            coordinates: [
              [
                [minX, minY],
                [maxX, minY],
                [maxX, maxY],
                [minX, maxY],
                [minX, minY],
              ],
            ],
          }),
          visible: true,
        });
        addedLayer = true;
        results.literals.push({ id: output.id, value: output.bbox.join(", ") });
      } else if (output.reference) {
        results.references.push({ id: output.id, href: output.reference.href });
      } else if (output.rawBase64 !== undefined) {
        results.literals.push({
          id: output.id,
          value: `${output.mime ?? "binary"}, ${output.rawBase64.length} base64 chars`,
        });
      }
    }

    this.state.results = results;
    if (addedLayer) this.canvas.zoomToLayers();
  }

  // ---- rendering -----------------------------------------------------------------

  private buildSkeleton(): void {
    const doc = this.doc;
    this.root.textContent = "";
    this.root.classList.add("geobind-app");

    const topbar = div(doc, "topbar");
    this.urlInput = doc.createElement("input");
    this.urlInput.type = "text";
    this.urlInput.placeholder = "process service URL";
    this.urlInput.dataset.role = "endpoint-url";
    this.urlInput.addEventListener("input", () => {
      this.state.endpointUrl = this.urlInput.value;
    });
    this.defaultsSelect = doc.createElement("select");
    this.defaultsSelect.dataset.role = "endpoint-defaults";
    this.defaultsSelect.addEventListener("change", () => {
      if (this.defaultsSelect.value) {
        this.state.endpointUrl = this.defaultsSelect.value;
        this.urlInput.value = this.defaultsSelect.value;
      }
    });
    const connectBtn = doc.createElement("button");
    connectBtn.textContent = "Connect";
    connectBtn.dataset.role = "connect";
    connectBtn.addEventListener("click", () => void this.track(this.connect()));
    this.bannerEl = div(doc, "banner");
    this.bannerEl.dataset.role = "banner";
    topbar.append(this.urlInput, this.defaultsSelect, connectBtn, this.bannerEl);

    const columns = div(doc, "columns");
    const sidebar = div(doc, "sidebar");

    this.servicePanel = div(doc, "panel service-panel");
    this.servicePanel.dataset.role = "service-panel";

    this.formPanel = div(doc, "panel form-panel");
    this.formPanel.dataset.role = "form-panel";
    this.formEl = div(doc, "form-fields");
    this.formEl.dataset.role = "form";
    this.runButton = doc.createElement("button");
    this.runButton.textContent = "Run process";
    this.runButton.dataset.role = "execute";
    this.runButton.addEventListener("click", () => void this.run());
    this.stageChip = doc.createElement("span");
    this.stageChip.className = "stage-chip";
    this.stageChip.dataset.role = "stage-chip";

    this.resultsPanel = div(doc, "panel results-panel");
    this.resultsPanel.dataset.role = "results-panel";

    const layersPanel = div(doc, "panel layers-panel");
    layersPanel.appendChild(heading(doc, "Layers"));
    this.layersList = div(doc, "layer-rows");
    this.layersList.dataset.role = "layer-list";
    const fitBtn = doc.createElement("button");
    fitBtn.textContent = "Zoom to data";
    fitBtn.dataset.role = "zoom-fit";
    fitBtn.addEventListener("click", () => this.canvas.zoomToLayers());
    layersPanel.append(this.layersList, fitBtn);

    sidebar.append(this.servicePanel, this.formPanel, this.resultsPanel, layersPanel);
    const mapPane = div(doc, "map-pane");
    mapPane.dataset.role = "map-pane";
    columns.append(sidebar, mapPane);
    this.root.append(topbar, columns);
  }

  renderAll(): void {
    const doc = this.doc;
    const { state } = this;
    this.root.dataset.stage = state.stage;

    if (doc.activeElement !== this.urlInput) this.urlInput.value = state.endpointUrl;
    this.bannerEl.textContent = state.banner ?? "";
    this.bannerEl.hidden = state.banner === null;

    this.defaultsSelect.textContent = "";
    const blank = doc.createElement("option");
    blank.value = "";
    blank.textContent = state.defaults.length ? "— known services —" : "— no known services —";
    this.defaultsSelect.appendChild(blank);
    for (const endpoint of state.defaults) {
      const option = doc.createElement("option");
      option.value = endpoint.url;
      option.textContent = endpoint.name;
      this.defaultsSelect.appendChild(option);
    }

    this.renderServicePanel();
    this.renderFormPanel();
    this.renderResultsPanel();
    this.renderLayersPanel();
    this.canvas.setLayers(state.layers);
  }

  // the cheap path for keystrokes: no DOM rebuilds, just the verdict bits
  private renderLight(inputId: string): void {
    this.root.dataset.stage = this.state.stage;
    this.stageChip.textContent = this.state.stage;
    this.runButton.disabled = this.state.stage !== "ready";
    const field = this.findField(inputId);
    const note = this.formEl.querySelector<HTMLElement>(
      `[data-input="${cssEscape(inputId)}"] [data-role=problem]`,
    );
    if (note && field) {
      note.textContent = field.problem ?? "";
      note.hidden = field.problem === null;
    }
  }

  private renderServicePanel(): void {
    const doc = this.doc;
    const { service } = this.state;
    this.servicePanel.textContent = "";
    this.servicePanel.hidden = service === null;
    if (!service) return;

    this.servicePanel.appendChild(heading(doc, service.title || "(untitled service)"));
    if (service.abstract) {
      this.servicePanel.appendChild(div(doc, "service-abstract", service.abstract));
    }
    const meta = div(
      doc,
      "service-meta",
      `WPS ${service.version} · ${service.processCount} processes`,
    );
    meta.dataset.role = "service-meta";
    this.servicePanel.appendChild(meta);

    const select = doc.createElement("select");
    select.dataset.role = "process-select";
    const blank = doc.createElement("option");
    blank.value = "";
    blank.textContent = "— pick a process —";
    select.appendChild(blank);
    for (const brief of service.processes) {
      const option = doc.createElement("option");
      option.value = brief.id;
      option.textContent = brief.title ? `${brief.id} — ${brief.title}` : brief.id;
      select.appendChild(option);
    }
    select.value = this.state.selectedProcess ?? "";
    select.addEventListener("change", () => void this.track(this.choose(select.value)));
    this.servicePanel.appendChild(select);
  }

  private renderFormPanel(): void {
    const doc = this.doc;
    const { detail, fields, stage } = this.state;
    this.formPanel.textContent = "";
    this.formPanel.hidden = detail === null;
    if (!detail) return;

    this.formPanel.appendChild(heading(doc, detail.title || detail.id));
    if (detail.abstract) this.formPanel.appendChild(div(doc, "process-abstract", detail.abstract));

    renderForm(this.formEl, detail, fields, {
      onFieldChange: (inputId, patch) => this.patchField(inputId, patch),
      onDrawRequest: (inputId, mode) => this.requestDraw(inputId, mode),
      onWfsLoadLayers: (inputId) => void this.track(this.loadWfsLayers(inputId)),
      onWfsPreview: (inputId) => void this.track(this.previewWfs(inputId)),
    });
    this.formPanel.appendChild(this.formEl);

    if (this.canvas.isDrawing()) {
      const note = div(doc, "draw-note", "drawing: click to add points, double-click to finish");
      note.dataset.role = "draw-note";
      this.formPanel.appendChild(note);
    }

    const row = div(doc, "run-row");
    this.runButton.disabled = stage !== "ready";
    this.stageChip.textContent = stage;
    row.append(this.runButton, this.stageChip);
    this.formPanel.appendChild(row);
  }

  private renderResultsPanel(): void {
    const doc = this.doc;
    const { results } = this.state;
    this.resultsPanel.textContent = "";
    this.resultsPanel.hidden = results === null;
    if (!results) return;

    this.resultsPanel.appendChild(heading(doc, "Results"));

    for (const literal of results.literals) {
      const row = div(doc, "literal-row");
      row.dataset.role = `literal-${literal.id}`;
      row.append(
        span(doc, "literal-id", literal.id),
        span(doc, "literal-value", literal.value),
      );
      this.resultsPanel.appendChild(row);
    }

    for (const download of results.downloads) {
      const anchor = doc.createElement("a");
      anchor.className = "download-link";
      anchor.dataset.role = "download";
      anchor.textContent = `download ${download.filename}`;
      anchor.setAttribute("download", download.filename);
      anchor.setAttribute(
        "href",
        "data:application/geo+json;charset=utf-8," + encodeURIComponent(download.text),
      );
      this.resultsPanel.appendChild(anchor);
    }

    for (const ref of results.references) {
      const row = div(doc, "reference-row");
      row.dataset.role = `reference-${ref.id}`;
      const anchor = doc.createElement("a");
      anchor.setAttribute("href", ref.href);
      anchor.textContent = `${ref.id} (stored by the service)`;
      row.appendChild(anchor);
      this.resultsPanel.appendChild(row);
    }

    if (results.remote) {
      const box = div(doc, "remote-error");
      box.dataset.role = "remote-error";
      box.append(
        span(doc, "remote-code", results.remote.code),
        span(doc, "remote-message", results.remote.messages.join("; ")),
      );
      if (results.remote.locator) {
        box.appendChild(span(doc, "remote-locator", `at ${results.remote.locator}`));
      }
      this.resultsPanel.appendChild(box);
    }

    if (results.violations.length > 0) {
      const list = doc.createElement("ul");
      list.className = "violation-list";
      list.dataset.role = "violation-list";
      for (const v of results.violations) {
        const item = doc.createElement("li");
        item.textContent = `${v.input}: ${v.violation}`;
        list.appendChild(item);
      }
      this.resultsPanel.appendChild(list);
    }
  }

  private renderLayersPanel(): void {
    const doc = this.doc;
    this.layersList.textContent = "";
    for (const layer of this.state.layers) {
      const row = div(doc, "layer-row");
      row.dataset.layerId = layer.id;
      const toggle = doc.createElement("input");
      toggle.type = "checkbox";
      toggle.checked = layer.visible;
      toggle.addEventListener("change", () => {
        this.state.layers = this.state.layers.map((l) =>
          l.id === layer.id ? { ...l, visible: toggle.checked } : l,
        );
        this.canvas.setLayers(this.state.layers);
      });
      row.append(toggle, span(doc, "layer-name", layer.name), span(doc, "layer-kind", layer.kind));
      this.layersList.appendChild(row);
    }
  }
}

export function mountApp(root: HTMLElement, options: AppOptions = {}): App {
  return new App(root, options);
}

// ---- small helpers -----------------------------------------------------------

function emptyResults(fill: Partial<ResultPanel>): ResultPanel {
  return {
    literals: [],
    downloads: [],
    references: [],
    remote: null,
    violations: [],
    ...fill,
  };
}

function describeError(err: unknown): string {
  if (err instanceof BridgeError) {
    const remote = err.body.remote;
    if (remote) {
      const detail = remote.messages.length ? `: ${remote.messages.join("; ")}` : "";
      return `service reported ${remote.code}${detail}`;
    }
    return `${err.body.code}: ${err.body.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}

function coordinatePair(text: string): [number, number] | null {
  const parts = text.trim().split(/\s+/);
  if (parts.length !== 2) return null;
  const x = Number(parts[0]);
  const y = Number(parts[1]);
  return Number.isFinite(x) && Number.isFinite(y) ? [x, y] : null;
}

function div(doc: Document, className: string, text?: string): HTMLDivElement {
  const node = doc.createElement("div");
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function span(doc: Document, className: string, text: string): HTMLSpanElement {
  const node = doc.createElement("span");
  node.className = className;
  node.textContent = text;
  return node;
}

function heading(doc: Document, text: string): HTMLHeadingElement {
  const node = doc.createElement("h2");
  node.textContent = text;
  return node;
}

function cssEscape(value: string): string {
  return value.replace(/["\\]/g, "\\$&");
}
