// Descriptor-driven input forms.
//
// Validation here is deliberately the same lexical test the service applies
// when it binds a literal, so a form that passes never comes back rejected
// for a missing or malformed value — anything the bridge still flags (say, a
// reference that resolves to two geometries) is attached to the matching
// field after the fact.

import { ExecuteInput, ParameterInfo, ProcessDetail } from "./api.js";
import { FieldState, FilterRow, freshField } from "./state.js";

const INTEGER_RE = /^[+-]?[0-9]+$/;
const DOUBLE_RE = /^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?$/;
const BOOLEAN_WORDS = ["true", "false", "1", "0"];

// null means the text is in the datatype's lexical space. Unknown datatypes
// pass as strings: the service owns their definition, we own the four core
// ones, and a wrong guess here would block a form the service might accept.
export function literalProblem(datatype: string | undefined, text: string): string | null {
  switch (datatype) {
    case "integer":
      return INTEGER_RE.test(text) ? null : "not an integer";
    case "double":
      if (text === "INF" || text === "-INF" || text === "NaN") return null;
      return DOUBLE_RE.test(text) ? null : "not a number";
    case "boolean":
      return BOOLEAN_WORDS.includes(text) ? null : "use true, false, 1 or 0";
    default:
      return null;
  }
}

function required(descriptor: ParameterInfo): boolean {
  return (descriptor.minOccurs ?? 1) >= 1;
}

function fieldEmpty(descriptor: ParameterInfo, field: FieldState): boolean {
  switch (descriptor.kind) {
    case "Literal":
      return field.text === "";
    case "BoundingBox":
      return field.corners.every((c) => c.trim() === "");
    case "Complex":
      if (field.source === "sketch") return field.sketch === null;
      return field.wfs.typeName === "" && field.wfs.url === "";
  }
}

// the pre-submit check for one field; null when it would bind cleanly
export function fieldProblem(descriptor: ParameterInfo, field: FieldState): string | null {
  const empty = fieldEmpty(descriptor, field);
  if (empty) return required(descriptor) ? "required" : null;

  switch (descriptor.kind) {
    case "Literal":
      return literalProblem(descriptor.datatype, field.text);
    case "BoundingBox": {
      const corners = field.corners.map((c) => c.trim());
      if (corners.some((c) => c === "" || !DOUBLE_RE.test(c))) {
        return "four numbers: min x, min y, max x, max y";
      }
      const [minX, minY, maxX, maxY] = corners.map(Number) as [number, number, number, number];
      if (minX > maxX || minY > maxY) return "min corner must not exceed max corner";
      return null;
    }
    case "Complex":
      if (field.source === "sketch") {
        return field.sketch === null ? "draw a geometry on the map" : null;
      }
      if (field.wfs.url.trim() === "") return "feature service URL is missing";
      if (field.wfs.typeName === "") return "pick a layer";
      return filterFamilyProblem(field.wfs.rows);
  }
}

// the service accepts at most one filter family per query
export function filterFamilyProblem(rows: FilterRow[]): string | null {
  const families = new Set<string>();
  for (const row of rows) {
    if (row.kind === "featureId") families.add("featureId");
    if (row.kind === "attribute") families.add("attribute");
  }
  return families.size > 1 ? "use feature ids or attribute filters, not both" : null;
}

export interface FormProblem {
  input: string;
  problem: string;
}

export function formProblems(detail: ProcessDetail, fields: FieldState[]): FormProblem[] {
  const problems: FormProblem[] = [];
  detail.inputs.forEach((descriptor, i) => {
    const field = fields[i];
    if (!field) return;
    const problem = fieldProblem(descriptor, field);
    if (problem !== null) problems.push({ input: descriptor.id, problem });
  });
  return problems;
}

export function buildFields(detail: ProcessDetail): FieldState[] {
  return detail.inputs.map(freshField);
}

// ---- turning a valid form into the execute body -----------------------------

function xmlEscape(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function equalityFilterXml(attributes: [string, string][]): string {
  const clauses = attributes
    .map(
      ([name, value]) =>
        "<ogc:PropertyIsEqualTo>" +
        `<ogc:PropertyName>${xmlEscape(name)}</ogc:PropertyName>` +
        `<ogc:Literal>${xmlEscape(value)}</ogc:Literal>` +
        "</ogc:PropertyIsEqualTo>",
    )
    .join("");
  return `<ogc:Filter xmlns:ogc="http://www.opengis.net/ogc">${clauses}</ogc:Filter>`;
}

export interface FeaturePick {
  url: string;
  typeName: string;
  maxFeatures?: number;
  featureIds?: string[];
  attributes?: [string, string][];
}

export function pickFromRows(url: string, typeName: string, rows: FilterRow[]): FeaturePick {
  const pick: FeaturePick = { url, typeName };
  for (const row of rows) {
    if (row.kind === "maxFeatures") {
      const n = Number(row.value);
      if (Number.isInteger(n) && n > 0) pick.maxFeatures = n;
    } else if (row.kind === "featureId") {
      if (row.value.trim() !== "") {
        (pick.featureIds ??= []).push(row.value.trim());
      }
    } else if (row.property.trim() !== "") {
      (pick.attributes ??= []).push([row.property.trim(), row.value]);
    }
  }
  return pick;
}

// KVP GetFeature URL, shaped exactly like the one the command-line client
// composes so either side of a reference is interchangeable
export function buildGetFeatureUrl(pick: FeaturePick): string {
  const params = [
    "service=WFS",
    "version=1.1.0",
    "request=GetFeature",
    `typeName=${encodeURIComponent(pick.typeName)}`,
  ];
  if (pick.maxFeatures !== undefined) params.push(`maxFeatures=${pick.maxFeatures}`);
  if (pick.featureIds && pick.featureIds.length) {
    params.push(`featureId=${pick.featureIds.map(encodeURIComponent).join(",")}`);
  }
  if (pick.attributes && pick.attributes.length) {
    params.push(`filter=${encodeURIComponent(equalityFilterXml(pick.attributes))}`);
  }
  const separator = pick.url.includes("?") ? "&" : "?";
  return `${pick.url}${separator}${params.join("&")}`;
}

// Only call on a form formProblems() said is clean; empty optional fields are
// simply omitted rather than sent as empty values.
export function executeInputs(detail: ProcessDetail, fields: FieldState[]): ExecuteInput[] {
  const inputs: ExecuteInput[] = [];
  detail.inputs.forEach((descriptor, i) => {
    const field = fields[i];
    if (!field || fieldEmpty(descriptor, field)) return;
    switch (descriptor.kind) {
      case "Literal":
        inputs.push({ id: descriptor.id, literal: field.text });
        break;
      case "BoundingBox": {
        const [minX, minY, maxX, maxY] = field.corners.map((c) => Number(c.trim())) as [
          number,
          number,
          number,
          number,
        ];
        inputs.push({ id: descriptor.id, bbox: [minX, minY, maxX, maxY] });
        break;
      }
      case "Complex":
        if (field.source === "sketch" && field.sketch) {
          inputs.push({ id: descriptor.id, geometryGeoJson: field.sketch });
        } else {
          const pick = pickFromRows(field.wfs.url.trim(), field.wfs.typeName, field.wfs.rows);
          inputs.push({
            id: descriptor.id,
            reference: { href: buildGetFeatureUrl(pick), fetchMode: field.fetchMode },
          });
        }
        break;
    }
  });
  return inputs;
}

// a 422 names inputs; put each violation on its field so the form lights up
export function attachViolations(
  fields: FieldState[],
  violations: { input: string; violation: string }[],
): FieldState[] {
  const byInput = new Map<string, string>();
  for (const v of violations) {
    if (!byInput.has(v.input)) byInput.set(v.input, describeViolation(v.violation));
  }
  return fields.map((f) => ({ ...f, problem: byInput.get(f.inputId) ?? null }));
}

function describeViolation(code: string): string {
  switch (code) {
    case "MissingRequired":
      return "the service requires a value here";
    case "OccurrenceExceeded":
      return "too many values for this input";
    case "KindMismatch":
      return "this value has the wrong kind for the input";
    case "LiteralParseError":
      return "the service could not parse this value";
    default:
      return code;
  }
}

// ---- DOM construction --------------------------------------------------------

export interface FormHooks {
  onFieldChange(inputId: string, patch: Partial<FieldState>): void;
  onDrawRequest(inputId: string, mode: "line" | "polygon"): void;
  onWfsLoadLayers(inputId: string): void;
  onWfsPreview(inputId: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderForm(
  container: HTMLElement,
  detail: ProcessDetail,
  fields: FieldState[],
  hooks: FormHooks,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  detail.inputs.forEach((descriptor, i) => {
    const field = fields[i] ?? freshField(descriptor);
    container.appendChild(renderField(doc, descriptor, field, hooks));
  });
}

function renderField(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const wrap = el(doc, "div", "field");
  wrap.dataset.input = descriptor.id;

  const label = el(doc, "label", "field-label");
  label.append(
    el(doc, "span", "field-title", descriptor.title || descriptor.id),
    el(doc, "span", "field-kind", describeKind(descriptor)),
  );
  if (!required(descriptor)) label.append(el(doc, "span", "field-optional", "optional"));
  wrap.appendChild(label);

  switch (descriptor.kind) {
    case "Literal":
      wrap.appendChild(literalControl(doc, descriptor, field, hooks));
      break;
    case "BoundingBox":
      wrap.appendChild(bboxControl(doc, descriptor, field, hooks));
      break;
    case "Complex":
      wrap.appendChild(complexControl(doc, descriptor, field, hooks));
      break;
  }

  const note = el(doc, "div", "field-problem", field.problem ?? "");
  note.dataset.role = "problem";
  if (!field.problem) note.hidden = true;
  wrap.appendChild(note);
  return wrap;
}

function describeKind(descriptor: ParameterInfo): string {
  if (descriptor.kind === "Literal") return descriptor.datatype ?? "string";
  if (descriptor.kind === "BoundingBox") return "bounding box";
  return "geometry";
}

function literalControl(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const input = el(doc, "input", "literal-text") as HTMLInputElement;
  input.type = "text";
  input.value = field.text;
  input.dataset.role = "literal";
  input.addEventListener("input", () => {
    hooks.onFieldChange(descriptor.id, { text: input.value, problem: null });
  });
  return input;
}

const CORNER_NAMES = ["min x", "min y", "max x", "max y"] as const;

function bboxControl(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const row = el(doc, "div", "bbox-row");
  CORNER_NAMES.forEach((name, i) => {
    const input = el(doc, "input", "bbox-corner") as HTMLInputElement;
    input.type = "text";
    input.placeholder = name;
    input.value = field.corners[i] ?? "";
    input.dataset.role = `corner-${i}`;
    input.addEventListener("input", () => {
      const corners = [...field.corners] as FieldState["corners"];
      corners[i] = input.value;
      field.corners = corners; // keep later keystrokes on other corners consistent
      hooks.onFieldChange(descriptor.id, { corners, problem: null });
    });
    row.appendChild(input);
  });
  return row;
}

function complexControl(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const box = el(doc, "div", "complex-box");

  const chooser = el(doc, "div", "source-chooser");
  (["sketch", "wfs"] as const).forEach((source) => {
    const pick = el(doc, "label", "source-option");
    const radio = el(doc, "input") as HTMLInputElement;
    radio.type = "radio";
    radio.name = `source-${descriptor.id}`;
    radio.value = source;
    radio.checked = field.source === source;
    radio.dataset.role = `source-${source}`;
    radio.addEventListener("change", () => {
      if (radio.checked) hooks.onFieldChange(descriptor.id, { source, problem: null });
    });
    pick.append(radio, doc.createTextNode(source === "sketch" ? " draw on map" : " from feature service"));
    chooser.appendChild(pick);
  });
  box.appendChild(chooser);

  box.appendChild(
    field.source === "sketch"
      ? sketchControls(doc, descriptor, field, hooks)
      : wfsControls(doc, descriptor, field, hooks),
  );
  return box;
}

function sketchControls(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const pane = el(doc, "div", "sketch-pane");
  const lineBtn = el(doc, "button", "draw-line", "Draw line");
  lineBtn.dataset.role = "draw-line";
  lineBtn.addEventListener("click", () => hooks.onDrawRequest(descriptor.id, "line"));
  const polyBtn = el(doc, "button", "draw-polygon", "Draw polygon");
  polyBtn.dataset.role = "draw-polygon";
  polyBtn.addEventListener("click", () => hooks.onDrawRequest(descriptor.id, "polygon"));
  const status = el(
    doc,
    "span",
    "sketch-status",
    field.sketch ? `captured: ${field.sketch.type}` : "nothing drawn yet",
  );
  status.dataset.role = "sketch-status";
  pane.append(lineBtn, polyBtn, status);
  return pane;
}

function wfsControls(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const pane = el(doc, "div", "wfs-pane");

  const urlRow = el(doc, "div", "wfs-url-row");
  const url = el(doc, "input", "wfs-url") as HTMLInputElement;
  url.type = "text";
  url.placeholder = "feature service URL";
  url.value = field.wfs.url;
  url.dataset.role = "wfs-url";
  url.addEventListener("input", () => {
    hooks.onFieldChange(descriptor.id, {
      wfs: { ...field.wfs, url: url.value },
      problem: null,
    });
  });
  const load = el(doc, "button", "wfs-load", "Load layers");
  load.dataset.role = "wfs-load";
  load.addEventListener("click", () => hooks.onWfsLoadLayers(descriptor.id));
  urlRow.append(url, load);
  pane.appendChild(urlRow);

  const layerSelect = el(doc, "select", "wfs-layer") as HTMLSelectElement;
  layerSelect.dataset.role = "wfs-layer";
  const blank = el(doc, "option", undefined, "— pick a layer —");
  blank.setAttribute("value", "");
  layerSelect.appendChild(blank);
  for (const layer of field.wfs.layers) {
    const option = el(doc, "option", undefined, layer.title || layer.name);
    option.setAttribute("value", layer.name);
    layerSelect.appendChild(option);
  }
  layerSelect.value = field.wfs.typeName;
  layerSelect.addEventListener("change", () => {
    hooks.onFieldChange(descriptor.id, {
      wfs: { ...field.wfs, typeName: layerSelect.value },
      problem: null,
    });
  });
  pane.appendChild(layerSelect);

  pane.appendChild(filterGrid(doc, descriptor, field, hooks));

  const previewRow = el(doc, "div", "wfs-preview-row");
  const preview = el(doc, "button", "wfs-preview", "Preview");
  preview.dataset.role = "wfs-preview";
  preview.addEventListener("click", () => hooks.onWfsPreview(descriptor.id));
  const previewNote = el(
    doc,
    "span",
    "wfs-preview-note",
    field.wfs.error ??
      (field.wfs.previewCount === null ? "" : `${field.wfs.previewCount} feature(s)`),
  );
  previewNote.dataset.role = "preview-note";
  previewRow.append(preview, previewNote);
  pane.appendChild(previewRow);

  const modeRow = el(doc, "label", "fetch-mode-row");
  const mode = el(doc, "select", "fetch-mode") as HTMLSelectElement;
  mode.dataset.role = "fetch-mode";
  for (const [value, text] of [
    ["sendReference", "send as reference"],
    ["fetchClientSide", "fetch here, send inline"],
  ] as const) {
    const option = el(doc, "option", undefined, text);
    option.setAttribute("value", value);
    mode.appendChild(option);
  }
  mode.value = field.fetchMode;
  mode.addEventListener("change", () => {
    hooks.onFieldChange(descriptor.id, {
      fetchMode: mode.value as FieldState["fetchMode"],
    });
  });
  modeRow.append(doc.createTextNode("delivery "), mode);
  pane.appendChild(modeRow);

  return pane;
}

function filterGrid(
  doc: Document,
  descriptor: ParameterInfo,
  field: FieldState,
  hooks: FormHooks,
): HTMLElement {
  const grid = el(doc, "div", "filter-grid");
  grid.dataset.role = "filter-grid";

  field.wfs.rows.forEach((row, index) => {
    const line = el(doc, "div", "filter-row");

    const kindSelect = el(doc, "select", "filter-kind") as HTMLSelectElement;
    for (const kind of ["maxFeatures", "featureId", "attribute"] as const) {
      const option = el(doc, "option", undefined, kind);
      option.setAttribute("value", kind);
      kindSelect.appendChild(option);
    }
    kindSelect.value = row.kind;
    kindSelect.dataset.role = `filter-kind-${index}`;
    kindSelect.addEventListener("change", () => {
      patchRow(index, { kind: kindSelect.value as FilterRow["kind"] });
    });
    line.appendChild(kindSelect);

    if (row.kind === "attribute") {
      const prop = el(doc, "input", "filter-property") as HTMLInputElement;
      prop.type = "text";
      prop.placeholder = "property";
      prop.value = row.property;
      prop.dataset.role = `filter-property-${index}`;
      prop.addEventListener("input", () => patchRow(index, { property: prop.value }));
      line.appendChild(prop);
    }

    const value = el(doc, "input", "filter-value") as HTMLInputElement;
    value.type = "text";
    value.placeholder = row.kind === "maxFeatures" ? "count" : "value";
    value.value = row.value;
    value.dataset.role = `filter-value-${index}`;
    value.addEventListener("input", () => patchRow(index, { value: value.value }));
    line.appendChild(value);

    const drop = el(doc, "button", "filter-drop", "×");
    drop.dataset.role = `filter-drop-${index}`;
    drop.addEventListener("click", () => {
      const rows = field.wfs.rows.filter((_, i) => i !== index);
      hooks.onFieldChange(descriptor.id, { wfs: { ...field.wfs, rows }, problem: null });
    });
    line.appendChild(drop);

    grid.appendChild(line);
  });

  const add = el(doc, "button", "filter-add", "Add filter");
  add.dataset.role = "filter-add";
  add.addEventListener("click", () => {
    const rows = [...field.wfs.rows, { kind: "featureId" as const, property: "", value: "" }];
    hooks.onFieldChange(descriptor.id, { wfs: { ...field.wfs, rows }, problem: null });
  });
  grid.appendChild(add);

  function patchRow(index: number, patch: Partial<FilterRow>) {
    const rows = field.wfs.rows.map((r, i) => (i === index ? { ...r, ...patch } : r));
    hooks.onFieldChange(descriptor.id, { wfs: { ...field.wfs, rows }, problem: null });
  }

  return grid;
}
