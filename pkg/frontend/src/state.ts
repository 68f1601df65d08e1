// All client-side session state lives in one plain-data AppState value —
// serializable by construction, so a snapshot is JSON.stringify away and the
// whole UI can re-render from it.
//
// The stage field mirrors the service-side binding machine one-to-one:
//
//   start ──connect──▶ capabilities ──select──▶ described ⇄ ready ──run──▶ completed | failed
//
// with two composite moves the server machine expresses through its immutable
// snapshots: re-selecting a process (rewind to the retained capabilities
// snapshot, then select) and editing the endpoint (a fresh session).

import {
  FieldViolation,
  NamedEndpoint,
  ParameterInfo,
  ProcessDetail,
  RemoteException,
  ServiceSummary,
  FetchModeName,
} from "./api.js";
import { FeatureCollection, Geometry } from "./geo.js";

export type UiStage =
  | "start"
  | "capabilities"
  | "described"
  | "ready"
  | "completed"
  | "failed";

export type StageEvent =
  | { kind: "editEndpoint" }
  | { kind: "capabilitiesLoaded" }
  | { kind: "processSelected" }
  | { kind: "bindingsChanged"; satisfied: boolean }
  | { kind: "resultAccepted"; succeeded: boolean };

export class StageError extends Error {
  constructor(stage: UiStage, event: StageEvent["kind"]) {
    super(`event ${event} is not legal in stage ${stage}`);
    this.name = "StageError";
  }
}

const AFTER_CAPABILITIES: UiStage[] = ["capabilities", "described", "ready", "completed", "failed"];

// The one place stage changes are decided. Throws rather than guessing: an
// illegal event here is a programming error in the shell, not user input.
export function transition(stage: UiStage, event: StageEvent): UiStage {
  switch (event.kind) {
    case "editEndpoint":
      return "start";
    case "capabilitiesLoaded":
      if (stage !== "start") throw new StageError(stage, event.kind);
      return "capabilities";
    case "processSelected":
      // legal from any stage that still holds the capabilities snapshot;
      // from described and later this is the rewind-and-select composite
      if (!AFTER_CAPABILITIES.includes(stage)) throw new StageError(stage, event.kind);
      return "described";
    case "bindingsChanged":
      if (stage !== "described" && stage !== "ready") throw new StageError(stage, event.kind);
      return event.satisfied ? "ready" : "described";
    case "resultAccepted":
      if (stage !== "ready") throw new StageError(stage, event.kind);
      return event.succeeded ? "completed" : "failed";
  }
}

export type FilterRowKind = "maxFeatures" | "featureId" | "attribute";

export interface FilterRow {
  kind: FilterRowKind;
  property: string; // attribute rows only
  value: string;
}

export interface WfsPickState {
  url: string;
  layers: { name: string; title: string }[];
  typeName: string;
  rows: FilterRow[];
  previewCount: number | null;
  error: string | null;
}

export type ComplexSource = "sketch" | "wfs";

export interface FieldState {
  inputId: string;
  // literal inputs
  text: string;
  // bounding-box inputs: minX, minY, maxX, maxY as typed
  corners: [string, string, string, string];
  // complex inputs
  source: ComplexSource;
  sketch: Geometry | null;
  wfs: WfsPickState;
  fetchMode: FetchModeName;
  // what the field's control should flag, whether found before submitting
  // or attached from a bridge-side violation afterwards
  problem: string | null;
}

export function freshField(descriptor: ParameterInfo): FieldState {
  return {
    inputId: descriptor.id,
    text: "",
    corners: ["", "", "", ""],
    source: "sketch",
    sketch: null,
    wfs: { url: "", layers: [], typeName: "", rows: [], previewCount: null, error: null },
    fetchMode: "sendReference",
    problem: null,
  };
}

export type LayerKind = "sketch" | "preview" | "result";

export interface LayerModel {
  id: string;
  name: string;
  kind: LayerKind;
  features: FeatureCollection;
  visible: boolean;
}

export interface ResultDownload {
  filename: string;
  text: string;
}

export interface ResultPanel {
  literals: { id: string; value: string }[];
  downloads: ResultDownload[];
  references: { id: string; href: string }[];
  remote: RemoteException | null;
  violations: FieldViolation[];
}

export interface ViewState {
  centerX: number;
  centerY: number;
  scale: number; // pixels per world unit
}

export interface AppState {
  stage: UiStage;
  endpointUrl: string; // what the URL field currently holds
  connectedUrl: string | null; // the URL capabilities were actually loaded from
  defaults: NamedEndpoint[];
  service: ServiceSummary | null;
  banner: string | null; // endpoint-level failure, shown inline
  selectedProcess: string | null;
  detail: ProcessDetail | null;
  fields: FieldState[]; // ordered like detail.inputs
  layers: LayerModel[];
  results: ResultPanel | null;
  view: ViewState;
}

export function initialState(): AppState {
  return {
    stage: "start",
    endpointUrl: "",
    connectedUrl: null,
    defaults: [],
    service: null,
    banner: null,
    selectedProcess: null,
    detail: null,
    fields: [],
    layers: [],
    results: null,
    view: { centerX: 0, centerY: 0, scale: 40 },
  };
}
