// Typed client for the bridge's JSON API. Every endpoint answers with an
// envelope — {"ok": ...} on success, {"error": {...}} otherwise — and this
// module is the only place that knows about it.

import { FeatureCollection, Geometry } from "./geo.js";

export interface ProcessBrief {
  id: string;
  title: string;
  abstract: string;
}

export interface ServiceSummary {
  title: string;
  abstract: string;
  version: string;
  processCount: number;
  processes: ProcessBrief[];
}

export interface FormatInfo {
  mimeType: string;
  encoding?: string;
  schema?: string;
}

export type ParameterKind = "Literal" | "Complex" | "BoundingBox";

export interface ParameterInfo {
  id: string;
  title: string;
  kind: ParameterKind;
  datatype?: string;
  formats?: FormatInfo[];
  minOccurs?: number;
  maxOccurs?: number;
}

export interface ProcessDetail {
  id: string;
  title: string;
  abstract: string;
  inputs: ParameterInfo[];
  outputs: ParameterInfo[];
}

export interface RemoteException {
  code: string;
  messages: string[];
  locator?: string | null;
}

export interface FieldViolation {
  input: string;
  violation: string;
}

export interface BridgeErrorBody {
  code: string;
  message: string;
  remote?: RemoteException;
  violations?: FieldViolation[];
}

export class BridgeError extends Error {
  constructor(
    readonly status: number,
    readonly body: BridgeErrorBody,
  ) {
    super(body.message);
    this.name = "BridgeError";
  }
}

export type FetchModeName = "sendReference" | "fetchClientSide";

export type ExecuteInput = { id: string } & (
  | { literal: string | number | boolean }
  | { geometryGeoJson: Geometry }
  | { bbox: [number, number, number, number] }
  | { reference: { href: string; fetchMode?: FetchModeName } }
);

export interface ExecuteBody {
  url: string;
  process: string;
  inputs: ExecuteInput[];
  raw?: string;
}

export interface ExecuteOutput {
  id: string;
  literal?: string;
  geojson?: Geometry | FeatureCollection;
  bbox?: [number, number, number, number];
  reference?: { href: string };
  rawBase64?: string;
  mime?: string;
}

export interface ExecuteResult {
  status: string;
  outputs: ExecuteOutput[];
}

export interface LayerEntry {
  name: string;
  title: string;
}

export interface FeatureQueryBody {
  url: string;
  typeName: string;
  maxFeatures?: number;
  featureIds?: string[];
  attributeFilters?: { property: string; value: string }[];
}

export interface NamedEndpoint {
  name: string;
  url: string;
}

export class BridgeClient {
  constructor(readonly base: string = "") {}

  capabilities(url: string): Promise<ServiceSummary> {
    return this.request(`/api/capabilities?url=${encodeURIComponent(url)}`);
  }

  process(url: string, id: string): Promise<ProcessDetail> {
    return this.request(
      `/api/process?url=${encodeURIComponent(url)}&id=${encodeURIComponent(id)}`,
    );
  }

  execute(body: ExecuteBody): Promise<ExecuteResult> {
    return this.request("/api/execute", body);
  }

  wfsLayers(url: string): Promise<LayerEntry[]> {
    return this.request(`/api/wfs/layers?url=${encodeURIComponent(url)}`);
  }

  wfsFeatures(body: FeatureQueryBody): Promise<FeatureCollection> {
    return this.request("/api/wfs/features", body);
  }

  async defaults(): Promise<NamedEndpoint[]> {
    const payload = await this.request<{ defaultEndpoints: NamedEndpoint[] }>("/api/defaults");
    return payload.defaultEndpoints;
  }

  private async request<T>(path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.base + path, body === undefined
        ? undefined
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
          });
    } catch (err) {
      // the bridge itself is down — shaped like any other failure so the
      // caller has one error type to render
      throw new BridgeError(0, {
        code: "BridgeUnreachable",
        message: err instanceof Error ? err.message : String(err),
      });
    }
    let payload: { ok?: T; error?: BridgeErrorBody };
    try {
      payload = await response.json();
    } catch {
      throw new BridgeError(response.status, {
        code: "BadEnvelope",
        message: `the bridge answered ${response.status} without a JSON body`,
      });
    }
    if (payload.error) throw new BridgeError(response.status, payload.error);
    return payload.ok as T;
  }
}
