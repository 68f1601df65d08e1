// Shared test fixtures: a deterministic generator for process descriptors so
// property-style cases replay from their seed.

import { ParameterInfo, ParameterKind, ProcessDetail } from "../src/api.js";
import { FieldState } from "../src/state.js";

export function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (Math.imul(s, 1664525) + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

export function pickOne<T>(r: () => number, options: T[]): T {
  return options[Math.floor(r() * options.length)]!;
}

export const DATATYPES = ["string", "integer", "double", "boolean"];
export const KINDS: ParameterKind[] = ["Literal", "Complex", "BoundingBox"];

export function randomDescriptor(r: () => number, index: number): ParameterInfo {
  const kind = pickOne(r, KINDS);
  const descriptor: ParameterInfo = {
    id: `in${index}`,
    title: r() < 0.3 ? "" : `Input ${index}`,
    kind,
    minOccurs: r() < 0.35 ? 0 : 1,
    maxOccurs: 1 + Math.floor(r() * 3),
  };
  if (kind === "Literal") descriptor.datatype = pickOne(r, DATATYPES);
  if (kind === "Complex") {
    descriptor.formats = [{ mimeType: "text/xml; subtype=gml/3.1.1" }];
    if (r() < 0.3) descriptor.formats.push({ mimeType: "text/xml", encoding: "base64" });
  }
  return descriptor;
}

export function randomDetail(r: () => number, index: number): ProcessDetail {
  const inputCount = 1 + Math.floor(r() * 6);
  return {
    id: `proc${index}`,
    title: `Process ${index}`,
    abstract: r() < 0.5 ? "" : "does things to shapes",
    inputs: Array.from({ length: inputCount }, (_, i) => randomDescriptor(r, i)),
    outputs: [{ id: "result", title: "Result", kind: pickOne(r, KINDS) }],
  };
}

// a value that should satisfy the field, by kind
export function fillValid(
  r: () => number,
  descriptor: ParameterInfo,
  field: FieldState,
): FieldState {
  const filled = { ...field };
  switch (descriptor.kind) {
    case "Literal":
      filled.text = {
        string: "hello",
        integer: pickOne(r, ["7", "-12", "+3"]),
        double: pickOne(r, ["1.25", ".5", "-2e3", "INF"]),
        boolean: pickOne(r, ["true", "false", "1", "0"]),
      }[descriptor.datatype ?? "string"]!;
      break;
    case "BoundingBox":
      filled.corners = ["-1", "0", "2.5", "3"];
      break;
    case "Complex":
      if (r() < 0.5) {
        filled.source = "sketch";
        filled.sketch = { type: "LineString", coordinates: [[0, 0], [2, 1]] };
      } else {
        filled.source = "wfs";
        filled.wfs = {
          ...filled.wfs,
          url: "http://features.test/wfs",
          typeName: "roads",
          rows: [{ kind: "featureId", property: "", value: "road.1" }],
        };
      }
      break;
  }
  return filled;
}
