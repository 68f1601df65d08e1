// Just enough GeoJSON vocabulary for what the bridge emits and the canvas
// draws. Planar coordinates throughout; no CRS juggling.

export type Position = [number, number];

export interface PointGeometry {
  type: "Point";
  coordinates: Position;
}

export interface MultiPointGeometry {
  type: "MultiPoint";
  coordinates: Position[];
}

export interface LineStringGeometry {
  type: "LineString";
  coordinates: Position[];
}

export interface MultiLineStringGeometry {
  type: "MultiLineString";
  coordinates: Position[][];
}

export interface PolygonGeometry {
  type: "Polygon";
  coordinates: Position[][];
}

export interface MultiPolygonGeometry {
  type: "MultiPolygon";
  coordinates: Position[][][];
}

export type Geometry =
  | PointGeometry
  | MultiPointGeometry
  | LineStringGeometry
  | MultiLineStringGeometry
  | PolygonGeometry
  | MultiPolygonGeometry;

export interface Feature {
  type: "Feature";
  id?: string | number;
  geometry: Geometry | null;
  properties: Record<string, unknown> | null;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: Feature[];
}

export function asCollection(value: Geometry | Feature | FeatureCollection): FeatureCollection {
  if (value.type === "FeatureCollection") return value;
  if (value.type === "Feature") return { type: "FeatureCollection", features: [value] };
  return {
    type: "FeatureCollection",
    features: [{ type: "Feature", geometry: value, properties: {} }],
  };
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function emptyBounds(): Bounds {
  return { minX: Infinity, minY: Infinity, maxX: -Infinity, maxY: -Infinity };
}

export function boundsValid(b: Bounds): boolean {
  return b.minX <= b.maxX && b.minY <= b.maxY;
}

export function extendBounds(b: Bounds, x: number, y: number): void {
  if (x < b.minX) b.minX = x;
  if (y < b.minY) b.minY = y;
  if (x > b.maxX) b.maxX = x;
  if (y > b.maxY) b.maxY = y;
}

// flattened vertex list, mostly useful for bounds and tests
export function positionsOf(geometry: Geometry): Position[] {
  switch (geometry.type) {
    case "Point":
      return [geometry.coordinates];
    case "MultiPoint":
    case "LineString":
      return geometry.coordinates;
    case "MultiLineString":
    case "Polygon":
      return geometry.coordinates.flat();
    case "MultiPolygon":
      return geometry.coordinates.flat(2);
  }
}

export function geometryBounds(geometry: Geometry, into?: Bounds): Bounds {
  const b = into ?? emptyBounds();
  for (const [x, y] of positionsOf(geometry)) extendBounds(b, x, y);
  return b;
}

export function collectionBounds(collection: FeatureCollection): Bounds | null {
  const b = emptyBounds();
  for (const feature of collection.features) {
    if (feature.geometry) geometryBounds(feature.geometry, b);
  }
  return boundsValid(b) ? b : null;
}
