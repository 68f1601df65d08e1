// Scripted end-to-end runs against a real service stack: `geobind serve
// --mock --bridge` is spawned once for the file, the page's origin is pointed
// at the bridge (exactly how the bundle is served in production), and the app
// is driven through its DOM controls.

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { App, mountApp } from "../src/app.js";
import { buildGetFeatureUrl } from "../src/forms.js";

let serve: ChildProcess;
let wpsUrl: string;
let wfsUrl: string;
let bridgeUrl: string;

beforeAll(async () => {
  const env = { ...process.env };
  delete env.GEOBIND_CONFIG;
  delete env.GEOBIND_BRIDGE_CONFIG;
  serve = spawn("geobind", ["serve", "--mock", "--bridge"], {
    env,
    stdio: ["ignore", "pipe", "pipe"],
  });

  const urls = await new Promise<string[]>((resolve, reject) => {
    let out = "";
    let err = "";
    const timer = setTimeout(
      () => reject(new Error(`serve did not announce its URLs; stderr: ${err}`)),
      15_000,
    );
    serve.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const lines = out.split("\n").filter((l) => l.trim().startsWith("http"));
      if (lines.length >= 3) {
        clearTimeout(timer);
        resolve(lines.slice(0, 3));
      }
    });
    serve.stderr!.on("data", (chunk: Buffer) => {
      err += chunk.toString();
    });
    serve.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`serve exited early (${code}); stderr: ${err}`));
    });
  });
  [wpsUrl, wfsUrl, bridgeUrl] = urls as [string, string, string];

  // the bundle is served by the bridge itself, so the page and the API share
  // an origin; mirror that here or the DOM's fetch blocks the calls
  (window as unknown as { happyDOM: { setURL(url: string): void } }).happyDOM.setURL(
    bridgeUrl + "/",
  );
});

afterAll(async () => {
  if (!serve) return;
  const gone = new Promise<void>((resolve) => serve.on("exit", () => resolve()));
  serve.kill("SIGINT");
  await Promise.race([gone, new Promise<void>((r) => setTimeout(r, 5_000))]);
  if (serve.exitCode === null) serve.kill("SIGKILL");
});

function freshApp(): { root: HTMLElement; app: App } {
  document.body.textContent = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = mountApp(root, { bridgeBase: bridgeUrl, mapWidth: 800, mapHeight: 600 });
  return { root, app };
}

function setText(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input"));
}

async function connectTo(root: HTMLElement, app: App, url: string): Promise<void> {
  setText(root.querySelector<HTMLInputElement>("[data-role=endpoint-url]")!, url);
  root.querySelector<HTMLButtonElement>("[data-role=connect]")!.click();
  await app.settled();
}

async function pickProcess(root: HTMLElement, app: App, id: string): Promise<void> {
  const select = root.querySelector<HTMLSelectElement>("[data-role=process-select]")!;
  select.value = id;
  select.dispatchEvent(new Event("change"));
  await app.settled();
}

async function directExecute(body: unknown): Promise<{ status: string; outputs: any[] }> {
  const response = await fetch(bridgeUrl + "/api/execute", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const payload = await response.json();
  expect(payload.error, JSON.stringify(payload.error)).toBeUndefined();
  return payload.ok;
}

describe("buffer, sketched on the map", () => {
  it("draws a two-segment line, runs Buffer, and the download matches the service payload", async () => {
    const { root, app } = freshApp();
    await connectTo(root, app, wpsUrl);

    expect(root.dataset.stage).toBe("capabilities");
    const meta = root.querySelector("[data-role=service-meta]")!.textContent!;
    expect(meta).toContain("3 processes");

    await pickProcess(root, app, "Buffer");
    expect(root.dataset.stage).toBe("described");
    expect(root.querySelectorAll("[data-role=form] .field").length).toBe(2);

    // sketch: (0,0) → (4,0) → (4,2) in world units, two segments
    root.querySelector<HTMLButtonElement>("[data-role=draw-line]")!.click();
    const svg = app.canvas.svg;
    for (const [cx, cy] of [[400, 300], [560, 300], [560, 220]]) {
      svg.dispatchEvent(new MouseEvent("pointerdown", { clientX: cx, clientY: cy, button: 0 }));
    }
    svg.dispatchEvent(new MouseEvent("dblclick"));

    const line = { type: "LineString", coordinates: [[0, 0], [4, 0], [4, 2]] };
    expect(app.state.fields[0]!.sketch).toEqual(line);
    expect(root.querySelector("[data-role=sketch-status]")!.textContent).toContain("LineString");
    expect(root.dataset.stage).toBe("described"); // distance still missing
    expect(root.querySelector<HTMLButtonElement>("[data-role=execute]")!.disabled).toBe(true);

    const distance = root.querySelector<HTMLInputElement>(
      '[data-input="distance"] [data-role=literal]',
    )!;
    setText(distance, "1");
    expect(root.dataset.stage).toBe("ready");
    expect(root.querySelector<HTMLButtonElement>("[data-role=execute]")!.disabled).toBe(false);

    root.querySelector<HTMLButtonElement>("[data-role=execute]")!.click();
    await app.settled();

    expect(root.dataset.stage).toBe("completed");

    // one result layer holding exactly one polygon, on the map and in the list
    const resultGroups = svg.querySelectorAll('[data-layer^="result:"]');
    expect(resultGroups.length).toBe(1);
    expect(resultGroups[0]!.querySelectorAll("[data-shape=polygon]").length).toBe(1);
    const rows = [...root.querySelectorAll("[data-role=layer-list] .layer-row")];
    expect(rows.some((row) => row.textContent!.includes("Buffer result"))).toBe(true);

    // the downloaded document re-parses to what the bridge sent
    const anchor = root.querySelector<HTMLAnchorElement>("[data-role=download]")!;
    expect(anchor.getAttribute("download")).toBe("Buffer-result.geojson");
    const href = anchor.getAttribute("href")!;
    const prefix = "data:application/geo+json;charset=utf-8,";
    expect(href.startsWith(prefix)).toBe(true);
    const downloaded = JSON.parse(decodeURIComponent(href.slice(prefix.length)));

    const direct = await directExecute({
      url: wpsUrl,
      process: "Buffer",
      inputs: [
        { id: "geometry", geometryGeoJson: line },
        { id: "distance", literal: "1" },
      ],
    });
    const expected = direct.outputs.find((o) => o.geojson !== undefined)!.geojson;
    expect(downloaded).toEqual(expected);
    expect(downloaded.type).toBe("Polygon");
  });
});

describe("centroid from a feature-service pick", () => {
  it("sends a reference, labels the coordinates, and drops a marker", async () => {
    const { root, app } = freshApp();
    await connectTo(root, app, wpsUrl);
    await pickProcess(root, app, "Centroid");

    // switch the geometry input to its feature-service source
    const radio = root.querySelector<HTMLInputElement>("[data-role=source-wfs]")!;
    radio.checked = true;
    radio.dispatchEvent(new Event("change"));

    setText(root.querySelector<HTMLInputElement>("[data-role=wfs-url]")!, wfsUrl);
    root.querySelector<HTMLButtonElement>("[data-role=wfs-load]")!.click();
    await app.settled();

    const layerSelect = root.querySelector<HTMLSelectElement>("[data-role=wfs-layer]")!;
    expect([...layerSelect.options].map((o) => o.value)).toContain("roads");
    expect(layerSelect.value).toBe("roads"); // the only layer is picked up front

    // filter down to road.1 and preview it
    root.querySelector<HTMLButtonElement>("[data-role=filter-add]")!.click();
    setText(root.querySelector<HTMLInputElement>("[data-role=filter-value-0]")!, "road.1");
    root.querySelector<HTMLButtonElement>("[data-role=wfs-preview]")!.click();
    await app.settled();
    expect(root.querySelector("[data-role=preview-note]")!.textContent).toBe("1 feature(s)");
    expect(app.canvas.svg.querySelector('[data-layer^="preview:"]')).toBeTruthy();

    expect(root.dataset.stage).toBe("ready");
    root.querySelector<HTMLButtonElement>("[data-role=execute]")!.click();
    await app.settled();
    expect(root.dataset.stage).toBe("completed");

    const label = root.querySelector("[data-role=literal-result] .literal-value")!.textContent!;

    // the same execution straight against the bridge, reference and all
    const direct = await directExecute({
      url: wpsUrl,
      process: "Centroid",
      inputs: [
        {
          id: "geometry",
          reference: {
            href: buildGetFeatureUrl({ url: wfsUrl, typeName: "roads", featureIds: ["road.1"] }),
            fetchMode: "sendReference",
          },
        },
      ],
    });
    expect(label).toBe(direct.outputs[0]!.literal);
    // road.1 runs straight from (0,0) to (10,0): its centroid is the midpoint
    expect(label).toBe("5 0");

    // the coordinate pair also lands on the map as a marker
    expect(
      app.canvas.svg.querySelectorAll('[data-layer^="result:"] [data-shape=point]').length,
    ).toBe(1);
  });
});

describe("failure handling stays inline", () => {
  it("keeps the stage on a dead endpoint and gates bad literals before submit", async () => {
    const { root, app } = freshApp();
    await connectTo(root, app, wpsUrl);
    await pickProcess(root, app, "Buffer");

    const distance = root.querySelector<HTMLInputElement>(
      '[data-input="distance"] [data-role=literal]',
    )!;
    setText(distance, "very far");
    const note = root.querySelector<HTMLElement>('[data-input="distance"] [data-role=problem]')!;
    expect(note.hidden).toBe(false);
    expect(note.textContent).toContain("not a number");
    expect(root.dataset.stage).toBe("described");
    expect(root.querySelector<HTMLButtonElement>("[data-role=execute]")!.disabled).toBe(true);

    // connecting to a dead port reports inline and moves nothing
    await connectTo(root, app, "http://127.0.0.1:9/");
    const banner = root.querySelector<HTMLElement>("[data-role=banner]")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("UpstreamUnreachable");
    expect(root.dataset.stage).toBe("described");
    expect(root.querySelector("[data-role=service-panel] h2")!.textContent).toContain(
      "Mock Analysis Service",
    );

    // the failed connect re-rendered the (unchanged) form, so take fresh
    // element handles before editing again
    const distanceNow = root.querySelector<HTMLInputElement>(
      '[data-input="distance"] [data-role=literal]',
    )!;
    const noteNow = root.querySelector<HTMLElement>(
      '[data-input="distance"] [data-role=problem]',
    )!;
    expect(noteNow.textContent).toContain("not a number"); // survived the re-render

    // fixing the literal clears its note, but the missing geometry still gates
    setText(distanceNow, "0.5");
    expect(noteNow.hidden).toBe(true);
    expect(root.dataset.stage).toBe("described");

    // sketching one finally satisfies the form
    root.querySelector<HTMLButtonElement>("[data-role=draw-line]")!.click();
    const svg = app.canvas.svg;
    svg.dispatchEvent(new MouseEvent("pointerdown", { clientX: 400, clientY: 300, button: 0 }));
    svg.dispatchEvent(new MouseEvent("pointerdown", { clientX: 480, clientY: 300, button: 0 }));
    svg.dispatchEvent(new MouseEvent("dblclick"));
    expect(root.dataset.stage).toBe("ready");
    expect(root.querySelector<HTMLButtonElement>("[data-role=execute]")!.disabled).toBe(false);
  });
});
