"""The JSON bridge over real HTTP: what a browser (or curl) would see.

Starts the mock WPS/WFS pair and the bridge on loopback ports, then walks the
endpoints with plain GET/POST requests.  Every payload in and out is JSON —
the XML protocols stay behind the bridge.
"""

import json

from geobind.bridge import BridgeConfig, start_bridge
from geobind.gml import geometry_to_geojson
from geobind.mock import start_mock_stack
from geobind.mock.wfs import default_dataset
from geobind.transport import HttpTransport, Request


def main():
    wps_url, wfs_url, stack = start_mock_stack()
    bridge = start_bridge(BridgeConfig(default_endpoints=(("mock", wps_url),)))
    http = HttpTransport(10.0)
    api = bridge.url.rstrip("/") + "/api"

    def show(label, response):
        document = json.loads(response.body)
        print(f"\n--- {label}  [HTTP {response.status}]")
        print(json.dumps(document, indent=2, sort_keys=True)[:800])

    try:
        print(f"mock WPS    {wps_url}")
        print(f"mock WFS    {wfs_url}")
        print(f"bridge      {bridge.url}")

        show("GET /api/defaults", http(Request("GET", f"{api}/defaults")))
        show(
            "GET /api/capabilities",
            http(Request("GET", f"{api}/capabilities?url={wps_url}")),
        )
        show("GET /api/process (Buffer)", http(Request("GET", f"{api}/process?url={wps_url}&id=Buffer")))
        show("GET /api/wfs/layers", http(Request("GET", f"{api}/wfs/layers?url={wfs_url}")))

        road = default_dataset().features[0]
        body = {
            "url": wps_url,
            "process": "Buffer",
            "inputs": [
                {"id": "geometry", "geometryGeoJson": geometry_to_geojson(road.geometry)},
                {"id": "distance", "literal": 0.5},
            ],
        }
        show(
            "POST /api/execute (inline GeoJSON)",
            http(Request("POST", f"{api}/execute", body=json.dumps(body).encode())),
        )

        # leave something out and the validator answers for the form
        del body["inputs"][1]
        show(
            "POST /api/execute (missing distance)",
            http(Request("POST", f"{api}/execute", body=json.dumps(body).encode())),
        )
    finally:
        bridge.stop()
        stack.stop()


if __name__ == "__main__":
    main()
